use biobench_core::dsp::{fft, fft_q15, morph_filter, MorphMode};
use biobench_core::infer::{mlp_forward, svm_predict, Activation, DenseLayer, SvmKernel, SvmModel};
use biobench_core::{OpCategory, OpCounters, Scalar, Q15, Q16};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn fixed_and_float_fft_agree() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..256).map(|_| r.random_range(-0.9..0.9)).collect();
    let q: Vec<Q15> = x.iter().map(|&v| Q15::from_f64(v)).collect();
    let f = fft(&x, 256, &mut OpCounters::new()).unwrap();
    let mut ops = OpCounters::new();
    let g = fft_q15(&q, 256, &mut ops).unwrap();
    assert_eq!(g.scale_log2, 8);
    for (a, b) in f.bins.iter().zip(&g.bins) {
        assert!((a.re / 256.0 - b.re.to_f64()).abs() < 1e-3);
        assert!((a.im / 256.0 - b.im.to_f64()).abs() < 1e-3);
    }
    assert_eq!(ops.dominant(), Some(OpCategory::FxpMul));
}

#[test]
fn morphology_is_type_generic() {
    let x: Vec<f64> = (0..64).map(|i| ((i * 7) % 13) as f64 / 16.0).collect();
    let q: Vec<Q16> = x.iter().map(|&v| Q16::from_f64(v)).collect();
    let a = morph_filter(&x, 5, MorphMode::BaselineCorrect, &mut OpCounters::new()).unwrap();
    let b = morph_filter(&q, 5, MorphMode::BaselineCorrect, &mut OpCounters::new()).unwrap();
    for (a, b) in a.iter().zip(&b) {
        assert!((a - b.to_f64()).abs() < 1e-4);
    }
    assert!(morph_filter(&x, 4, MorphMode::Open, &mut OpCounters::new()).is_err());
}

#[test]
fn models_agree_across_precisions() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let svm: SvmModel<f64> = SvmModel::random(&mut r, 16, 6, SvmKernel::Rbf { gamma: 0.5 });
    let layers =
        vec![DenseLayer::<f64>::random(&mut r, 6, 8, 0.4, Activation::Relu), DenseLayer::random(&mut r, 8, 3, 0.4, Activation::None)];
    for _ in 0..50 {
        let x: Vec<f64> = (0..6).map(|_| r.random_range(-0.5..0.5)).collect();
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let a = svm_predict(&svm, &x, &mut OpCounters::new()).unwrap();
        let b = svm_predict(&svm.cast::<f32>(), &x32, &mut OpCounters::new()).unwrap();
        assert!((a.score - b.score).abs() < 1e-5);
        let l32: Vec<DenseLayer<f32>> = layers.iter().map(|l| l.cast()).collect();
        let ya = mlp_forward(&layers, &x, &mut OpCounters::new()).unwrap();
        let yb = mlp_forward(&l32, &x32, &mut OpCounters::new()).unwrap();
        for (a, b) in ya.iter().zip(&yb) {
            assert!((a - *b as f64).abs() < 1e-5);
        }
    }
}

#[test]
fn counters_merge_and_total() {
    let mut a = OpCounters::new();
    a.mul::<f32>(3);
    a.mem(10);
    let mut b = OpCounters::new();
    b.mac::<Q15>(5);
    b.branch(2);
    a.merge(&b);
    assert_eq!(a.compute_total(), 10);
    assert_eq!(a.total(), 20);
    assert_eq!(a.dominant(), Some(OpCategory::FxpMac));
}
