use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{AppConfig, Arithmetic};
use super::AppId;
use crate::error::{Error, Result};
use crate::infer::{
    Activation, Cnn1dModel, CnnShape, DenseLayer, ForestModel, KnnTrainingSet, QCnnModel, RuleSet, SvmKernel, SvmModel, Tensor2, TreeNode,
    DEFAULT_TRAINING_POINTS,
};
use crate::train::SampleBatch;

/// Trained parameters of one application, as stored in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AppModel {
    Rules {
        rules: RuleSet,
    },
    Svm {
        svm: SvmModel<f64>,
    },
    Cnn {
        float: Cnn1dModel<f64>,
        #[serde(default)]
        quantized: Option<QCnnModel>,
    },
    Forest {
        forest: ForestModel,
    },
    Mlp {
        layers: Vec<DenseLayer<f64>>,
    },
    Knn {
        training: KnnTrainingSet<f64>,
    },
    Training {
        model: Cnn1dModel<f64>,
        batch: SampleBatch<f64>,
    },
}

/// Feature vector length read by the CWM classifier.
pub fn cwm_feature_len(cfg: &AppConfig) -> usize {
    cfg.signals.first().map_or(0, |s| s.channels as usize) * CWM_FEATURES_PER_CHANNEL
}
pub const CWM_FEATURES_PER_CHANNEL: usize = 9;
pub const COUGH_BANDS_HZ: [f64; 6] = [0.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];

pub fn cough_feature_len(cfg: &AppConfig) -> usize {
    let imu = cfg.signals.get(1).map_or(0, |s| s.channels as usize) * 7;
    imu + 3 + (COUGH_BANDS_HZ.len() - 1) + cfg.kernel.n_coeffs.unwrap_or(13)
}

/// HRV (4) + Lorenz (2) + RR band powers (3) + LPC + EDR band powers (2).
pub fn svm_feature_len(cfg: &AppConfig) -> usize {
    11 + cfg.kernel.lpc_order.unwrap_or(8)
}

fn app_rng(cfg: &AppConfig) -> ChaCha8Rng {
    // distinct stream per application so equal seeds give unrelated models
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.app as u64 + 1);
    rng
}

/// Shape of the seizure-detection network for a configuration.
pub fn cnn_shape(cfg: &AppConfig) -> CnnShape {
    let mut shape = CnnShape::default();
    if let Some(s) = cfg.signals.first() {
        shape.input_channels = s.channels as usize;
        shape.input_len = (s.sample_rate as f64 * cfg.window_seconds).round() as usize;
    }
    shape
}

impl AppModel {
    /// Seeded random parameters with the dimensions `cfg` implies.
    pub fn synthetic(cfg: &AppConfig) -> Result<Self> {
        let mut rng = app_rng(cfg);
        let k = &cfg.kernel;
        Ok(match cfg.app {
            AppId::Hcl => AppModel::Rules { rules: RuleSet::default() },
            AppId::SeizDetSvm => {
                let dim = svm_feature_len(cfg);
                let svm = SvmModel::random(&mut rng, k.svm_support_vectors.unwrap_or(40), dim, SvmKernel::Rbf { gamma: 1.0 / dim as f64 });
                AppModel::Svm { svm }
            }
            AppId::SeizDetCnn => AppModel::Cnn { float: Cnn1dModel::random(&mut rng, &cnn_shape(cfg), None)?, quantized: None },
            AppId::Cwm | AppId::CoughDet => {
                let n = if cfg.app == AppId::Cwm { cwm_feature_len(cfg) } else { cough_feature_len(cfg) };
                let trees = k.forest_trees.unwrap_or(if cfg.app == AppId::Cwm { 16 } else { 32 });
                AppModel::Forest { forest: ForestModel::random(&mut rng, trees, k.forest_depth.unwrap_or(6), n) }
            }
            AppId::Gcl => {
                let comps = k.ica_components.unwrap_or(8);
                let hidden = k.mlp_hidden.unwrap_or(32);
                let classes = k.classes.unwrap_or(6);
                AppModel::Mlp {
                    layers: vec![
                        DenseLayer::random(&mut rng, comps, hidden, (3.0 / comps as f64).sqrt(), Activation::Relu),
                        DenseLayer::random(&mut rng, hidden, classes, (3.0 / hidden as f64).sqrt(), Activation::Softmax),
                    ],
                }
            }
            AppId::Ecl => {
                AppModel::Knn { training: KnnTrainingSet::synthetic(&mut rng, k.knn_points.unwrap_or(DEFAULT_TRAINING_POINTS), 1.0) }
            }
            AppId::BpFree => {
                let shape = CnnShape::default();
                let model = Cnn1dModel::random(&mut rng, &shape, None)?;
                let n = k.train_samples.unwrap_or(4);
                let batch = super::synth::training_batch(&shape, n, cfg.seed)?;
                AppModel::Training { model, batch }
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: malformed model: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Model from the configured file, or a synthetic one.
    pub fn for_config(cfg: &AppConfig) -> Result<Self> {
        let m = match &cfg.model {
            Some(p) => Self::load(p)?,
            None => Self::synthetic(cfg)?,
        };
        m.check(cfg)?;
        Ok(m)
    }

    /// Variant and dimensions agree with the configuration.
    pub fn check(&self, cfg: &AppConfig) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("{} model: {m}", cfg.app)));
        match (cfg.app, self) {
            (AppId::Hcl, AppModel::Rules { rules }) => {
                if rules.rules.is_empty() {
                    return bad("rule set is empty".into());
                }
            }
            (AppId::SeizDetSvm, AppModel::Svm { svm }) => {
                svm.validate().map_err(|e| Error::Config(e.to_string()))?;
                if svm.dim() != svm_feature_len(cfg) {
                    return bad(format!("expects {} features, pipeline gives {}", svm.dim(), svm_feature_len(cfg)));
                }
            }
            (AppId::SeizDetCnn, AppModel::Cnn { float, .. }) => {
                float.validate().map_err(|e| Error::Config(e.to_string()))?;
                let s = cnn_shape(cfg);
                if (float.input_channels, float.input_len) != (s.input_channels, s.input_len) {
                    return bad(format!(
                        "input {}x{} but window is {}x{}",
                        float.input_channels, float.input_len, s.input_channels, s.input_len
                    ));
                }
            }
            (AppId::Cwm | AppId::CoughDet, AppModel::Forest { forest }) => {
                forest.validate().map_err(|e| Error::Config(e.to_string()))?;
                let n = if cfg.app == AppId::Cwm { cwm_feature_len(cfg) } else { cough_feature_len(cfg) };
                if forest.required_features() > n {
                    return bad(format!("forest reads {} features, pipeline gives {n}", forest.required_features()));
                }
            }
            (AppId::Gcl, AppModel::Mlp { layers }) => {
                if layers.is_empty() {
                    return bad("no layers".into());
                }
                for l in layers {
                    l.validate().map_err(|e| Error::Config(e.to_string()))?;
                }
                let comps = cfg.kernel.ica_components.unwrap_or(8);
                if layers[0].inputs() != comps {
                    return bad(format!("first layer takes {} inputs, ICA gives {comps}", layers[0].inputs()));
                }
                if layers.windows(2).any(|w| w[0].outputs() != w[1].inputs()) {
                    return bad("layer sizes do not chain".into());
                }
            }
            (AppId::Ecl, AppModel::Knn { training }) => training.validate()?,
            (AppId::BpFree, AppModel::Training { model, batch }) => {
                model.validate().map_err(|e| Error::Config(e.to_string()))?;
                batch.validate().map_err(|e| Error::Config(e.to_string()))?;
                let x = &batch.inputs[0];
                if (x.channels, x.len) != (model.input_channels, model.input_len) {
                    return bad("training samples do not match the network input".into());
                }
            }
            (app, m) => return Err(Error::Config(format!("{app} cannot use a '{}' model", m.kind()))),
        }
        if cfg.arithmetic == Arithmetic::Fixed {
            if let AppModel::Cnn { quantized: Some(q), float } = self {
                if q.blocks.len() != float.blocks.len() {
                    return bad("quantized model does not match the float model".into());
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppModel::Rules { .. } => "rules",
            AppModel::Svm { .. } => "svm",
            AppModel::Cnn { .. } => "cnn",
            AppModel::Forest { .. } => "forest",
            AppModel::Mlp { .. } => "mlp",
            AppModel::Knn { .. } => "knn",
            AppModel::Training { .. } => "training",
        }
    }

    /// Read-only parameter bytes on the target.
    pub fn param_bytes(&self, arithmetic: Arithmetic) -> u64 {
        let w = 4u64;
        match self {
            AppModel::Rules { rules } => rules.rules.iter().map(|r| r.antecedents.len() as u64 * (4 * w + 1) + 1).sum(),
            AppModel::Svm { svm } => ((svm.support_vectors.len() * (svm.dim() + 1)) as u64 + 1) * w,
            AppModel::Cnn { float, quantized } => match (arithmetic, quantized) {
                (Arithmetic::Fixed, Some(q)) => q.param_bytes() as u64,
                // weights 16-bit, biases 32-bit after folding
                (Arithmetic::Fixed, None) => float.param_count() as u64 * 2,
                (Arithmetic::Float, _) => float.param_count() as u64 * w,
            },
            AppModel::Forest { forest } => forest
                .trees
                .iter()
                .flat_map(|t| &t.nodes)
                .map(|n| match n {
                    // feature index, threshold, two child offsets
                    TreeNode::Split { .. } => 2 + w + 4,
                    TreeNode::Leaf { distribution } => distribution.len() as u64 * w,
                })
                .sum(),
            AppModel::Mlp { layers } => layers.iter().map(|l| l.param_count() as u64 * w).sum(),
            AppModel::Knn { training } => training.points.len() as u64 * (3 * w + 1),
            AppModel::Training { model, batch } => {
                let samples: u64 = batch.inputs.iter().map(|x| x.data.len() as u64 * w).sum();
                model.param_count() as u64 * w + samples
            }
        }
    }
}

/// Calibration input used when quantizing a float network on load.
pub fn calibration_inputs(cfg: &AppConfig) -> Result<Vec<Tensor2<f64>>> {
    let input = super::synth::synthetic_input(cfg, 0)?;
    let buf = &input.buffers[0];
    let rows: Vec<Vec<f64>> = (0..buf.channels()).map(|c| buf.normalized::<f64>(c)).collect();
    Ok(vec![Tensor2::from_rows(&rows)?])
}
