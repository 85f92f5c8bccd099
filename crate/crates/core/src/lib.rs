//! Biomedical TinyML workload suite.
//!
//! Kernels for the eight wearable monitoring applications (ECG, EEG, sEMG,
//! audio and physiological signals), an idle/acquisition/processing phase
//! simulator, the five-metric application characterization and the
//! per-platform energy analytics.
//!
//! Numeric kernels are generic over [`Scalar`]/[`Real`]; the aliases below
//! name the instantiations used by the applications.

pub mod apps;
pub mod dsp;
pub mod error;
pub mod fxp;
pub mod infer;
pub mod ops;
pub mod phasesim;
pub mod power;
pub mod scalar;
pub mod sigio;
pub mod train;

pub use error::{Error, Result};
pub use ops::{OpCategory, OpCounters};
pub use scalar::{Arith, Real, Scalar};

/// 16-bit, 15 fractional bits.
pub type Q15 = fxp::Fx16<15>;
/// 32-bit, 16 fractional bits.
pub type Q16 = fxp::Fx32<16>;
