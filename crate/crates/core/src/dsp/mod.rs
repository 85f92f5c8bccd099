//! Signal-processing kernels shared by the application pipelines.
//!
//! Every kernel takes an [`OpCounters`](crate::OpCounters) and charges the
//! operations it executes. Edges are handled by replicating the first and
//! last samples.

mod ecg;
mod fft;
mod filter;
mod lomb;
mod mfcc;
mod morph;
mod spectral;
mod stats;

pub use ecg::{delineate, detect_r_peaks, odd_window, relative_energy, BeatFiducials, PeakDetector};
pub use fft::{fft, fft_q15, SpectralResult};
pub use filter::{butterworth_highpass, butterworth_lowpass, iir_biquad_cascade, moving_average_subtract, Biquad};
pub use lomb::lomb_scargle;
pub use mfcc::{hz_to_mel, mel_to_hz, mfcc, MfccConfig};
pub use morph::{morph_filter, MorphMode};
pub use spectral::{band_power, power_spectral_density, spectral_entropy};
pub use stats::{stat_features, StatFeatures};
