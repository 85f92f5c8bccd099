//! Sensor descriptions, synthetic/recorded input signals and batch
//! acquisition through the external ADC buffer.

mod buffer;
mod io;
mod schedule;
mod spec;
mod synth;

pub use buffer::SampleBuffer;
pub use io::{load_signal, store_signal, SignalFormat};
pub use schedule::{schedule_acquisition, AcquisitionSchedule, DEFAULT_BUFFER_BYTES};
pub use spec::{input_bandwidth, SignalSpec};
pub use synth::{generate_synthetic, SynthKind};
