//! Detector time tags: parsing, trigger framing, histograms and synthetic data.

mod histogram;
mod sample;
mod stream;

pub use histogram::{
    build_histograms, build_histograms_sharded, experimental_visibility, write_experimental_visibility_csv,
    Diagnostics, ExperimentalPoint, Gate, GateSpec, Histogram, HistogramSet,
};
pub use sample::{
    sample_synthetic, sample_synthetic_with, SequenceTiming, DEFAULT_STRIDE, DEFAULT_T_WAIT, DELAY_LINE,
};
pub use stream::{parse_timetags, Channel, Event, TimeTagStream, HEADER, REORDER_BUFFER_PS};
