//! The emitted-photon state: conditional wavepackets, scattering weights, vacuum
//! weight and the first-order coherence kernel.

pub mod amplitudes;
pub mod record;
pub mod scatter;

pub use amplitudes::ConditionalAmplitudes;
pub use record::{PhotonRecord, RecordOptions, ScatterCount, NORMALIZATION_TOL, TRUNCATION_TOL};
pub use scatter::ScatterProfile;
