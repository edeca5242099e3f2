//! Cavity-photon emission from a driven ion and two-photon interference.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix `f64`.

pub mod error;
pub mod hom;
pub mod linalg;
pub mod netlink;
pub mod photon;
pub mod qdyn;
pub mod scalar;
pub mod scenario;
pub mod sweep;
pub mod timetag;

pub use error::{Error, Result};
pub use scalar::{angular_from_mhz, mhz_from_angular, Cplx, Real};

pub type SourceParamsF64 = qdyn::SourceParams<f64>;
pub type AtomCavityStateF64 = qdyn::AtomCavityState<f64>;
pub type PhotonRecordF64 = photon::PhotonRecord<f64>;
pub type ImperfectionParamsF64 = hom::ImperfectionParams<f64>;
pub type CoincidenceResultF64 = hom::CoincidenceResult<f64>;
pub type ScenarioF64 = scenario::Scenario<f64>;
pub type SweepSpecF64 = sweep::SweepSpec<f64>;
pub type SweepRowF64 = sweep::SweepRow<f64>;
pub type GateSpecF64 = timetag::GateSpec<f64>;
pub type HistogramSetF64 = timetag::HistogramSet<f64>;
pub type LinkSpecF64 = netlink::LinkSpec<f64>;
