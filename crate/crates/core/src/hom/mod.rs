//! Hong-Ou-Mandel interference of two photon sources: click and coincidence
//! densities, visibility and success probability, with imperfection transforms.

pub mod binning;
pub mod coincidence;
pub mod imperfections;
pub mod visibility;

pub use binning::TauBinning;
pub use coincidence::{
    coincidence_orthogonal, coincidence_parallel, single_click_density, BinnedDensities, LagDensities, PairDensityMap,
};
pub use imperfections::{sigma_from_drift, ImperfectionParams, DEFAULT_TAU_GEN};
pub use visibility::{all_windows, simulate_hom, visibility_curve, CoincidenceResult, WindowPoint};
