//! Two photon sources interfered on one beamsplitter.

use crate::error::{ensure, Result};
use crate::hom::{CoincidenceResult, ImperfectionParams, LagDensities, TauBinning};
use crate::photon::{PhotonRecord, RecordOptions};
use crate::qdyn::SourceParams;
use crate::scalar::Real;

/// How the end-to-end efficiency of an arm is specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Efficiency<T> {
    /// η applied to the photon state directly.
    Fixed(T),
    /// Overall probability to detect a photon per attempt; `η = p / (1 − P0)`.
    DetectionProbability(T),
}

impl<T: Real> Efficiency<T> {
    pub fn resolve(&self, emission_probability: T) -> Result<T> {
        match *self {
            Efficiency::Fixed(eta) => Ok(eta),
            Efficiency::DetectionProbability(p) => {
                ensure!(p >= T::zero() && p <= T::one(), Domain, "detection probability {p} outside [0, 1]");
                // Nothing to scale when the source never emits.
                if p == T::zero() || emission_probability == T::zero() {
                    return Ok(T::zero());
                }
                ensure!(
                    emission_probability >= p,
                    Domain,
                    "detection probability {p} exceeds the emission probability {emission_probability}"
                );
                Ok(p / emission_probability)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArmSpec<T> {
    pub source: SourceParams<T>,
    pub efficiency: Efficiency<T>,
}

/// Both arms, imperfections and the τ binning.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    pub short: ArmSpec<T>,
    pub long: ArmSpec<T>,
    pub imperfections: ImperfectionParams<T>,
    pub bin_width: T,
    pub options: RecordOptions,
}

/// Records and coincidence statistics of one scenario.
#[derive(Clone, Debug)]
pub struct Evaluation<T> {
    pub short: PhotonRecord<T>,
    pub long: PhotonRecord<T>,
    pub lags: LagDensities<T>,
    pub result: CoincidenceResult<T>,
}

impl<T: Real> Scenario<T> {
    /// Photon records of both arms. Identical sources are simulated once.
    pub fn records(&self) -> Result<(PhotonRecord<T>, PhotonRecord<T>)> {
        let build = |arm: &ArmSpec<T>, name: &str| -> Result<PhotonRecord<T>> {
            let unit = PhotonRecord::with_options(&arm.source, T::one(), self.options).map_err(|e| e.context(name))?;
            let eta = arm.efficiency.resolve(T::one() - unit.p0()).map_err(|e| e.context(name))?;
            unit.with_eta(eta).map_err(|e| e.context(name))
        };
        let short = build(&self.short, "short arm")?;
        let long = if self.long.source == self.short.source {
            let eta = self.long.efficiency.resolve(T::one() - short.p0()).map_err(|e| e.context("long arm"))?;
            short.with_eta(eta)?
        } else {
            build(&self.long, "long arm")?
        };
        Ok((short, long))
    }

    pub fn binning(&self) -> Result<TauBinning<T>> {
        TauBinning::new(self.short.source.dt, self.bin_width)
    }

    pub fn evaluate(&self, windows: &[T]) -> Result<Evaluation<T>> {
        let binning = self.binning()?;
        let (short, long) = self.records()?;
        let lags = LagDensities::compute(&short, &long, &self.imperfections)?;
        let result = CoincidenceResult::from_lags(&lags, &self.imperfections, &binning, windows)?;
        Ok(Evaluation { short, long, lags, result })
    }

    /// Same scenario with the drive Rabi frequency of both arms replaced.
    pub fn with_omega(&self, omega: T) -> Self {
        let mut out = self.clone();
        out.short.source.omega_drive = omega;
        out.long.source.omega_drive = omega;
        out
    }
}
