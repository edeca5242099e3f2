use crate::error::{ensure, Result};
use crate::scalar::Real;

/// Default separation between the two generated photons, µs.
pub const DEFAULT_TAU_GEN: f64 = 13.35;

/// Imperfections beyond spontaneous scattering.
#[derive(Clone, Debug, PartialEq)]
pub struct ImperfectionParams<T> {
    /// Mode-mismatch ε mixing the parallel density toward the orthogonal one.
    pub epsilon: T,
    /// Constant frequency offset ω_s between the photons, rad/µs.
    pub omega_offset: T,
    /// Drift spread σ, rad/µs²; see [`sigma_from_drift`].
    pub sigma_drift: T,
    /// Time between the two generation attempts, µs.
    pub tau_gen: T,
    /// Constant coincidence-probability density added to the τ-densities, 1/µs.
    pub background_density: T,
    /// Add the background to the orthogonal curve as well as the parallel one.
    pub background_on_perp: bool,
}

impl<T: Real> Default for ImperfectionParams<T> {
    fn default() -> Self {
        Self {
            epsilon: T::zero(),
            omega_offset: T::zero(),
            sigma_drift: T::zero(),
            tau_gen: T::lit(DEFAULT_TAU_GEN),
            background_density: T::zero(),
            background_on_perp: true,
        }
    }
}

impl<T: Real> ImperfectionParams<T> {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.epsilon >= T::zero() && self.epsilon <= T::one(),
            Domain,
            "epsilon {} outside [0, 1]",
            self.epsilon
        );
        ensure!(self.omega_offset.is_finite(), Domain, "omega_offset is not finite");
        ensure!(
            self.sigma_drift >= T::zero() && self.sigma_drift.is_finite(),
            Domain,
            "sigma_drift must be finite and >= 0"
        );
        ensure!(
            self.tau_gen > T::zero() && self.tau_gen.is_finite(),
            Domain,
            "tau_gen must be finite and > 0"
        );
        ensure!(
            self.background_density >= T::zero() && self.background_density.is_finite(),
            Domain,
            "background_density must be finite and >= 0"
        );
        Ok(())
    }

    /// Dephasing factor of the interference term at lag `tau`:
    /// `exp(−½ τ_gen² τ² σ²)`, the Fourier transform of a Gaussian drift of the
    /// relative carrier over the generation gap.
    pub fn dephasing(&self, tau: T) -> T {
        let x = self.tau_gen * tau * self.sigma_drift;
        (-T::lit(0.5) * x * x).exp()
    }
}

/// σ from the drift statistic: `σ = √v(T̄) / T̄`, with the square root of the
/// mean-squared frequency deviation given directly as an angular frequency.
pub fn sigma_from_drift<T: Real>(sqrt_v: T, t_bar: T) -> Result<T> {
    ensure!(t_bar > T::zero(), Domain, "drift reference time must be > 0");
    ensure!(sqrt_v >= T::zero(), Domain, "drift deviation must be >= 0");
    Ok(sqrt_v / t_bar)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_ideal() {
        let imp = ImperfectionParams::<f64>::default();
        imp.validate().unwrap();
        assert_eq!(imp.dephasing(5.0), 1.0);
        assert_eq!(imp.tau_gen, 13.35);
    }

    #[test]
    fn out_of_range_values_are_domain_errors() {
        let mut imp = ImperfectionParams::<f64>::default();
        imp.epsilon = 1.1;
        assert!(matches!(imp.validate(), Err(crate::Error::Domain(_))));
        imp.epsilon = 0.0;
        imp.background_density = -1.0;
        assert!(imp.validate().is_err());
        imp.background_density = 0.0;
        imp.tau_gen = 0.0;
        assert!(imp.validate().is_err());
    }

    #[test]
    fn drift_sigma() {
        let s = sigma_from_drift(crate::angular_from_mhz(0.05_f64), 10.0).unwrap();
        assert!((s - 0.031415926535897934).abs() < 1e-15);
        let imp = ImperfectionParams { sigma_drift: s, ..Default::default() };
        // At τ = 1 µs: exp(−½(13.35·0.0314)²)
        assert!((imp.dephasing(1.0) - (-0.5f64 * (13.35 * s).powi(2)).exp()).abs() < 1e-15);
    }
}
