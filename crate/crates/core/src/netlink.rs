//! Remote entanglement fidelity and heralded swap rate from interference figures.

use crate::error::{ensure, Result};
use crate::scalar::Real;

pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.18;

/// `F = (1 + V)/2`.
pub fn fidelity_from_visibility<T: Real>(v: T) -> T {
    (T::one() + v) / T::lit(2.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkSpec<T> {
    /// Generation attempt rate in 1/s.
    pub r_gen: T,
    /// Coincidence probability `C⊥(T)` per attempt.
    pub c_perp: T,
    pub v: T,
    pub fiber_km: T,
    pub atten_db_per_km: T,
    /// Number of photon arms that traverse `fiber_km` (1 or 2).
    pub attenuated_arms: u32,
    /// Dark count rate in 1/s.
    pub dark_rate: T,
    pub proportionality: T,
}

impl<T: Real> LinkSpec<T> {
    pub fn new(r_gen: T, c_perp: T, v: T) -> Self {
        Self {
            r_gen,
            c_perp,
            v,
            fiber_km: T::zero(),
            atten_db_per_km: T::lit(DEFAULT_ATTENUATION_DB_PER_KM),
            attenuated_arms: 1,
            dark_rate: T::zero(),
            proportionality: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("r_gen", self.r_gen),
            ("c_perp", self.c_perp),
            ("fiber_km", self.fiber_km),
            ("atten_db_per_km", self.atten_db_per_km),
            ("dark_rate", self.dark_rate),
            ("proportionality", self.proportionality),
        ] {
            ensure!(x >= T::zero() && x.is_finite(), Domain, "{name} = {x} must be finite and >= 0");
        }
        ensure!(self.v >= T::zero() && self.v <= T::one(), Domain, "visibility {} outside [0, 1]", self.v);
        ensure!(matches!(self.attenuated_arms, 1 | 2), Domain, "attenuated arms must be 1 or 2");
        Ok(())
    }

    /// Transmission of one arm, `10^(−α·L/10)`.
    pub fn arm_transmission(&self) -> T {
        T::lit(10.0).powf(-(self.atten_db_per_km * self.fiber_km) / T::lit(10.0))
    }

    /// `C⊥` after fiber loss on the configured number of arms.
    pub fn attenuated_c_perp(&self) -> T {
        self.c_perp * self.arm_transmission().powi(self.attenuated_arms as i32)
    }
}

/// Heralded swap rate `k·R_gen·C⊥` in 1/s.
pub fn swap_rate<T: Real>(spec: &LinkSpec<T>) -> Result<T> {
    spec.validate()?;
    Ok(spec.proportionality * spec.r_gen * spec.attenuated_c_perp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkReport<T> {
    pub spec: LinkSpec<T>,
    pub fidelity: T,
    pub arm_transmission: T,
    pub c_perp_attenuated: T,
    pub swap_rate: T,
    /// `swap_rate / dark_rate`; absent without dark counts.
    pub snr: Option<T>,
}

pub fn link_report<T: Real>(spec: &LinkSpec<T>) -> Result<LinkReport<T>> {
    let rate = swap_rate(spec)?;
    Ok(LinkReport {
        spec: *spec,
        fidelity: fidelity_from_visibility(spec.v),
        arm_transmission: spec.arm_transmission(),
        c_perp_attenuated: spec.attenuated_c_perp(),
        swap_rate: rate,
        snr: (spec.dark_rate > T::zero()).then(|| rate / spec.dark_rate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_fidelities() {
        assert_eq!(fidelity_from_visibility(1.0f64), 1.0);
        assert!((fidelity_from_visibility(0.472f64) - 0.736).abs() < 1e-15);
        assert!((fidelity_from_visibility(0.37f64) - 0.685).abs() < 1e-15);
    }

    #[test]
    fn thirty_hertz_at_thirty_kilohertz() {
        let rate = swap_rate(&LinkSpec::new(30_000.0f64, 1e-3, 0.472)).unwrap();
        assert!((rate - 30.0).abs() < 1e-12);
        assert_eq!(swap_rate(&LinkSpec::new(0.0f64, 1e-3, 0.5)).unwrap(), 0.0);
    }

    #[test]
    fn fifty_km_of_fiber() {
        let mut s = LinkSpec::new(30_000.0f64, 1e-3, 0.5);
        s.fiber_km = 50.0;
        assert!((s.arm_transmission() - 10f64.powf(-0.9)).abs() < 1e-15);
        s.attenuated_arms = 2;
        assert!((s.attenuated_c_perp() - 1e-3 * 10f64.powf(-1.8)).abs() < 1e-18);
        s.dark_rate = 1.0;
        let r = link_report(&s).unwrap();
        assert_eq!(r.snr, Some(r.swap_rate));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(swap_rate(&LinkSpec::new(1.0f64, 1e-3, 1.5)).is_err());
        let mut s = LinkSpec::new(1.0f64, 1e-3, 0.5);
        s.attenuated_arms = 3;
        assert!(swap_rate(&s).is_err());
    }
}
