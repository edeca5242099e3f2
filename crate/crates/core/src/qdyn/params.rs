use crate::error::{ensure, Result};
use crate::scalar::Real;

/// Detuning added to the two-photon resonance to compensate the drive light shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StarkShift<T> {
    /// `Ω²/(4Δ)` evaluated per drive segment, so it vanishes while the drive is off.
    Auto,
    /// A constant value applied at all times.
    Fixed(T),
}

/// Physical rates and timing of one photon source.
///
/// Angular frequencies are in rad/µs and times in µs. `delta` is signed; the
/// Raman drive is red detuned so it is normally negative.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceParams<T> {
    /// Raman drive Rabi frequency Ω while the pulse is on.
    pub omega_drive: T,
    pub pulse_on: T,
    pub pulse_off: T,
    pub delta: T,
    pub delta_stark: StarkShift<T>,
    /// Effective ion-cavity coupling, see [`effective_coupling`].
    pub g_eff: T,
    /// Cavity field half-linewidth κ.
    pub kappa: T,
    pub gamma_sp: T,
    pub gamma_dp: T,
    pub t_horizon: T,
    /// Output sampling step of every propagated series.
    pub dt: T,
}

/// Coupling used in the Hamiltonian, `g = α·β·g0`: thermal carrier reduction α times
/// the Clebsch-Gordan/polarization projection β times the peak coupling g0.
pub fn effective_coupling<T: Real>(alpha: T, beta: T, g0: T) -> T {
    alpha * beta * g0
}

impl<T: Real> SourceParams<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_drive", self.omega_drive),
            ("pulse_on", self.pulse_on),
            ("pulse_off", self.pulse_off),
            ("delta", self.delta),
            ("g_eff", self.g_eff),
            ("kappa", self.kappa),
            ("gamma_sp", self.gamma_sp),
            ("gamma_dp", self.gamma_dp),
            ("t_horizon", self.t_horizon),
            ("dt", self.dt),
        ];
        for (name, v) in fields {
            ensure!(v.is_finite(), Config, "{name} is not finite");
        }
        if let StarkShift::Fixed(v) = self.delta_stark {
            ensure!(v.is_finite(), Config, "delta_stark is not finite");
        }
        ensure!(self.kappa >= T::zero(), Config, "kappa must be >= 0");
        ensure!(self.gamma_sp >= T::zero(), Config, "gamma_sp must be >= 0");
        ensure!(self.gamma_dp >= T::zero(), Config, "gamma_dp must be >= 0");
        ensure!(self.dt > T::zero(), Config, "dt must be > 0");
        ensure!(
            T::zero() <= self.pulse_on && self.pulse_on <= self.pulse_off && self.pulse_off <= self.t_horizon,
            Config,
            "require 0 <= pulse_on <= pulse_off <= t_horizon, got {} / {} / {}",
            self.pulse_on,
            self.pulse_off,
            self.t_horizon
        );
        if self.delta_stark == StarkShift::Auto && self.omega_drive != T::zero() {
            ensure!(self.delta != T::zero(), Config, "automatic Stark compensation needs a non-zero delta");
        }
        Ok(())
    }

    /// Stark compensation in effect while the drive amplitude is `omega`.
    pub fn stark_shift_for(&self, omega: T) -> T {
        match self.delta_stark {
            StarkShift::Auto => {
                if omega == T::zero() {
                    T::zero()
                } else {
                    omega * omega / (T::lit(4.0) * self.delta)
                }
            }
            StarkShift::Fixed(v) => v,
        }
    }

    /// Drive amplitude at time `t`: Ω on `[pulse_on, pulse_off)`, zero elsewhere.
    pub fn omega_at(&self, t: T) -> T {
        if t >= self.pulse_on && t < self.pulse_off {
            self.omega_drive
        } else {
            T::zero()
        }
    }

    pub fn with_omega(mut self, omega: T) -> Self {
        self.omega_drive = omega;
        self
    }

    /// Largest rate shaping the sampled series: cavity field decay, the
    /// adiabatically eliminated Raman coupling `|Ω g / 2Δ|` and the peak
    /// spontaneous scattering rate `2(γ_sp+γ_dp)(Ω/2Δ)²`.
    ///
    /// The bare excited-state rates are not included; the propagators are exact
    /// exponentials and those transients never need to be resolved by `dt`.
    pub fn max_sampled_rate(&self) -> T {
        let two = T::lit(2.0);
        let mut rate = two * self.kappa;
        if self.delta != T::zero() {
            let ratio = self.omega_drive / (two * self.delta);
            rate = rate.max((ratio * self.g_eff).abs());
            rate = rate.max(two * (self.gamma_sp + self.gamma_dp) * ratio * ratio);
        }
        rate
    }

    /// Sampling check used by strict mode: `dt <= 1 / (10 · max_sampled_rate)`.
    pub fn grid_is_fine_enough(&self) -> bool {
        let rate = self.max_sampled_rate();
        rate == T::zero() || self.dt <= T::one() / (T::lit(10.0) * rate)
    }
}
