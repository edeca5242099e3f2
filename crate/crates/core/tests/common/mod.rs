#![allow(dead_code)]

pub mod reference;

use ionhom::qdyn::{effective_coupling, SourceParams, StarkShift};
use ionhom::angular_from_mhz;

pub const BETA_H_SQ: f64 = 4.0 / 15.0;
pub const BETA_V_SQ: f64 = 10.0 / 15.0 * 0.5;

/// Source of the `fig2` preset with the given polarization projection β².
pub fn fig2(beta_sq: f64) -> SourceParams<f64> {
    SourceParams {
        omega_drive: angular_from_mhz(63.5),
        pulse_on: 0.0,
        pulse_off: 9.4,
        delta: angular_from_mhz(-403.0),
        delta_stark: StarkShift::Auto,
        g_eff: effective_coupling(0.75, beta_sq.sqrt(), angular_from_mhz(1.53)),
        kappa: angular_from_mhz(0.07),
        gamma_sp: angular_from_mhz(10.7),
        gamma_dp: angular_from_mhz(0.68),
        t_horizon: 20.0,
        dt: 0.005,
    }
}

pub fn coarse(mut p: SourceParams<f64>, dt: f64, horizon: f64) -> SourceParams<f64> {
    p.dt = dt;
    p.t_horizon = horizon;
    p.pulse_off = p.pulse_off.min(horizon);
    p
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
