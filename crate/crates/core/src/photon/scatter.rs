//! P→S scattering rate, vacuum weight and emission bookkeeping from the master equation.

use crate::error::Result;
use crate::qdyn::{build_jump_operators, AtomCavityState, MasterPropagator, SourceParams, TimeGrid, D0, D1, P0, S0};
use crate::scalar::Real;

/// Everything the photon state needs from the full master-equation solution.
#[derive(Clone, Debug)]
pub struct ScatterProfile<T> {
    pub grid: TimeGrid<T>,
    /// `P(s_k) = 2γ_sp ⟨p,0|ρ(s_k)|p,0⟩`.
    pub rate: Vec<T>,
    /// `∫P(s) ds` over the centered cell of each grid point, clipped to the horizon.
    pub cell_weights: Vec<T>,
    /// `2γ_dp ∫ρ_pp dt` plus population left in `{|s,0⟩, |d,1⟩, |p,0⟩}` at the horizon.
    pub p0_direct: T,
    /// `2κ ∫ρ_{d1,d1} dt`.
    pub emitted: T,
    pub residual_d1: T,
    pub residual_manifold: T,
    /// Probability of a cavity emission before the horizon starting from `|s,0⟩`
    /// at `s_k`, whatever scattering happens in between.
    pub emission_from: Vec<T>,
    /// Diagonal of ρ on the grid, basis order.
    pub populations: Vec<[T; 4]>,
}

impl<T: Real> ScatterProfile<T> {
    pub fn new(p: &SourceParams<T>) -> Result<Self> {
        let prop = MasterPropagator::new(p)?;
        Self::from_propagator(p, &prop)
    }

    pub fn from_propagator(p: &SourceParams<T>, prop: &MasterPropagator<T>) -> Result<Self> {
        let two = T::lit(2.0);
        let traj = prop.run(&AtomCavityState::ground())?;
        let rate = traj.states.iter().map(|s| two * p.gamma_sp * s.population(P0)).collect();
        let cell_weights = prop
            .cell_integrals(&traj)
            .iter()
            .map(|m| two * p.gamma_sp * m[(P0, P0)].re)
            .collect();
        let total = prop.total_integral(&traj);
        let last = traj.states.last().expect("grid has at least one point");
        let residual_manifold = last.population(S0) + last.population(D1) + last.population(P0);
        let p0_direct = two * p.gamma_dp * total[(P0, P0)].re + residual_manifold;
        let emitted = two * p.kappa * total[(D1, D1)].re;
        let l1 = &build_jump_operators(p)[0];
        let emission_from = prop.future_yield_from_ground(&(&l1.adjoint() * l1));
        let populations = traj
            .states
            .iter()
            .map(|s| [s.population(S0), s.population(D1), s.population(P0), s.population(D0)])
            .collect();
        Ok(Self {
            grid: traj.grid,
            rate,
            cell_weights,
            p0_direct,
            emitted,
            residual_d1: last.population(D1),
            residual_manifold,
            emission_from,
            populations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdyn::StarkShift;

    fn small() -> SourceParams<f64> {
        SourceParams {
            omega_drive: 30.0,
            pulse_on: 0.0,
            pulse_off: 1.0,
            delta: -200.0,
            delta_stark: StarkShift::Auto,
            g_eff: 4.0,
            kappa: 1.5,
            gamma_sp: 20.0,
            gamma_dp: 2.0,
            t_horizon: 8.0,
            dt: 0.01,
        }
    }

    #[test]
    fn probability_is_accounted_for() {
        let s = ScatterProfile::new(&small()).unwrap();
        // Every run ends in a cavity emission, a P→D scattering or is still running.
        assert!((s.emitted + s.p0_direct - 1.0).abs() < 1e-12);
        assert!((s.emission_from[0] - s.emitted).abs() < 1e-12);
    }

    #[test]
    fn no_drive_means_no_scattering() {
        let mut p = small();
        p.omega_drive = 0.0;
        let s = ScatterProfile::new(&p).unwrap();
        assert!(s.rate.iter().all(|&r| r == 0.0));
        assert_eq!(s.p0_direct, 1.0);
    }

    #[test]
    fn cell_weights_track_point_rates() {
        let s = ScatterProfile::new(&small()).unwrap();
        let dt = s.grid.dt();
        let k = 50;
        assert!((s.cell_weights[k] - s.rate[k] * dt).abs() < 1e-3 * s.rate[k] * dt);
        assert!(s.rate.iter().all(|&r| r >= 0.0));
    }
}
