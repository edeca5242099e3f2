//! Full master-equation propagation on the output grid.
//!
//! Density matrices are vectorized row-major, `vec(ρ)[4i+j] = ρ_ij`, so that
//! `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.

use num_traits::Zero;

use crate::error::{ensure, Error, Result};
use crate::linalg::CMatrix;
use crate::qdyn::hamiltonian::{build_jump_operators, hamiltonian_for_level};
use crate::qdyn::params::SourceParams;
use crate::qdyn::schedule::{DriveSchedule, Level, PieceCache, StepTable, TimeGrid};
use crate::qdyn::{DIM, S0};
use crate::scalar::{c, cr, Cplx, Real};

/// Vectorized Lindblad generator `ρ̇ = −i[H,ρ] + Σ (LρL† − ½{L†L, ρ})`.
pub fn liouvillian<T: Real>(h: &CMatrix<T>, jumps: &[CMatrix<T>]) -> CMatrix<T> {
    let n = h.dim();
    let id = CMatrix::identity(n);
    let minus_i = c(T::zero(), -T::one());
    let mut l = (&h.kron(&id) - &id.kron(&h.transpose())).scale(minus_i);
    let half = cr(T::lit(0.5));
    for j in jumps {
        let conj = CMatrix::from_fn(n, |a, b| j[(a, b)].conj());
        let ldl = &j.adjoint() * j;
        l += &j.kron(&conj);
        l += &ldl.kron(&id).scale(-half);
        l += &id.kron(&ldl.transpose()).scale(-half);
    }
    l
}

/// Density matrix of the ion-cavity system over `[|s,0⟩, |d,1⟩, |p,0⟩, |d,0⟩]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomCavityState<T> {
    rho: CMatrix<T>,
}

impl<T: Real> AtomCavityState<T> {
    /// `|s,0⟩⟨s,0|`, the state prepared before each attempt.
    pub fn ground() -> Self {
        Self { rho: CMatrix::outer_unit(DIM, S0, S0, cr(T::one())) }
    }

    pub fn pure(amplitudes: &[Cplx<T>; DIM]) -> Self {
        Self { rho: CMatrix::from_fn(DIM, |i, j| amplitudes[i] * amplitudes[j].conj()) }
    }

    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(rho: CMatrix<T>) -> Result<Self> {
        ensure!(rho.dim() == DIM, Domain, "density matrix must be {DIM}x{DIM}");
        ensure!(rho.is_finite(), Numeric, "density matrix has non-finite entries");
        let tol = T::lit(1e-8);
        ensure!(rho.is_hermitian(tol), Domain, "density matrix is not Hermitian");
        ensure!((rho.trace() - cr(T::one())).norm() <= tol, Domain, "density matrix trace is not 1");
        let min = rho.hermitian_eigenvalues()[0];
        ensure!(min >= -tol, Domain, "density matrix has eigenvalue {min}");
        Ok(Self { rho })
    }

    pub(crate) fn from_vec(v: Vec<Cplx<T>>) -> Self {
        Self { rho: CMatrix::from_fn(DIM, |i, j| v[i * DIM + j]) }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.rho
    }

    pub fn as_vec(&self) -> &[Cplx<T>] {
        self.rho.as_slice()
    }

    pub fn population(&self, level: usize) -> T {
        self.rho[(level, level)].re
    }

    pub fn trace(&self) -> T {
        self.rho.trace().re
    }

    pub fn purity(&self) -> T {
        (&self.rho * &self.rho).trace().re
    }

    pub fn min_eigenvalue(&self) -> T {
        self.rho.hermitian_eigenvalues()[0]
    }
}

/// Propagator `E = e^{Lh}` over an interval together with `I = ∫₀ʰ e^{Lu} du`.
#[derive(Clone, Debug)]
pub struct IntervalOps<T> {
    pub exp: CMatrix<T>,
    pub integral: CMatrix<T>,
}

impl<T: Real> IntervalOps<T> {
    fn identity(n: usize) -> Self {
        Self { exp: CMatrix::identity(n), integral: CMatrix::zeros(n) }
    }

    /// Both blocks from a single exponential of `[[L, 0], [1, 0]]·h`.
    pub fn from_generator(l: &CMatrix<T>, h: T) -> Self {
        let n = l.dim();
        let mut aug = CMatrix::zeros(2 * n);
        aug.set_block(0, 0, &l.scale_real(h));
        aug.set_block(n, 0, &CMatrix::identity(n).scale_real(h));
        let e = aug.expm();
        Self { exp: e.block(0, 0, n), integral: e.block(n, 0, n) }
    }

    /// `self` followed by `next`.
    fn then(&self, next: &Self) -> Self {
        Self {
            exp: &next.exp * &self.exp,
            integral: &self.integral + &(&next.integral * &self.exp),
        }
    }
}

fn compose_pieces<T: Real>(
    generators: &[CMatrix<T>; 2],
    cache: &mut PieceCache<IntervalOps<T>>,
    pieces: &[(Level, T)],
) -> IntervalOps<T> {
    let n = generators[0].dim();
    pieces.iter().fold(IntervalOps::identity(n), |acc, &(level, h)| {
        let piece = cache.get(level, h, |lv, hh| IntervalOps::from_generator(&generators[lv], hh));
        acc.then(&piece)
    })
}

/// States on the output grid.
#[derive(Clone, Debug)]
pub struct MasterTrajectory<T> {
    pub grid: TimeGrid<T>,
    pub states: Vec<AtomCavityState<T>>,
}

/// Exact piecewise propagator for the vectorized master equation.
#[derive(Clone, Debug)]
pub struct MasterPropagator<T> {
    schedule: DriveSchedule<T>,
    steps: StepTable<IntervalOps<T>>,
    first_half: StepTable<IntervalOps<T>>,
    second_half: StepTable<IntervalOps<T>>,
}

impl<T: Real> MasterPropagator<T> {
    pub fn new(p: &SourceParams<T>) -> Result<Self> {
        let schedule = DriveSchedule::new(p)?;
        let jumps = build_jump_operators(p);
        let generators = [
            liouvillian(&hamiltonian_for_level(p, 0), &jumps),
            liouvillian(&hamiltonian_for_level(p, 1), &jumps),
        ];
        ensure!(
            generators.iter().all(CMatrix::is_finite),
            Numeric,
            "Liouvillian has non-finite entries"
        );
        let mut cache = PieceCache::new();
        let grid = *schedule.grid();
        let n = grid.len().saturating_sub(1);
        let half = grid.dt() / T::lit(2.0);
        let steps = StepTable::build(&schedule, |pc| compose_pieces(&generators, &mut cache, pc));
        let first_half = StepTable::build_over(
            &schedule,
            n,
            |k| (grid.t(k), grid.t(k) + half),
            |pc| compose_pieces(&generators, &mut cache, pc),
        );
        let second_half = StepTable::build_over(
            &schedule,
            n,
            |k| (grid.t(k) + half, grid.t(k + 1)),
            |pc| compose_pieces(&generators, &mut cache, pc),
        );
        Ok(Self { schedule, steps, first_half, second_half })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.schedule.grid()
    }

    /// Operators for the grid interval `[t_k, t_{k+1}]`.
    pub fn step(&self, k: usize) -> &IntervalOps<T> {
        self.steps.step(k)
    }

    pub fn run(&self, rho0: &AtomCavityState<T>) -> Result<MasterTrajectory<T>> {
        let grid = *self.grid();
        let mut states = Vec::with_capacity(grid.len());
        let mut v = rho0.as_vec().to_vec();
        states.push(rho0.clone());
        for k in 0..grid.len().saturating_sub(1) {
            v = self.steps.step(k).exp.matvec(&v);
            if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Numeric(format!("non-finite density matrix at t = {}", grid.t(k + 1))));
            }
            states.push(AtomCavityState::from_vec(v.clone()));
        }
        Ok(MasterTrajectory { grid, states })
    }

    /// `∫ρ dt` over each centered cell `[t_k − dt/2, t_k + dt/2] ∩ [0, t_end]`.
    pub fn cell_integrals(&self, traj: &MasterTrajectory<T>) -> Vec<CMatrix<T>> {
        let n = traj.states.len();
        let mut cells: Vec<Vec<Cplx<T>>> = vec![vec![Cplx::zero(); DIM * DIM]; n];
        for k in 0..n.saturating_sub(1) {
            let v = traj.states[k].as_vec();
            let lo = self.first_half.step(k);
            let hi = self.second_half.step(k);
            add_into(&mut cells[k], &lo.integral.matvec(v));
            let mid = lo.exp.matvec(v);
            add_into(&mut cells[k + 1], &hi.integral.matvec(&mid));
        }
        cells.into_iter().map(|v| CMatrix::from_fn(DIM, |i, j| v[i * DIM + j])).collect()
    }

    /// `∫ρ dt` over the whole grid.
    pub fn total_integral(&self, traj: &MasterTrajectory<T>) -> CMatrix<T> {
        let mut acc = vec![Cplx::zero(); DIM * DIM];
        for k in 0..traj.states.len().saturating_sub(1) {
            add_into(&mut acc, &self.steps.step(k).integral.matvec(traj.states[k].as_vec()));
        }
        CMatrix::from_fn(DIM, |i, j| acc[i * DIM + j])
    }

    /// For every grid point `t_k`, `∫_{t_k}^{t_end} tr(O ρ(t)) dt` for the evolution
    /// restarted from `|s,0⟩` at `t_k`.
    ///
    /// One backward sweep of the adjoint functional: `y_k = y_{k+1} E_k + o I_k`
    /// with `o·vec(ρ) = tr(Oρ)`.
    pub fn future_yield_from_ground(&self, observable: &CMatrix<T>) -> Vec<T> {
        let n = self.grid().len();
        let o: Vec<Cplx<T>> = (0..DIM * DIM).map(|idx| observable[(idx % DIM, idx / DIM)]).collect();
        let mut y = vec![Cplx::zero(); DIM * DIM];
        let mut out = vec![T::zero(); n];
        let ground = S0 * DIM + S0;
        for k in (0..n.saturating_sub(1)).rev() {
            let ops = self.steps.step(k);
            let mut next = ops.exp.vecmat(&y);
            add_into(&mut next, &ops.integral.vecmat(&o));
            y = next;
            out[k] = y[ground].re;
        }
        out
    }
}

fn add_into<T: Real>(acc: &mut [Cplx<T>], v: &[Cplx<T>]) {
    for (a, &b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// Solves the master equation from `rho0` on the `dt` grid.
pub fn propagate_master<T: Real>(p: &SourceParams<T>, rho0: &AtomCavityState<T>) -> Result<MasterTrajectory<T>> {
    MasterPropagator::new(p)?.run(rho0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdyn::params::StarkShift;
    use crate::qdyn::{D0, D1, P0};

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
            t_horizon: 3.0,
            dt: 0.01,
        }
    }

    #[test]
    fn liouvillian_preserves_trace() {
        let p = small();
        let l = liouvillian(&hamiltonian_for_level(&p, 1), &build_jump_operators(&p));
        // Trace functional vec(I) must be a left null vector.
        let tr: Vec<Cplx<f64>> = (0..16).map(|i| cr(if i % 5 == 0 { 1.0 } else { 0.0 })).collect();
        for z in l.vecmat(&tr) {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn trace_and_hermiticity_are_kept() {
        let traj = propagate_master(&small(), &AtomCavityState::ground()).unwrap();
        for s in &traj.states {
            assert!((s.trace() - 1.0).abs() < 1e-10);
            assert!(s.matrix().is_hermitian(1e-12));
        }
        let last = traj.states.last().unwrap();
        assert!(last.population(D0) > 0.0);
        assert!(last.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn unitary_limit_preserves_purity() {
        let mut p = small();
        p.kappa = 0.0;
        p.gamma_sp = 0.0;
        p.gamma_dp = 0.0;
        let traj = propagate_master(&p, &AtomCavityState::ground()).unwrap();
        for s in &traj.states {
            assert!((s.purity() - 1.0).abs() < 1e-10);
        }
        assert!(traj.states[50].population(D1) > 0.0);
    }

    #[test]
    fn cell_integrals_sum_to_total() {
        let p = small();
        let prop = MasterPropagator::new(&p).unwrap();
        let traj = prop.run(&AtomCavityState::ground()).unwrap();
        let cells = prop.cell_integrals(&traj);
        let total = prop.total_integral(&traj);
        let sum: f64 = cells.iter().map(|m| m[(P0, P0)].re).sum();
        assert!((sum - total[(P0, P0)].re).abs() < 1e-13);
        let trace_time: f64 = cells.iter().map(|m| m.trace().re).sum();
        assert!((trace_time - p.t_horizon).abs() < 1e-10);
    }

    #[test]
    fn straddling_pulse_end_matches_finer_grid() {
        let mut p = small();
        p.pulse_off = 0.505;
        let coarse = propagate_master(&p, &AtomCavityState::ground()).unwrap();
        p.dt = 0.005;
        let fine = propagate_master(&p, &AtomCavityState::ground()).unwrap();
        let a = coarse.states.last().unwrap().matrix();
        let b = fine.states.last().unwrap().matrix();
        assert!((a - b).max_abs() < 1e-12);
    }

    #[test]
    fn future_yield_of_identity_is_remaining_time() {
        let p = small();
        let prop = MasterPropagator::new(&p).unwrap();
        let q = prop.future_yield_from_ground(&CMatrix::identity(4));
        let g = prop.grid();
        for (k, &v) in q.iter().enumerate() {
            assert!((v - (p.t_horizon - g.t(k))).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_physical_density_matrix() {
        let bad = CMatrix::from_fn(4, |i, j| cr(if i == j { 0.5 } else { 0.0 }));
        assert!(AtomCavityState::<f64>::from_matrix(bad).is_err());
    }
}
