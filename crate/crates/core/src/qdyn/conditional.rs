//! No-jump evolution on `{|s,0⟩, |d,1⟩, |p,0⟩}` under `−iH − ½ΣL†L`.
//!
//! `|d,0⟩` only receives population through jumps, so the restriction to the
//! leading 3×3 block is exact for the conditional state.

use num_traits::Zero;

use crate::error::{ensure, Result};
use crate::linalg::{mat3_from, mat3_mul, mat3_vec, norm_sqr3, CMatrix, Mat3, Vec3};
use crate::qdyn::hamiltonian::{build_jump_operators, decay_operator, hamiltonian_for_level};
use crate::qdyn::params::SourceParams;
use crate::qdyn::schedule::{DriveSchedule, Level, PieceCache, StepTable, TimeGrid};
use crate::qdyn::NOJUMP_DIM;
use crate::scalar::{c, cr, Cplx, Real};

/// Unnormalized conditional state `|Φ_{t|s}⟩` and its norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalVector<T> {
    pub phi: Vec3<T>,
    pub norm_sq: T,
}

impl<T: Real> ConditionalVector<T> {
    pub fn new(phi: Vec3<T>) -> Self {
        Self { phi, norm_sq: norm_sqr3(&phi) }
    }

    pub fn ground() -> Self {
        Self::new([cr(T::one()), Cplx::zero(), Cplx::zero()])
    }
}

/// `A = −iH₃ − ½K₃` for one drive level.
pub fn effective_generator<T: Real>(p: &SourceParams<T>, level: Level) -> CMatrix<T> {
    let h = hamiltonian_for_level(p, level).leading(NOJUMP_DIM);
    let k = decay_operator(&build_jump_operators(p)).leading(NOJUMP_DIM);
    &h.scale(c(T::zero(), -T::one())) + &k.scale_real(T::lit(-0.5))
}

/// Step matrices `M_k = e^{A(t_{k+1}−t_k)}` on the output grid.
#[derive(Clone, Debug)]
pub struct NoJumpPropagator<T> {
    schedule: DriveSchedule<T>,
    generators: [CMatrix<T>; 2],
    steps: StepTable<Mat3<T>>,
}

fn piece_exp<T: Real>(generators: &[CMatrix<T>; 2], cache: &mut PieceCache<Mat3<T>>, pieces: &[(Level, T)]) -> Mat3<T> {
    let id = mat3_from(&CMatrix::identity(NOJUMP_DIM));
    pieces.iter().fold(id, |acc, &(level, h)| {
        let e = cache.get(level, h, |lv, hh| mat3_from(&generators[lv].scale_real(hh).expm()));
        mat3_mul(&e, &acc)
    })
}

impl<T: Real> NoJumpPropagator<T> {
    pub fn new(p: &SourceParams<T>) -> Result<Self> {
        let schedule = DriveSchedule::new(p)?;
        let generators = [effective_generator(p, 0), effective_generator(p, 1)];
        ensure!(
            generators.iter().all(CMatrix::is_finite),
            Numeric,
            "no-jump generator has non-finite entries"
        );
        let mut cache = PieceCache::new();
        let steps = StepTable::build(&schedule, |pc| piece_exp(&generators, &mut cache, pc));
        Ok(Self { schedule, generators, steps })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.schedule.grid()
    }

    #[inline]
    pub fn step(&self, k: usize) -> &Mat3<T> {
        self.steps.step(k)
    }

    /// Propagator over an arbitrary interval `[a, b]`.
    pub fn between(&self, a: T, b: T) -> Mat3<T> {
        let mut cache = PieceCache::new();
        piece_exp(&self.generators, &mut cache, &self.schedule.pieces(a, b))
    }

    /// `Φ_{t|s}` at `t = s` followed by every grid point strictly after `s`.
    pub fn trajectory(&self, s: T) -> Result<ConditionalTrajectory<T>> {
        let grid = *self.grid();
        let end = grid.end();
        ensure!(s >= T::zero() && s <= end, Domain, "s = {s} outside [0, {end}]");
        let k0 = grid.ceil_index(s);
        let on_grid = k0 < grid.len() && (grid.t(k0) - s).abs() <= T::lit(1e-9) * grid.dt();
        let mut times = vec![s];
        let mut states = vec![ConditionalVector::ground()];
        let mut phi = states[0].phi;
        let mut k = k0;
        if !on_grid && k < grid.len() {
            phi = mat3_vec(&self.between(s, grid.t(k)), &phi);
            times.push(grid.t(k));
            states.push(ConditionalVector::new(phi));
        }
        while k + 1 < grid.len() {
            phi = mat3_vec(self.step(k), &phi);
            k += 1;
            times.push(grid.t(k));
            states.push(ConditionalVector::new(phi));
        }
        Ok(ConditionalTrajectory { times, states })
    }
}

/// Conditional states for `t ≥ s`.
#[derive(Clone, Debug)]
pub struct ConditionalTrajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<ConditionalVector<T>>,
}

/// No-jump evolution started from `|s,0⟩` at time `s`.
pub fn propagate_conditional<T: Real>(p: &SourceParams<T>, s: T) -> Result<ConditionalTrajectory<T>> {
    NoJumpPropagator::new(p)?.trajectory(s)
}
