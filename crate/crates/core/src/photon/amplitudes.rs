//! Conditional pure wavepackets `ψ_s(t) = √(2κ)⟨d,1|Φ_{t|s}⟩`.

use num_traits::Zero;

use crate::error::Result;
use crate::linalg::{mat3_adjoint, mat3_mul, mat3_vec, Mat3, Vec3};
use crate::qdyn::{NoJumpPropagator, SourceParams, TimeGrid, D1, S0};
use crate::scalar::{cr, Cplx, Real};

/// Pure-photon amplitudes for every start time on the grid.
///
/// Rows of `ψ` are generated on demand; only `p_pure` is stored.
#[derive(Clone, Debug)]
pub struct ConditionalAmplitudes<T> {
    propagator: NoJumpPropagator<T>,
    sqrt_2kappa: T,
    p_pure: Vec<T>,
}

impl<T: Real> ConditionalAmplitudes<T> {
    pub fn new(p: &SourceParams<T>) -> Result<Self> {
        let propagator = NoJumpPropagator::new(p)?;
        let sqrt_2kappa = (T::lit(2.0) * p.kappa).sqrt();
        let p_pure = pure_probabilities(&propagator, sqrt_2kappa);
        Ok(Self { propagator, sqrt_2kappa, p_pure })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.propagator.grid()
    }

    pub fn propagator(&self) -> &NoJumpPropagator<T> {
        &self.propagator
    }

    pub fn sqrt_2kappa(&self) -> T {
        self.sqrt_2kappa
    }

    /// `p_pure(s_k) = Σ_{t ≥ s_k} |ψ_{s_k}(t)|² dt`.
    pub fn p_pure(&self) -> &[T] {
        &self.p_pure
    }

    /// `ψ_{s_k}(t_i)` for `i ≥ k`.
    pub fn psi_row(&self, k: usize) -> Vec<Cplx<T>> {
        let n = self.grid().len();
        let mut out = Vec::with_capacity(n - k);
        let mut phi: Vec3<T> = [Cplx::zero(); 3];
        phi[S0] = cr(T::one());
        for i in k..n {
            out.push(phi[D1] * self.sqrt_2kappa);
            if i + 1 < n {
                phi = mat3_vec(self.propagator.step(i), &phi);
            }
        }
        out
    }

    /// Dense lower-triangular `ψ[s][t]`, zero for `t < s`. Quadratic memory.
    pub fn psi_dense(&self) -> Vec<Vec<Cplx<T>>> {
        let n = self.grid().len();
        (0..n)
            .map(|k| {
                let mut row = vec![Cplx::zero(); k];
                row.extend(self.psi_row(k));
                row
            })
            .collect()
    }
}

/// Backward sweep `Q_k = 2κ dt |d1⟩⟨d1| + M_k† Q_{k+1} M_k`, so that
/// `p_pure(s_k) = ⟨s0|Q_k|s0⟩` in linear time.
fn pure_probabilities<T: Real>(prop: &NoJumpPropagator<T>, sqrt_2kappa: T) -> Vec<T> {
    let grid = prop.grid();
    let n = grid.len();
    let weight = cr(sqrt_2kappa * sqrt_2kappa * grid.dt());
    let mut projector: Mat3<T> = [[Cplx::zero(); 3]; 3];
    projector[D1][D1] = weight;
    let mut q = projector;
    let mut out = vec![T::zero(); n];
    if n == 0 {
        return out;
    }
    out[n - 1] = q[S0][S0].re;
    for k in (0..n - 1).rev() {
        let m = prop.step(k);
        let mut next = mat3_mul(&mat3_adjoint(m), &mat3_mul(&q, m));
        next[D1][D1] += weight;
        q = next;
        out[k] = q[S0][S0].re;
    }
    out
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
            t_horizon: 4.0,
            dt: 0.01,
        }
    }

    #[test]
    fn backward_sweep_matches_row_sums() {
        let amp = ConditionalAmplitudes::new(&small()).unwrap();
        let dt = amp.grid().dt();
        for k in [0, 17, 99, 250, 400] {
            let direct: f64 = amp.psi_row(k).iter().map(|z| z.norm_sqr() * dt).sum();
            assert!((direct - amp.p_pure()[k]).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn no_cavity_decay_means_no_photon() {
        let mut p = small();
        p.kappa = 0.0;
        let amp = ConditionalAmplitudes::new(&p).unwrap();
        assert!(amp.p_pure().iter().all(|&x| x == 0.0));
        assert!(amp.psi_row(0).iter().all(|z| z.is_zero()));
    }

    #[test]
    fn nothing_is_emitted_from_rest_after_the_pulse() {
        let amp = ConditionalAmplitudes::new(&small()).unwrap();
        assert!(amp.p_pure()[0] > 0.0);
        assert!(amp.p_pure()[100..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dense_rows_are_lower_triangular() {
        let mut p = small();
        p.t_horizon = 0.1;
        p.pulse_off = 0.1;
        let psi = ConditionalAmplitudes::new(&p).unwrap().psi_dense();
        assert_eq!(psi.len(), 11);
        assert!(psi[5][..5].iter().all(|z| z.is_zero()));
        assert!(psi[5][5].is_zero());
        assert!(!psi[5][6].is_zero());
    }
}
