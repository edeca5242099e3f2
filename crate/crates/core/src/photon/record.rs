use std::io::Write;

use num_traits::Zero;

use crate::error::{ensure, Error, Result};
use crate::linalg::{mat3_adjoint, mat3_mul, mat3_vec, CMatrix, Mat3, Vec3};
use crate::photon::amplitudes::ConditionalAmplitudes;
use crate::photon::scatter::ScatterProfile;
use crate::qdyn::{MasterPropagator, SourceParams, TimeGrid, D1, S0};
use crate::scalar::{cr, Cplx, Real};

/// Largest tolerated mismatch between the two vacuum-weight computations.
pub const NORMALIZATION_TOL: f64 = 1e-4;
/// Largest `|d,1⟩` population allowed to remain at the horizon in strict mode.
pub const TRUNCATION_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RecordOptions {
    /// Escalate sampling and truncation warnings to errors.
    pub strict: bool,
}

/// Expected number of P→S scattering events per attempt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterCount<T> {
    pub unconditional: T,
    /// Given that a cavity photon is emitted; absent when emission never happens.
    pub conditional: Option<T>,
}

/// The emitted-photon state of one source.
///
/// The mixed state is `ρ = ∫P̄(s)|ψ_s⟩⟨ψ_s|ds + P0|0⟩⟨0|` with `P̄(s) = P(s) + 2δ(s)`.
/// Its coherence kernel `G(t,t′) = η∫P̄(s)ψ_s(t)ψ_s*(t′)ds` is never stored densely:
/// with `R_k = Σ_{s≤t_k} P̄(s)|Φ_{t_k|s}⟩⟨Φ_{t_k|s}|`, built by the recursion
/// `R_{k+1} = M_k R_k M_k† + w_{k+1}|s0⟩⟨s0|`, each column is
/// `G(t_i,t_k) = 2κ η ⟨d1|M_{i−1}…M_k R_k|d1⟩`.
#[derive(Clone, Debug)]
pub struct PhotonRecord<T> {
    params: SourceParams<T>,
    amplitudes: ConditionalAmplitudes<T>,
    scatter: ScatterProfile<T>,
    p0: T,
    eta: T,
    seeds: Vec<Vec3<T>>,
    warnings: Vec<String>,
}

fn check_eta<T: Real>(eta: T) -> Result<()> {
    ensure!(eta >= T::zero() && eta <= T::one(), Domain, "efficiency {eta} outside [0, 1]");
    Ok(())
}

impl<T: Real> PhotonRecord<T> {
    pub fn new(p: &SourceParams<T>, eta: T) -> Result<Self> {
        Self::with_options(p, eta, RecordOptions::default())
    }

    pub fn with_options(p: &SourceParams<T>, eta: T, opts: RecordOptions) -> Result<Self> {
        check_eta(eta)?;
        p.validate()?;
        let mut warnings = Vec::new();
        if !p.grid_is_fine_enough() {
            let msg = format!(
                "dt = {} exceeds 1/(10·{}) for the fastest sampled rate",
                p.dt,
                p.max_sampled_rate()
            );
            if opts.strict {
                return Err(Error::Config(msg));
            }
            warnings.push(msg);
        }
        let amplitudes = ConditionalAmplitudes::new(p)?;
        let scatter = ScatterProfile::from_propagator(p, &MasterPropagator::new(p)?)?;
        let pp = amplitudes.p_pure();
        let w = &scatter.cell_weights;
        let mixed: T = w.iter().zip(pp).map(|(&wk, &pk)| wk * pk).sum();
        let p0 = T::one() - pp[0] - mixed;
        let mismatch = (p0 - scatter.p0_direct).abs();
        ensure!(
            mismatch <= T::lit(NORMALIZATION_TOL),
            Numeric,
            "vacuum weight mismatch {mismatch:e} between normalization identity and direct integral; refine dt"
        );
        if scatter.residual_d1 >= T::lit(TRUNCATION_TOL) {
            let msg = format!(
                "|d,1> population {:e} remains at t_horizon = {}",
                scatter.residual_d1, p.t_horizon
            );
            if opts.strict {
                return Err(Error::Numeric(msg));
            }
            warnings.push(msg);
        }
        let seeds = kernel_seeds(&amplitudes, w);
        Ok(Self { params: p.clone(), amplitudes, scatter, p0, eta, seeds, warnings })
    }

    /// Same record at a different end-to-end efficiency.
    pub fn with_eta(&self, eta: T) -> Result<Self> {
        check_eta(eta)?;
        let mut out = self.clone();
        out.eta = eta;
        Ok(out)
    }

    pub fn params(&self) -> &SourceParams<T> {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.amplitudes.grid()
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn p_pure(&self) -> &[T] {
        self.amplitudes.p_pure()
    }

    pub fn scatter_rate(&self) -> &[T] {
        &self.scatter.rate
    }

    pub fn scatter_profile(&self) -> &ScatterProfile<T> {
        &self.scatter
    }

    /// Vacuum weight from the normalization identity.
    pub fn p0(&self) -> T {
        self.p0
    }

    pub fn p0_direct(&self) -> T {
        self.scatter.p0_direct
    }

    /// `p_pure(0) + Σ_k w_k p_pure(s_k) + P0`, with the independently integrated `P0`.
    pub fn normalization_sum(&self) -> T {
        let pp = self.p_pure();
        let mixed: T = self.scatter.cell_weights.iter().zip(pp).map(|(&w, &p)| w * p).sum();
        pp[0] + mixed + self.scatter.p0_direct
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn amplitudes(&self) -> &ConditionalAmplitudes<T> {
        &self.amplitudes
    }

    /// `ψ_{s_k}(t_i)`, `i ≥ k`.
    pub fn psi_row(&self, k: usize) -> Vec<Cplx<T>> {
        self.amplitudes.psi_row(k)
    }

    /// No-jump step matrix over `[t_k, t_{k+1}]`.
    #[inline]
    pub fn step(&self, k: usize) -> &Mat3<T> {
        self.amplitudes.propagator().step(k)
    }

    /// `√(2κ)·R_k|d1⟩` at unit efficiency; the starting vectors of the kernel columns.
    pub fn seeds(&self) -> &[Vec3<T>] {
        &self.seeds
    }

    pub fn sqrt_2kappa(&self) -> T {
        self.amplitudes.sqrt_2kappa()
    }

    /// `G(t_k, t_k)`.
    pub fn kernel_diagonal(&self) -> Vec<T> {
        let a = self.sqrt_2kappa();
        self.seeds.iter().map(|x| self.eta * (a * x[D1].re)).collect()
    }

    /// `G(t_i, t_k)` for `i ≥ k`.
    pub fn kernel_column(&self, k: usize) -> Vec<Cplx<T>> {
        let n = self.grid().len();
        let a = self.sqrt_2kappa();
        let mut v = self.seeds[k];
        let mut out = Vec::with_capacity(n - k);
        for i in k..n {
            out.push((v[D1] * a) * self.eta);
            if i + 1 < n {
                v = mat3_vec(self.step(i), &v);
            }
        }
        out
    }

    /// Dense `G` on the full grid. Quadratic memory; meant for small grids and checks.
    pub fn kernel_dense(&self) -> CMatrix<T> {
        let n = self.grid().len();
        let mut g = CMatrix::zeros(n);
        for k in 0..n {
            for (off, z) in self.kernel_column(k).into_iter().enumerate() {
                g[(k + off, k)] = z;
                g[(k, k + off)] = z.conj();
            }
        }
        g
    }

    /// `trace(G)·dt`, equal to `(1 − P0)·η`.
    pub fn kernel_trace(&self) -> T {
        self.kernel_diagonal().into_iter().sum::<T>() * self.grid().dt()
    }

    /// Expected P→S scattering count, per attempt and given a cavity emission.
    pub fn expected_scatter_count(&self) -> ScatterCount<T> {
        let w = &self.scatter.cell_weights;
        let unconditional: T = w.iter().copied().sum();
        let emitted = T::one() - self.p0;
        let conditional = if emitted > T::tiny() {
            let weighted: T = w.iter().zip(&self.scatter.emission_from).map(|(&wk, &qk)| wk * qk).sum();
            Some(weighted / emitted)
        } else {
            None
        };
        ScatterCount { unconditional, conditional }
    }

    /// CSV of `ψ_s(t)` on every `stride`-th grid point in both arguments.
    pub fn write_psi_csv<W: Write>(&self, mut out: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let grid = *self.grid();
        writeln!(out, "s_us,t_us,re_psi_per_sqrt_us,im_psi_per_sqrt_us")?;
        for k in (0..grid.len()).step_by(stride) {
            let row = self.psi_row(k);
            for i in (k..grid.len()).filter(|i| i % stride == 0) {
                let z = row[i - k];
                writeln!(out, "{},{},{:e},{:e}", grid.t(k), grid.t(i), z.re, z.im)?;
            }
        }
        Ok(())
    }

    /// CSV of the lower triangle `t ≥ t′` of `G`, every `stride`-th grid point.
    pub fn write_kernel_csv<W: Write>(&self, mut out: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let grid = *self.grid();
        writeln!(out, "t_us,t_prime_us,re_G_per_us,im_G_per_us")?;
        for k in (0..grid.len()).step_by(stride) {
            let col = self.kernel_column(k);
            for i in (k..grid.len()).filter(|i| i % stride == 0) {
                let z = col[i - k];
                writeln!(out, "{},{},{:e},{:e}", grid.t(i), grid.t(k), z.re, z.im)?;
            }
        }
        Ok(())
    }
}

fn kernel_seeds<T: Real>(amp: &ConditionalAmplitudes<T>, weights: &[T]) -> Vec<Vec3<T>> {
    let n = amp.grid().len();
    let a = amp.sqrt_2kappa();
    let mut r: Mat3<T> = [[Cplx::zero(); 3]; 3];
    // The δ(s) part of P̄ enters as unit weight at s = 0.
    r[S0][S0] = cr(T::one());
    let mut seeds = Vec::with_capacity(n);
    for k in 0..n {
        r[S0][S0] += cr(weights[k]);
        seeds.push([r[0][D1] * a, r[1][D1] * a, r[2][D1] * a]);
        if k + 1 < n {
            let m = amp.propagator().step(k);
            r = mat3_mul(m, &mat3_mul(&r, &mat3_adjoint(m)));
        }
    }
    seeds
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
    fn eta_outside_unit_interval_is_rejected() {
        assert!(matches!(PhotonRecord::new(&small(), 1.5), Err(Error::Domain(_))));
        let r = PhotonRecord::new(&small(), 1.0).unwrap();
        assert!(r.with_eta(-0.1).is_err());
    }

    #[test]
    fn kernel_trace_is_emission_probability() {
        let r = PhotonRecord::new(&small(), 1.0).unwrap();
        assert!((r.kernel_trace() - (1.0 - r.p0())).abs() < 1e-12);
        let half = r.with_eta(0.5).unwrap();
        assert!((half.kernel_trace() - 0.5 * (1.0 - r.p0())).abs() < 1e-12);
    }

    #[test]
    fn zero_efficiency_gives_zero_kernel() {
        let r = PhotonRecord::new(&small(), 0.0).unwrap();
        assert!(r.kernel_diagonal().iter().all(|&g| g == 0.0));
        assert!(r.kernel_column(3).iter().all(|z| z.is_zero()));
    }

    #[test]
    fn column_head_is_diagonal() {
        let r = PhotonRecord::new(&small(), 0.8).unwrap();
        let d = r.kernel_diagonal();
        for k in [0, 10, 200] {
            assert_eq!(r.kernel_column(k)[0].re, d[k]);
        }
    }

    #[test]
    fn conditional_count_is_absent_without_emission() {
        let mut p = small();
        p.omega_drive = 0.0;
        let r = PhotonRecord::new(&p, 1.0).unwrap();
        let c = r.expected_scatter_count();
        assert_eq!(c.unconditional, 0.0);
        assert_eq!(c.conditional, None);
    }

    #[test]
    fn strict_mode_rejects_truncated_tail() {
        let mut p = small();
        p.t_horizon = 2.5;
        let r = PhotonRecord::new(&p, 1.0).unwrap();
        assert_eq!(r.warnings().len(), 1, "{:e}", r.scatter_profile().residual_d1);
        let strict = PhotonRecord::with_options(&p, 1.0, RecordOptions { strict: true });
        assert!(matches!(strict, Err(Error::Numeric(_))));
    }

    #[test]
    fn csv_exports_have_headers() {
        let mut p = small();
        p.t_horizon = 0.05;
        p.pulse_off = 0.05;
        let r = PhotonRecord::new(&p, 1.0).unwrap();
        let mut buf = Vec::new();
        r.write_psi_csv(&mut buf, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s_us,t_us,"));
        assert_eq!(text.lines().count(), 1 + 21);
        let mut buf = Vec::new();
        r.write_kernel_csv(&mut buf, 2).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 6);
    }
}
