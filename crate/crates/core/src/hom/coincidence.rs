//! Single-click and two-fold coincidence densities behind a balanced beamsplitter.

use num_traits::Zero;

use crate::error::{ensure, Result};
use crate::hom::binning::TauBinning;
use crate::hom::imperfections::ImperfectionParams;
use crate::linalg::{mat3_vec, Vec3};
use crate::photon::PhotonRecord;
use crate::qdyn::{TimeGrid, D1};
use crate::scalar::{c, Cplx, Real};

/// `p_S(t) = ½ G(t,t)`: click density on one output detector.
pub fn single_click_density<T: Real>(record: &PhotonRecord<T>) -> Vec<T> {
    let half = T::lit(0.5);
    record.kernel_diagonal().into_iter().map(|g| half * g).collect()
}

fn check_grids<T: Real>(a: &PhotonRecord<T>, b: &PhotonRecord<T>) -> Result<TimeGrid<T>> {
    ensure!(
        a.grid().matches(b.grid()),
        Config,
        "photon records are on different grids ({} points, dt {} vs {} points, dt {})",
        a.grid().len(),
        a.grid().dt(),
        b.grid().len(),
        b.grid().dt()
    );
    Ok(*a.grid())
}

/// Coincidence densities as functions of the detection lag `τ_k = k·dt ≥ 0`,
/// marginalized over the absolute detection time. Both are symmetric in τ.
#[derive(Clone, Debug, PartialEq)]
pub struct LagDensities<T> {
    pub dt: T,
    /// Orthogonal polarizations: `∫p_C⊥(t+τ, t) dt`.
    pub perp: Vec<T>,
    /// Parallel polarizations before mode-mismatch mixing and background.
    pub parallel_raw: Vec<T>,
}

impl<T: Real> LagDensities<T> {
    /// One sweep over all lags.
    ///
    /// For every lag the kernel columns of both records are advanced by one step
    /// in lockstep, so the cost is `O(N²)` with `O(N)` memory. Sums over the
    /// absolute time run in ascending grid order for each lag, lags ascending; the
    /// result is therefore bit-reproducible.
    pub fn compute(a: &PhotonRecord<T>, b: &PhotonRecord<T>, imp: &ImperfectionParams<T>) -> Result<Self> {
        imp.validate()?;
        let grid = check_grids(a, b)?;
        let n = grid.len();
        let dt = grid.dt();
        let quarter = T::lit(0.25);
        let da = a.kernel_diagonal();
        let db = b.kernel_diagonal();
        let ka = a.sqrt_2kappa() * a.eta();
        let kb = b.sqrt_2kappa() * b.eta();
        let mut va: Vec<Vec3<T>> = a.seeds().to_vec();
        let mut vb: Vec<Vec3<T>> = b.seeds().to_vec();
        let mut perp = vec![T::zero(); n];
        let mut parallel_raw = vec![T::zero(); n];
        for k in 0..n {
            let m = n - k;
            let mut direct = T::zero();
            let mut cross: Cplx<T> = Cplx::zero();
            for j in 0..m {
                direct += quarter * (da[j + k] * db[j] + da[j] * db[j + k]);
                // G(t_{j+k}, t_j) for each arm.
                let ga = va[j][D1] * ka;
                let gb = vb[j][D1] * kb;
                cross += ga * gb.conj();
            }
            let tau = T::from_index(k) * dt;
            let phase = c(T::zero(), -(imp.omega_offset * tau)).exp();
            let interference = T::lit(0.5) * (cross * phase).re * imp.dephasing(tau);
            perp[k] = direct * dt;
            parallel_raw[k] = (direct - interference) * dt;
            if k + 1 < n {
                for j in 0..m - 1 {
                    va[j] = mat3_vec(a.step(j + k), &va[j]);
                    vb[j] = mat3_vec(b.step(j + k), &vb[j]);
                }
            }
        }
        Ok(Self { dt, perp, parallel_raw })
    }

    /// Parallel density after mixing with the distinguishable fraction ε.
    pub fn parallel(&self, epsilon: T) -> Vec<T> {
        let keep = T::one() - epsilon;
        self.parallel_raw
            .iter()
            .zip(&self.perp)
            .map(|(&par, &perp)| keep * par + epsilon * perp)
            .collect()
    }
}

/// τ-binned densities, both halves, centers `m·Δ_τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedDensities<T> {
    pub centers: Vec<T>,
    pub bin_width: T,
    pub parallel: Vec<T>,
    pub perp: Vec<T>,
}

impl<T: Real> BinnedDensities<T> {
    /// Applies mixing, bins, then adds the background floor.
    pub fn from_lags(lags: &LagDensities<T>, imp: &ImperfectionParams<T>, binning: &TauBinning<T>) -> Result<Self> {
        imp.validate()?;
        ensure!(
            (binning.dt() - lags.dt).abs() <= T::epsilon() * T::lit(8.0) * lags.dt,
            Config,
            "binning step {} does not match grid step {}",
            binning.dt(),
            lags.dt
        );
        let bg = imp.background_density;
        let mut parallel = binning.bin_symmetric(&lags.parallel(imp.epsilon));
        let mut perp = binning.bin_symmetric(&lags.perp);
        for x in &mut parallel {
            *x += bg;
        }
        if imp.background_on_perp {
            for x in &mut perp {
                *x += bg;
            }
        }
        Ok(Self {
            centers: binning.centers(lags.perp.len()),
            bin_width: binning.width(),
            parallel,
            perp,
        })
    }
}

/// `p_C⊥(τ)` binned.
pub fn coincidence_orthogonal<T: Real>(
    a: &PhotonRecord<T>,
    b: &PhotonRecord<T>,
    binning: &TauBinning<T>,
) -> Result<Vec<T>> {
    let lags = LagDensities::compute(a, b, &ImperfectionParams::default())?;
    Ok(binning.bin_symmetric(&lags.perp))
}

/// `p_C∥(τ)` binned, with mixing and background.
pub fn coincidence_parallel<T: Real>(
    a: &PhotonRecord<T>,
    b: &PhotonRecord<T>,
    imp: &ImperfectionParams<T>,
    binning: &TauBinning<T>,
) -> Result<Vec<T>> {
    let lags = LagDensities::compute(a, b, imp)?;
    Ok(BinnedDensities::from_lags(&lags, imp, binning)?.parallel)
}

/// Joint detection densities on a coarse `(t1, t2)` lattice, for event sampling.
///
/// Entry `(i, j)` is the density at `(t_{i·stride}, t_{j·stride})` that detector 1
/// clicks at `t1` and detector 2 at `t2`, after mode-mismatch mixing and without
/// background.
#[derive(Clone, Debug)]
pub struct PairDensityMap<T> {
    pub stride: usize,
    pub dt: T,
    pub size: usize,
    pub parallel: Vec<T>,
    pub perp: Vec<T>,
}

impl<T: Real> PairDensityMap<T> {
    pub fn compute(
        a: &PhotonRecord<T>,
        b: &PhotonRecord<T>,
        imp: &ImperfectionParams<T>,
        stride: usize,
    ) -> Result<Self> {
        imp.validate()?;
        let grid = check_grids(a, b)?;
        let stride = stride.max(1);
        let size = (grid.len() - 1) / stride + 1;
        let da = a.kernel_diagonal();
        let db = b.kernel_diagonal();
        let quarter = T::lit(0.25);
        let keep = T::one() - imp.epsilon;
        let mut parallel = vec![T::zero(); size * size];
        let mut perp = vec![T::zero(); size * size];
        for j in 0..size {
            let kj = j * stride;
            let ca = a.kernel_column(kj);
            let cb = b.kernel_column(kj);
            for i in j..size {
                let ki = i * stride;
                let direct = quarter * (da[ki] * db[kj] + da[kj] * db[ki]);
                let tau = T::from_index(ki - kj) * grid.dt();
                let phase = c(T::zero(), -(imp.omega_offset * tau)).exp();
                let cross = ca[ki - kj] * cb[ki - kj].conj() * phase;
                let raw = direct - T::lit(0.5) * cross.re * imp.dephasing(tau);
                let par = keep * raw + imp.epsilon * direct;
                for (r, s) in [(i, j), (j, i)] {
                    parallel[r * size + s] = par;
                    perp[r * size + s] = direct;
                }
            }
        }
        Ok(Self { stride, dt: grid.dt(), size, parallel, perp })
    }

    pub fn cell(&self) -> T {
        T::from_index(self.stride) * self.dt
    }

    /// `Σ p·cell²`, the total probability represented by a map.
    pub fn total(map: &[T], cell: T) -> T {
        map.iter().copied().sum::<T>() * cell * cell
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdyn::{SourceParams, StarkShift};

    fn small(gamma_sp: f64) -> SourceParams<f64> {
        SourceParams {
            omega_drive: 30.0,
            pulse_on: 0.0,
            pulse_off: 1.0,
            delta: -200.0,
            delta_stark: StarkShift::Auto,
            g_eff: 4.0,
            kappa: 1.5,
            gamma_sp,
            gamma_dp: 2.0,
            t_horizon: 6.0,
            dt: 0.01,
        }
    }

    #[test]
    fn single_clicks_integrate_to_half_the_emission() {
        let r = PhotonRecord::new(&small(20.0), 0.4).unwrap();
        let total: f64 = single_click_density(&r).iter().sum::<f64>() * r.grid().dt();
        assert!((total - 0.5 * 0.4 * (1.0 - r.p0())).abs() < 1e-12);
    }

    #[test]
    fn pure_identical_photons_never_coincide_in_parallel() {
        let r = PhotonRecord::new(&small(0.0), 1.0).unwrap();
        let lags = LagDensities::compute(&r, &r, &ImperfectionParams::default()).unwrap();
        let peak = lags.perp.iter().cloned().fold(0.0, f64::max);
        assert!(peak > 0.0);
        assert!(lags.parallel_raw.iter().all(|&p| p.abs() < 1e-12 * peak));
    }

    #[test]
    fn zero_lag_bunching_is_complete() {
        let r = PhotonRecord::new(&small(20.0), 1.0).unwrap();
        let imp = ImperfectionParams { omega_offset: 3.0, ..Default::default() };
        let lags = LagDensities::compute(&r, &r, &imp).unwrap();
        assert!(lags.parallel_raw[0].abs() < 1e-15);
        assert!(lags.parallel_raw[10] > 0.0);
    }

    #[test]
    fn grid_mismatch_is_a_config_error() {
        let a = PhotonRecord::new(&small(20.0), 1.0).unwrap();
        let mut p = small(20.0);
        p.dt = 0.02;
        let b = PhotonRecord::new(&p, 1.0).unwrap();
        assert!(matches!(
            LagDensities::compute(&a, &b, &ImperfectionParams::default()),
            Err(crate::Error::Config(_))
        ));
    }

    #[test]
    fn pair_map_diagonal_and_total() {
        let r = PhotonRecord::new(&small(20.0), 1.0).unwrap();
        let map = PairDensityMap::compute(&r, &r, &ImperfectionParams::default(), 1).unwrap();
        let lags = LagDensities::compute(&r, &r, &ImperfectionParams::default()).unwrap();
        for i in 0..map.size {
            assert!(map.parallel[i * map.size + i].abs() < 1e-15);
        }
        let from_lags = (lags.perp[0] + 2.0 * lags.perp[1..].iter().sum::<f64>()) * r.grid().dt();
        let total = PairDensityMap::total(&map.perp, map.cell());
        assert!((total - from_lags).abs() < 1e-12);
    }
}
