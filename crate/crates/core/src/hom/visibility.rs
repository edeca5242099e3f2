use std::io::Write;

use crate::error::{ensure, Result};
use crate::hom::binning::TauBinning;
use crate::hom::coincidence::{BinnedDensities, LagDensities};
use crate::hom::imperfections::ImperfectionParams;
use crate::photon::PhotonRecord;
use crate::scalar::Real;

/// One row of a visibility table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowPoint<T> {
    pub window: T,
    /// Absent when no orthogonal coincidence falls inside the window.
    pub visibility: Option<T>,
    pub p_succ: T,
}

/// Binned coincidence densities and their window integrals.
#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceResult<T> {
    pub densities: BinnedDensities<T>,
    pub curve: Vec<WindowPoint<T>>,
}

/// `V(T) = 1 − Σ_{|τ|≤T} p_C∥ / Σ_{|τ|≤T} p_C⊥` and `P_succ(T) = Σ_{|τ|≤T} p_C⊥ Δ_τ`
/// over densities binned symmetrically around τ = 0.
pub fn visibility_curve<T: Real>(
    parallel: &[T],
    perp: &[T],
    bin_width: T,
    windows: &[T],
) -> Result<Vec<WindowPoint<T>>> {
    ensure!(parallel.len() == perp.len(), Config, "density lengths differ");
    ensure!(perp.len() % 2 == 1, Config, "densities must have an odd number of bins centered on 0");
    let mid = perp.len() / 2;
    let mut out = Vec::with_capacity(windows.len());
    for &w in windows {
        ensure!(w >= T::zero(), Config, "window {w} must be >= 0");
        let m = (w / bin_width).round();
        ensure!(
            (m * bin_width - w).abs() <= T::lit(1e-9) * bin_width.max(w),
            Config,
            "window {w} is not a multiple of the bin width {bin_width}"
        );
        let m = m.to_usize().unwrap_or(usize::MAX).min(mid);
        let range = mid - m..=mid + m;
        let c_par: T = parallel[range.clone()].iter().copied().sum::<T>() * bin_width;
        let c_perp: T = perp[range].iter().copied().sum::<T>() * bin_width;
        let visibility = if c_perp > T::zero() { Some(T::one() - c_par / c_perp) } else { None };
        out.push(WindowPoint { window: w, visibility, p_succ: c_perp });
    }
    Ok(out)
}

/// All windows `m·Δ_τ` up to the largest covered lag.
pub fn all_windows<T: Real>(densities: &BinnedDensities<T>) -> Vec<T> {
    let half = densities.perp.len() / 2;
    (0..=half).map(|m| T::from_index(m) * densities.bin_width).collect()
}

impl<T: Real> CoincidenceResult<T> {
    pub fn from_lags(
        lags: &LagDensities<T>,
        imp: &ImperfectionParams<T>,
        binning: &TauBinning<T>,
        windows: &[T],
    ) -> Result<Self> {
        let densities = BinnedDensities::from_lags(lags, imp, binning)?;
        let curve = visibility_curve(&densities.parallel, &densities.perp, densities.bin_width, windows)?;
        Ok(Self { densities, curve })
    }

    /// Window row for `window`, if it was evaluated.
    pub fn at(&self, window: T) -> Option<&WindowPoint<T>> {
        let tol = T::lit(1e-9) * self.densities.bin_width;
        self.curve.iter().find(|p| (p.window - window).abs() <= tol)
    }

    pub fn write_densities_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "tau_center_us,p_parallel_per_us,p_perp_per_us")?;
        let d = &self.densities;
        for ((t, a), b) in d.centers.iter().zip(&d.parallel).zip(&d.perp) {
            writeln!(out, "{t},{a:e},{b:e}")?;
        }
        Ok(())
    }

    pub fn write_visibility_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "T_us,V,P_succ")?;
        for p in &self.curve {
            match p.visibility {
                Some(v) => writeln!(out, "{},{v},{:e}", p.window, p.p_succ)?,
                None => writeln!(out, "{},,{:e}", p.window, p.p_succ)?,
            }
        }
        Ok(())
    }
}

/// Densities and visibility curve for two photon sources.
pub fn simulate_hom<T: Real>(
    a: &PhotonRecord<T>,
    b: &PhotonRecord<T>,
    imp: &ImperfectionParams<T>,
    bin_width: T,
    windows: &[T],
) -> Result<CoincidenceResult<T>> {
    let binning = TauBinning::new(a.grid().dt(), bin_width)?;
    let lags = LagDensities::compute(a, b, imp)?;
    CoincidenceResult::from_lags(&lags, imp, &binning, windows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_densities_give_zero_visibility() {
        let p: Vec<f64> = vec![0.1, 0.3, 0.5, 0.3, 0.1];
        let rows = visibility_curve(&p, &p, 0.5, &[0.0, 0.5, 1.0]).unwrap();
        assert!(rows.iter().all(|r| r.visibility == Some(0.0)));
        assert!((rows[2].p_succ - 0.65).abs() < 1e-15);
    }

    #[test]
    fn no_orthogonal_counts_means_no_visibility() {
        let z = vec![0.0f64; 3];
        let rows = visibility_curve(&z, &z, 1.0, &[1.0]).unwrap();
        assert_eq!(rows[0].visibility, None);
    }

    #[test]
    fn windows_must_sit_on_bin_edges() {
        let p = vec![1.0f64; 5];
        assert!(visibility_curve(&p, &p, 0.5, &[0.3]).is_err());
    }

    #[test]
    fn csv_leaves_absent_visibility_empty() {
        let d = BinnedDensities { centers: vec![0.0], bin_width: 1.0, parallel: vec![0.0], perp: vec![0.0] };
        let r = CoincidenceResult { curve: visibility_curve(&d.parallel, &d.perp, 1.0, &[0.0]).unwrap(), densities: d };
        let mut buf = Vec::new();
        r.write_visibility_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "T_us,V,P_succ\n0,,0e0\n");
    }
}
