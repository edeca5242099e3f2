use crate::error::{ensure, Result};
use crate::scalar::Real;

/// Bins of width `Δ_τ = ratio·dt` centered on `m·Δ_τ`.
///
/// A fine lag `τ_k = k·dt` belongs to the bin whose center is nearest. With an even
/// ratio the lags exactly on an edge are split half and half between the two bins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauBinning<T> {
    dt: T,
    ratio: usize,
}

impl<T: Real> TauBinning<T> {
    pub fn new(dt: T, bin_width: T) -> Result<Self> {
        ensure!(dt > T::zero(), Config, "dt must be > 0");
        ensure!(bin_width > T::zero(), Config, "bin width must be > 0");
        let r = (bin_width / dt).round();
        ensure!(
            r >= T::one() && (r * dt - bin_width).abs() <= T::lit(1e-9) * bin_width,
            Config,
            "bin width {bin_width} is not an integer multiple of dt {dt}"
        );
        Ok(Self { dt, ratio: r.to_usize().unwrap_or(1) })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn ratio(&self) -> usize {
        self.ratio
    }

    pub fn width(&self) -> T {
        T::from_index(self.ratio) * self.dt
    }

    /// Non-negative bin index `m` and weight for fine lag `k ≥ 0`; a second entry
    /// appears for split edges.
    fn assign(&self, k: usize) -> [(usize, T); 2] {
        let r = self.ratio;
        if r % 2 == 0 && k % r == r / 2 {
            let m = k / r;
            let half = T::lit(0.5);
            [(m, half), (m + 1, half)]
        } else {
            [((k + r / 2) / r, T::one()), (0, T::zero())]
        }
    }

    /// Number of bins on the non-negative side for lags `0..n_lags`.
    pub fn half_len(&self, n_lags: usize) -> usize {
        if n_lags == 0 {
            return 0;
        }
        self.assign(n_lags - 1).iter().map(|&(m, w)| if w > T::zero() { m + 1 } else { 0 }).max().unwrap_or(0)
    }

    /// Bins a lag density that is symmetric in τ, given on `τ_k ≥ 0`.
    ///
    /// Returns the bin densities for centers `−M·Δ, …, 0, …, M·Δ`:
    /// `Σ_{k∈bin} p(τ_k)·dt / Δ_τ`, summing `k` in ascending order.
    pub fn bin_symmetric(&self, density: &[T]) -> Vec<T> {
        let m_max = self.half_len(density.len());
        let mut half = vec![T::zero(); m_max];
        for (k, &p) in density.iter().enumerate() {
            for (m, w) in self.assign(k) {
                if w > T::zero() {
                    half[m] += w * p;
                }
            }
        }
        // Bin 0 also collects the mirrored negative lags.
        for (k, &p) in density.iter().enumerate().skip(1) {
            for (m, w) in self.assign(k) {
                if m == 0 && w > T::zero() {
                    half[0] += w * p;
                }
            }
        }
        let scale = self.dt / self.width();
        let mut out = Vec::with_capacity(2 * m_max.max(1) - 1);
        out.extend(half.iter().skip(1).rev().map(|&x| x * scale));
        out.extend(half.iter().map(|&x| x * scale));
        out
    }

    /// Bin centers matching [`Self::bin_symmetric`].
    pub fn centers(&self, n_lags: usize) -> Vec<T> {
        let m = self.half_len(n_lags) as i64;
        (-(m - 1)..m).map(|i| T::from_i64(i).expect("bin index") * self.width()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_must_be_a_multiple_of_dt() {
        assert!(TauBinning::new(0.005, 0.125).is_ok());
        assert_eq!(TauBinning::new(0.005, 0.125).unwrap().ratio(), 25);
        assert!(TauBinning::new(0.005, 0.0123).is_err());
    }

    #[test]
    fn unit_ratio_keeps_lags() {
        let b = TauBinning::new(0.1, 0.1).unwrap();
        let d = b.bin_symmetric(&[1.0, 2.0, 3.0]);
        assert_eq!(d, vec![3.0, 2.0, 1.0, 2.0, 3.0]);
        assert_eq!(b.centers(3).len(), 5);
    }

    #[test]
    fn even_ratio_splits_edges_and_conserves_mass() {
        let b = TauBinning::new(1.0, 2.0).unwrap();
        let p = [1.0, 1.0, 1.0, 1.0, 1.0];
        let d = b.bin_symmetric(&p);
        // Lags 0..4 and mirrored: total fine mass 9·dt.
        let total: f64 = d.iter().sum::<f64>() * b.width();
        assert!((total - 9.0).abs() < 1e-12);
        // Bin 0 holds lag 0 plus half of ±1.
        assert_eq!(d[d.len() / 2], 2.0 / 2.0);
    }

    #[test]
    fn odd_ratio_mass_is_conserved() {
        let b = TauBinning::new(0.5, 1.5).unwrap();
        let p: Vec<f64> = (0..20).map(|k| (k as f64 * 0.3).cos().abs()).collect();
        let d = b.bin_symmetric(&p);
        let fine = (p[0] + 2.0 * p[1..].iter().sum::<f64>()) * 0.5;
        assert!((d.iter().sum::<f64>() * 1.5 - fine).abs() < 1e-12);
        let c = b.centers(20);
        assert_eq!(c.len(), d.len());
        assert_eq!(c[c.len() / 2], 0.0);
    }
}
