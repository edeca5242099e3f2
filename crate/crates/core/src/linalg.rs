//! Small dense complex linear algebra.
//!
//! The state spaces here are tiny (3, 4, 16 and 32 dimensional), so a plain
//! row-major square matrix with a scaling-and-squaring exponential covers
//! everything the propagators need. Hot loops use the fixed-size 3×3 helpers
//! at the bottom of the file.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_traits::{One, Zero};

use crate::scalar::{cr, Cplx, Real};

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Cplx::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Cplx::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Cplx<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// `|row⟩⟨col|` scaled by `amp`.
    pub fn outer_unit(n: usize, row: usize, col: usize, amp: Cplx<T>) -> Self {
        let mut m = Self::zeros(n);
        m[(row, col)] = amp;
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Cplx<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Cplx<T>] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scale(&self, k: Cplx<T>) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&z| z * k).collect(),
        }
    }

    pub fn scale_real(&self, k: T) -> Self {
        self.scale(cr(k))
    }

    pub fn trace(&self) -> Cplx<T> {
        (0..self.n).map(|i| self[(i, i)]).fold(Cplx::zero(), |a, b| a + b)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn norm_frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|z| !z.is_zero()).count()
    }

    pub fn matvec(&self, v: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(v.len(), self.n, "dimension mismatch in matvec");
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(v).fold(Cplx::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Row-vector times matrix, `vᵀ M`.
    pub fn vecmat(&self, v: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(v.len(), self.n, "dimension mismatch in vecmat");
        let mut out = vec![Cplx::zero(); self.n];
        for (i, &vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            let row = &self.data[i * self.n..(i + 1) * self.n];
            for (o, &m) in out.iter_mut().zip(row) {
                *o += vi * m;
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.n, other.n);
        Self::from_fn(a * b, |i, j| self[(i / b, j / b)] * other[(i % b, j % b)])
    }

    /// Copies `block` into the sub-matrix starting at (`row`, `col`). Used to build
    /// augmented generators.
    pub fn set_block(&mut self, row: usize, col: usize, block: &Self) {
        for i in 0..block.n {
            for j in 0..block.n {
                self[(row + i, col + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, row: usize, col: usize, size: usize) -> Self {
        Self::from_fn(size, |i, j| self[(row + i, col + j)])
    }

    /// Restriction to the leading `k`×`k` sub-matrix.
    pub fn leading(&self, k: usize) -> Self {
        self.block(0, 0, k)
    }

    /// Matrix exponential by scaling and squaring with a truncated Taylor series.
    ///
    /// The scaled matrix has 1-norm at most 1/2, where the series converges to machine
    /// precision in under 20 terms for `f64`.
    pub fn expm(&self) -> Self {
        let norm = self.norm_one();
        let half = T::lit(0.5);
        let mut squarings = 0u32;
        let mut scale = T::one();
        while norm * scale > half {
            scale = scale * half;
            squarings += 1;
        }
        let b = self.scale_real(scale);
        let mut sum = Self::identity(self.n);
        let mut term = Self::identity(self.n);
        for k in 1..=60usize {
            term = (&term * &b).scale_real(T::one() / T::from_index(k));
            sum += &term;
            if term.norm_one() <= T::epsilon() * sum.norm_one() {
                break;
            }
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    ///
    /// The n×n complex problem is embedded into the 2n×2n real symmetric matrix
    /// `[[Re, -Im], [Im, Re]]`, whose spectrum is that of the original with every
    /// eigenvalue doubled; cyclic Jacobi then diagonalizes it.
    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        let n = self.n;
        let m = 2 * n;
        let mut a = vec![T::zero(); m * m];
        for i in 0..n {
            for j in 0..n {
                // Symmetrize so small Hermiticity defects cannot stall the sweep.
                let z = (self[(i, j)] + self[(j, i)].conj()) * cr(T::lit(0.5));
                a[i * m + j] = z.re;
                a[(i + n) * m + (j + n)] = z.re;
                a[i * m + (j + n)] = -z.im;
                a[(i + n) * m + j] = z.im;
            }
        }
        let mut evs = symmetric_jacobi_eigenvalues(&mut a, m);
        evs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
        evs.into_iter().step_by(2).collect()
    }
}

fn symmetric_jacobi_eigenvalues<T: Real>(a: &mut [T], m: usize) -> Vec<T> {
    let scale = a.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    if scale == T::zero() {
        return vec![T::zero(); m];
    }
    let tol = T::epsilon() * scale;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..m {
            for q in (p + 1)..m {
                off = off.max(a[p * m + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq.abs() <= tol * T::lit(1e-3) {
                    continue;
                }
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cth = T::one() / (t * t + T::one()).sqrt();
                let sth = t * cth;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = cth * akp - sth * akq;
                    a[k * m + q] = sth * akp + cth * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = cth * apk - sth * aqk;
                    a[q * m + k] = sth * apk + cth * aqk;
                }
            }
        }
    }
    (0..m).map(|i| a[i * m + i]).collect()
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Cplx<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cplx<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx<T> {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix product");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                let rrow = &rhs.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix sum");
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix difference");
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Real> AddAssign<&CMatrix<T>> for CMatrix<T> {
    fn add_assign(&mut self, rhs: &CMatrix<T>) {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix sum");
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

// Fixed-size helpers for the three-level no-jump manifold.

pub type Vec3<T> = [Cplx<T>; 3];
pub type Mat3<T> = [[Cplx<T>; 3]; 3];

pub fn mat3_from<T: Real>(m: &CMatrix<T>) -> Mat3<T> {
    assert_eq!(m.dim(), 3);
    let mut out = [[Cplx::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            *z = m[(i, j)];
        }
    }
    out
}

#[inline(always)]
pub fn mat3_vec<T: Real>(m: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat3_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[Cplx::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn mat3_adjoint<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let mut out = [[Cplx::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

#[inline(always)]
pub fn norm_sqr3<T: Real>(v: &Vec3<T>) -> T {
    v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMatrix::<f64>::zeros(4);
        assert_eq!(z.expm(), CMatrix::identity(4));
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(-i θ σx) = cos θ I − i sin θ σx
        let theta = 12.7_f64;
        let gen = CMatrix::from_fn(2, |i, j| if i != j { c(0.0, -theta) } else { c(0.0, 0.0) });
        let u = gen.expm();
        assert!((u[(0, 0)] - c(theta.cos(), 0.0)).norm() < 1e-12);
        assert!((u[(0, 1)] - c(0.0, -theta.sin())).norm() < 1e-12);
    }

    #[test]
    fn expm_of_diagonal_decay() {
        let m = CMatrix::from_fn(3, |i, j| if i == j { c(-(i as f64) * 3.0, i as f64) } else { c(0.0, 0.0) });
        let e = m.expm();
        for i in 0..3 {
            let want = c(-(i as f64) * 3.0, i as f64).exp();
            assert!((e[(i, i)] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn hermitian_eigenvalues_of_known_matrix() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let m = CMatrix::<f64>::from_fn(2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => c(2.0, 0.0),
            (0, 1) => c(0.0, 1.0),
            _ => c(0.0, -1.0),
        });
        let ev = m.hermitian_eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12, "{ev:?}");
    }

    #[test]
    fn kron_places_blocks() {
        let a = CMatrix::from_fn(2, |i, j| c((i * 2 + j) as f64, 0.0));
        let id = CMatrix::<f64>::identity(2);
        let k = a.kron(&id);
        assert_eq!(k[(2, 0)], c(2.0, 0.0));
        assert_eq!(k[(3, 1)], c(2.0, 0.0));
        assert_eq!(k[(3, 0)], c(0.0, 0.0));
    }

    #[test]
    fn works_in_single_precision() {
        let gen = CMatrix::from_fn(2, |i, j| if i != j { c(0.0f32, -1.0) } else { c(0.0, 0.0) });
        let u = gen.expm();
        assert!((u[(0, 0)].re - 1.0f32.cos()).abs() < 1e-6);
    }
}
