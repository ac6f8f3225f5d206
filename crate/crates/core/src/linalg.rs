//! Small dense helpers and a banded LU for the interior FEM block.

use nalgebra::{ComplexField, DMatrix, DVector, Matrix2};

use crate::{Error, C64};

pub type Tensor2 = Matrix2<C64>;

pub fn tensor_real(m: [[f64; 2]; 2]) -> Tensor2 {
    Matrix2::new(
        C64::new(m[0][0], 0.0),
        C64::new(m[0][1], 0.0),
        C64::new(m[1][0], 0.0),
        C64::new(m[1][1], 0.0),
    )
}

pub fn scalar_tensor(c: C64) -> Tensor2 {
    Matrix2::new(c, C64::new(0.0, 0.0), C64::new(0.0, 0.0), c)
}

/// `(m + m^H) / 2`.
pub fn herm_part2(m: &Tensor2) -> Tensor2 {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `(m - m^H) / 2i`, the Hermitian imaginary part.
pub fn imag_part2(m: &Tensor2) -> Tensor2 {
    (m - m.adjoint()) * C64::new(0.0, -0.5)
}

/// Eigenvalues of the Hermitian part of a 2x2 matrix, ascending.
pub fn eig_herm2(m: &Tensor2) -> [f64; 2] {
    let h = herm_part2(m);
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - rad, mean + rad]
}

pub fn min_eig_herm2(m: &Tensor2) -> f64 {
    eig_herm2(m)[0]
}

/// Largest singular value of a 2x2 matrix.
pub fn spectral_norm2(m: &Tensor2) -> f64 {
    let g = m.adjoint() * m;
    eig_herm2(&g)[1].max(0.0).sqrt()
}

pub fn herm_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn imag_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m - m.adjoint()) * C64::new(0.0, -0.5)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eig_herm(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let h = herm_part(m);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Frobenius norm of `m - m^H`.
pub fn anti_hermitian_norm(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// `b^T x` for real `b` and complex `x`, via two real products.
pub fn real_t_mul(b: &DMatrix<f64>, x: &DMatrix<C64>) -> DMatrix<C64> {
    let re = x.map(|v| v.re);
    let im = x.map(|v| v.im);
    let pr = b.tr_mul(&re);
    let pi = b.tr_mul(&im);
    DMatrix::from_fn(pr.nrows(), pr.ncols(), |i, j| C64::new(pr[(i, j)], pi[(i, j)]))
}

/// `b x` for real `b` and complex `x`.
pub fn real_mul(b: &DMatrix<f64>, x: &DMatrix<C64>) -> DMatrix<C64> {
    let re = x.map(|v| v.re);
    let im = x.map(|v| v.im);
    let pr = b * &re;
    let pi = b * &im;
    DMatrix::from_fn(pr.nrows(), pr.ncols(), |i, j| C64::new(pr[(i, j)], pi[(i, j)]))
}

/// `b^T x` for real `b` and a complex vector.
pub fn real_t_mul_vec(b: &DMatrix<f64>, x: &DVector<C64>) -> DVector<C64> {
    let re = x.map(|v| v.re);
    let im = x.map(|v| v.im);
    let pr = b.tr_mul(&re);
    let pi = b.tr_mul(&im);
    DVector::from_fn(pr.len(), |i, _| C64::new(pr[i], pi[i]))
}

/// `b x` for real `b` and a complex vector.
pub fn real_mul_vec(b: &DMatrix<f64>, x: &DVector<C64>) -> DVector<C64> {
    let re = x.map(|v| v.re);
    let im = x.map(|v| v.im);
    let pr = b * &re;
    let pi = b * &im;
    DVector::from_fn(pr.len(), |i, _| C64::new(pr[i], pi[i]))
}

/// Largest entry modulus.
pub fn max_abs<'a>(m: impl IntoIterator<Item = &'a C64>) -> f64 {
    m.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn rel_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn c64_rel_diff(a: C64, b: C64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Dense inverse through LU; `None` when singular.
pub fn inverse(m: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    m.clone().lu().try_inverse()
}

/// Band matrix with equal lower and upper bandwidth, factored in place
/// without pivoting.
///
/// Used on interior stiffness blocks whose Hermitian or rotated imaginary
/// part is definite, so every leading principal minor is nonsingular.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
    factored: bool,
}

impl<T: ComplexField<RealField = f64> + Copy> BandLu<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandLu { n, bw, data: vec![T::zero(); n * (2 * bw + 1)], factored: false }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i.abs_diff(j) > self.bw {
            T::zero()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(i.abs_diff(j) <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// In-place LU; returns the failing pivot index on breakdown.
    pub fn factor(&mut self) -> std::result::Result<(), usize> {
        let (n, bw) = (self.n, self.bw);
        let scale = self.data.iter().map(|v| v.modulus()).fold(0.0, f64::max);
        let tiny = scale * 1e-14;
        for k in 0..n {
            let pivot = self.data[self.idx(k, k)];
            if !(pivot.modulus() > tiny) || !pivot.modulus().is_finite() {
                return Err(k);
            }
            let inv = T::one() / pivot;
            let last = (k + bw + 1).min(n);
            for i in k + 1..last {
                let ik = self.idx(i, k);
                let l = self.data[ik] * inv;
                if l == T::zero() {
                    continue;
                }
                self.data[ik] = l;
                for j in k + 1..last {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        assert!(self.factored, "solve before factor");
        assert_eq!(x.len(), self.n);
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(bw)..i {
                s -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..(i + bw + 1).min(n) {
                s -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.data[self.idx(i, i)];
        }
    }

    pub fn is_factored(&self) -> bool {
        self.factored
    }
}

pub fn singular(omega: Option<C64>, pivot: usize, n: usize) -> Error {
    Error::Singular { omega: omega.map_or("n/a".to_string(), |w| format!("{w}")), pivot, n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn band_lu_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, bw) = (30, 4);
        let mut band = BandLu::<C64>::zeros(n, bw);
        let mut dense = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
                let mut v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if i == j {
                    v += C64::new(0.0, 10.0);
                }
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let b: Vec<C64> = (0..n).map(|k| C64::new(k as f64, 1.0)).collect();
        band.factor().unwrap();
        let mut x = b.clone();
        band.solve_in_place(&mut x);
        let xd = dense.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for k in 0..n {
            assert!((x[k] - xd[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn band_lu_reports_zero_pivot() {
        let mut band = BandLu::<f64>::zeros(3, 1);
        band.add(0, 0, 1.0);
        band.add(2, 2, 1.0);
        assert_eq!(band.factor(), Err(1));
    }

    #[test]
    fn herm2_eigs() {
        let m = tensor_real([[2.0, 1.0], [1.0, 2.0]]);
        let e = eig_herm2(&m);
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 3.0).abs() < 1e-15);
        let i = scalar_tensor(C64::new(0.0, 1.0));
        assert!((min_eig_herm2(&imag_part2(&i)) - 1.0).abs() < 1e-15);
    }
}
