//! 2×2 complex matrices and a dense LU factorization.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::{c64, I};

/// A 2×2 complex matrix stored row-major as `[[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Pauli matrix σ₂ = [[0, −i], [i, 0]].
pub const SIGMA2: Mat2 = Mat2([[ZERO, Complex64::new(0.0, -1.0)], [I, ZERO]]);
/// Pauli matrix σ₃ = diag(1, −1).
pub const SIGMA3: Mat2 = Mat2([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    #[inline]
    pub const fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    #[inline]
    pub const fn diag(d1: Complex64, d2: Complex64) -> Self {
        Mat2([[d1, ZERO], [ZERO, d2]])
    }

    /// Lower unipotent matrix `[[1, 0], [a, 1]]`.
    #[inline]
    pub const fn lower(a: Complex64) -> Self {
        Mat2([[ONE, ZERO], [a, ONE]])
    }

    /// Upper unipotent matrix `[[1, a], [0, 1]]`.
    #[inline]
    pub const fn upper(a: Complex64) -> Self {
        Mat2([[ONE, a], [ZERO, ONE]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    #[inline]
    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        let [[a, b], [c, e]] = self.0;
        Some(Mat2([[e / d, -b / d], [-c / d, a / d]]))
    }

    /// Inverse of a matrix known to have unit determinant (adjugate).
    #[inline]
    pub fn unimodular_inverse(&self) -> Mat2 {
        let [[a, b], [c, e]] = self.0;
        Mat2([[e, -b], [-c, a]])
    }

    #[inline]
    pub fn scale(&self, s: Complex64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    #[inline]
    pub fn conj(&self) -> Mat2 {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[0][1].conj()],
            [m[1][0].conj(), m[1][1].conj()],
        ])
    }

    /// Conjugate transpose.
    #[inline]
    pub fn adjoint(&self) -> Mat2 {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    /// Squared Frobenius norm `Tr(A* A)`.
    #[inline]
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    /// Frobenius norm `|A| = sqrt(Tr(A* A))`.
    #[inline]
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    #[inline]
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl AddAssign for Mat2 {
    #[inline]
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    #[inline]
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    #[inline]
    fn neg(self) -> Mat2 {
        self.scale(c64(-1.0, 0.0))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Mul<Complex64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: Complex64) -> Mat2 {
        self.scale(s)
    }
}

/// Dense LU factorization with partial pivoting, `P A = L U`.
///
/// The matrix is stored row-major; `L` has an implicit unit diagonal.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    norm1: f64,
}

impl DenseLu {
    /// Factor the `n × n` row-major matrix `a`.
    pub fn factor(mut a: Vec<Complex64>, n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::invalid("matrix", "length is not n*n"));
        }
        if a.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("linear system assembly"));
        }
        let norm1 = one_norm(&a, n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm_sqr()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                return Err(Error::Singular {
                    pivot: k,
                    size: n,
                    condition: f64::INFINITY,
                });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = ONE / a[k * n + k];
            let (top, bottom) = a.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n..(k + 1) * n];
            for row in bottom.chunks_exact_mut(n) {
                let f = row[k] * inv;
                if f == ZERO {
                    continue;
                }
                row[k] = f;
                for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *x -= f * u;
                }
            }
        }
        Ok(DenseLu {
            n,
            lu: a,
            perm,
            norm1,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: Complex64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(u, y)| u * y)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        b.copy_from_slice(&x);
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solve `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        // A^H = U^H L^H P, so solve U^H y = b, L^H z = y, x = P^T z.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lu[k * n + i].conj() * y[k];
            }
            y[i] = s / self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lu[k * n + i].conj() * y[k];
            }
            y[i] = s;
        }
        let mut x = vec![ZERO; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Hager–Higham estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let mut x = vec![c64(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            let ynorm: f64 = y.iter().map(|z| z.norm()).sum();
            if ynorm <= est {
                break;
            }
            est = ynorm;
            let xi: Vec<Complex64> = y
                .iter()
                .map(|z| {
                    let a = z.norm();
                    if a == 0.0 {
                        ONE
                    } else {
                        z / a
                    }
                })
                .collect();
            let w = self.solve_adjoint(&xi);
            let (j, wmax) = w
                .iter()
                .enumerate()
                .map(|(j, z)| (j, z.norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let wx: f64 = w.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if wmax <= wx {
                break;
            }
            x = vec![ZERO; n];
            x[j] = ONE;
        }
        est * self.norm1
    }
}

fn one_norm(a: &[Complex64], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix-vector product for a row-major `n × n` matrix.
pub fn matvec(a: &[Complex64], n: usize, x: &[Complex64]) -> Vec<Complex64> {
    a.chunks_exact(n)
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(state: &mut u64) -> f64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn lu_solves_random_system() {
        let n = 37;
        let mut s = 9u64;
        let a: Vec<Complex64> = (0..n * n).map(|_| c64(lcg(&mut s), lcg(&mut s))).collect();
        let x: Vec<Complex64> = (0..n).map(|_| c64(lcg(&mut s), lcg(&mut s))).collect();
        let b = matvec(&a, n, &x);
        let lu = DenseLu::factor(a.clone(), n).unwrap();
        let got = lu.solve(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-11);
        }
        // adjoint solve
        let ah: Vec<Complex64> = (0..n * n).map(|k| a[(k % n) * n + k / n].conj()).collect();
        let bh = matvec(&ah, n, &x);
        let got = lu.solve_adjoint(&bh);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-11);
        }
    }

    #[test]
    fn condition_estimate_of_diagonal() {
        let n = 4;
        let mut a = vec![ZERO; 16];
        for (i, d) in [1.0, 10.0, 0.1, 2.0].iter().enumerate() {
            a[i * n + i] = c64(*d, 0.0);
        }
        let lu = DenseLu::factor(a, n).unwrap();
        assert!((lu.condition_estimate() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = vec![ONE, ONE, ONE, ONE];
        assert!(matches!(DenseLu::factor(a, 2), Err(Error::Singular { .. })));
    }

    #[test]
    fn pauli_relations() {
        let s2s2 = SIGMA2 * SIGMA2;
        assert_eq!(s2s2, Mat2::IDENTITY);
        let m = Mat2::new(c64(1.0, 2.0), c64(0.5, -1.0), c64(3.0, 0.0), c64(-1.0, 1.0));
        let inv = m.inverse().unwrap();
        assert!((m * inv - Mat2::IDENTITY).norm() < 1e-14);
        assert!((SIGMA3 * SIGMA3 - Mat2::IDENTITY).norm() == 0.0);
    }
}
