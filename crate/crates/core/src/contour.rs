//! The contour `γ = γ₊ ∪ γ₋` as two Schwarz-symmetric circles and the
//! discrete Cauchy operators on it.
//!
//! `γ₊` is the circle `|s − a| = R` around the eigenvalue domain, `γ₋` is
//! `|s − ā| = R`; both are counterclockwise with `n` equispaced nodes
//! `s_j = center + R e^{2πij/n}`. Node index `c·n + j` addresses node `j` of
//! circle `c` (0 for `γ₊`, 1 for `γ₋`).
//!
//! On a single circle a density is expanded in powers `w^k`,
//! `w = (s − center)/R`, `k = −n/2, …, n/2 − 1`. The boundary value from the
//! interior (left) keeps `k ≥ 0`, the one from the exterior (right) is minus
//! the `k < 0` part. The Nyquist mode goes to the negative side. Circle to
//! circle interactions use the plain trapezoid rule, which is spectrally
//! accurate because the circles are disjoint.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::fft_in_place;
use crate::linalg::Mat2;
use crate::spectral::EigenvalueDomain;
use crate::{c64, I};

/// Which side of the oriented contour a boundary value is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Left of the orientation, the disk interior.
    Plus,
    /// Right of the orientation, the disk exterior.
    Minus,
}

#[derive(Debug, Clone)]
pub struct ContourGrid {
    center: Complex64,
    radius: f64,
    n: usize,
    clearance: f64,
    nodes: Vec<Complex64>,
    /// `w_j = e^{iφ_j}`, shared by both circles.
    roots: Vec<Complex64>,
    /// Cross-circle kernels: entry `[c][p*n + q]` couples target node `p` on
    /// circle `c` with source node `q` on the other circle.
    cross: [Vec<Complex64>; 2],
}

impl ContourGrid {
    /// Circle around the centroid of `domain` with radius
    /// `circumradius + clearance`, and its reflection.
    pub fn build(
        domain: &EigenvalueDomain,
        nodes_per_circle: usize,
        clearance: f64,
    ) -> Result<Self> {
        let center = domain.centroid();
        let radius = domain.circumradius() + clearance;
        if !(clearance > 0.0) || !clearance.is_finite() {
            return Err(Error::invalid("clearance", "must be positive"));
        }
        let mut grid = Self::circle(center, radius, nodes_per_circle)?;
        grid.clearance = (0..grid.n)
            .map(|j| domain.distance(grid.nodes[j]))
            .fold(f64::INFINITY, f64::min);
        Ok(grid)
    }

    /// Contour from an explicit circle `|s − center| = radius` in the upper half-plane.
    pub fn circle(center: Complex64, radius: f64, nodes_per_circle: usize) -> Result<Self> {
        let n = nodes_per_circle;
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::invalid(
                "nodes_per_circle",
                "must be a power of two and at least 16",
            ));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("radius", "must be positive"));
        }
        let min_im = center.im - radius;
        if !(min_im > 0.0) {
            return Err(Error::Geometry(alloc::format!(
                "circle of radius {radius:.6} around {center} crosses the real axis (min Im = {min_im:.6})"
            )));
        }
        let roots: Vec<Complex64> = (0..n)
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / n as f64;
                c64(libm::cos(phi), libm::sin(phi))
            })
            .collect();
        let centers = [center, center.conj()];
        let mut nodes = Vec::with_capacity(2 * n);
        for c in centers {
            nodes.extend(roots.iter().map(|w| c + w * radius));
        }
        let mut cross = [vec![c64(0.0, 0.0); n * n], vec![c64(0.0, 0.0); n * n]];
        for (c, block) in cross.iter_mut().enumerate() {
            let other = 1 - c;
            for p in 0..n {
                let xi = nodes[c * n + p];
                for q in 0..n {
                    let s = nodes[other * n + q];
                    block[p * n + q] = (s - centers[other]) / (s - xi) / n as f64;
                }
            }
        }
        Ok(ContourGrid {
            center,
            radius,
            n,
            clearance: f64::NAN,
            nodes,
            roots,
            cross,
        })
    }

    /// Center of `γ₊`.
    pub fn center(&self) -> Complex64 {
        self.center
    }

    /// Center of circle `c`.
    pub fn circle_center(&self, c: usize) -> Complex64 {
        if c == 0 {
            self.center
        } else {
            self.center.conj()
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes_per_circle(&self) -> usize {
        self.n
    }

    pub fn total_nodes(&self) -> usize {
        2 * self.n
    }

    /// Distance between `γ₊` nodes and the eigenvalue domain (NaN for bare circles).
    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn node(&self, c: usize, j: usize) -> Complex64 {
        self.nodes[c * self.n + j]
    }

    /// Unit tangent at node `j` of either circle.
    pub fn tangent(&self, j: usize) -> Complex64 {
        I * self.roots[j]
    }

    /// Arc-length weight of every node, `2πR/n`.
    pub fn weight(&self) -> f64 {
        2.0 * PI * self.radius / self.n as f64
    }

    /// Total length `L_γ = 4πR`.
    pub fn length(&self) -> f64 {
        self.weight() * self.total_nodes() as f64
    }

    /// Index of the node on `γ₋` that is the mirror image of node `j` on `γ₊`.
    pub fn mirror_index(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// Smallest distance from `z` to a node.
    pub fn distance_to_nodes(&self, z: Complex64) -> f64 {
        self.nodes
            .iter()
            .map(|s| (s - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `z` to the continuous contour.
    pub fn distance_to_contour(&self, z: Complex64) -> f64 {
        let d0 = ((z - self.center).norm() - self.radius).abs();
        let d1 = ((z - self.center.conj()).norm() - self.radius).abs();
        d0.min(d1)
    }

    /// Whether `z` lies strictly inside circle `c`.
    pub fn inside(&self, c: usize, z: Complex64) -> bool {
        (z - self.circle_center(c)).norm() < self.radius
    }

    /// `(1/2πi) ∮_γ h(s)/(s − z) ds` for scalar node values `h` (length `2n`),
    /// plain trapezoid rule.
    pub fn cauchy_scalar(&self, h: &[Complex64], z: Complex64) -> Complex64 {
        let n = self.n;
        let mut acc = c64(0.0, 0.0);
        for c in 0..2 {
            let a = self.circle_center(c);
            for j in 0..n {
                let s = self.nodes[c * n + j];
                acc += h[c * n + j] * (s - a) / (s - z);
            }
        }
        acc / n as f64
    }

    /// `(1/2πi) ∮_γ h(s)/(s − z) ds`. Warns when `z` is within one node
    /// spacing of the contour.
    pub fn cauchy_offcontour(&self, h: &ContourDensity, z: Complex64) -> Result<Mat2> {
        Ok(self.evaluator(h)?.eval(z))
    }

    /// Precomputed Cauchy integral of `h`, for evaluation at many points.
    pub fn evaluator(&self, h: &ContourDensity) -> Result<CauchyEvaluator> {
        let n = self.n;
        if h.values.len() != 2 * n {
            return Err(Error::invalid(
                "density",
                "node count does not match the grid",
            ));
        }
        let coefs = |c: usize| -> Result<[Vec<Complex64>; 4]> {
            let mut out: [Vec<Complex64>; 4] = Default::default();
            for (e, slot) in out.iter_mut().enumerate() {
                let mut f: Vec<Complex64> = h.values[c * n..(c + 1) * n]
                    .iter()
                    .map(|m| m.0[e / 2][e % 2] / n as f64)
                    .collect();
                fft_in_place(&mut f, false)?;
                *slot = f;
            }
            Ok(out)
        };
        Ok(CauchyEvaluator {
            centers: [self.center, self.center.conj()],
            radius: self.radius,
            spacing: self.weight(),
            coef: [coefs(0)?, coefs(1)?],
        })
    }

    /// Boundary value of the Cauchy integral of scalar node values.
    pub fn boundary_scalar(&self, h: &[Complex64], side: Side) -> Result<Vec<Complex64>> {
        let n = self.n;
        if h.len() != 2 * n {
            return Err(Error::invalid(
                "density",
                "length must be twice the nodes per circle",
            ));
        }
        let mut out = vec![c64(0.0, 0.0); 2 * n];
        for c in 0..2 {
            let mut f = h[c * n..(c + 1) * n].to_vec();
            fft_in_place(&mut f, false)?;
            // keep k ≥ 0 (indices < n/2) for the interior side and k < 0 otherwise
            let keep_low = side == Side::Plus;
            for (k, v) in f.iter_mut().enumerate() {
                if (k < n / 2) != keep_low {
                    *v = c64(0.0, 0.0);
                }
            }
            fft_in_place(&mut f, true)?;
            let sign = if keep_low { 1.0 } else { -1.0 };
            for (o, v) in out[c * n..(c + 1) * n].iter_mut().zip(&f) {
                *o = v * (sign / n as f64);
            }
        }
        for c in 0..2 {
            let other = 1 - c;
            let block = &self.cross[c];
            let src = &h[other * n..(other + 1) * n];
            for p in 0..n {
                let row = &block[p * n..(p + 1) * n];
                out[c * n + p] += row.iter().zip(src).map(|(k, v)| k * v).sum::<Complex64>();
            }
        }
        Ok(out)
    }

    fn boundary(&self, h: &ContourDensity, side: Side) -> Result<ContourDensity> {
        let mut out = ContourDensity::zeros(self);
        for r in 0..2 {
            for e in 0..2 {
                let s: Vec<Complex64> = h.values.iter().map(|m| m.0[r][e]).collect();
                let b = self.boundary_scalar(&s, side)?;
                for (m, v) in out.values.iter_mut().zip(b) {
                    m.0[r][e] = v;
                }
            }
        }
        Ok(out)
    }

    /// `C₋h`, the boundary value from the right of the contour.
    pub fn cauchy_minus(&self, h: &ContourDensity) -> Result<ContourDensity> {
        self.boundary(h, Side::Minus)
    }

    /// `C₊h`, the boundary value from the left of the contour.
    pub fn cauchy_plus(&self, h: &ContourDensity) -> Result<ContourDensity> {
        self.boundary(h, Side::Plus)
    }

    /// Dense `2n × 2n` row-major matrix of `C₋` (or `C₊`) acting on scalar
    /// node values.
    pub fn projector_matrix(&self, side: Side) -> Vec<Complex64> {
        let n = self.n;
        let size = 2 * n;
        let mut m = vec![c64(0.0, 0.0); size * size];
        // same-circle circulant: C₋ = −(1/n) Σ_{k=1}^{n/2} e^{−ik(φ_p−φ_q)},
        // C₊ = (1/n) Σ_{k=0}^{n/2−1} e^{ik(φ_p−φ_q)}
        let mut col = vec![c64(0.0, 0.0); n];
        for (d, v) in col.iter_mut().enumerate() {
            let mut s = c64(0.0, 0.0);
            match side {
                Side::Minus => {
                    for k in 1..=n / 2 {
                        s -= self.roots[(k * (n - d)) % n];
                    }
                }
                Side::Plus => {
                    for k in 0..n / 2 {
                        s += self.roots[(k * d) % n];
                    }
                }
            }
            *v = s / n as f64;
        }
        for c in 0..2 {
            for p in 0..n {
                let row = (c * n + p) * size;
                for q in 0..n {
                    m[row + c * n + q] = col[(p + n - q) % n];
                    m[row + (1 - c) * n + q] = self.cross[c][p * n + q];
                }
            }
        }
        m
    }
}

/// Cauchy integral of a node density, evaluated off the contour.
///
/// Each circle contributes the Cauchy integral of the trigonometric
/// interpolant of its node values: `Σ_{k≥0} ĥ_k w^k` inside and
/// `−Σ_{k<0} ĥ_k w^k` outside, `w = (z − center)/R`. Away from the contour
/// this agrees with the trapezoid rule to spectral accuracy and it stays
/// accurate up to the contour itself.
#[derive(Debug, Clone)]
pub struct CauchyEvaluator {
    centers: [Complex64; 2],
    radius: f64,
    spacing: f64,
    /// Fourier coefficients per circle and entry (row-major), FFT ordering.
    coef: [[Vec<Complex64>; 4]; 2],
}

impl CauchyEvaluator {
    pub fn eval(&self, z: Complex64) -> Mat2 {
        let d = self
            .centers
            .iter()
            .map(|a| ((z - a).norm() - self.radius).abs())
            .fold(f64::INFINITY, f64::min);
        if d < self.spacing {
            log::warn!("Cauchy integral evaluated at {z}, within one node spacing of the contour");
        }
        let mut out = Mat2::ZERO;
        for c in 0..2 {
            let w = (z - self.centers[c]) / self.radius;
            let inside = w.norm() < 1.0;
            for e in 0..4 {
                out.0[e / 2][e % 2] += series(&self.coef[c][e], w, inside);
            }
        }
        out
    }
}

/// Horner evaluation of the interior (`k ≥ 0`) or exterior (`−Σ_{k<0}`) part.
fn series(f: &[Complex64], w: Complex64, inside: bool) -> Complex64 {
    let n = f.len();
    let mut acc = c64(0.0, 0.0);
    if inside {
        for k in (0..n / 2).rev() {
            acc = acc * w + f[k];
        }
        acc
    } else {
        let u = w.inv();
        // k = −m maps to FFT index n − m, m = 1..=n/2
        for m in (1..=n / 2).rev() {
            acc = acc * u + f[n - m];
        }
        -(acc * u)
    }
}

/// A 2×2 matrix value at every node of `γ₊` then `γ₋`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourDensity {
    values: Vec<Mat2>,
    n: usize,
}

impl ContourDensity {
    pub fn zeros(grid: &ContourGrid) -> Self {
        ContourDensity {
            values: vec![Mat2::ZERO; grid.total_nodes()],
            n: grid.nodes_per_circle(),
        }
    }

    pub fn constant(grid: &ContourGrid, m: Mat2) -> Self {
        ContourDensity {
            values: vec![m; grid.total_nodes()],
            n: grid.nodes_per_circle(),
        }
    }

    /// Values `f(circle, s)` at every node.
    pub fn from_fn<F: FnMut(usize, Complex64) -> Mat2>(grid: &ContourGrid, mut f: F) -> Self {
        let n = grid.nodes_per_circle();
        let values = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &s)| f(i / n, s))
            .collect();
        ContourDensity { values, n }
    }

    pub fn from_values(values: Vec<Mat2>) -> Result<Self> {
        let n = values.len() / 2;
        if !values.len().is_multiple_of(2) || n == 0 {
            return Err(Error::invalid(
                "density",
                "needs an even, nonzero node count",
            ));
        }
        Ok(ContourDensity { values, n })
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    pub fn nodes_per_circle(&self) -> usize {
        self.n
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(Mat2::is_finite)
    }

    /// Pointwise product `self · other`.
    pub fn mul(&self, other: &ContourDensity) -> ContourDensity {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a * *b)
            .collect();
        ContourDensity { values, n: self.n }
    }

    pub fn sub(&self, other: &ContourDensity) -> ContourDensity {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a - *b)
            .collect();
        ContourDensity { values, n: self.n }
    }

    pub fn add(&self, other: &ContourDensity) -> ContourDensity {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a + *b)
            .collect();
        ContourDensity { values, n: self.n }
    }

    pub fn scale(&self, s: Complex64) -> ContourDensity {
        let values = self.values.iter().map(|a| a.scale(s)).collect();
        ContourDensity { values, n: self.n }
    }

    /// `‖h‖_{L²(γ)} = (∮ |h|² |ds|)^{1/2}` with the Frobenius norm.
    pub fn l2_norm(&self, grid: &ContourGrid) -> f64 {
        let s: f64 = self.values.iter().map(Mat2::norm_sqr).sum();
        libm::sqrt(grid.weight() * s)
    }

    /// `max_j |h(s_j)|` with the Frobenius norm.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(Mat2::norm).fold(0.0, f64::max)
    }
}

impl Index<usize> for ContourDensity {
    type Output = Mat2;
    fn index(&self, i: usize) -> &Mat2 {
        &self.values[i]
    }
}

impl IndexMut<usize> for ContourDensity {
    fn index_mut(&mut self, i: usize) -> &mut Mat2 {
        &mut self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matvec;
    use proptest::prelude::*;

    fn grid(n: usize) -> ContourGrid {
        let d = EigenvalueDomain::disk(I, 0.5).unwrap();
        ContourGrid::build(&d, n, 0.2).unwrap()
    }

    fn on_plus(g: &ContourGrid, f: impl Fn(Complex64) -> Complex64) -> ContourDensity {
        ContourDensity::from_fn(g, |c, s| {
            if c == 0 {
                Mat2::IDENTITY * f(s)
            } else {
                Mat2::ZERO
            }
        })
    }

    #[test]
    fn geometry_examples() {
        let g = grid(64);
        assert_eq!(g.center(), I);
        assert!((g.radius() - 0.7).abs() < 1e-15);
        assert!(g.nodes()[..64].iter().all(|s| s.im >= 0.3 - 1e-15));
        assert_eq!(g.total_nodes(), 128);
        assert!((g.length() - 4.0 * PI * 0.7).abs() / (4.0 * PI * 0.7) < 1e-14);
        assert!((g.clearance() - 0.2).abs() < 1e-12);

        let rect = EigenvalueDomain::rectangle(-1.0, 1.0, 0.5, 1.5).unwrap();
        let r = ContourGrid::build(&rect, 64, 0.1);
        assert!(matches!(r, Err(Error::Geometry(_))));
        assert!(ContourGrid::build(&EigenvalueDomain::disk(I, 0.5).unwrap(), 48, 0.2).is_err());
        assert!(ContourGrid::build(&EigenvalueDomain::disk(I, 0.5).unwrap(), 8, 0.2).is_err());
    }

    #[test]
    fn mirror_nodes() {
        let g = grid(32);
        for j in 0..32 {
            let m = g.node(1, g.mirror_index(j));
            assert!((m - g.node(0, j).conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn offcontour_examples() {
        let g = grid(64);
        let h = ContourDensity::constant(&g, Mat2::IDENTITY);
        let inside = g.cauchy_offcontour(&h, c64(0.1, 1.2)).unwrap();
        assert!((inside - Mat2::IDENTITY).norm() < 1e-14);
        let outside = g.cauchy_offcontour(&h, c64(3.0, 0.0)).unwrap();
        assert!(outside.norm() < 1e-14);

        let a = g.center();
        let h = on_plus(&g, |s| s - a);
        let z = c64(0.2, 0.9);
        let v = g.cauchy_offcontour(&h, z).unwrap();
        assert!((v - Mat2::IDENTITY * (z - a)).norm() < 1e-14);
    }

    #[test]
    fn projector_examples() {
        let g = grid(64);
        let a = ContourDensity::constant(
            &g,
            Mat2::new(c64(1.0, 2.0), c64(-0.5, 0.1), c64(0.0, 3.0), c64(2.0, 0.0)),
        );
        assert!(g.cauchy_minus(&a).unwrap().linf_norm() < 1e-13);

        let (ca, r) = (g.center(), g.radius());
        let h = on_plus(&g, |s| ((s - ca) / r).inv());
        let m = g.cauchy_minus(&h).unwrap();
        for j in 0..64 {
            assert!((m[j] + h[j]).norm() < 1e-13);
        }

        let h = on_plus(&g, |s| (s - ca) / r);
        let p = g.cauchy_plus(&h).unwrap();
        let m = g.cauchy_minus(&h).unwrap();
        assert!(p.sub(&m).sub(&h).linf_norm() < 1e-12);
    }

    #[test]
    fn projector_matrix_matches_fft() {
        let g = grid(32);
        let h: Vec<Complex64> = g
            .nodes()
            .iter()
            .map(|s| {
                (s * 0.7).exp() + (s - g.center()).inv() * 0.3 + c64(0.0, 0.5) / (s - c64(0.3, 0.2))
            })
            .collect();
        for side in [Side::Minus, Side::Plus] {
            let m = g.projector_matrix(side);
            let a = matvec(&m, 64, &h);
            let b = g.boundary_scalar(&h, side).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn plemelj_and_idempotence() {
        let g = grid(64);
        let h = ContourDensity::from_fn(&g, |c, s| {
            let w = (s - g.circle_center(c)) / g.radius();
            let mut m = Mat2::ZERO;
            for k in -20i32..20 {
                let coef =
                    c64(libm::cos(k as f64), libm::sin(0.3 * k as f64)) / (1.0 + (k * k) as f64);
                m.0[0][0] += coef * w.powi(k);
                m.0[1][1] += coef.conj() * w.powi(-k);
                m.0[0][1] += coef * w.powi(k) * 0.5;
            }
            m
        });
        let p = g.cauchy_plus(&h).unwrap();
        let m = g.cauchy_minus(&h).unwrap();
        assert!(p.sub(&m).sub(&h).linf_norm() < 1e-12);

        // −C₋ restricted to one circle is a projector
        let h1 = ContourDensity::from_fn(&g, |c, s| {
            if c == 0 {
                h[0] * (s - I) + h[5]
            } else {
                Mat2::ZERO
            }
        });
        let one = g.cauchy_minus(&on_plus_only(&h1, 64)).unwrap();
        let p1 = on_plus_only(&one.scale(c64(-1.0, 0.0)), 64);
        let p2 = on_plus_only(&g.cauchy_minus(&p1).unwrap().scale(c64(-1.0, 0.0)), 64);
        assert!(p2.sub(&p1).linf_norm() < 1e-12);
    }

    fn on_plus_only(h: &ContourDensity, n: usize) -> ContourDensity {
        let mut out = h.clone();
        for j in n..2 * n {
            out[j] = Mat2::ZERO;
        }
        out
    }

    #[test]
    fn offcontour_approaches_minus_boundary_value() {
        let g = grid(64);
        let h = ContourDensity::from_fn(&g, |c, s| {
            let w = (s - g.circle_center(c)) / g.radius();
            Mat2::IDENTITY * (w.inv() + w.powi(-2) * 0.5 + w * 0.2)
        });
        let m = g.cauchy_minus(&h).unwrap();
        for j in [0usize, 11, 40] {
            let xi = g.node(0, j);
            let normal = (xi - g.center()) / g.radius();
            let v = g.cauchy_offcontour(&h, xi + normal * 1e-3).unwrap();
            let rel = (v - m[j]).norm() / m[j].norm();
            assert!(rel < 1e-2, "rel={rel}");
        }
    }

    proptest! {
        #[test]
        fn l2_norm_matches_definition(vals in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 64)) {
            let g = grid(16);
            let h = ContourDensity::from_values(
                (0..32).map(|i| {
                    let (a, b) = vals[i];
                    let (c, d) = vals[i + 32];
                    Mat2::new(c64(a, b), c64(c, d), c64(b, c), c64(d, a))
                }).collect()
            ).unwrap();
            let direct: f64 = h.values().iter().map(|m| {
                m.0.iter().flatten().map(|z| z.re * z.re + z.im * z.im).sum::<f64>()
            }).sum::<f64>() * 2.0 * PI * 0.7 / 16.0;
            let v = h.l2_norm(&g);
            prop_assert!((v - libm::sqrt(direct)).abs() <= 1e-14 * v.max(1.0));
        }
    }
}
