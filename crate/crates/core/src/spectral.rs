//! Eigenvalue domains, interpolating functions and random spectral data.
//!
//! Eigenvalues are i.i.d. uniform on a domain `D₊` in the upper half-plane,
//! `dμ = 1_D d²z / m(D)`, and the norming constants are tied to them through
//! an interpolating function, `N c_k = r(λ_k)`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::{c64, I};

/// Default lower margin between the domain and the real axis.
pub const DEFAULT_D_MIN: f64 = 0.05;

/// Rejection sampling gives up after `REJECTION_FACTOR * n` draws.
pub const REJECTION_FACTOR: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainShape {
    Disk { center: Complex64, radius: f64 },
    Rectangle { x1: f64, x2: f64, y1: f64, y2: f64 },
}

/// Node counts of the domain quadrature: radial × angular for a disk
/// (Gauss–Legendre × trapezoid), `x × y` Gauss–Legendre for a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub n1: usize,
    pub n2: usize,
}

impl QuadratureSpec {
    pub fn doubled(self) -> Self {
        QuadratureSpec {
            n1: 2 * self.n1,
            n2: 2 * self.n2,
        }
    }
}

/// Discrete probability measure approximating `dμ`: nodes in the domain,
/// weights summing to one.
#[derive(Debug, Clone)]
pub struct DomainQuadrature {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
}

impl DomainQuadrature {
    /// `∬ g dμ`.
    pub fn integrate<F: FnMut(Complex64) -> Complex64>(&self, mut g: F) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| g(z) * w)
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenvalueDomain {
    shape: DomainShape,
    area: f64,
    quadrature: QuadratureSpec,
    d_min: f64,
}

impl EigenvalueDomain {
    pub fn disk(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("radius", "must be positive and finite"));
        }
        Self::validated(DomainShape::Disk { center, radius }, PI * radius * radius)
    }

    pub fn rectangle(x1: f64, x2: f64, y1: f64, y2: f64) -> Result<Self> {
        if !(x2 > x1) || !(y2 > y1) {
            return Err(Error::invalid("rectangle", "require x1 < x2 and y1 < y2"));
        }
        Self::validated(
            DomainShape::Rectangle { x1, x2, y1, y2 },
            (x2 - x1) * (y2 - y1),
        )
    }

    fn validated(shape: DomainShape, area: f64) -> Result<Self> {
        let quadrature = match shape {
            DomainShape::Disk { .. } => QuadratureSpec { n1: 24, n2: 96 },
            DomainShape::Rectangle { .. } => QuadratureSpec { n1: 32, n2: 32 },
        };
        let d = EigenvalueDomain {
            shape,
            area,
            quadrature,
            d_min: DEFAULT_D_MIN,
        };
        d.check_margin()?;
        Ok(d)
    }

    fn check_margin(&self) -> Result<()> {
        let min_im = self.min_im();
        if !(min_im >= self.d_min) {
            return Err(Error::DomainTooLow {
                min_im,
                d_min: self.d_min,
            });
        }
        Ok(())
    }

    pub fn with_d_min(mut self, d_min: f64) -> Result<Self> {
        if !(d_min > 0.0) {
            return Err(Error::invalid("d_min", "must be positive"));
        }
        self.d_min = d_min;
        self.check_margin()?;
        Ok(self)
    }

    pub fn with_quadrature(mut self, n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::invalid("quadrature", "node counts must be positive"));
        }
        self.quadrature = QuadratureSpec { n1, n2 };
        Ok(self)
    }

    pub fn shape(&self) -> DomainShape {
        self.shape
    }

    /// Lebesgue measure `m(D₊)`.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        self.quadrature
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn min_im(&self) -> f64 {
        match self.shape {
            DomainShape::Disk { center, radius } => center.im - radius,
            DomainShape::Rectangle { y1, .. } => y1,
        }
    }

    pub fn max_im(&self) -> f64 {
        match self.shape {
            DomainShape::Disk { center, radius } => center.im + radius,
            DomainShape::Rectangle { y2, .. } => y2,
        }
    }

    /// Characteristic function of the closed domain.
    pub fn contains(&self, z: Complex64) -> bool {
        match self.shape {
            DomainShape::Disk { center, radius } => (z - center).norm() <= radius,
            DomainShape::Rectangle { x1, x2, y1, y2 } => {
                z.re >= x1 && z.re <= x2 && z.im >= y1 && z.im <= y2
            }
        }
    }

    /// `(re_min, re_max, im_min, im_max)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match self.shape {
            DomainShape::Disk { center, radius } => (
                center.re - radius,
                center.re + radius,
                center.im - radius,
                center.im + radius,
            ),
            DomainShape::Rectangle { x1, x2, y1, y2 } => (x1, x2, y1, y2),
        }
    }

    pub fn centroid(&self) -> Complex64 {
        match self.shape {
            DomainShape::Disk { center, .. } => center,
            DomainShape::Rectangle { x1, x2, y1, y2 } => c64(0.5 * (x1 + x2), 0.5 * (y1 + y2)),
        }
    }

    /// Largest distance from the centroid to a point of the domain.
    pub fn circumradius(&self) -> f64 {
        match self.shape {
            DomainShape::Disk { radius, .. } => radius,
            DomainShape::Rectangle { x1, x2, y1, y2 } => 0.5 * libm::hypot(x2 - x1, y2 - y1),
        }
    }

    /// Distance from `z` to the closed domain (zero inside).
    pub fn distance(&self, z: Complex64) -> f64 {
        match self.shape {
            DomainShape::Disk { center, radius } => ((z - center).norm() - radius).max(0.0),
            DomainShape::Rectangle { x1, x2, y1, y2 } => {
                let dx = (x1 - z.re).max(0.0).max(z.re - x2);
                let dy = (y1 - z.im).max(0.0).max(z.im - y2);
                libm::hypot(dx, dy)
            }
        }
    }

    /// Quadrature for `dμ` with the configured node counts.
    pub fn quadrature(&self) -> DomainQuadrature {
        self.quadrature_with(self.quadrature)
    }

    /// Quadrature with every node count doubled, used for self-convergence checks.
    pub fn refined_quadrature(&self) -> DomainQuadrature {
        self.quadrature_with(self.quadrature.doubled())
    }

    pub fn quadrature_with(&self, spec: QuadratureSpec) -> DomainQuadrature {
        let mut nodes = Vec::with_capacity(spec.n1 * spec.n2);
        let mut weights = Vec::with_capacity(spec.n1 * spec.n2);
        match self.shape {
            DomainShape::Disk { center, radius } => {
                let (rho, wr) = gauss_legendre(spec.n1, 0.0, radius);
                let dphi = 2.0 * PI / spec.n2 as f64;
                for (&r, &w) in rho.iter().zip(&wr) {
                    for k in 0..spec.n2 {
                        // half-step offset keeps nodes off a fixed ray
                        let phi = (k as f64 + 0.5) * dphi;
                        nodes.push(center + c64(r * libm::cos(phi), r * libm::sin(phi)));
                        weights.push(w * r * dphi / self.area);
                    }
                }
            }
            DomainShape::Rectangle { x1, x2, y1, y2 } => {
                let (xs, wx) = gauss_legendre(spec.n1, x1, x2);
                let (ys, wy) = gauss_legendre(spec.n2, y1, y2);
                for (&x, &u) in xs.iter().zip(&wx) {
                    for (&y, &v) in ys.iter().zip(&wy) {
                        nodes.push(c64(x, y));
                        weights.push(u * v / self.area);
                    }
                }
            }
        }
        DomainQuadrature { nodes, weights }
    }
}

/// Entire interpolating function `r` with `N c_k = r(λ_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interpolant {
    /// `r(z) = a`
    Constant(Complex64),
    /// `r(z) = a + b z`
    Affine { a: Complex64, b: Complex64 },
    /// `r(z) = a e^{b z}`
    Exponential { a: Complex64, b: Complex64 },
}

impl Interpolant {
    pub fn zero() -> Self {
        Interpolant::Constant(c64(0.0, 0.0))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            Interpolant::Constant(a) => a,
            Interpolant::Affine { a, b } => a + b * z,
            Interpolant::Exponential { a, b } => a * (b * z).exp(),
        }
    }

    /// `r*(w) = conj(r(conj w))`.
    pub fn eval_reflected(&self, w: Complex64) -> Complex64 {
        self.eval(w.conj()).conj()
    }

    pub fn is_identically_zero(&self) -> bool {
        let zero = c64(0.0, 0.0);
        match *self {
            Interpolant::Constant(a) => a == zero,
            Interpolant::Affine { a, b } => a == zero && b == zero,
            Interpolant::Exponential { a, .. } => a == zero,
        }
    }

    /// Same preset with every coefficient multiplying `r` scaled by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        match *self {
            Interpolant::Constant(a) => Interpolant::Constant(a * s),
            Interpolant::Affine { a, b } => Interpolant::Affine { a: a * s, b: b * s },
            Interpolant::Exponential { a, b } => Interpolant::Exponential { a: a * s, b },
        }
    }
}

/// Eigenvalues and norming constants of one random N-soliton, at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    lambdas: Vec<Complex64>,
    norming: Vec<Complex64>,
    seed: Option<u64>,
}

impl SpectralSample {
    /// Draw `n` uniform eigenvalues from `domain` and interpolate the norming
    /// constants with `r`.
    pub fn draw(domain: &EigenvalueDomain, r: &Interpolant, n: usize, seed: u64) -> Result<Self> {
        let lambdas = sample_eigenvalues(domain, n, seed)?;
        let norming = norming_constants(&lambdas, r)?;
        Ok(SpectralSample {
            lambdas,
            norming,
            seed: Some(seed),
        })
    }

    /// Sample with prescribed data; eigenvalues must lie in the open upper
    /// half-plane and norming constants must be nonzero.
    pub fn from_parts(lambdas: Vec<Complex64>, norming: Vec<Complex64>) -> Result<Self> {
        if lambdas.len() != norming.len() {
            return Err(Error::invalid(
                "sample",
                "eigenvalue and norming counts differ",
            ));
        }
        if let Some(k) = lambdas.iter().position(|l| !(l.im > 0.0) || !l.is_finite()) {
            return Err(Error::ContractViolation {
                index: k,
                reason: format!("eigenvalue {} not in the open upper half-plane", lambdas[k]),
            });
        }
        if let Some(k) = norming
            .iter()
            .position(|c| c.norm() == 0.0 || !c.is_finite())
        {
            return Err(Error::ZeroNormingConstant { index: k });
        }
        Ok(SpectralSample {
            lambdas,
            norming,
            seed: None,
        })
    }

    /// Eigenvalues with norming constants interpolated by `r`.
    pub fn with_interpolant(lambdas: Vec<Complex64>, r: &Interpolant) -> Result<Self> {
        let norming = norming_constants(&lambdas, r)?;
        Self::from_parts(lambdas, norming)
    }

    pub fn empty() -> Self {
        SpectralSample {
            lambdas: Vec::new(),
            norming: Vec::new(),
            seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.lambdas
    }

    pub fn norming_constants(&self) -> &[Complex64] {
        &self.norming
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Norming constants evolved to time `t`.
    pub fn evolved_norming(&self, t: f64) -> Vec<Complex64> {
        self.lambdas
            .iter()
            .zip(&self.norming)
            .map(|(&l, &c)| evolve_norming(c, l, t))
            .collect()
    }
}

/// `n` i.i.d. uniform points of `domain` by rejection from the bounding box.
pub fn sample_eigenvalues(
    domain: &EigenvalueDomain,
    n: usize,
    seed: u64,
) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one eigenvalue"));
    }
    let (x0, x1, y0, y1) = domain.bounding_box();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let cap = REJECTION_FACTOR * n;
    let mut out = Vec::with_capacity(n);
    let mut draws = 0;
    while out.len() < n {
        if draws >= cap {
            return Err(Error::SamplingCap {
                cap,
                accepted: out.len(),
                requested: n,
            });
        }
        draws += 1;
        let u: f64 = rng.gen();
        let v: f64 = rng.gen();
        let z = c64(x0 + (x1 - x0) * u, y0 + (y1 - y0) * v);
        if domain.contains(z) {
            out.push(z);
        }
    }
    Ok(out)
}

/// `c_k = r(λ_k)/N`.
pub fn norming_constants(lambdas: &[Complex64], r: &Interpolant) -> Result<Vec<Complex64>> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambdas", "empty eigenvalue list"));
    }
    let n = lambdas.len() as f64;
    lambdas
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let c = r.eval(l) / n;
            if c.norm() == 0.0 {
                Err(Error::ZeroNormingConstant { index: k })
            } else {
                Ok(c)
            }
        })
        .collect()
}

/// `c · exp(2 i t λ²)`.
pub fn evolve_norming(c: Complex64, lambda: Complex64, t: f64) -> Complex64 {
    if t == 0.0 {
        return c;
    }
    c * (I * 2.0 * t * lambda * lambda).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn disk() -> EigenvalueDomain {
        EigenvalueDomain::disk(I, 0.5).unwrap()
    }

    #[test]
    fn seeded_determinism() {
        let a = sample_eigenvalues(&disk(), 3, 42).unwrap();
        let b = sample_eigenvalues(&disk(), 3, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|z| disk().contains(*z)));
    }

    #[test]
    fn disk_sample_mean_near_center() {
        let n = 100_000;
        let pts = sample_eigenvalues(&disk(), n, 1).unwrap();
        let mean: Complex64 = pts.iter().sum::<Complex64>() / n as f64;
        // per-component standard deviation of the uniform disk law is R/2
        let band = 3.0 * 0.25 / libm::sqrt(n as f64);
        assert!((mean.re).abs() < band, "{mean}");
        assert!((mean.im - 1.0).abs() < band, "{mean}");
    }

    #[test]
    fn rectangle_sample_is_symmetric() {
        let rect = EigenvalueDomain::rectangle(-1.0, 1.0, 0.5, 1.5).unwrap();
        let n = 100_000;
        let pts = sample_eigenvalues(&rect, n, 7).unwrap();
        let frac = pts.iter().filter(|z| z.re > 0.0).count() as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 * 0.5 / libm::sqrt(n as f64));
    }

    #[test]
    fn uniform_law_on_subrectangle() {
        let n = 100_000;
        let pts = sample_eigenvalues(&disk(), n, 11).unwrap();
        // Q = [-0.2, 0.1] x [0.9, 1.3] lies inside the disk
        let q = |z: &Complex64| z.re >= -0.2 && z.re <= 0.1 && z.im >= 0.9 && z.im <= 1.3;
        let p = 0.3 * 0.4 / disk().area();
        let freq = pts.iter().filter(|z| q(z)).count() as f64 / n as f64;
        let sd = libm::sqrt(p * (1.0 - p) / n as f64);
        assert!((freq - p).abs() < 4.0 * sd, "freq {freq} p {p}");
    }

    #[test]
    fn areas_and_quadrature_mass() {
        let d = disk();
        assert!((d.area() - PI * 0.25).abs() / (PI * 0.25) < 1e-14);
        let r = EigenvalueDomain::rectangle(-1.0, 1.0, 0.5, 1.5).unwrap();
        assert!((r.area() - 2.0).abs() < 1e-14);
        for dom in [d, r] {
            let q = dom.quadrature();
            let mass: f64 = q.weights.iter().sum();
            assert!((mass - 1.0).abs() < 1e-12);
            assert!(q.nodes.iter().all(|z| dom.contains(*z)));
        }
    }

    #[test]
    fn domain_margin_is_enforced() {
        assert!(matches!(
            EigenvalueDomain::disk(c64(0.0, 0.5), 0.48),
            Err(Error::DomainTooLow { .. })
        ));
        assert!(EigenvalueDomain::disk(c64(0.0, 0.5), 0.48)
            .is_err_and(|e| e.to_string().contains("margin")));
        assert!(EigenvalueDomain::rectangle(0.0, 1.0, 0.5, 1.0)
            .unwrap()
            .with_d_min(0.6)
            .is_err());
    }

    #[test]
    fn sampling_cap_error_shape() {
        let err = Error::SamplingCap {
            cap: 1000,
            accepted: 0,
            requested: 1,
        };
        assert!(err.to_string().contains("1000"));
        assert!(sample_eigenvalues(&disk(), 0, 1).is_err());
    }

    #[test]
    fn norming_constant_examples() {
        let l = [I, c64(0.0, 2.0), c64(1.0, 1.0), c64(-1.0, 1.0)];
        let c = norming_constants(&l, &Interpolant::Constant(c64(1.0, 0.0))).unwrap();
        assert!(c.iter().all(|c| *c == c64(0.25, 0.0)));

        let aff = Interpolant::Affine {
            a: c64(0.0, 0.0),
            b: c64(2.0, 0.0),
        };
        assert_eq!(norming_constants(&[I], &aff).unwrap()[0], c64(0.0, 2.0));

        let ex = Interpolant::Exponential {
            a: c64(1.0, 0.0),
            b: c64(1.0, 0.0),
        };
        let c = norming_constants(&[I, I], &ex).unwrap();
        let expect = I.exp() / 2.0;
        assert!(c.iter().all(|c| (c - expect).norm() < 1e-16));

        assert!(matches!(
            norming_constants(&[I], &Interpolant::zero()),
            Err(Error::ZeroNormingConstant { index: 0 })
        ));
    }

    #[test]
    fn evolve_examples() {
        assert_eq!(evolve_norming(c64(1.0, 0.0), I, 0.0), c64(1.0, 0.0));
        let v = evolve_norming(c64(1.0, 0.0), I, PI);
        assert!((v - c64(1.0, 0.0)).norm() < 1e-14);
        // λ = 1+i: λ² = 2i, so 2itλ² = −4t.
        let t = 0.1;
        let v = evolve_norming(c64(1.0, 1.0), c64(1.0, 1.0), t);
        let oracle = c64(1.0, 1.0) * libm::exp(-4.0 * t);
        assert!((v - oracle).norm() < 1e-15);
        assert!((v.norm() - libm::sqrt(2.0) * libm::exp(-0.4)).abs() < 1e-15);
    }

    #[test]
    fn reflected_interpolant() {
        let r = Interpolant::Exponential {
            a: c64(0.3, -1.0),
            b: c64(0.2, 0.7),
        };
        let w = c64(0.4, -0.9);
        assert_eq!(r.eval_reflected(w.conj()), r.eval(w).conj());
    }

    proptest! {
        #[test]
        fn draw_respects_interpolation(seed in any::<u64>(), n in 1usize..40) {
            let r = Interpolant::Affine { a: c64(1.0, 0.5), b: c64(-0.3, 0.2) };
            let s = SpectralSample::draw(&disk(), &r, n, seed).unwrap();
            for (l, c) in s.eigenvalues().iter().zip(s.norming_constants()) {
                prop_assert!(disk().contains(*l));
                let lhs = c * n as f64;
                let rhs = r.eval(*l);
                prop_assert!((lhs - rhs).norm() <= 1e-15 * rhs.norm().max(1.0));
            }
        }

        #[test]
        fn evolve_at_zero_is_identity(re in -5.0..5.0f64, im in -5.0..5.0f64, lre in -2.0..2.0f64, lim in 0.1..2.0f64) {
            let c = c64(re, im);
            prop_assert_eq!(evolve_norming(c, c64(lre, lim), 0.0), c);
        }
    }
}
