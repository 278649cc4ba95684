//! Linear statistics, the small-norm event `B_δ` and the Gaussian
//! fluctuation kernels of the random N-soliton around the soliton gas.
//!
//! With `f(w, z) = r(w)/(z − w)` the linear statistic is
//! `X_N^f(z) = Σ_k f(λ_k, z) − N ∬ f(w, z) dμ(w)`. To first order in `1/N`,
//! `N(ψ_N − ψ∞) ≈ X_N^{G1}` and `N(|ψ_N|² − |ψ∞|²) ≈ X_N^{G2}` with
//!
//! ```text
//! G1(z) = −2i [e^{θ} r M₁₂² + conj(e^{θ} r M₂₂²)]
//! G2(z) = −4 Im ∂ₓ[e^{θ} r M₁₂ M₂₂]
//! ```
//!
//! where `M` is the averaged solution continued inside `γ₊`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::contour::{CauchyEvaluator, ContourDensity, ContourGrid};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::rh::{self, JumpField, JumpKind, RhSolution, SpacetimePoint};
use crate::spectral::{DomainQuadrature, EigenvalueDomain, Interpolant, SpectralSample};
use crate::{c64, I};

/// Largest membership mesh accepted.
pub const MAX_MESH: usize = 1 << 20;

/// Required agreement of the moment quadratures under refinement.
pub const MOMENT_QUADRATURE_TOL: f64 = 1e-8;

/// `X_N^f(z)` with the domain integral by the domain's quadrature.
pub fn linear_statistic(
    sample: &SpectralSample,
    r: &Interpolant,
    domain: &EigenvalueDomain,
    z: Complex64,
) -> Result<Complex64> {
    if domain.contains(z) {
        return Err(Error::ContractViolation {
            index: 0,
            reason: alloc::format!("evaluation point {z} lies in the eigenvalue domain"),
        });
    }
    let q = domain.quadrature();
    let integral = rh::averaged_transform(&q, r, z);
    Ok(empirical_sum(sample, r, z) - integral * sample.len() as f64)
}

/// `Σ_k r(λ_k)/(z − λ_k)`.
pub fn empirical_sum(sample: &SpectralSample, r: &Interpolant, z: Complex64) -> Complex64 {
    sample
        .eigenvalues()
        .iter()
        .map(|&l| r.eval(l) / (z - l))
        .sum()
}

/// Linear statistic at a fixed set of points with the integral term precomputed.
#[derive(Debug, Clone)]
pub struct StatisticProbe {
    points: Vec<Complex64>,
    integral: Vec<Complex64>,
    r: Interpolant,
}

impl StatisticProbe {
    pub fn new(points: Vec<Complex64>, r: &Interpolant, domain: &EigenvalueDomain) -> Result<Self> {
        if let Some(k) = points.iter().position(|z| domain.contains(*z)) {
            return Err(Error::ContractViolation {
                index: k,
                reason: alloc::format!("probe point {} lies in the eigenvalue domain", points[k]),
            });
        }
        let q = domain.quadrature();
        let integral = points
            .iter()
            .map(|&z| rh::averaged_transform(&q, r, z))
            .collect();
        Ok(StatisticProbe {
            points,
            integral,
            r: *r,
        })
    }

    /// Probe at the `γ₊` nodes, reusing the averaged transform of `jump`.
    pub fn on_contour(jump: &JumpField) -> Result<Self> {
        let r = match jump.kind() {
            JumpKind::Averaged { r, .. } => *r,
            _ => return Err(Error::invalid("jump", "averaged jump required")),
        };
        let g = jump.grid();
        let n = g.nodes_per_circle();
        Ok(StatisticProbe {
            points: (0..n).map(|j| g.node(0, j)).collect(),
            integral: jump.transform_values().to_vec(),
            r,
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn values(&self, sample: &SpectralSample) -> Vec<Complex64> {
        let n = sample.len() as f64;
        let weights: Vec<(Complex64, Complex64)> = sample
            .eigenvalues()
            .iter()
            .map(|&l| (l, self.r.eval(l)))
            .collect();
        self.points
            .iter()
            .zip(&self.integral)
            .map(|(&z, &f)| {
                weights
                    .iter()
                    .map(|&(l, rl)| rl / (z - l))
                    .sum::<Complex64>()
                    - f * n
            })
            .collect()
    }
}

/// Outcome of the `B_δ^α` test on a finite mesh of `γ₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipVerdict {
    pub delta: f64,
    pub alpha: f64,
    pub mesh_size: usize,
    /// `max_ℓ |X_N^f(ẑ_ℓ)| / N^α`.
    pub sup: f64,
    pub inside: bool,
}

/// Lipschitz bound `d₀ = 2 sup_D |r| / dist(γ₊, D)²` for `z ↦ X_N^f(z)/N`.
pub fn derivative_bound(r: &Interpolant, domain: &EigenvalueDomain, clearance: f64) -> f64 {
    2.0 * sup_abs(r, domain) / (clearance * clearance)
}

/// `sup_D |r|`, sampled on the refined quadrature nodes and the boundary.
pub fn sup_abs(r: &Interpolant, domain: &EigenvalueDomain) -> f64 {
    let q = domain.refined_quadrature();
    let mut m = q
        .nodes
        .iter()
        .map(|&z| r.eval(z).norm())
        .fold(0.0, f64::max);
    let (x0, x1, y0, y1) = domain.bounding_box();
    let k = 256;
    for i in 0..k {
        let s = i as f64 / k as f64;
        let phi = 2.0 * core::f64::consts::PI * s;
        let pts = match domain.shape() {
            crate::spectral::DomainShape::Disk { center, radius } => {
                [center + c64(libm::cos(phi), libm::sin(phi)) * radius; 4]
            }
            crate::spectral::DomainShape::Rectangle { .. } => [
                c64(x0 + (x1 - x0) * s, y0),
                c64(x0 + (x1 - x0) * s, y1),
                c64(x0, y0 + (y1 - y0) * s),
                c64(x1, y0 + (y1 - y0) * s),
            ],
        };
        for z in pts {
            m = m.max(r.eval(z).norm());
        }
    }
    m
}

/// Mesh size `M = ceil(1 + L c̃ N^{1−α} / δ)`.
pub fn mesh_size(length: f64, c_tilde: f64, n: usize, alpha: f64, delta: f64) -> usize {
    let v = 1.0 + length * c_tilde * libm::pow(n as f64, 1.0 - alpha) / delta;
    libm::ceil(v) as usize
}

/// Mesh of `γ₊` for the membership test.
#[derive(Debug, Clone)]
pub struct MembershipMesh {
    probe: StatisticProbe,
    pub delta: f64,
    pub alpha: f64,
}

impl MembershipMesh {
    /// `c̃ = 2 d₀` unless given.
    pub fn new(
        grid: &ContourGrid,
        r: &Interpolant,
        domain: &EigenvalueDomain,
        n: usize,
        delta: f64,
        alpha: f64,
        c_tilde: Option<f64>,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid("delta", "must be positive"));
        }
        if !(alpha > 0.5 && alpha <= 1.0) {
            return Err(Error::invalid("alpha", "must lie in (1/2, 1]"));
        }
        let clearance = (0..grid.nodes_per_circle())
            .map(|j| domain.distance(grid.node(0, j)))
            .fold(f64::INFINITY, f64::min);
        let c = c_tilde.unwrap_or_else(|| 2.0 * derivative_bound(r, domain, clearance));
        let length = 2.0 * core::f64::consts::PI * grid.radius();
        let m = if delta.is_finite() {
            mesh_size(length, c, n, alpha, delta).max(1)
        } else {
            1
        };
        if m > MAX_MESH {
            return Err(Error::invalid(
                "delta",
                alloc::format!("mesh of {m} points exceeds {MAX_MESH}"),
            ));
        }
        let points = (0..m)
            .map(|l| {
                let phi = 2.0 * core::f64::consts::PI * l as f64 / m as f64;
                grid.center() + c64(libm::cos(phi), libm::sin(phi)) * grid.radius()
            })
            .collect();
        Ok(MembershipMesh {
            probe: StatisticProbe::new(points, r, domain)?,
            delta,
            alpha,
        })
    }

    pub fn size(&self) -> usize {
        self.probe.points().len()
    }

    pub fn verdict(&self, sample: &SpectralSample) -> MembershipVerdict {
        let scale = libm::pow(sample.len() as f64, self.alpha);
        let sup = self
            .probe
            .values(sample)
            .iter()
            .map(|v| v.norm() / scale)
            .fold(0.0, f64::max);
        MembershipVerdict {
            delta: self.delta,
            alpha: self.alpha,
            mesh_size: self.size(),
            sup,
            inside: sup < self.delta,
        }
    }
}

/// Test `sample ∈ B_δ^α` on the mesh over `γ₊`.
pub fn bdelta_membership(
    sample: &SpectralSample,
    r: &Interpolant,
    domain: &EigenvalueDomain,
    grid: &ContourGrid,
    delta: f64,
    alpha: f64,
) -> Result<MembershipVerdict> {
    let mesh = MembershipMesh::new(grid, r, domain, sample.len(), delta, alpha, None)?;
    Ok(mesh.verdict(sample))
}

/// `G1 = −2i [e^{θ} r M₁₂² + conj(e^{θ} r M₂₂²)]`.
pub fn g1_value(theta: Complex64, r: Complex64, m12: Complex64, m22: Complex64) -> Complex64 {
    let e = theta.exp() * r;
    -I * 2.0 * (e * m12 * m12 + (e * m22 * m22).conj())
}

/// `G2 = −4 Im[e^{θ} r (2iz M₁₂M₂₂ + ∂M₁₂ M₂₂ + M₁₂ ∂M₂₂)]`.
pub fn g2_value(z: Complex64, theta: Complex64, r: Complex64, m: &Mat2, dm: &Mat2) -> f64 {
    let (m12, m22) = (m.0[0][1], m.0[1][1]);
    let (d12, d22) = (dm.0[0][1], dm.0[1][1]);
    let inner = I * 2.0 * z * m12 * m22 + d12 * m22 + m12 * d22;
    -4.0 * (theta.exp() * r * inner).im
}

/// The averaged problem solved at one `(x, t)` together with evaluators of
/// `M` and `∂ₓM` inside `γ₊`.
#[derive(Debug, Clone)]
pub struct AveragedState {
    domain: EigenvalueDomain,
    r: Interpolant,
    jump: JumpField,
    sol: RhSolution,
    m_eval: CauchyEvaluator,
    dm_eval: CauchyEvaluator,
}

impl AveragedState {
    pub fn new(
        domain: &EigenvalueDomain,
        r: &Interpolant,
        grid: &ContourGrid,
        p: &SpacetimePoint,
    ) -> Result<Self> {
        let jump = JumpField::averaged(domain, r, grid)?;
        Self::from_jump(&jump, p)
    }

    /// Reuse a precomputed averaged jump.
    pub fn from_jump(jump: &JumpField, p: &SpacetimePoint) -> Result<Self> {
        let (domain, r) = match jump.kind() {
            JumpKind::Averaged { domain, r } => (*domain, *r),
            _ => return Err(Error::invalid("jump", "averaged jump required")),
        };
        let mut sol = rh::solve_with_dx(jump, p)?;
        sol.drop_factorization();
        let m_eval = sol.m_evaluator(jump.grid())?;
        let dm_eval = sol.dm_evaluator(jump.grid())?;
        Ok(AveragedState {
            domain,
            r,
            jump: jump.clone(),
            sol,
            m_eval,
            dm_eval,
        })
    }

    pub fn point(&self) -> SpacetimePoint {
        self.sol.point()
    }

    pub fn domain(&self) -> &EigenvalueDomain {
        &self.domain
    }

    pub fn interpolant(&self) -> &Interpolant {
        &self.r
    }

    pub fn jump(&self) -> &JumpField {
        &self.jump
    }

    pub fn grid(&self) -> &ContourGrid {
        self.jump.grid()
    }

    pub fn solution(&self) -> &RhSolution {
        &self.sol
    }

    /// `ψ∞(x, t)`.
    pub fn psi(&self) -> Complex64 {
        rh::recover_field(&self.sol)
    }

    /// `|ψ∞(x, t)|²` from the derivative equation.
    pub fn modsq(&self) -> Result<f64> {
        rh::recover_modsq(&self.sol)
    }

    /// `M(z)` off the contour (inside `γ₊` this is the interior continuation).
    pub fn m(&self, z: Complex64) -> Mat2 {
        Mat2::IDENTITY + self.m_eval.eval(z)
    }

    pub fn dm(&self, z: Complex64) -> Mat2 {
        self.dm_eval.eval(z)
    }

    fn check_inside(&self, z: Complex64) {
        if !self.grid().inside(0, z) {
            log::warn!("fluctuation kernel evaluated at {z}, outside the contour");
        }
    }

    pub fn g1(&self, z: Complex64) -> Complex64 {
        self.check_inside(z);
        let m = self.m(z);
        g1_value(self.point().theta(z), self.r.eval(z), m.0[0][1], m.0[1][1])
    }

    pub fn g2(&self, z: Complex64) -> f64 {
        self.check_inside(z);
        let m = self.m(z);
        let dm = self.dm(z);
        g2_value(z, self.point().theta(z), self.r.eval(z), &m, &dm)
    }

    /// `X_N^{G1}` for a sample.
    pub fn statistic_g1(&self, sample: &SpectralSample) -> Complex64 {
        let q = self.domain.quadrature();
        let s: Complex64 = sample.eigenvalues().iter().map(|&l| self.g1(l)).sum();
        s - q.integrate(|z| self.g1(z)) * sample.len() as f64
    }

    /// `X_N^{G2}` for a sample.
    pub fn statistic_g2(&self, sample: &SpectralSample) -> f64 {
        let q = self.domain.quadrature();
        let s: f64 = sample.eigenvalues().iter().map(|&l| self.g2(l)).sum();
        s - q.integrate(|z| c64(self.g2(z), 0.0)).re * sample.len() as f64
    }

    /// Precomputed means `∬ G1 dμ` and `∬ G2 dμ`, for repeated statistics.
    pub fn kernel_means(&self) -> (Complex64, f64) {
        let q = self.domain.quadrature();
        (
            q.integrate(|z| self.g1(z)),
            q.integrate(|z| c64(self.g2(z), 0.0)).re,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    G1,
    G2,
}

/// Limit covariance `∬G²dμ − (∬G dμ)²` and variance `∬|G|²dμ − |∬G dμ|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltMoments {
    pub mean: Complex64,
    pub covariance: Complex64,
    pub variance: f64,
    /// Largest change of the three quantities under quadrature doubling.
    pub refinement_change: f64,
}

fn kernel_values(state: &AveragedState, which: Kernel, q: &DomainQuadrature) -> Vec<Complex64> {
    q.nodes
        .iter()
        .map(|&z| match which {
            Kernel::G1 => state.g1(z),
            Kernel::G2 => c64(state.g2(z), 0.0),
        })
        .collect()
}

fn moments_from(
    a: &[Complex64],
    b: &[Complex64],
    w: &[f64],
) -> (Complex64, Complex64, Complex64, Complex64) {
    let mut ma = c64(0.0, 0.0);
    let mut mb = c64(0.0, 0.0);
    let mut sq = c64(0.0, 0.0);
    let mut cross = c64(0.0, 0.0);
    for ((x, y), &wi) in a.iter().zip(b).zip(w) {
        ma += x * wi;
        mb += y * wi;
        sq += x * x * wi;
        cross += x * y.conj() * wi;
    }
    (ma, mb, sq - ma * ma, cross - ma * mb.conj())
}

fn moments_on(
    state: &AveragedState,
    which: Kernel,
    q: &DomainQuadrature,
) -> (Complex64, Complex64, f64) {
    let g = kernel_values(state, which, q);
    let (m, _, cov, var) = moments_from(&g, &g, &q.weights);
    (m, cov, var.re)
}

/// CLT moments of `G1` or `G2` at the state's `(x, t)`.
pub fn clt_moments(state: &AveragedState, which: Kernel) -> Result<CltMoments> {
    let (m, cov, var) = moments_on(state, which, &state.domain.quadrature());
    let (mf, covf, varf) = moments_on(state, which, &state.domain.refined_quadrature());
    let change = (m - mf)
        .norm()
        .max((cov - covf).norm())
        .max((var - varf).abs());
    if !(change <= MOMENT_QUADRATURE_TOL) {
        return Err(Error::Accuracy {
            what: "fluctuation moment quadrature",
            value: change,
            tolerance: MOMENT_QUADRATURE_TOL,
        });
    }
    Ok(CltMoments {
        mean: m,
        covariance: cov,
        variance: var,
        refinement_change: change,
    })
}

/// `∬ G1(·;p₁) conj G1(·;p₂) dμ − ∬G1(·;p₁)dμ · conj ∬G1(·;p₂)dμ`.
pub fn correlation_limit(s1: &AveragedState, s2: &AveragedState) -> Result<Complex64> {
    if s1.domain != s2.domain || s1.r != s2.r {
        return Err(Error::invalid(
            "states",
            "must share domain and interpolant",
        ));
    }
    let q = s1.domain.quadrature();
    let a = kernel_values(s1, Kernel::G1, &q);
    let b = kernel_values(s2, Kernel::G1, &q);
    let (_, _, _, cross) = moments_from(&a, &b, &q.weights);
    Ok(cross)
}

/// `U = X_N^{G1} − N(ψ_N − ψ∞)`.
pub fn clt_remainder(n: usize, psi_n: Complex64, psi_inf: Complex64, x_g1: Complex64) -> Complex64 {
    x_g1 - (psi_n - psi_inf) * n as f64
}

/// `W_N` and `∂ₓW_N` of the error problem at the contour nodes:
/// `W_N = (1/N) μ A μ⁻¹` with `A₂₁ = −e^{θ} X_N^f` on `γ₊` and
/// `A₁₂ = e^{−θ} conj X_N^f(z̄)` on `γ₋`.
#[derive(Debug, Clone)]
pub struct ErrorJump {
    pub w: ContourDensity,
    pub dw: ContourDensity,
}

/// Assemble `W_N` for a sample from the averaged state, with the statistic
/// multiplied by `scale`.
pub fn error_jump(state: &AveragedState, sample: &SpectralSample, scale: f64) -> Result<ErrorJump> {
    let probe = StatisticProbe::on_contour(state.jump())?;
    let x = probe.values(sample);
    error_jump_from_statistic(state, &x, sample.len(), scale)
}

fn error_jump_from_statistic(
    state: &AveragedState,
    x: &[Complex64],
    n_sample: usize,
    scale: f64,
) -> Result<ErrorJump> {
    let g = state.grid();
    let n = g.nodes_per_circle();
    let p = state.point();
    let mu = state.sol.mu();
    let dmu = state
        .sol
        .dmu()
        .ok_or_else(|| Error::invalid("state", "derivative companion missing"))?;
    let inv_n = scale / n_sample.max(1) as f64;
    let zero = c64(0.0, 0.0);
    let mut w = Vec::with_capacity(2 * n);
    let mut dw = Vec::with_capacity(2 * n);
    for c in 0..2 {
        for j in 0..n {
            let s = g.node(c, j);
            let (a, da) = if c == 0 {
                let v = -(p.theta(s).exp() * x[j]) * inv_n;
                (
                    Mat2::new(zero, zero, v, zero),
                    Mat2::new(zero, zero, v * I * 2.0 * s, zero),
                )
            } else {
                let v = (-p.theta(s)).exp() * x[g.mirror_index(j)].conj() * inv_n;
                (
                    Mat2::new(zero, v, zero, zero),
                    Mat2::new(zero, -(v * I * 2.0 * s), zero, zero),
                )
            };
            let i = c * n + j;
            let m = mu[i];
            let mi = m
                .inverse()
                .ok_or(Error::NonFinite("inverse of the boundary value"))?;
            let wn = m * a * mi;
            let dm = dmu[i];
            let dwn = dm * a * mi + m * da * mi - wn * dm * mi;
            w.push(wn);
            dw.push(dwn);
        }
    }
    Ok(ErrorJump {
        w: ContourDensity::from_values(w)?,
        dw: ContourDensity::from_values(dw)?,
    })
}

/// `(‖W_N‖_{L∞(γ)}, ‖W_N‖_{L²(γ)})`.
pub fn wn_norms(state: &AveragedState, sample: &SpectralSample) -> Result<(f64, f64)> {
    wn_norms_scaled(state, sample, 1.0)
}

/// Norms of `W_N` with the linear statistic multiplied by `scale`.
pub fn wn_norms_scaled(
    state: &AveragedState,
    sample: &SpectralSample,
    scale: f64,
) -> Result<(f64, f64)> {
    let e = error_jump(state, sample, scale)?;
    Ok((e.w.linf_norm(), e.w.l2_norm(state.grid())))
}

/// `∮_γ h ds` by the trapezoid rule.
fn contour_integral(grid: &ContourGrid, h: &ContourDensity) -> Mat2 {
    let n = grid.nodes_per_circle();
    let mut acc = Mat2::ZERO;
    for c in 0..2 {
        let a = grid.circle_center(c);
        for j in 0..n {
            acc += h[c * n + j] * (grid.node(c, j) - a);
        }
    }
    acc * (I * 2.0 * core::f64::consts::PI / n as f64)
}

/// Contour forms of the first-order fluctuations:
/// `(−(N/π) ∮ (W_N)₁₂ ds, (N/π) Re ∮ ∂ₓ(W_N)₂₂ ds)`, which equal
/// `(X_N^{G1}, X_N^{G2})` by residue calculus.
pub fn contour_statistics(
    state: &AveragedState,
    sample: &SpectralSample,
) -> Result<(Complex64, f64)> {
    let e = error_jump(state, sample, 1.0)?;
    let n = sample.len() as f64;
    let pi = core::f64::consts::PI;
    let a = contour_integral(state.grid(), &e.w).0[0][1] * (-n / pi);
    let b = contour_integral(state.grid(), &e.dw).0[1][1] * (n / pi);
    Ok((a, b.re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::nsoliton_dressing;

    fn disk() -> EigenvalueDomain {
        EigenvalueDomain::disk(I, 0.5).unwrap()
    }

    fn grid(n: usize) -> ContourGrid {
        ContourGrid::build(&disk(), n, 0.2).unwrap()
    }

    fn pt(x: f64, t: f64) -> SpacetimePoint {
        SpacetimePoint::new(x, t).unwrap()
    }

    fn r_default() -> Interpolant {
        Interpolant::Constant(c64(2.0, 0.0))
    }

    fn centered(n: usize, r: &Interpolant) -> SpectralSample {
        // identical eigenvalues only enter through linear statistics here
        SpectralSample::with_interpolant(alloc::vec![I; n], r).unwrap()
    }

    #[test]
    fn linear_statistic_examples() {
        let one = Interpolant::Constant(c64(1.0, 0.0));
        let s = centered(1, &one);
        let v = linear_statistic(&s, &one, &disk(), c64(0.0, 2.0)).unwrap();
        assert!(v.norm() < 1e-13);
        let rand = SpectralSample::draw(&disk(), &one, 7, 4).unwrap();
        let zero = linear_statistic(&rand, &Interpolant::zero(), &disk(), c64(0.0, 2.0)).unwrap();
        assert_eq!(zero, c64(0.0, 0.0));
        assert!(linear_statistic(&rand, &one, &disk(), I).is_err());
    }

    #[test]
    fn statistic_reflection_identity() {
        let r = Interpolant::Exponential {
            a: c64(1.0, 0.5),
            b: c64(0.2, 0.3),
        };
        let s = SpectralSample::draw(&disk(), &r, 9, 8).unwrap();
        let z = c64(0.4, 1.7);
        let x = linear_statistic(&s, &r, &disk(), z).unwrap();
        // γ₋ statistic: Σ conj r(λ)/(z̄ − λ̄) − N ∬ conj r(w)/(z̄ − w̄)
        let zb = z.conj();
        let q = disk().quadrature();
        let lower: Complex64 = s
            .eigenvalues()
            .iter()
            .map(|&l| r.eval(l).conj() / (zb - l.conj()))
            .sum::<Complex64>()
            - q.integrate(|w| r.eval(w).conj() / (zb - w.conj())) * 9.0;
        assert!((lower - x.conj()).norm() < 1e-12);
    }

    #[test]
    fn statistic_has_zero_mean() {
        let r = r_default();
        let z = c64(0.0, 1.8);
        let trials = 10_000;
        let vals: Vec<Complex64> = (0..trials)
            .map(|i| {
                let s = SpectralSample::draw(&disk(), &r, 8, 1000 + i).unwrap();
                linear_statistic(&s, &r, &disk(), z).unwrap()
            })
            .collect();
        let mean: Complex64 = vals.iter().sum::<Complex64>() / trials as f64;
        let var_re =
            vals.iter().map(|v| (v.re - mean.re).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let var_im =
            vals.iter().map(|v| (v.im - mean.im).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!(mean.re.abs() < 4.0 * libm::sqrt(var_re / trials as f64));
        assert!(mean.im.abs() < 4.0 * libm::sqrt(var_im / trials as f64));
    }

    #[test]
    fn membership_examples() {
        let g = grid(64);
        let r = Interpolant::Constant(c64(1.0, 0.0));
        let s = centered(16, &r);
        let v = bdelta_membership(&s, &r, &disk(), &g, 0.1, 1.0).unwrap();
        assert!(v.inside && v.sup < 1e-12);
        let rand = SpectralSample::draw(&disk(), &r, 16, 3).unwrap();
        assert!(
            bdelta_membership(&rand, &r, &disk(), &g, f64::INFINITY, 1.0)
                .unwrap()
                .inside
        );
        assert!(bdelta_membership(&rand, &r, &disk(), &g, 0.5, 0.4).is_err());
        // M = ceil(1 + L c̃ N^{1−α}/δ)
        assert_eq!(mesh_size(2.0, 3.0, 16, 1.0, 0.5), 13);
        assert_eq!(mesh_size(1.0, 1.0, 16, 0.75, 1.0), 3);
    }

    #[test]
    fn kernels_with_zero_interpolant_vanish() {
        let g = grid(64);
        let st = AveragedState::new(&disk(), &Interpolant::zero(), &g, &pt(0.3, 0.1)).unwrap();
        assert_eq!(st.g1(c64(0.1, 1.1)), c64(0.0, 0.0));
        assert_eq!(st.g2(c64(0.1, 1.1)), 0.0);
        let m = clt_moments(&st, Kernel::G1).unwrap();
        assert_eq!((m.covariance, m.variance), (c64(0.0, 0.0), 0.0));
        assert_eq!(correlation_limit(&st, &st).unwrap(), c64(0.0, 0.0));
        assert_eq!(
            clt_remainder(10, c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)),
            c64(0.0, 0.0)
        );
        // M ≡ I with r₀ inserted by hand
        let r0 = c64(0.7, -0.2);
        let z = c64(0.2, 0.9);
        let th = st.point().theta(z);
        let m = st.m(z);
        let v = g1_value(th, r0, m.0[0][1], m.0[1][1]);
        assert!((v + I * 2.0 * (th.exp() * r0).conj()).norm() < 1e-15);
    }

    #[test]
    fn constant_kernel_has_no_spread() {
        let q = disk().quadrature();
        let g = alloc::vec![c64(0.3, -1.1); q.len()];
        let (_, _, cov, var) = moments_from(&g, &g, &q.weights);
        assert!(cov.norm() < 1e-13 && var.norm() < 1e-13, "{cov} {var}");
    }

    #[test]
    fn g2_matches_finite_difference() {
        let g = grid(128);
        let r = Interpolant::Affine {
            a: c64(1.5, 0.3),
            b: c64(0.2, -0.1),
        };
        let (x, t, h) = (0.2, 0.1, 1e-4);
        let z = c64(0.15, 1.2);
        let st = AveragedState::new(&disk(), &r, &g, &pt(x, t)).unwrap();
        let f = |xx: f64| {
            let s = AveragedState::new(&disk(), &r, &g, &pt(xx, t)).unwrap();
            let m = s.m(z);
            (s.point().theta(z).exp() * r.eval(z) * m.0[0][1] * m.0[1][1]).im
        };
        let fd = -4.0 * (f(x + h) - f(x - h)) / (2.0 * h);
        assert!((fd - st.g2(z)).abs() < 1e-6, "fd={fd} g2={}", st.g2(z));
    }

    #[test]
    fn contour_and_residue_routes_agree() {
        let g = grid(128);
        let r = Interpolant::Exponential {
            a: c64(1.8, 0.4),
            b: c64(0.3, -0.2),
        };
        for (n, seed, x, t) in [
            (1usize, 1u64, 0.0, 0.0),
            (4, 2, 0.4, 0.2),
            (8, 3, -0.3, 0.1),
        ] {
            let st = AveragedState::new(&disk(), &r, &g, &pt(x, t)).unwrap();
            let s = SpectralSample::draw(&disk(), &r, n, seed).unwrap();
            let (a, b) = contour_statistics(&st, &s).unwrap();
            let xg1 = st.statistic_g1(&s);
            let xg2 = st.statistic_g2(&s);
            assert!((a - xg1).norm() < 1e-8, "G1: {a} vs {xg1}");
            assert!((b - xg2).abs() < 1e-8, "G2: {b} vs {xg2}");
        }
    }

    #[test]
    fn correlation_at_equal_points_is_variance() {
        let g = grid(64);
        let st = AveragedState::new(&disk(), &r_default(), &g, &pt(0.1, 0.05)).unwrap();
        let v = clt_moments(&st, Kernel::G1).unwrap();
        let c = correlation_limit(&st, &st).unwrap();
        assert!((c.re - v.variance).abs() <= 1e-14 * v.variance.max(1.0));
        assert!(c.im.abs() <= 1e-14 * v.variance.max(1.0));
        let v2 = clt_moments(&st, Kernel::G2).unwrap();
        assert!(v2.variance > 0.0 && v2.covariance.im.abs() < 1e-12);
    }

    #[test]
    fn centered_sample_has_zero_error_jump() {
        let g = grid(64);
        let r = Interpolant::Constant(c64(1.0, 0.0));
        let st = AveragedState::new(&disk(), &r, &g, &pt(0.0, 0.0)).unwrap();
        let s = centered(12, &r);
        let (linf, l2) = wn_norms(&st, &s).unwrap();
        assert!(linf < 1e-12 && l2 < 1e-12);
        // the exact field is then the averaged one
        let sample =
            SpectralSample::from_parts(alloc::vec![I], alloc::vec![c64(1.0, 0.0)]).unwrap();
        let psi_n = nsoliton_dressing(&sample, 0.0, 0.0).unwrap();
        let u = clt_remainder(1, psi_n, st.psi(), c64(0.0, 0.0));
        assert!(u.norm() < 1e-6);
    }

    #[test]
    fn norms_scale_linearly() {
        let g = grid(64);
        let st = AveragedState::new(&disk(), &r_default(), &g, &pt(0.2, 0.1)).unwrap();
        let s = SpectralSample::draw(&disk(), &r_default(), 16, 5).unwrap();
        let (a1, b1) = wn_norms(&st, &s).unwrap();
        let (a2, b2) = wn_norms_scaled(&st, &s, 0.25).unwrap();
        assert!((a2 / a1 - 0.25).abs() < 1e-12 && (b2 / b1 - 0.25).abs() < 1e-12);
        assert!(b1 <= libm::sqrt(g.length()) * a1 * (1.0 + 1e-12));
    }
}
