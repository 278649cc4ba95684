//! Riemann–Hilbert problems on the two-circle contour.
//!
//! The jump is `J = [[1, 0], [−e^{θ} F, 1]]` on `γ₊` and
//! `J = [[1, e^{−θ} F*], [0, 1]]` on `γ₋` with `F*(z) = conj(F(z̄))`.
//! For the random problem `F(z) = Σ c_k/(z − λ_k)`; for the averaged problem
//! `F(z) = ∬ r(w)/(z − w) dμ(w)`.
//!
//! The boundary value `μ = M₋` solves `μ − C₋(μ W) = I` with `W = J − I`;
//! then `M(z) = I + C(μ W)(z)` and `M = I + M⁽¹⁾/z + …` with
//! `M⁽¹⁾ = −(1/2πi) ∮ μ W ds`. The field is `ψ = 2i M⁽¹⁾₁₂` and
//! `|ψ|² = −2i ∂ₓM⁽¹⁾₂₂`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::contour::{CauchyEvaluator, ContourDensity, ContourGrid, Side};
use crate::error::{Error, Result};
use crate::linalg::{DenseLu, Mat2};
use crate::soliton::phase;
use crate::spectral::{DomainQuadrature, EigenvalueDomain, Interpolant, SpectralSample};
use crate::{c64, I};

/// Relative residual required of the collocation solve.
pub const SIE_RESIDUAL_TOL: f64 = 1e-10;

/// Allowed change of the averaged transform under quadrature refinement.
pub const AVERAGED_QUADRATURE_TOL: f64 = 1e-10;

/// Allowed imaginary part of `−2i ∂ₓM⁽¹⁾₂₂`.
pub const MODSQ_IMAG_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub x: f64,
    pub t: f64,
}

impl SpacetimePoint {
    pub fn new(x: f64, t: f64) -> Result<Self> {
        if !x.is_finite() || !(t >= 0.0) || !t.is_finite() {
            return Err(Error::invalid("point", "need finite x and finite t ≥ 0"));
        }
        Ok(SpacetimePoint { x, t })
    }

    /// `θ(z) = 2ixz + 2itz²`.
    #[inline]
    pub fn theta(&self, z: Complex64) -> Complex64 {
        phase(z, self.x, self.t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum JumpKind {
    Identity,
    Random(SpectralSample),
    Averaged {
        domain: EigenvalueDomain,
        r: Interpolant,
    },
}

/// Jump data on a fixed grid, independent of `(x, t)`: the values of `F` at
/// the `γ₊` nodes.
#[derive(Debug, Clone)]
pub struct JumpField {
    kind: JumpKind,
    grid: ContourGrid,
    f_plus: Vec<Complex64>,
    quadrature: Option<DomainQuadrature>,
    refinement_change: f64,
}

impl JumpField {
    /// `J ≡ I`.
    pub fn identity(grid: &ContourGrid) -> Self {
        JumpField {
            kind: JumpKind::Identity,
            grid: grid.clone(),
            f_plus: vec![c64(0.0, 0.0); grid.nodes_per_circle()],
            quadrature: None,
            refinement_change: 0.0,
        }
    }

    /// Jump of the N-soliton problem. Every eigenvalue must lie strictly inside `γ₊`.
    pub fn random(sample: &SpectralSample, grid: &ContourGrid) -> Result<Self> {
        for (k, &l) in sample.eigenvalues().iter().enumerate() {
            if !grid.inside(0, l) {
                return Err(Error::ContractViolation {
                    index: k,
                    reason: format!("eigenvalue {l} is not inside the contour"),
                });
            }
            if grid.distance_to_contour(l) < grid.weight() {
                log::warn!("eigenvalue {l} lies within one node spacing of the contour");
            }
        }
        let n = grid.nodes_per_circle();
        let f_plus = (0..n)
            .map(|j| {
                let z = grid.node(0, j);
                sample
                    .eigenvalues()
                    .iter()
                    .zip(sample.norming_constants())
                    .map(|(&l, &c)| c / (z - l))
                    .sum()
            })
            .collect();
        Ok(JumpField {
            kind: JumpKind::Random(sample.clone()),
            grid: grid.clone(),
            f_plus,
            quadrature: None,
            refinement_change: 0.0,
        })
    }

    /// Averaged jump. The domain quadrature is checked against a doubled one.
    pub fn averaged(
        domain: &EigenvalueDomain,
        r: &Interpolant,
        grid: &ContourGrid,
    ) -> Result<Self> {
        let n = grid.nodes_per_circle();
        for j in 0..n {
            if domain.distance(grid.node(0, j)) <= 0.0 {
                return Err(Error::Geometry(
                    "contour meets the eigenvalue domain".into(),
                ));
            }
        }
        let q = domain.quadrature();
        let fine = domain.refined_quadrature();
        let f_plus: Vec<Complex64> = (0..n)
            .map(|j| averaged_transform(&q, r, grid.node(0, j)))
            .collect();
        let change = (0..n)
            .map(|j| (averaged_transform(&fine, r, grid.node(0, j)) - f_plus[j]).norm())
            .fold(0.0, f64::max);
        if !(change <= AVERAGED_QUADRATURE_TOL) {
            return Err(Error::Accuracy {
                what: "averaged jump quadrature",
                value: change,
                tolerance: AVERAGED_QUADRATURE_TOL,
            });
        }
        Ok(JumpField {
            kind: JumpKind::Averaged {
                domain: *domain,
                r: *r,
            },
            grid: grid.clone(),
            f_plus,
            quadrature: Some(q),
            refinement_change: change,
        })
    }

    pub fn kind(&self) -> &JumpKind {
        &self.kind
    }

    pub fn grid(&self) -> &ContourGrid {
        &self.grid
    }

    /// Change of the averaged transform when the quadrature is doubled.
    pub fn refinement_change(&self) -> f64 {
        self.refinement_change
    }

    /// `F` at the `γ₊` nodes.
    pub fn transform_values(&self) -> &[Complex64] {
        &self.f_plus
    }

    /// `F(z)` at an arbitrary point off the support of the measure.
    pub fn transform(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            JumpKind::Identity => c64(0.0, 0.0),
            JumpKind::Random(s) => s
                .eigenvalues()
                .iter()
                .zip(s.norming_constants())
                .map(|(&l, &c)| c / (z - l))
                .sum(),
            JumpKind::Averaged { r, .. } => {
                averaged_transform(self.quadrature.as_ref().expect("averaged quadrature"), r, z)
            }
        }
    }

    /// `F(s_j)` on `γ₊` (circle 0) or `F*(s_j)` on `γ₋` (circle 1).
    fn node_transform(&self, c: usize, j: usize) -> Complex64 {
        if c == 0 {
            self.f_plus[j]
        } else {
            self.f_plus[self.grid.mirror_index(j)].conj()
        }
    }

    /// `J(s)` at every node.
    pub fn jump(&self, p: &SpacetimePoint) -> ContourDensity {
        let mut w = self.w(p);
        let n = self.grid.total_nodes();
        for i in 0..n {
            w[i] += Mat2::IDENTITY;
        }
        w
    }

    /// `W = J − I` at every node.
    pub fn w(&self, p: &SpacetimePoint) -> ContourDensity {
        self.w_scaled(p, |_, _| c64(1.0, 0.0))
    }

    /// `∂ₓW = ∂ₓJ`; the exponent contributes `±2iz`.
    pub fn dw(&self, p: &SpacetimePoint) -> ContourDensity {
        self.w_scaled(p, |c, z| if c == 0 { I * 2.0 * z } else { -I * 2.0 * z })
    }

    fn w_scaled(
        &self,
        p: &SpacetimePoint,
        factor: impl Fn(usize, Complex64) -> Complex64,
    ) -> ContourDensity {
        let n = self.grid.nodes_per_circle();
        let zero = c64(0.0, 0.0);
        let mut values = Vec::with_capacity(2 * n);
        for c in 0..2 {
            for j in 0..n {
                let s = self.grid.node(c, j);
                let f = self.node_transform(c, j) * factor(c, s);
                values.push(if c == 0 {
                    Mat2::new(zero, zero, -(p.theta(s).exp() * f), zero)
                } else {
                    Mat2::new(zero, (-p.theta(s)).exp() * f, zero, zero)
                });
            }
        }
        ContourDensity::from_values(values).expect("even node count")
    }
}

/// `∬ r(w)/(z − w) dμ(w)` by the domain quadrature.
pub fn averaged_transform(q: &DomainQuadrature, r: &Interpolant, z: Complex64) -> Complex64 {
    q.integrate(|w| r.eval(w) / (z - w))
}

/// Solution of the singular integral equation at one `(x, t)`.
#[derive(Debug, Clone)]
pub struct RhSolution {
    point: SpacetimePoint,
    mu: ContourDensity,
    w: ContourDensity,
    m1: Mat2,
    dmu: Option<ContourDensity>,
    dw: Option<ContourDensity>,
    dm1: Option<Mat2>,
    residual: f64,
    condition: f64,
    lu: Option<DenseLu>,
}

impl RhSolution {
    pub fn point(&self) -> SpacetimePoint {
        self.point
    }

    /// `μ = M₋` at the nodes.
    pub fn mu(&self) -> &ContourDensity {
        &self.mu
    }

    /// `W = J − I` at the nodes.
    pub fn w(&self) -> &ContourDensity {
        &self.w
    }

    pub fn m1(&self) -> Mat2 {
        self.m1
    }

    pub fn dmu(&self) -> Option<&ContourDensity> {
        self.dmu.as_ref()
    }

    pub fn dm1(&self) -> Option<Mat2> {
        self.dm1
    }

    /// `‖μ − I − C₋(μW)‖_{L²} / ‖μ‖_{L²}`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// 1-norm condition estimate of the collocation matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Release the stored factorization; the derivative solve then refactors.
    pub fn drop_factorization(&mut self) {
        self.lu = None;
    }

    /// Evaluator of `M(z) − I`.
    pub fn m_evaluator(&self, grid: &ContourGrid) -> Result<CauchyEvaluator> {
        grid.evaluator(&self.mu.mul(&self.w))
    }

    /// Evaluator of `∂ₓM(z)`.
    pub fn dm_evaluator(&self, grid: &ContourGrid) -> Result<CauchyEvaluator> {
        let (dmu, dw) = match (&self.dmu, &self.dw) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::invalid("solution", "derivative companion missing")),
        };
        grid.evaluator(&dmu.mul(&self.w).add(&self.mu.mul(dw)))
    }
}

fn moment(grid: &ContourGrid, h: &ContourDensity) -> Mat2 {
    let n = grid.nodes_per_circle();
    let mut acc = Mat2::ZERO;
    for c in 0..2 {
        let a = grid.circle_center(c);
        for j in 0..n {
            acc += h[c * n + j] * (grid.node(c, j) - a);
        }
    }
    acc * c64(-1.0 / n as f64, 0.0)
}

fn assemble(grid: &ContourGrid, w: &ContourDensity) -> Vec<Complex64> {
    let nn = grid.total_nodes();
    let size = 2 * nn;
    let k = grid.projector_matrix(Side::Minus);
    let mut a = vec![c64(0.0, 0.0); size * size];
    for p in 0..nn {
        for e in 0..2 {
            let row = (2 * p + e) * size;
            a[row + 2 * p + e] = c64(1.0, 0.0);
            for q in 0..nn {
                let kpq = k[p * nn + q];
                let wq = &w[q].0;
                for f in 0..2 {
                    let v = wq[f][e];
                    if v != c64(0.0, 0.0) {
                        a[row + 2 * q + f] -= kpq * v;
                    }
                }
            }
        }
    }
    a
}

/// Solve `[1 − C_W] μ = rhs` row by row; `rhs` is given per node.
fn solve_rows(lu: &DenseLu, rhs: &ContourDensity) -> ContourDensity {
    let nn = rhs.values().len();
    let mut out = rhs.clone();
    for r in 0..2 {
        let mut b: Vec<Complex64> = Vec::with_capacity(2 * nn);
        for m in rhs.values() {
            b.push(m.0[r][0]);
            b.push(m.0[r][1]);
        }
        lu.solve_in_place(&mut b);
        for p in 0..nn {
            out[p].0[r][0] = b[2 * p];
            out[p].0[r][1] = b[2 * p + 1];
        }
    }
    out
}

fn relative_sie_residual(
    grid: &ContourGrid,
    mu: &ContourDensity,
    w: &ContourDensity,
    rhs: &ContourDensity,
) -> Result<f64> {
    let cm = grid.cauchy_minus(&mu.mul(w))?;
    let res = mu.sub(&cm).sub(rhs);
    let scale = mu
        .l2_norm(grid)
        .max(rhs.l2_norm(grid))
        .max(f64::MIN_POSITIVE);
    Ok(res.l2_norm(grid) / scale)
}

/// Solve `μ − C₋(μ W) = I` by dense collocation over nodes and entries.
pub fn solve_sie(jump: &JumpField, p: &SpacetimePoint) -> Result<RhSolution> {
    let grid = jump.grid();
    let w = jump.w(p);
    if !w.is_finite() {
        return Err(Error::NonFinite("jump matrix"));
    }
    let a = assemble(grid, &w);
    let lu = DenseLu::factor(a, 2 * grid.total_nodes())?;
    let condition = lu.condition_estimate();
    let ident = ContourDensity::constant(grid, Mat2::IDENTITY);
    let mu = solve_rows(&lu, &ident);
    if !mu.is_finite() {
        return Err(Error::NonFinite("collocation solve"));
    }
    let residual = relative_sie_residual(grid, &mu, &w, &ident)?;
    if !(residual <= SIE_RESIDUAL_TOL) {
        return Err(Error::Accuracy {
            what: "singular integral equation residual",
            value: residual,
            tolerance: SIE_RESIDUAL_TOL,
        });
    }
    let m1 = moment(grid, &mu.mul(&w));
    Ok(RhSolution {
        point: *p,
        mu,
        w,
        m1,
        dmu: None,
        dw: None,
        dm1: None,
        residual,
        condition,
        lu: Some(lu),
    })
}

/// Solve `∂ₓμ − C₋(∂ₓμ W) = C₋(μ ∂ₓW)` with the collocation matrix of `base`.
pub fn solve_sie_dx(jump: &JumpField, base: &mut RhSolution) -> Result<()> {
    let grid = jump.grid();
    let p = base.point;
    let dw = jump.dw(&p);
    if base.lu.is_none() {
        let a = assemble(grid, &base.w);
        base.lu = Some(DenseLu::factor(a, 2 * grid.total_nodes())?);
    }
    let lu = base.lu.as_ref().expect("factorization present");
    let rhs = grid.cauchy_minus(&base.mu.mul(&dw))?;
    let dmu = solve_rows(lu, &rhs);
    if !dmu.is_finite() {
        return Err(Error::NonFinite("derivative collocation solve"));
    }
    let residual = relative_sie_residual(grid, &dmu, &base.w, &rhs)?;
    if !(residual <= SIE_RESIDUAL_TOL) {
        return Err(Error::Accuracy {
            what: "derivative integral equation residual",
            value: residual,
            tolerance: SIE_RESIDUAL_TOL,
        });
    }
    base.dm1 = Some(moment(grid, &dmu.mul(&base.w).add(&base.mu.mul(&dw))));
    base.dmu = Some(dmu);
    base.dw = Some(dw);
    Ok(())
}

/// Solve the equation and its x-derivative.
pub fn solve_with_dx(jump: &JumpField, p: &SpacetimePoint) -> Result<RhSolution> {
    let mut sol = solve_sie(jump, p)?;
    solve_sie_dx(jump, &mut sol)?;
    Ok(sol)
}

/// `ψ = 2i M⁽¹⁾₁₂`.
pub fn recover_field(sol: &RhSolution) -> Complex64 {
    I * 2.0 * sol.m1.0[0][1]
}

/// `|ψ|² = −2i ∂ₓM⁽¹⁾₂₂`; the imaginary part must vanish to `MODSQ_IMAG_TOL`.
pub fn recover_modsq(sol: &RhSolution) -> Result<f64> {
    let d = sol
        .dm1
        .ok_or_else(|| Error::invalid("solution", "derivative companion missing"))?;
    let v = -I * 2.0 * d.0[1][1];
    if !(v.im.abs() <= MODSQ_IMAG_TOL) {
        return Err(Error::Accuracy {
            what: "imaginary part of |ψ|²",
            value: v.im.abs(),
            tolerance: MODSQ_IMAG_TOL,
        });
    }
    Ok(v.re)
}

/// `M(z) = I + C(μW)(z)` off the contour.
pub fn eval_m_off(sol: &RhSolution, grid: &ContourGrid, z: Complex64) -> Result<Mat2> {
    Ok(Mat2::IDENTITY + sol.m_evaluator(grid)?.eval(z))
}

/// `∂ₓM(z)` off the contour.
pub fn eval_dm_off(sol: &RhSolution, grid: &ContourGrid, z: Complex64) -> Result<Mat2> {
    Ok(sol.dm_evaluator(grid)?.eval(z))
}
