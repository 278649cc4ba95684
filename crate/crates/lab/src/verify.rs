//! Deterministic invariant suite run by `soliton-gas verify`.

use serde::{Deserialize, Serialize};
use soliton_gas_core::contour::ContourGrid;
use soliton_gas_core::fluctuations::{contour_statistics, AveragedState};
use soliton_gas_core::linalg::Mat2;
use soliton_gas_core::rh::{self, solve_sie, JumpField};
use soliton_gas_core::soliton::{
    amplitude_bound, dressing_constants, nsoliton_dressing, nsoliton_residue, one_soliton,
};
use soliton_gas_core::spectral::DomainShape;
use soliton_gas_core::Complex64;
use soliton_gas_core::{EigenvalueDomain, Interpolant, SpacetimePoint, SpectralSample};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::Check;
use crate::seed::trial_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub nodes_per_circle: usize,
    pub psi_re: f64,
    pub psi_im: f64,
    /// Distance to the value at `reference_nodes`.
    pub error: f64,
    pub reference_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub checks: Vec<Check>,
    pub convergence: Vec<ConvergenceRow>,
    pub passed: bool,
}

/// Residual of `iψ_t + ½ψ_xx + |ψ|²ψ` by centred differences of step `h`.
pub fn pde_residual<F>(f: F, x: f64, t: f64, h: f64) -> soliton_gas_core::Result<f64>
where
    F: Fn(f64, f64) -> soliton_gas_core::Result<Complex64>,
{
    let c = f(x, t)?;
    let xp = f(x + h, t)?;
    let xm = f(x - h, t)?;
    let tp = f(x, t + h)?;
    let tm = f(x, t - h)?;
    let psi_t = (tp - tm) / (2.0 * h);
    let psi_xx = (xp - c * 2.0 + xm) / (h * h);
    Ok((Complex64::i() * psi_t + psi_xx * 0.5 + c * c.norm_sqr()).norm())
}

/// `ψ∞(x, t)` from a fresh solve of the averaged problem.
pub fn psi_inf(jump: &JumpField, x: f64, t: f64) -> soliton_gas_core::Result<Complex64> {
    let p = SpacetimePoint::new(x, t)?;
    Ok(rh::recover_field(&solve_sie(jump, &p)?))
}

/// Exact `ψ∞` when the domain is a disk: the one-soliton at the centre with
/// norming constant `r(centre)`.
pub fn disk_limit(domain: &EigenvalueDomain, r: &Interpolant, x: f64, t: f64) -> Option<Complex64> {
    match domain.shape() {
        DomainShape::Disk { center, .. } => {
            let rc = r.eval(center);
            if rc == Complex64::new(0.0, 0.0) {
                return Some(rc);
            }
            let c = dressing_constants(&[center], &[rc])[0];
            Some(one_soliton(center, c, x, t))
        }
        DomainShape::Rectangle { .. } => None,
    }
}

/// `max |conj M(z̄) − σ₂ M(z) σ₂|` over the entries.
pub fn schwarz_defect(m: &Mat2, m_bar: &Mat2) -> f64 {
    let a = &m.0;
    let b = &m_bar.0;
    [
        b[0][0].conj() - a[1][1],
        b[0][1].conj() + a[1][0],
        b[1][0].conj() + a[0][1],
        b[1][1].conj() - a[0][0],
    ]
    .iter()
    .map(|v| v.norm())
    .fold(0.0, f64::max)
}

/// Up to `count` probes on a circle of radius `1.5 R` about the centre of
/// `γ₊`, keeping those whose reflections also stay clear of the contour.
pub fn schwarz_probes(grid: &ContourGrid, count: usize) -> Vec<Complex64> {
    let clear = 4.0 * grid.weight();
    (0..8 * count)
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / (8 * count) as f64;
            grid.center() + Complex64::from_polar(1.5 * grid.radius(), phi)
        })
        .filter(|z| {
            grid.distance_to_contour(*z) > clear && grid.distance_to_contour(z.conj()) > clear
        })
        .step_by(8)
        .take(count)
        .collect()
}

fn sample(cfg: &ExperimentConfig, n: usize, i: usize) -> soliton_gas_core::Result<SpectralSample> {
    SpectralSample::draw(
        &cfg.eigenvalue_domain().expect("validated"),
        &cfg.interpolant(),
        n,
        trial_seed(cfg.base_seed, n, i),
    )
}

fn guard(checks: &mut Vec<Check>, name: &str, f: impl FnOnce() -> soliton_gas_core::Result<Check>) {
    match f() {
        Ok(c) => checks.push(c),
        Err(e) => checks.push(Check::failed(name, e.to_string())),
    }
}

/// Two-route soliton equality, amplitude bound, contour identities, PDE
/// residuals, residue-vs-contour fluctuation routes and a node-doubling table.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let tol = cfg.tolerances.clone();
    let mut checks = Vec::new();
    let mut report = VerifyReport {
        config: cfg.clone(),
        config_hash: cfg.content_hash(),
        checks: vec![],
        convergence: vec![],
        passed: false,
    };
    let grid = match cfg.grid() {
        Ok(g) => {
            checks.push(Check::at_most("geometry", 0.0, 0.0).with_detail(format!(
                "gamma+ radius {:.4}, clearance {:.4}",
                g.radius(),
                g.clearance()
            )));
            g
        }
        Err(e) => {
            checks.push(Check::failed("geometry", e.to_string()));
            report.checks = checks;
            return Ok(report);
        }
    };
    let domain = cfg.eigenvalue_domain()?;
    let r = cfg.interpolant();
    let points = cfg.points()?;

    let q = domain.quadrature();
    checks.push(Check::at_most(
        "domain quadrature mass",
        (q.weights.iter().sum::<f64>() - 1.0).abs(),
        1e-12,
    ));

    if !r.is_identically_zero() {
        guard(&mut checks, "two-route N-soliton", || {
            let mut worst: f64 = 0.0;
            for n in [1, 2, 4, 8] {
                for i in 0..4 {
                    let s = sample(cfg, n, i)?;
                    for t in [0.0, 0.3] {
                        for k in 0..41 {
                            let x = -4.0 + 0.2 * k as f64;
                            let a = nsoliton_dressing(&s, x, t)?;
                            let b = nsoliton_residue(&s, x, t)?;
                            worst = worst.max((a - b).norm());
                        }
                    }
                }
            }
            Ok(Check::at_most("two-route N-soliton", worst, tol.two_route))
        });
        guard(&mut checks, "amplitude bound", || {
            let mut worst = f64::NEG_INFINITY;
            for i in 0..50 {
                let n = 1 + (trial_seed(cfg.base_seed, 0, i) % 32) as usize;
                let s = sample(cfg, n, i)?;
                let bound = amplitude_bound(&s);
                for t in [0.0, 0.3] {
                    for k in 0..101 {
                        let x = -5.0 + 0.1 * k as f64;
                        worst = worst.max(nsoliton_residue(&s, x, t)?.norm() - bound);
                    }
                }
            }
            Ok(Check::at_most(
                "amplitude bound",
                worst,
                tol.amplitude_slack,
            ))
        });
        guard(&mut checks, "pde residual psi_N", || {
            let s = sample(cfg, 8, 0)?;
            let v = pde_residual(|x, t| nsoliton_dressing(&s, x, t), 0.3, 0.2, tol.pde_step)?;
            Ok(Check::at_most("pde residual psi_N", v, tol.pde_residual))
        });
    }

    let jump = JumpField::averaged(&domain, &r, &grid)?;
    guard(&mut checks, "plemelj", || {
        let h = jump.w(&points[0]);
        let d = grid.cauchy_plus(&h)?.sub(&grid.cauchy_minus(&h)?).sub(&h);
        Ok(Check::at_most("plemelj", d.linf_norm(), tol.plemelj))
    });
    let mut det = 0.0f64;
    for p in &points {
        for m in jump.jump(p).values() {
            det = det.max((m.det() - 1.0).norm());
        }
    }
    checks.push(Check::at_most("det J = 1", det, tol.det_jump));

    let probes = schwarz_probes(&grid, 10);
    let mut schwarz = 0.0f64;
    let mut modsq = 0.0f64;
    let mut oracle = 0.0f64;
    let mut states = Vec::new();
    for p in &points {
        let s = match AveragedState::from_jump(&jump, p) {
            Ok(s) => s,
            Err(e) => {
                checks.push(Check::failed(
                    format!("averaged solve x={} t={}", p.x, p.t),
                    e.to_string(),
                ));
                continue;
            }
        };
        for &z in &probes {
            schwarz = schwarz.max(schwarz_defect(&s.m(z), &s.m(z.conj())));
        }
        match s.modsq() {
            Ok(v) => modsq = modsq.max((v - s.psi().norm_sqr()).abs()),
            Err(e) => checks.push(Check::failed("modsq from derivative", e.to_string())),
        }
        if let Some(exact) = disk_limit(&domain, &r, p.x, p.t) {
            oracle = oracle.max((s.psi() - exact).norm());
        }
        states.push(s);
    }
    checks.push(
        Check::at_most("schwarz symmetry", schwarz, tol.schwarz)
            .with_detail(format!("{} probes", probes.len())),
    );
    checks.push(Check::at_most("modsq from derivative", modsq, tol.modsq));
    if disk_limit(&domain, &r, 0.0, 0.0).is_some() {
        checks.push(Check::at_most(
            "disk one-soliton limit",
            oracle,
            tol.rh_oracle,
        ));
    }

    guard(&mut checks, "pde residual psi_inf", || {
        let v = pde_residual(|x, t| psi_inf(&jump, x, t), 0.3, 0.2, tol.pde_step)?;
        Ok(Check::at_most("pde residual psi_inf", v, tol.pde_residual))
    });

    if !r.is_identically_zero() {
        if let Some(state) = states.first() {
            guard(&mut checks, "contour vs residue fluctuation routes", || {
                let (m1, m2) = state.kernel_means();
                let mut worst = 0.0f64;
                for n in [1, 2, 4, 8] {
                    for i in 0..3 {
                        let s = sample(cfg, n, i)?;
                        let (a, b) = contour_statistics(state, &s)?;
                        let g1: Complex64 = s.eigenvalues().iter().map(|&l| state.g1(l)).sum();
                        let g2: f64 = s.eigenvalues().iter().map(|&l| state.g2(l)).sum();
                        worst = worst
                            .max((a - (g1 - m1 * n as f64)).norm())
                            .max((b - (g2 - m2 * n as f64)).abs());
                    }
                }
                Ok(Check::at_most(
                    "contour vs residue fluctuation routes",
                    worst,
                    tol.route_equality,
                ))
            });
        }
        guard(&mut checks, "random jump vs N-soliton", || {
            let s = sample(cfg, 2, 0)?;
            let rj = JumpField::random(&s, &grid)?;
            let p = points[0];
            let v = rh::recover_field(&solve_sie(&rj, &p)?);
            let e = nsoliton_residue(&s, p.x, p.t)?;
            Ok(Check::at_most(
                "random jump vs N-soliton",
                (v - e).norm(),
                tol.rh_oracle,
            ))
        });
    }

    match convergence_table(cfg, &domain, &r, points[0]) {
        Ok(rows) => {
            let floor = 1e-11;
            let monotone = rows
                .windows(2)
                .all(|w| w[1].error <= w[0].error || w[1].error <= floor);
            let worst = rows
                .windows(2)
                .map(|w| {
                    if w[1].error <= floor {
                        0.0
                    } else {
                        w[1].error / w[0].error
                    }
                })
                .fold(0.0, f64::max);
            let mut c = Check::at_most("grid convergence", worst, 1.0);
            c.passed = monotone;
            checks.push(
                c.with_detail(
                    rows.iter()
                        .map(|r| format!("{}: {:.2e}", r.nodes_per_circle, r.error))
                        .collect::<Vec<_>>()
                        .join(", "),
                ),
            );
            if let Some(r128) = rows.iter().find(|r| r.nodes_per_circle == 128) {
                checks.push(Check::at_most(
                    "node doubling change past 128",
                    r128.error,
                    1e-8,
                ));
            }
            report.convergence = rows;
        }
        Err(e) => checks.push(Check::failed("grid convergence", e.to_string())),
    }

    report.passed = checks.iter().all(|c| c.passed);
    report.checks = checks;
    Ok(report)
}

/// `ψ∞` at doubling node counts from the configured one up to 128, against 256.
pub fn convergence_table(
    cfg: &ExperimentConfig,
    domain: &EigenvalueDomain,
    r: &Interpolant,
    p: SpacetimePoint,
) -> Result<Vec<ConvergenceRow>> {
    let reference = 256;
    let mut levels = vec![];
    let mut n = cfg.contour.nodes_per_circle;
    while n < reference {
        levels.push(n);
        n *= 2;
    }
    if levels.len() < 2 {
        levels = vec![64, 128];
    }
    let solve = |n: usize| -> Result<Complex64> {
        let g = cfg.grid_with(n)?;
        let j = JumpField::averaged(domain, r, &g)?;
        Ok(rh::recover_field(&solve_sie(&j, &p)?))
    };
    let exact = solve(reference)?;
    levels
        .into_iter()
        .map(|n| {
            let v = solve(n)?;
            Ok(ConvergenceRow {
                nodes_per_circle: n,
                psi_re: v.re,
                psi_im: v.im,
                error: (v - exact).norm(),
                reference_nodes: reference,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_of_one_soliton_is_second_order() {
        let c = Complex64::new(0.7, -0.2);
        let lam = Complex64::new(0.3, 0.9);
        let f = |x, t| Ok(one_soliton(lam, c, x, t));
        let a = pde_residual(f, 0.2, 0.4, 0.02).unwrap();
        let b = pde_residual(f, 0.2, 0.4, 0.01).unwrap();
        assert!(a > 0.0 && (a / b - 4.0).abs() < 0.2, "{a} {b}");
    }

    #[test]
    fn schwarz_defect_of_identity_vanishes() {
        assert_eq!(schwarz_defect(&Mat2::IDENTITY, &Mat2::IDENTITY), 0.0);
    }
}
