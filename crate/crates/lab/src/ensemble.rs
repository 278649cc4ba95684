//! Seeded Monte Carlo ensembles of random N-soliton solutions compared with
//! the soliton gas limit.
//!
//! Trials run on a worker pool. Every trial is independent and seeded by
//! [`trial_seed`]; the averaged problem at each `(x, t)` is solved once and
//! shared read-only. Reductions happen after all trials finish, in trial
//! order, so results do not depend on the number of workers.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use soliton_gas_core::fluctuations::{
    clt_moments, clt_remainder, correlation_limit, derivative_bound, AveragedState, CltMoments,
    Kernel, MembershipMesh,
};
use soliton_gas_core::soliton::nsoliton_residue;
use soliton_gas_core::spectral::sample_eigenvalues;
use soliton_gas_core::Complex64;
use soliton_gas_core::{
    ContourGrid, EigenvalueDomain, Interpolant, SpacetimePoint, SpectralSample,
};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::report::Check;
use crate::seed::trial_seed;
use crate::stats::{self, loglog_fit, mean_se, normality, LogLogFit, MeanSe};

/// Worker pool size; `None` lets rayon decide.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlnRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub x: f64,
    pub t: f64,
    pub trials: usize,
    pub failures: usize,
    pub mean_abs_dpsi: f64,
    pub se_abs_dpsi: f64,
    pub mean_abs_dmodsq: f64,
    pub se_abs_dmodsq: f64,
    pub mean_dpsi_re: f64,
    pub se_dpsi_re: f64,
    pub mean_dpsi_im: f64,
    pub se_dpsi_im: f64,
    pub var_dpsi: f64,
    pub se_var_dpsi: f64,
    pub mean_dmodsq: f64,
    pub se_dmodsq: f64,
    pub var_dmodsq: f64,
    pub se_var_dmodsq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub x: f64,
    pub t: f64,
    pub slope_abs_dpsi: f64,
    pub se_slope_abs_dpsi: f64,
    pub slope_abs_dmodsq: f64,
    pub se_slope_abs_dmodsq: f64,
    pub band_lo: f64,
    pub band_hi: f64,
}

/// Second moments are uncentred (`E[Y²]`), the limit law having mean zero.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub x: f64,
    pub t: f64,
    pub trials: usize,
    pub emp_var_G1_re: f64,
    pub emp_var_G1_im: f64,
    pub emp_E_sq_G1_re: f64,
    pub emp_E_sq_G1_im: f64,
    pub pred_var_G1: f64,
    pub pred_cov_G1_re: f64,
    pub pred_cov_G1_im: f64,
    pub emp_var_G2: f64,
    pub pred_var_G2: f64,
    pub se_var_G1_re: f64,
    pub se_var_G1_im: f64,
    pub se_E_sq_G1_re: f64,
    pub se_E_sq_G1_im: f64,
    pub se_var_G2: f64,
    pub failures: usize,
    pub pred_change_G1: f64,
    pub pred_change_G2: f64,
    pub emp_E_abs_sq_G1: f64,
    pub se_E_abs_sq_G1: f64,
    pub mean_G1_re: f64,
    pub se_mean_G1_re: f64,
    pub mean_G1_im: f64,
    pub se_mean_G1_im: f64,
    pub mean_G2: f64,
    pub se_mean_G2: f64,
    pub lin_E_abs_sq_G1: f64,
    pub se_lin_E_abs_sq_G1: f64,
    pub lin_E_sq_G2: f64,
    pub se_lin_E_sq_G2: f64,
    pub mean_abs_U: f64,
    pub se_abs_U: f64,
    pub skew_G1_re: f64,
    pub skew_G1_im: f64,
    pub skew_G2: f64,
    pub skew_tol: f64,
    pub kurt_G1_re: f64,
    pub kurt_G1_im: f64,
    pub kurt_G2: f64,
    pub kurt_tol: f64,
    pub ks_G1_re: f64,
    pub ks_G1_im: f64,
    pub ks_G2: f64,
    pub ks_crit: f64,
    pub degenerate: bool,
    /// Normality of the standardized linear statistics `X_N/√N`. Those of
    /// `Y` above also carry the `O(N^{-1/2})` skew of the remainder.
    pub lin_skew_G1_re: f64,
    pub lin_skew_G1_im: f64,
    pub lin_skew_G2: f64,
    pub lin_kurt_G1_re: f64,
    pub lin_kurt_G1_im: f64,
    pub lin_kurt_G2: f64,
    pub lin_ks_G1_re: f64,
    pub lin_ks_G1_im: f64,
    pub lin_ks_G2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub x1: f64,
    pub t1: f64,
    pub x2: f64,
    pub t2: f64,
    pub trials: usize,
    pub emp_re: f64,
    pub emp_im: f64,
    pub se_re: f64,
    pub se_im: f64,
    pub pred_re: f64,
    pub pred_im: f64,
    pub pred_change: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub delta: f64,
    pub alpha: f64,
    pub c_tilde: f64,
    pub mesh_size: usize,
    pub p_out: f64,
    pub se_p_out: f64,
    pub mean_sup: f64,
    pub se_sup: f64,
    pub failures: usize,
}

/// `P(B_δᶜ) ≈ c N^{−p}` with `p = 2` (the bound's form at `α = 1`) and a
/// free power-law fit, over the sizes with a nonzero frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipFit {
    pub p: f64,
    pub c_fixed_p: f64,
    pub free: Option<LogLogFit>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup_seconds: f64,
    pub per_n_seconds: Vec<(usize, f64)>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub kind: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub psi_inf: Vec<[f64; 4]>,
    pub lln: Vec<LlnRow>,
    pub slopes: Vec<SlopeRow>,
    pub clt: Vec<CltRow>,
    pub corr: Vec<CorrRow>,
    pub membership: Vec<MembershipRow>,
    pub membership_fit: Option<MembershipFit>,
    pub failures: Vec<TrialFailure>,
    pub valid: bool,
    pub checks: Vec<Check>,
    /// Wall clock; kept out of `summary.json` so reruns are byte-identical.
    #[serde(skip)]
    pub timings: Timings,
}

impl EnsembleSummary {
    fn new(kind: &str, cfg: &ExperimentConfig, setup: &Setup) -> Self {
        EnsembleSummary {
            kind: kind.into(),
            config: cfg.clone(),
            config_hash: cfg.content_hash(),
            psi_inf: setup
                .points
                .iter()
                .zip(&setup.psi_inf)
                .map(|(p, v)| [p.x, p.t, v.re, v.im])
                .collect(),
            lln: vec![],
            slopes: vec![],
            clt: vec![],
            corr: vec![],
            membership: vec![],
            membership_fit: None,
            failures: vec![],
            valid: true,
            checks: vec![],
            timings: Timings::default(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.valid && self.checks.iter().all(|c| c.passed)
    }
}

/// Shared read-only state: the averaged solution at every spacetime point.
pub struct Setup {
    pub domain: EigenvalueDomain,
    pub r: Interpolant,
    pub grid: ContourGrid,
    pub points: Vec<SpacetimePoint>,
    pub states: Vec<AveragedState>,
    pub psi_inf: Vec<Complex64>,
    /// `(∬G1 dμ, ∬G2 dμ)` per point.
    pub kernel_means: Vec<(Complex64, f64)>,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Self::at(cfg, cfg.points()?)
    }

    pub fn at(cfg: &ExperimentConfig, points: Vec<SpacetimePoint>) -> Result<Self> {
        let domain = cfg.eigenvalue_domain()?;
        let r = cfg.interpolant();
        let grid = cfg.grid()?;
        let jump = soliton_gas_core::JumpField::averaged(&domain, &r, &grid)?;
        let states = points
            .iter()
            .map(|p| AveragedState::from_jump(&jump, p))
            .collect::<soliton_gas_core::Result<Vec<_>>>()?;
        let psi_inf = states.iter().map(|s| s.psi()).collect();
        let kernel_means = states.iter().map(|s| s.kernel_means()).collect();
        Ok(Setup {
            domain,
            r,
            grid,
            points,
            states,
            psi_inf,
            kernel_means,
        })
    }

    fn c_tilde(&self, cfg: &ExperimentConfig) -> f64 {
        cfg.membership
            .c_tilde
            .unwrap_or_else(|| 2.0 * derivative_bound(&self.r, &self.domain, self.grid.clearance()))
    }

    fn mesh(&self, cfg: &ExperimentConfig, n: usize) -> Result<MembershipMesh> {
        Ok(MembershipMesh::new(
            &self.grid,
            &self.r,
            &self.domain,
            n,
            cfg.membership.delta,
            cfg.membership.alpha,
            Some(self.c_tilde(cfg)),
        )?)
    }
}

/// What one trial produced at every spacetime point.
#[derive(Debug, Clone)]
struct Trial {
    psi: Vec<Complex64>,
    x_g1: Vec<Complex64>,
    x_g2: Vec<f64>,
    sup: f64,
}

fn run_trial(
    setup: &Setup,
    n: usize,
    seed: u64,
    fluctuations: bool,
    mesh: Option<&MembershipMesh>,
) -> soliton_gas_core::Result<Trial> {
    let np = setup.points.len();
    if setup.r.is_identically_zero() {
        // all norming constants vanish: the trivial potential
        sample_eigenvalues(&setup.domain, n, seed)?;
        return Ok(Trial {
            psi: vec![Complex64::new(0.0, 0.0); np],
            x_g1: vec![Complex64::new(0.0, 0.0); np],
            x_g2: vec![0.0; np],
            sup: 0.0,
        });
    }
    let sample = SpectralSample::draw(&setup.domain, &setup.r, n, seed)?;
    let mut psi = Vec::with_capacity(np);
    for p in &setup.points {
        let v = nsoliton_residue(&sample, p.x, p.t)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(soliton_gas_core::Error::NonFinite("N-soliton field"));
        }
        psi.push(v);
    }
    let (mut x_g1, mut x_g2) = (Vec::new(), Vec::new());
    if fluctuations {
        for (s, &(m1, m2)) in setup.states.iter().zip(&setup.kernel_means) {
            let mut a = Complex64::new(0.0, 0.0);
            let mut b = 0.0;
            for &l in sample.eigenvalues() {
                a += s.g1(l);
                b += s.g2(l);
            }
            x_g1.push(a - m1 * n as f64);
            x_g2.push(b - m2 * n as f64);
        }
    }
    let sup = mesh.map_or(0.0, |m| m.verdict(&sample).sup);
    Ok(Trial {
        psi,
        x_g1,
        x_g2,
        sup,
    })
}

fn with_pool<T: Send>(opts: RunOptions, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = opts.threads {
        b = b.num_threads(k);
    }
    Ok(b.build()?.install(f))
}

/// All trials at one `N`, in trial order, with failures split out.
fn run_trials(
    setup: &Setup,
    cfg: &ExperimentConfig,
    n: usize,
    fluctuations: bool,
    mesh: Option<&MembershipMesh>,
) -> (Vec<Trial>, Vec<TrialFailure>) {
    let results: Vec<(usize, u64, soliton_gas_core::Result<Trial>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(cfg.base_seed, n, i);
            (i, seed, run_trial(setup, n, seed, fluctuations, mesh))
        })
        .collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut bad = Vec::new();
    for (i, seed, r) in results {
        match r {
            Ok(t) => ok.push(t),
            Err(e) => {
                log::warn!("trial {i} at N = {n} (seed {seed}) failed: {e}");
                bad.push(TrialFailure {
                    n,
                    trial: i,
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }
    (ok, bad)
}

fn account_failures(
    summary: &mut EnsembleSummary,
    cfg: &ExperimentConfig,
    n: usize,
    bad: Vec<TrialFailure>,
) {
    let frac = bad.len() as f64 / cfg.trials as f64;
    let limit = cfg.tolerances.max_failure_fraction;
    summary
        .checks
        .push(Check::at_most(format!("failures N={n}"), frac, limit));
    if frac > limit {
        summary.valid = false;
    }
    summary.failures.extend(bad);
}

fn membership_row(
    cfg: &ExperimentConfig,
    setup: &Setup,
    mesh: &MembershipMesh,
    n: usize,
    trials: &[Trial],
    failures: usize,
) -> MembershipRow {
    let sups: Vec<f64> = trials.iter().map(|t| t.sup).collect();
    let out: Vec<f64> = sups
        .iter()
        .map(|&s| if s < cfg.membership.delta { 0.0 } else { 1.0 })
        .collect();
    let p = out.iter().sum::<f64>() / out.len().max(1) as f64;
    let sup = mean_se(&sups);
    MembershipRow {
        n,
        trials: trials.len(),
        delta: cfg.membership.delta,
        alpha: cfg.membership.alpha,
        c_tilde: setup.c_tilde(cfg),
        mesh_size: mesh.size(),
        p_out: p,
        se_p_out: (p * (1.0 - p) / out.len().max(1) as f64).sqrt(),
        mean_sup: sup.mean,
        se_sup: sup.se,
        failures,
    }
}

fn membership_fit(rows: &[MembershipRow]) -> Option<MembershipFit> {
    let pos: Vec<&MembershipRow> = rows.iter().filter(|r| r.p_out > 0.0).collect();
    if pos.is_empty() {
        return None;
    }
    let p = 2.0;
    let num: f64 = pos.iter().map(|r| r.p_out * (r.n as f64).powf(-p)).sum();
    let den: f64 = pos.iter().map(|r| (r.n as f64).powf(-2.0 * p)).sum();
    let free = (pos.len() >= 2).then(|| {
        let x: Vec<f64> = pos.iter().map(|r| r.n as f64).collect();
        let y: Vec<f64> = pos.iter().map(|r| r.p_out).collect();
        loglog_fit(&x, &y)
    });
    Some(MembershipFit {
        p,
        c_fixed_p: num / den,
        free,
    })
}

/// `P(B_δᶜ)` never increases with `N` and ends below where it started.
pub fn membership_trend(rows: &[MembershipRow]) -> Check {
    let worst = rows
        .windows(2)
        .map(|w| w[1].p_out - w[0].p_out)
        .fold(f64::NEG_INFINITY, f64::max);
    let overall = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if rows.len() >= 2 => b.p_out < a.p_out,
        _ => false,
    };
    let mut c = Check::at_most("membership non-increasing", worst, 0.0);
    c.passed &= overall;
    c.with_detail(
        rows.iter()
            .map(|r| format!("N={}: {:.4}", r.n, r.p_out))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

fn finish_membership(summary: &mut EnsembleSummary) {
    if summary.membership.len() >= 2 {
        summary.checks.push(membership_trend(&summary.membership));
    }
    summary.membership_fit = membership_fit(&summary.membership);
}

/// Law of large numbers: `E|ψ_N − ψ∞|` and `E||ψ_N|² − |ψ∞|²|` against `N`.
pub fn run_lln(cfg: &ExperimentConfig, opts: RunOptions) -> Result<EnsembleSummary> {
    cfg.validate()?;
    if cfg.n_values.len() < 2 {
        return Err(LabError::Precondition(
            "lln needs at least two values of N".into(),
        ));
    }
    let start = Instant::now();
    let setup = Setup::new(cfg)?;
    let mut summary = EnsembleSummary::new("lln", cfg, &setup);
    summary.timings.setup_seconds = start.elapsed().as_secs_f64();
    for &n in &cfg.n_values {
        let tn = Instant::now();
        let mesh = setup.mesh(cfg, n)?;
        let (trials, bad) = with_pool(opts, || run_trials(&setup, cfg, n, false, Some(&mesh)))?;
        let nf = bad.len();
        for (k, p) in setup.points.iter().enumerate() {
            let pinf = setup.psi_inf[k];
            let minf = pinf.norm_sqr();
            let d: Vec<Complex64> = trials.iter().map(|t| t.psi[k] - pinf).collect();
            let dm: Vec<f64> = trials.iter().map(|t| t.psi[k].norm_sqr() - minf).collect();
            let abs_d: Vec<f64> = d.iter().map(|v| v.norm()).collect();
            let abs_dm: Vec<f64> = dm.iter().map(|v| v.abs()).collect();
            let re = mean_se(&d.iter().map(|v| v.re).collect::<Vec<_>>());
            let im = mean_se(&d.iter().map(|v| v.im).collect::<Vec<_>>());
            let centred: Vec<f64> = d
                .iter()
                .map(|v| (v - Complex64::new(re.mean, im.mean)).norm_sqr())
                .collect();
            let var_d = corrected(mean_se(&centred), centred.len());
            let a = mean_se(&abs_d);
            let b = mean_se(&abs_dm);
            let m = mean_se(&dm);
            let vm = stats::variance_se(&dm);
            summary.lln.push(LlnRow {
                n,
                x: p.x,
                t: p.t,
                trials: trials.len(),
                failures: nf,
                mean_abs_dpsi: a.mean,
                se_abs_dpsi: a.se,
                mean_abs_dmodsq: b.mean,
                se_abs_dmodsq: b.se,
                mean_dpsi_re: re.mean,
                se_dpsi_re: re.se,
                mean_dpsi_im: im.mean,
                se_dpsi_im: im.se,
                var_dpsi: var_d.mean,
                se_var_dpsi: var_d.se,
                mean_dmodsq: m.mean,
                se_dmodsq: m.se,
                var_dmodsq: vm.mean,
                se_var_dmodsq: vm.se,
            });
        }
        summary
            .membership
            .push(membership_row(cfg, &setup, &mesh, n, &trials, nf));
        account_failures(&mut summary, cfg, n, bad);
        summary
            .timings
            .per_n_seconds
            .push((n, tn.elapsed().as_secs_f64()));
    }
    let band = cfg.tolerances.slope_band;
    let ns: Vec<f64> = cfg.n_values.iter().map(|&n| n as f64).collect();
    for (k, p) in setup.points.iter().enumerate() {
        let rows: Vec<&LlnRow> = summary
            .lln
            .iter()
            .skip(k)
            .step_by(setup.points.len())
            .collect();
        let ya: Vec<f64> = rows.iter().map(|r| r.mean_abs_dpsi).collect();
        let yb: Vec<f64> = rows.iter().map(|r| r.mean_abs_dmodsq).collect();
        let at = format!("x={} t={}", p.x, p.t);
        if ya.iter().chain(&yb).all(|v| *v == 0.0) {
            summary
                .checks
                .push(Check::at_most(format!("lln means vanish {at}"), 0.0, 0.0));
            continue;
        }
        let fa = loglog_fit(&ns, &ya);
        let fb = loglog_fit(&ns, &yb);
        summary.slopes.push(SlopeRow {
            x: p.x,
            t: p.t,
            slope_abs_dpsi: fa.slope,
            se_slope_abs_dpsi: fa.se_slope,
            slope_abs_dmodsq: fb.slope,
            se_slope_abs_dmodsq: fb.se_slope,
            band_lo: band[0],
            band_hi: band[1],
        });
        summary.checks.push(strictly_decreasing(
            &format!("lln E|dpsi| decreasing {at}"),
            &ya,
        ));
        summary.checks.push(strictly_decreasing(
            &format!("lln E|dmodsq| decreasing {at}"),
            &yb,
        ));
        summary.checks.push(Check::within(
            format!("lln slope E|dpsi| {at}"),
            fa.slope,
            band[0],
            band[1],
        ));
        summary.checks.push(Check::within(
            format!("lln slope E|dmodsq| {at}"),
            fb.slope,
            band[0],
            band[1],
        ));
    }
    finish_membership(&mut summary);
    summary.timings.total_seconds = start.elapsed().as_secs_f64();
    Ok(summary)
}

/// Largest ratio of consecutive values; strictly decreasing iff below 1.
pub fn strictly_decreasing(name: &str, ys: &[f64]) -> Check {
    let worst = ys
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut c = Check::at_most(name, worst, 1.0);
    c.passed = ys.windows(2).all(|w| w[1] < w[0]);
    c
}

fn corrected(m: MeanSe, n: usize) -> MeanSe {
    let f = if n > 1 {
        n as f64 / (n as f64 - 1.0)
    } else {
        f64::NAN
    };
    MeanSe {
        mean: m.mean * f,
        se: m.se * f,
    }
}

fn second_moment(xs: impl Iterator<Item = f64>) -> MeanSe {
    mean_se(&xs.map(|v| v * v).collect::<Vec<_>>())
}

/// Central limit theorem: second moments of `√N(ψ_N − ψ∞)` and
/// `√N(|ψ_N|² − |ψ∞|²)` against the `G1`/`G2` quadratures, normality
/// diagnostics and the decay of the remainder `U = X_N^{G1} − N(ψ_N − ψ∞)`.
pub fn run_clt(cfg: &ExperimentConfig, opts: RunOptions) -> Result<EnsembleSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let setup = Setup::new(cfg)?;
    let mut summary = EnsembleSummary::new("clt", cfg, &setup);
    let preds: Vec<(CltMoments, CltMoments)> = setup
        .states
        .iter()
        .map(|s| Ok((clt_moments(s, Kernel::G1)?, clt_moments(s, Kernel::G2)?)))
        .collect::<soliton_gas_core::Result<_>>()?;
    summary.timings.setup_seconds = start.elapsed().as_secs_f64();
    let tol = &cfg.tolerances;
    for &n in &cfg.n_values {
        let tn = Instant::now();
        let mesh = setup.mesh(cfg, n)?;
        let (trials, bad) = with_pool(opts, || run_trials(&setup, cfg, n, true, Some(&mesh)))?;
        let nf = bad.len();
        let rn = (n as f64).sqrt();
        for (k, p) in setup.points.iter().enumerate() {
            let pinf = setup.psi_inf[k];
            let minf = pinf.norm_sqr();
            let y1: Vec<Complex64> = trials.iter().map(|t| (t.psi[k] - pinf) * rn).collect();
            let y2: Vec<f64> = trials
                .iter()
                .map(|t| (t.psi[k].norm_sqr() - minf) * rn)
                .collect();
            let re: Vec<f64> = y1.iter().map(|v| v.re).collect();
            let im: Vec<f64> = y1.iter().map(|v| v.im).collect();
            let vre = second_moment(re.iter().copied());
            let vim = second_moment(im.iter().copied());
            let sq: Vec<Complex64> = y1.iter().map(|v| v * v).collect();
            let sq_re = mean_se(&sq.iter().map(|v| v.re).collect::<Vec<_>>());
            let sq_im = mean_se(&sq.iter().map(|v| v.im).collect::<Vec<_>>());
            let abs_sq = mean_se(&y1.iter().map(|v| (v * v.conj()).re).collect::<Vec<_>>());
            let v2 = second_moment(y2.iter().copied());
            let lin1 = mean_se(
                &trials
                    .iter()
                    .map(|t| t.x_g1[k].norm_sqr() / n as f64)
                    .collect::<Vec<_>>(),
            );
            let lin2 = second_moment(trials.iter().map(|t| t.x_g2[k] / rn));
            let u = mean_se(
                &trials
                    .iter()
                    .map(|t| clt_remainder(n, t.psi[k], pinf, t.x_g1[k]).norm() / rn)
                    .collect::<Vec<_>>(),
            );
            let (d_re, d_im, d_2) = (normality(&re), normality(&im), normality(&y2));
            let l_re = normality(&trials.iter().map(|t| t.x_g1[k].re).collect::<Vec<_>>());
            let l_im = normality(&trials.iter().map(|t| t.x_g1[k].im).collect::<Vec<_>>());
            let l_2 = normality(&trials.iter().map(|t| t.x_g2[k]).collect::<Vec<_>>());
            let (g1, g2) = &preds[k];
            let (m_re, m_im, m_2) = (mean_se(&re), mean_se(&im), mean_se(&y2));
            let degenerate = d_re.degenerate && d_im.degenerate && d_2.degenerate;
            let row = CltRow {
                n,
                x: p.x,
                t: p.t,
                trials: trials.len(),
                emp_var_G1_re: vre.mean,
                emp_var_G1_im: vim.mean,
                emp_E_sq_G1_re: sq_re.mean,
                emp_E_sq_G1_im: sq_im.mean,
                pred_var_G1: g1.variance,
                pred_cov_G1_re: g1.covariance.re,
                pred_cov_G1_im: g1.covariance.im,
                emp_var_G2: v2.mean,
                pred_var_G2: g2.variance,
                se_var_G1_re: vre.se,
                se_var_G1_im: vim.se,
                se_E_sq_G1_re: sq_re.se,
                se_E_sq_G1_im: sq_im.se,
                se_var_G2: v2.se,
                failures: nf,
                pred_change_G1: g1.refinement_change,
                pred_change_G2: g2.refinement_change,
                emp_E_abs_sq_G1: abs_sq.mean,
                se_E_abs_sq_G1: abs_sq.se,
                mean_G1_re: m_re.mean,
                se_mean_G1_re: m_re.se,
                mean_G1_im: m_im.mean,
                se_mean_G1_im: m_im.se,
                mean_G2: m_2.mean,
                se_mean_G2: m_2.se,
                lin_E_abs_sq_G1: lin1.mean,
                se_lin_E_abs_sq_G1: lin1.se,
                lin_E_sq_G2: lin2.mean,
                se_lin_E_sq_G2: lin2.se,
                mean_abs_U: u.mean,
                se_abs_U: u.se,
                skew_G1_re: d_re.skewness,
                skew_G1_im: d_im.skewness,
                skew_G2: d_2.skewness,
                skew_tol: tol.skewness,
                kurt_G1_re: d_re.excess_kurtosis,
                kurt_G1_im: d_im.excess_kurtosis,
                kurt_G2: d_2.excess_kurtosis,
                kurt_tol: tol.excess_kurtosis,
                ks_G1_re: d_re.ks_statistic,
                ks_G1_im: d_im.ks_statistic,
                ks_G2: d_2.ks_statistic,
                ks_crit: d_re.ks_critical,
                degenerate,
                lin_skew_G1_re: l_re.skewness,
                lin_skew_G1_im: l_im.skewness,
                lin_skew_G2: l_2.skewness,
                lin_kurt_G1_re: l_re.excess_kurtosis,
                lin_kurt_G1_im: l_im.excess_kurtosis,
                lin_kurt_G2: l_2.excess_kurtosis,
                lin_ks_G1_re: l_re.ks_statistic,
                lin_ks_G1_im: l_im.ks_statistic,
                lin_ks_G2: l_2.ks_statistic,
            };
            summary.checks.extend(clt_checks(
                &row,
                tol.standard_errors,
                tol.skewness,
                tol.excess_kurtosis,
            ));
            summary.clt.push(row);
        }
        summary
            .membership
            .push(membership_row(cfg, &setup, &mesh, n, &trials, nf));
        account_failures(&mut summary, cfg, n, bad);
        summary
            .timings
            .per_n_seconds
            .push((n, tn.elapsed().as_secs_f64()));
    }
    if cfg.n_values.len() >= 2 {
        for (k, p) in setup.points.iter().enumerate() {
            let rows: Vec<&CltRow> = summary
                .clt
                .iter()
                .skip(k)
                .step_by(setup.points.len())
                .collect();
            summary
                .checks
                .push(remainder_trend(&format!("x={} t={}", p.x, p.t), &rows));
        }
    }
    finish_membership(&mut summary);
    summary.timings.total_seconds = start.elapsed().as_secs_f64();
    Ok(summary)
}

/// `|emp − pred| / se`; zero when both sides vanish exactly.
pub fn z_score(emp: f64, pred: f64, se: f64) -> f64 {
    let d = (emp - pred).abs();
    if d == 0.0 {
        0.0
    } else {
        d / se
    }
}

pub fn clt_checks(row: &CltRow, k: f64, skew: f64, kurt: f64) -> Vec<Check> {
    let at = format!("N={} x={} t={}", row.n, row.x, row.t);
    let mut out = vec![
        Check::at_most(
            format!("clt E|Y1|^2 vs G1 variance {at}"),
            z_score(row.emp_E_abs_sq_G1, row.pred_var_G1, row.se_E_abs_sq_G1),
            k,
        )
        .with_detail(format!(
            "emp {:.6e} ± {:.2e}, pred {:.6e}",
            row.emp_E_abs_sq_G1, row.se_E_abs_sq_G1, row.pred_var_G1
        )),
        Check::at_most(
            format!("clt E[Y2^2] vs G2 variance {at}"),
            z_score(row.emp_var_G2, row.pred_var_G2, row.se_var_G2),
            k,
        )
        .with_detail(format!(
            "emp {:.6e} ± {:.2e}, pred {:.6e}",
            row.emp_var_G2, row.se_var_G2, row.pred_var_G2
        )),
        Check::at_most(
            format!("clt E|X1|^2/N vs G1 variance {at}"),
            z_score(row.lin_E_abs_sq_G1, row.pred_var_G1, row.se_lin_E_abs_sq_G1),
            k,
        ),
        Check::at_most(
            format!("clt E[X2^2]/N vs G2 variance {at}"),
            z_score(row.lin_E_sq_G2, row.pred_var_G2, row.se_lin_E_sq_G2),
            k,
        ),
    ];
    if row.degenerate {
        return out;
    }
    for (name, s, q, ks) in [
        ("Re Y1", row.skew_G1_re, row.kurt_G1_re, row.ks_G1_re),
        ("Im Y1", row.skew_G1_im, row.kurt_G1_im, row.ks_G1_im),
        ("Y2", row.skew_G2, row.kurt_G2, row.ks_G2),
        (
            "Re X1",
            row.lin_skew_G1_re,
            row.lin_kurt_G1_re,
            row.lin_ks_G1_re,
        ),
        (
            "Im X1",
            row.lin_skew_G1_im,
            row.lin_kurt_G1_im,
            row.lin_ks_G1_im,
        ),
        ("X2", row.lin_skew_G2, row.lin_kurt_G2, row.lin_ks_G2),
    ] {
        out.push(Check::at_most(
            format!("clt |skewness| {name} {at}"),
            s.abs(),
            skew,
        ));
        out.push(Check::at_most(
            format!("clt |excess kurtosis| {name} {at}"),
            q.abs(),
            kurt,
        ));
        out.push(Check::at_most(
            format!("clt KS {name} {at}"),
            ks,
            row.ks_crit,
        ));
    }
    out
}

/// Mean `|U|/√N` does not grow as `N` doubles, up to one combined standard
/// error, and ends below where it started.
pub fn remainder_trend(at: &str, rows: &[&CltRow]) -> Check {
    let excess = rows
        .windows(2)
        .map(|w| {
            let slack = (w[0].se_abs_U.powi(2) + w[1].se_abs_U.powi(2)).sqrt();
            w[1].mean_abs_U - w[0].mean_abs_U - slack
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let mut c = Check::at_most(
        format!("clt remainder |U|/sqrt(N) decreasing {at}"),
        excess,
        0.0,
    );
    if let (Some(a), Some(b)) = (rows.first(), rows.last()) {
        c.passed &= b.mean_abs_U < a.mean_abs_U || (a.mean_abs_U == 0.0 && b.mean_abs_U == 0.0);
    }
    c.with_detail(
        rows.iter()
            .map(|r| format!("N={}: {:.4e}±{:.1e}", r.n, r.mean_abs_U, r.se_abs_U))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

/// Two-point correlation `N E[(ψ_N − ψ∞)(p₁) conj (ψ_N − ψ∞)(p₂)]`.
pub fn run_corr(cfg: &ExperimentConfig, opts: RunOptions) -> Result<EnsembleSummary> {
    cfg.validate()?;
    let points = cfg.points()?;
    if points.len() != 2 {
        return Err(LabError::Precondition(format!(
            "corr needs exactly two spacetime points, got {}",
            points.len()
        )));
    }
    let start = Instant::now();
    let setup = Setup::at(cfg, points)?;
    let mut summary = EnsembleSummary::new("corr", cfg, &setup);
    let pred = correlation_limit(&setup.states[0], &setup.states[1])?;
    let change = clt_moments(&setup.states[0], Kernel::G1)?
        .refinement_change
        .max(clt_moments(&setup.states[1], Kernel::G1)?.refinement_change);
    summary.timings.setup_seconds = start.elapsed().as_secs_f64();
    for &n in &cfg.n_values {
        let tn = Instant::now();
        let (trials, bad) = with_pool(opts, || run_trials(&setup, cfg, n, false, None))?;
        let rn = (n as f64).sqrt();
        let z: Vec<Complex64> = trials
            .iter()
            .map(|t| {
                let a = (t.psi[0] - setup.psi_inf[0]) * rn;
                let b = (t.psi[1] - setup.psi_inf[1]) * rn;
                a * b.conj()
            })
            .collect();
        let re = mean_se(&z.iter().map(|v| v.re).collect::<Vec<_>>());
        let im = mean_se(&z.iter().map(|v| v.im).collect::<Vec<_>>());
        let (p1, p2) = (setup.points[0], setup.points[1]);
        let row = CorrRow {
            n,
            x1: p1.x,
            t1: p1.t,
            x2: p2.x,
            t2: p2.t,
            trials: trials.len(),
            emp_re: re.mean,
            emp_im: im.mean,
            se_re: re.se,
            se_im: im.se,
            pred_re: pred.re,
            pred_im: pred.im,
            pred_change: change,
            failures: bad.len(),
        };
        summary
            .checks
            .push(corr_check(&row, cfg.tolerances.standard_errors));
        summary.corr.push(row);
        account_failures(&mut summary, cfg, n, bad);
        summary
            .timings
            .per_n_seconds
            .push((n, tn.elapsed().as_secs_f64()));
    }
    summary.timings.total_seconds = start.elapsed().as_secs_f64();
    Ok(summary)
}

/// `|emp − pred|` against `k` combined standard errors of the complex mean.
pub fn corr_check(row: &CorrRow, k: f64) -> Check {
    let d = Complex64::new(row.emp_re - row.pred_re, row.emp_im - row.pred_im).norm();
    let se = row.se_re.hypot(row.se_im);
    Check::at_most(
        format!(
            "corr N={} ({},{})-({},{})",
            row.n, row.x1, row.t1, row.x2, row.t2
        ),
        if d == 0.0 { 0.0 } else { d / se },
        k,
    )
    .with_detail(format!(
        "emp {:.6e}{:+.6e}i ± {:.2e}, pred {:.6e}{:+.6e}i",
        row.emp_re, row.emp_im, se, row.pred_re, row.pred_im
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SpacetimeSpec;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.contour.nodes_per_circle = 64;
        c.n_values = vec![4, 8];
        c.trials = 20;
        c.spacetime = SpacetimeSpec::Points(vec![[0.0, 0.0], [0.5, 0.1]]);
        c.membership.delta = 2.0;
        c
    }

    #[test]
    fn zero_interpolant_gives_zero_means() {
        let mut c = small();
        c.interpolant = crate::config::InterpolantSpec::Constant { a: [0.0, 0.0] };
        let s = run_lln(&c, RunOptions::default()).unwrap();
        assert!(s.failures.is_empty());
        for r in &s.lln {
            assert_eq!(r.mean_abs_dpsi, 0.0);
            assert_eq!(r.mean_abs_dmodsq, 0.0);
        }
        let s = run_clt(&c, RunOptions::default()).unwrap();
        assert!(s
            .clt
            .iter()
            .all(|r| r.degenerate && r.emp_E_abs_sq_G1 == 0.0 && r.pred_var_G1 == 0.0));
        let s = run_corr(&c, RunOptions::default()).unwrap();
        assert!(s.corr.iter().all(|r| r.emp_re == 0.0 && r.pred_re == 0.0));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let c = small();
        let a = run_clt(&c, RunOptions { threads: Some(1) }).unwrap();
        let b = run_clt(&c, RunOptions { threads: Some(3) }).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn corr_at_equal_points_reuses_clt_samples() {
        let mut c = small();
        c.spacetime = SpacetimeSpec::Points(vec![[0.3, 0.1], [0.3, 0.1]]);
        let corr = run_corr(&c, RunOptions::default()).unwrap();
        c.spacetime = SpacetimeSpec::Points(vec![[0.3, 0.1]]);
        let clt = run_clt(&c, RunOptions::default()).unwrap();
        for (a, b) in corr.corr.iter().zip(&clt.clt) {
            assert_eq!(a.emp_re, b.emp_E_abs_sq_G1);
            assert_eq!(a.se_re, b.se_E_abs_sq_G1);
            assert_eq!(a.emp_im, 0.0);
            assert_eq!(a.pred_re, b.pred_var_G1);
        }
    }

    #[test]
    fn corr_requires_two_points() {
        let mut c = small();
        c.spacetime = SpacetimeSpec::Points(vec![[0.0, 0.0]]);
        assert!(matches!(
            run_corr(&c, RunOptions::default()),
            Err(LabError::Precondition(_))
        ));
    }

    #[test]
    fn lln_requires_two_sizes() {
        let mut c = small();
        c.n_values = vec![8];
        assert!(run_lln(&c, RunOptions::default()).is_err());
    }

    #[test]
    fn decreasing_check() {
        assert!(strictly_decreasing("d", &[3.0, 2.0, 1.0]).passed);
        assert!(!strictly_decreasing("d", &[3.0, 3.0, 1.0]).passed);
    }
}
