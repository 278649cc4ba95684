use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use soliton_gas_core::rh::{recover_field, recover_modsq, solve_with_dx};
use soliton_gas_core::soliton::{amplitude_bound, nsoliton_dressing, nsoliton_residue};
use soliton_gas_core::{JumpField, SpectralSample};
use soliton_gas_lab::output::{write_csv, write_json, write_summary};
use soliton_gas_lab::seed::trial_seed;
use soliton_gas_lab::verify::disk_limit;
use soliton_gas_lab::{
    run_clt, run_corr, run_lln, run_verify, EnsembleSummary, ExperimentConfig, RunOptions,
};

#[derive(Parser)]
#[command(
    name = "soliton-gas",
    version,
    about = "Random N-soliton ensembles and the soliton gas limit"
)]
struct Cli {
    /// JSON experiment config; built-in disk defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw one spectral sample and write it as CSV.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Evaluate the exact N-soliton of one sample on the spacetime points.
    SolitonEval {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Solve the averaged problem on the spacetime points.
    SolveAveraged,
    /// Law of large numbers ensemble.
    Lln,
    /// Central limit ensemble.
    Clt,
    /// Two-point correlation ensemble (exactly two spacetime points).
    Corr,
    /// Invariant suite; exits nonzero on any failure.
    Verify,
    /// Print the default config.
    DefaultConfig,
}

#[derive(Serialize)]
struct SampleRow {
    k: usize,
    lambda_re: f64,
    lambda_im: f64,
    c_re: f64,
    c_im: f64,
}

#[derive(Serialize)]
struct SolitonRow {
    x: f64,
    t: f64,
    psi_re: f64,
    psi_im: f64,
    abs_psi: f64,
    /// `|dressing − residue|`, the accuracy of `psi`.
    route_diff: f64,
    amplitude_bound: f64,
}

#[derive(Serialize)]
struct AveragedRow {
    x: f64,
    t: f64,
    psi_re: f64,
    psi_im: f64,
    modsq: f64,
    modsq_derivative: f64,
    sie_residual: f64,
    condition: f64,
    /// Distance to the exact disk limit, NaN for other domains.
    disk_error: f64,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.base_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(s: &EnsembleSummary, cfg: &ExperimentConfig) -> Result<ExitCode> {
    for p in write_summary(&cfg.output.dir, s)? {
        println!("wrote {}", p.display());
    }
    for c in &s.checks {
        println!("{}", c.line());
    }
    println!(
        "{} trials failed; run {}; {:.1} s",
        s.failures.len(),
        if s.valid { "valid" } else { "INVALID" },
        s.timings.total_seconds
    );
    Ok(if s.valid {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Cmd::DefaultConfig = cli.cmd {
        println!("{}", ExperimentConfig::default().to_json());
        return Ok(ExitCode::SUCCESS);
    }
    let cfg = load(&cli)?;
    let opts = RunOptions {
        threads: cli.threads,
    };
    let dir = &cfg.output.dir;
    match cli.cmd {
        Cmd::Sample { n, trial } => {
            let seed = trial_seed(cfg.base_seed, n, trial);
            let s = SpectralSample::draw(&cfg.eigenvalue_domain()?, &cfg.interpolant(), n, seed)?;
            let rows: Vec<SampleRow> = s
                .eigenvalues()
                .iter()
                .zip(s.norming_constants())
                .enumerate()
                .map(|(k, (l, c))| SampleRow {
                    k,
                    lambda_re: l.re,
                    lambda_im: l.im,
                    c_re: c.re,
                    c_im: c.im,
                })
                .collect();
            std::fs::create_dir_all(dir)?;
            let p = dir.join("sample.csv");
            write_csv(&p, &rows)?;
            println!("seed {seed}; wrote {}", p.display());
        }
        Cmd::SolitonEval { n, trial } => {
            let seed = trial_seed(cfg.base_seed, n, trial);
            let s = SpectralSample::draw(&cfg.eigenvalue_domain()?, &cfg.interpolant(), n, seed)?;
            let bound = amplitude_bound(&s);
            let rows = cfg
                .points()?
                .into_iter()
                .map(|p| {
                    let a = nsoliton_residue(&s, p.x, p.t)?;
                    let b = nsoliton_dressing(&s, p.x, p.t)?;
                    Ok(SolitonRow {
                        x: p.x,
                        t: p.t,
                        psi_re: a.re,
                        psi_im: a.im,
                        abs_psi: a.norm(),
                        route_diff: (a - b).norm(),
                        amplitude_bound: bound,
                    })
                })
                .collect::<soliton_gas_core::Result<Vec<_>>>()?;
            std::fs::create_dir_all(dir)?;
            let p = dir.join("soliton.csv");
            write_csv(&p, &rows)?;
            println!("seed {seed}; wrote {}", p.display());
        }
        Cmd::SolveAveraged => {
            let domain = cfg.eigenvalue_domain()?;
            let r = cfg.interpolant();
            let jump = JumpField::averaged(&domain, &r, &cfg.grid()?)?;
            let rows = cfg
                .points()?
                .into_iter()
                .map(|p| {
                    let sol = solve_with_dx(&jump, &p)?;
                    let psi = recover_field(&sol);
                    Ok(AveragedRow {
                        x: p.x,
                        t: p.t,
                        psi_re: psi.re,
                        psi_im: psi.im,
                        modsq: psi.norm_sqr(),
                        modsq_derivative: recover_modsq(&sol)?,
                        sie_residual: sol.residual(),
                        condition: sol.condition(),
                        disk_error: disk_limit(&domain, &r, p.x, p.t)
                            .map_or(f64::NAN, |e| (e - psi).norm()),
                    })
                })
                .collect::<soliton_gas_core::Result<Vec<_>>>()?;
            std::fs::create_dir_all(dir)?;
            let p = dir.join("averaged.csv");
            write_csv(&p, &rows)?;
            println!("wrote {}", p.display());
        }
        Cmd::Lln => return report(&run_lln(&cfg, opts)?, &cfg),
        Cmd::Clt => return report(&run_clt(&cfg, opts)?, &cfg),
        Cmd::Corr => return report(&run_corr(&cfg, opts)?, &cfg),
        Cmd::Verify => {
            let rep = run_verify(&cfg)?;
            std::fs::create_dir_all(dir)?;
            let p = dir.join("verify.json");
            write_json(&p, &rep)?;
            for c in &rep.checks {
                println!("{}", c.line());
            }
            println!("wrote {}", p.display());
            return Ok(if rep.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            });
        }
        Cmd::DefaultConfig => unreachable!(),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
