//! Experiment configuration: a single JSON document.
//!
//! ```json
//! {
//!   "domain": { "kind": "disk", "center": [0.0, 1.0], "radius": 0.5 },
//!   "interpolant": { "kind": "constant", "a": [2.0, 0.0] },
//!   "contour": { "nodes_per_circle": 128, "clearance": 0.2 },
//!   "n_values": [8, 16, 32, 64, 128],
//!   "trials": 2000,
//!   "base_seed": 20260101,
//!   "spacetime": { "grid": { "x": [-2.0, 2.0], "nx": 5, "t": [0.0, 0.5], "nt": 3 } },
//!   "membership": { "delta": 0.5, "alpha": 1.0 },
//!   "output": { "dir": "out" }
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. `tolerances` may be omitted or
//! given partially.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use soliton_gas_core::contour::ContourGrid;
use soliton_gas_core::spectral::DEFAULT_D_MIN;
use soliton_gas_core::Complex64;
use soliton_gas_core::{EigenvalueDomain, Interpolant, SpacetimePoint};

use crate::error::{LabError, Result};

fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn default_d_min() -> f64 {
    DEFAULT_D_MIN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Disk {
        center: [f64; 2],
        radius: f64,
        #[serde(default = "default_d_min")]
        d_min: f64,
        /// `[radial, angular]` node counts.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quadrature: Option<[usize; 2]>,
    },
    Rectangle {
        x: [f64; 2],
        y: [f64; 2],
        #[serde(default = "default_d_min")]
        d_min: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quadrature: Option<[usize; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InterpolantSpec {
    Constant { a: [f64; 2] },
    Affine { a: [f64; 2], b: [f64; 2] },
    Exponential { a: [f64; 2], b: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSpec {
    pub nodes_per_circle: usize,
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SpacetimeSpec {
    /// Explicit `[x, t]` pairs.
    Points(Vec<[f64; 2]>),
    Grid {
        x: [f64; 2],
        nx: usize,
        t: [f64; 2],
        nt: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembershipSpec {
    pub delta: f64,
    pub alpha: f64,
    /// Mesh constant; `2 d₀` from the derivative bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub two_route: f64,
    pub amplitude_slack: f64,
    pub rh_oracle: f64,
    pub det_jump: f64,
    pub schwarz: f64,
    pub plemelj: f64,
    pub modsq: f64,
    pub pde_residual: f64,
    pub pde_step: f64,
    pub route_equality: f64,
    pub correlation_identity: f64,
    pub slope_band: [f64; 2],
    pub standard_errors: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub max_failure_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            two_route: 1e-8,
            amplitude_slack: 1e-9,
            rh_oracle: 1e-6,
            det_jump: 1e-12,
            schwarz: 1e-9,
            plemelj: 1e-12,
            modsq: 1e-6,
            pde_residual: 1e-4,
            pde_step: 1e-3,
            route_equality: 1e-8,
            correlation_identity: 1e-14,
            slope_band: [-0.65, -0.35],
            standard_errors: 3.0,
            skewness: 0.1,
            excess_kurtosis: 0.2,
            max_failure_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub interpolant: InterpolantSpec,
    pub contour: ContourSpec,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub spacetime: SpacetimeSpec,
    pub membership: MembershipSpec,
    pub output: OutputSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    /// Uniform gas on the disk `|z − i| ≤ 1/2` with `r ≡ 2`.
    fn default() -> Self {
        ExperimentConfig {
            domain: DomainSpec::Disk {
                center: [0.0, 1.0],
                radius: 0.5,
                d_min: DEFAULT_D_MIN,
                quadrature: None,
            },
            interpolant: InterpolantSpec::Constant { a: [2.0, 0.0] },
            contour: ContourSpec {
                nodes_per_circle: 128,
                clearance: 0.2,
            },
            n_values: vec![8, 16, 32, 64, 128],
            trials: 2000,
            base_seed: 20260101,
            spacetime: SpacetimeSpec::Grid {
                x: [-2.0, 2.0],
                nx: 5,
                t: [0.0, 0.5],
                nt: 3,
            },
            membership: MembershipSpec {
                delta: 0.5,
                alpha: 1.0,
                c_tilde: None,
            },
            output: OutputSpec {
                dir: PathBuf::from("out"),
            },
            tolerances: Tolerances::default(),
        }
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(LabError::config(field, format!("{v} is not finite")))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(LabError::config(field, format!("{v} must be positive")))
    }
}

fn linspace(r: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![r[0]];
    }
    (0..n)
        .map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64)
        .collect()
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Git-style blob hash (SHA-256) of the canonical compact JSON.
    pub fn content_hash(&self) -> String {
        let body = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        hex::encode(h.finalize())
    }

    /// Range and positivity checks on every numeric field.
    pub fn validate(&self) -> Result<()> {
        match &self.domain {
            DomainSpec::Disk {
                center,
                radius,
                d_min,
                quadrature,
            } => {
                finite("domain.center", center[0])?;
                finite("domain.center", center[1])?;
                positive("domain.radius", *radius)?;
                positive("domain.d_min", *d_min)?;
                check_quadrature(quadrature)?;
            }
            DomainSpec::Rectangle {
                x,
                y,
                d_min,
                quadrature,
            } => {
                for v in x.iter().chain(y) {
                    finite("domain.x/y", *v)?;
                }
                if x[1] <= x[0] || y[1] <= y[0] {
                    return Err(LabError::config(
                        "domain",
                        "rectangle bounds must be increasing",
                    ));
                }
                positive("domain.d_min", *d_min)?;
                check_quadrature(quadrature)?;
            }
        }
        match &self.interpolant {
            InterpolantSpec::Constant { a } => {
                a.iter().try_for_each(|v| finite("interpolant.a", *v))?
            }
            InterpolantSpec::Affine { a, b } | InterpolantSpec::Exponential { a, b } => {
                a.iter().try_for_each(|v| finite("interpolant.a", *v))?;
                b.iter().try_for_each(|v| finite("interpolant.b", *v))?;
            }
        }
        let n = self.contour.nodes_per_circle;
        if n < 16 || !n.is_power_of_two() {
            return Err(LabError::config(
                "contour.nodes_per_circle",
                format!("{n} must be a power of two ≥ 16"),
            ));
        }
        positive("contour.clearance", self.contour.clearance)?;
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(LabError::config("n_values", "need at least one positive N"));
        }
        if self.trials == 0 {
            return Err(LabError::config("trials", "must be positive"));
        }
        match &self.spacetime {
            SpacetimeSpec::Points(p) => {
                if p.is_empty() {
                    return Err(LabError::config("spacetime.points", "empty"));
                }
                for v in p {
                    finite("spacetime.points", v[0])?;
                    finite("spacetime.points", v[1])?;
                    if v[1] < 0.0 {
                        return Err(LabError::config("spacetime.points", "t must be ≥ 0"));
                    }
                }
            }
            SpacetimeSpec::Grid { x, nx, t, nt } => {
                for v in x.iter().chain(t) {
                    finite("spacetime.grid", *v)?;
                }
                if *nx == 0 || *nt == 0 || x[1] < x[0] || t[1] < t[0] {
                    return Err(LabError::config(
                        "spacetime.grid",
                        "need nx, nt ≥ 1 and ordered ranges",
                    ));
                }
                if t[0] < 0.0 {
                    return Err(LabError::config("spacetime.grid", "t must be ≥ 0"));
                }
            }
        }
        positive("membership.delta", self.membership.delta).or_else(|e| {
            if self.membership.delta == f64::INFINITY {
                Ok(())
            } else {
                Err(e)
            }
        })?;
        let a = self.membership.alpha;
        if !(a > 0.5 && a <= 1.0) {
            return Err(LabError::config(
                "membership.alpha",
                format!("{a} outside (1/2, 1]"),
            ));
        }
        if let Some(ct) = self.membership.c_tilde {
            positive("membership.c_tilde", ct)?;
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("two_route", tol.two_route),
            ("amplitude_slack", tol.amplitude_slack),
            ("rh_oracle", tol.rh_oracle),
            ("det_jump", tol.det_jump),
            ("schwarz", tol.schwarz),
            ("plemelj", tol.plemelj),
            ("modsq", tol.modsq),
            ("pde_residual", tol.pde_residual),
            ("pde_step", tol.pde_step),
            ("route_equality", tol.route_equality),
            ("correlation_identity", tol.correlation_identity),
            ("standard_errors", tol.standard_errors),
            ("skewness", tol.skewness),
            ("excess_kurtosis", tol.excess_kurtosis),
        ] {
            positive(&format!("tolerances.{name}"), v)?;
        }
        if tol.slope_band.iter().any(|v| !v.is_finite()) || tol.slope_band[0] >= tol.slope_band[1] {
            return Err(LabError::config(
                "tolerances.slope_band",
                "lower bound must be below upper",
            ));
        }
        if !(0.0..1.0).contains(&tol.max_failure_fraction) {
            return Err(LabError::config(
                "tolerances.max_failure_fraction",
                "must lie in [0, 1)",
            ));
        }
        self.eigenvalue_domain()?;
        Ok(())
    }

    pub fn eigenvalue_domain(&self) -> Result<EigenvalueDomain> {
        let (d, d_min, q) = match &self.domain {
            DomainSpec::Disk {
                center,
                radius,
                d_min,
                quadrature,
            } => (
                EigenvalueDomain::disk(c(*center), *radius),
                d_min,
                quadrature,
            ),
            DomainSpec::Rectangle {
                x,
                y,
                d_min,
                quadrature,
            } => (
                EigenvalueDomain::rectangle(x[0], x[1], y[0], y[1]),
                d_min,
                quadrature,
            ),
        };
        let mut d = d?.with_d_min(*d_min)?;
        if let Some([n1, n2]) = *q {
            d = d.with_quadrature(n1, n2)?;
        }
        Ok(d)
    }

    pub fn interpolant(&self) -> Interpolant {
        match self.interpolant {
            InterpolantSpec::Constant { a } => Interpolant::Constant(c(a)),
            InterpolantSpec::Affine { a, b } => Interpolant::Affine { a: c(a), b: c(b) },
            InterpolantSpec::Exponential { a, b } => Interpolant::Exponential { a: c(a), b: c(b) },
        }
    }

    /// `γ₊ ∪ γ₋` around the domain. Fails if the circle reaches the real axis.
    pub fn grid(&self) -> Result<ContourGrid> {
        self.grid_with(self.contour.nodes_per_circle)
    }

    pub fn grid_with(&self, nodes_per_circle: usize) -> Result<ContourGrid> {
        Ok(ContourGrid::build(
            &self.eigenvalue_domain()?,
            nodes_per_circle,
            self.contour.clearance,
        )?)
    }

    /// Spacetime points in row-major order (t outer, x inner).
    pub fn points(&self) -> Result<Vec<SpacetimePoint>> {
        let raw: Vec<[f64; 2]> = match &self.spacetime {
            SpacetimeSpec::Points(p) => p.clone(),
            SpacetimeSpec::Grid { x, nx, t, nt } => linspace(*t, *nt)
                .into_iter()
                .flat_map(|tv| linspace(*x, *nx).into_iter().map(move |xv| [xv, tv]))
                .collect(),
        };
        raw.into_iter()
            .map(|[x, t]| SpacetimePoint::new(x, t).map_err(LabError::from))
            .collect()
    }
}

fn check_quadrature(q: &Option<[usize; 2]>) -> Result<()> {
    if let Some([a, b]) = q {
        if *a == 0 || *b == 0 {
            return Err(LabError::config(
                "domain.quadrature",
                "node counts must be positive",
            ));
        }
    }
    Ok(())
}
