//! Sample statistics for ensemble reductions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::statistics::Statistics;

/// Sample mean with its standard error `s/√n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = xs.iter().mean();
    let se = if n > 1 {
        (xs.iter().variance() / n as f64).sqrt()
    } else {
        f64::NAN
    };
    MeanSe { mean, se }
}

/// Unbiased sample variance with the standard error of that estimate,
/// taken from the spread of the squared deviations.
pub fn variance_se(xs: &[f64]) -> MeanSe {
    if xs.len() < 2 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let m = xs.iter().mean();
    let n = xs.len() as f64;
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let s = mean_se(&sq);
    MeanSe {
        mean: s.mean * n / (n - 1.0),
        se: s.se * n / (n - 1.0),
    }
}

fn central_moment(xs: &[f64], k: i32) -> f64 {
    let m = xs.iter().mean();
    xs.iter().map(|x| (x - m).powi(k)).sum::<f64>() / xs.len() as f64
}

pub fn skewness(xs: &[f64]) -> f64 {
    central_moment(xs, 3) / central_moment(xs, 2).powf(1.5)
}

pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m2 = central_moment(xs, 2);
    central_moment(xs, 4) / (m2 * m2) - 3.0
}

/// Kolmogorov–Smirnov distance between the standardized sample and N(0, 1).
pub fn ks_normal(xs: &[f64]) -> f64 {
    let m = xs.iter().mean();
    let s = xs.iter().std_dev();
    let mut z: Vec<f64> = xs.iter().map(|x| (x - m) / s).collect();
    z.sort_by(f64::total_cmp);
    let phi = Normal::standard();
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = phi.cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Critical KS distance at significance 0.01 (Stephens' finite-n form).
pub fn ks_critical(n: usize) -> f64 {
    let r = (n as f64).sqrt();
    1.628 / (r + 0.12 + 0.11 / r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normality {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_statistic: f64,
    pub ks_critical: f64,
    /// Zero-variance sample; the other fields are NaN.
    pub degenerate: bool,
}

impl Normality {
    pub fn passes(&self, skew_tol: f64, kurt_tol: f64) -> bool {
        !self.degenerate
            && self.skewness.abs() <= skew_tol
            && self.excess_kurtosis.abs() <= kurt_tol
            && self.ks_statistic <= self.ks_critical
    }
}

pub fn normality(xs: &[f64]) -> Normality {
    let degenerate = xs.len() < 3 || {
        let m2 = central_moment(xs, 2);
        m2.is_nan() || m2 <= 0.0
    };
    if degenerate {
        return Normality {
            skewness: f64::NAN,
            excess_kurtosis: f64::NAN,
            ks_statistic: f64::NAN,
            ks_critical: f64::NAN,
            degenerate,
        };
    }
    Normality {
        skewness: skewness(xs),
        excess_kurtosis: excess_kurtosis(xs),
        ks_statistic: ks_normal(xs),
        ks_critical: ks_critical(xs.len()),
        degenerate,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub se_slope: f64,
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> LogLogFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().mean();
    let my = ly.iter().mean();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let se_slope = if n > 2.0 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LogLogFit {
        slope,
        intercept,
        se_slope,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn gaussian_sample_passes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let d = normality(&xs);
        assert!(d.passes(0.1, 0.2), "{d:?}");
    }

    #[test]
    fn uniform_sample_fails_kurtosis() {
        let xs: Vec<f64> = (0..4000).map(|i| (i as f64 + 0.5) / 4000.0).collect();
        let d = normality(&xs);
        assert!((d.excess_kurtosis + 1.2).abs() < 1e-3);
        assert!(!d.passes(0.1, 0.2));
    }

    #[test]
    fn constant_sample_is_degenerate() {
        assert!(normality(&[1.0; 10]).degenerate);
    }

    #[test]
    fn exact_power_law_slope() {
        let x = [8.0, 16.0, 32.0, 64.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        let f = loglog_fit(&x, &y);
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.se_slope < 1e-12);
    }

    #[test]
    fn ks_critical_value() {
        assert!((ks_critical(4000) - 1.628 / 63.25).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn mean_se_is_shift_equivariant(xs in prop::collection::vec(-10.0f64..10.0, 2..50), s in -5.0f64..5.0) {
            let a = mean_se(&xs);
            let shifted: Vec<f64> = xs.iter().map(|x| x + s).collect();
            let b = mean_se(&shifted);
            prop_assert!((a.mean + s - b.mean).abs() < 1e-9);
            prop_assert!((a.se - b.se).abs() < 1e-9);
        }
    }
}
