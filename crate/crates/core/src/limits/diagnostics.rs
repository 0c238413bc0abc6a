//! Normality diagnostics for standardized statistics.

use serde::{Deserialize, Serialize};

use super::moments::MomentAccumulator;
use super::LimitError;

/// Smallest sample accepted by [`clt_diagnostics`].
pub const MIN_SAMPLES: usize = 100;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityThresholds {
    pub max_abs_skewness: f64,
    pub max_abs_excess_kurtosis: f64,
    /// KS bound is `ks_factor / sqrt(N)`.
    pub ks_factor: f64,
}

impl Default for NormalityThresholds {
    fn default() -> Self {
        NormalityThresholds {
            max_abs_skewness: 0.1,
            max_abs_excess_kurtosis: 0.2,
            ks_factor: 1.5,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltDiagnostics {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Kolmogorov-Smirnov distance to the normal law with the sample's own
    /// mean and variance.
    pub ks: f64,
    /// Set when the sample has zero variance; the other shape fields are
    /// then NaN.
    pub degenerate: bool,
}

impl CltDiagnostics {
    pub fn ks_bound(&self, th: &NormalityThresholds) -> f64 {
        th.ks_factor / (self.count as f64).sqrt()
    }

    pub fn passes(&self, th: &NormalityThresholds) -> bool {
        !self.degenerate
            && self.skewness.abs() < th.max_abs_skewness
            && self.excess_kurtosis.abs() < th.max_abs_excess_kurtosis
            && self.ks < self.ks_bound(th)
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `sup |F_N(x) - Φ(x)|` for already standardized, sorted data.
fn ks_normal_sorted(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn clt_diagnostics(samples: &[f64]) -> Result<CltDiagnostics, LimitError> {
    if samples.len() < MIN_SAMPLES {
        return Err(LimitError::InsufficientSamples(format!(
            "{} samples, at least {MIN_SAMPLES} needed",
            samples.len()
        )));
    }
    let mut acc = MomentAccumulator::new();
    acc.extend(samples.iter().copied());
    let (mean, variance) = (acc.mean(), acc.variance());
    if variance.is_nan() || variance <= 0.0 {
        return Ok(CltDiagnostics {
            count: samples.len(),
            mean,
            variance: 0.0,
            skewness: f64::NAN,
            excess_kurtosis: f64::NAN,
            ks: f64::NAN,
            degenerate: true,
        });
    }
    let sd = variance.sqrt();
    let mut z: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    Ok(CltDiagnostics {
        count: samples.len(),
        mean,
        variance,
        skewness: acc.skewness(),
        excess_kurtosis: acc.excess_kurtosis(),
        ks: ks_normal_sorted(&z),
        degenerate: false,
    })
}

/// Centers and scales `samples` by their own mean and standard deviation.
pub fn standardize(samples: &[f64]) -> Vec<f64> {
    let mut acc = MomentAccumulator::new();
    acc.extend(samples.iter().copied());
    let (m, s) = (acc.mean(), acc.std_dev());
    samples.iter().map(|x| (x - m) / s).collect()
}
