//! Symbol decisions, error-rate estimation and link diagnostics.

pub mod eye;
pub mod isi;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;
use thiserror::Error;

pub use eye::{eye_diagram, eye_opening, EyeDiagram};
pub use isi::{nyquist_isi_metric, IsiMetric};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("alignment failed: correlation peak {peak:.3} below 0.1")]
    AlignmentFailed { peak: f64 },
    #[error("{0}")]
    Argument(String),
}

/// Map each soft value to the nearest level (levels ascending). A value
/// exactly on the midpoint between two levels goes to the smaller one.
pub fn decide(soft: &[f64], levels: &[f64]) -> Vec<f64> {
    if levels.is_empty() {
        return Vec::new();
    }
    let thresholds: Vec<f64> = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    soft.iter()
        .map(|&x| levels[thresholds.partition_point(|&t| t < x)])
        .collect()
}

/// Symbol error count with a 95% Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SerEstimate {
    pub errors: u64,
    pub symbols: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

impl SerEstimate {
    pub fn from_counts(errors: u64, symbols: u64) -> Result<Self, MetricsError> {
        if symbols == 0 {
            return Err(MetricsError::Empty);
        }
        if errors > symbols {
            return Err(MetricsError::Argument(format!("{errors} errors in {symbols} symbols")));
        }
        let (ci_lo, ci_hi) = wilson_interval(errors, symbols, Z95);
        Ok(Self { errors, symbols, rate: errors as f64 / symbols as f64, ci_lo, ci_hi })
    }

    /// Pool the counts of two estimates.
    pub fn merge(&self, other: &SerEstimate) -> SerEstimate {
        Self::from_counts(self.errors + other.errors, self.symbols + other.symbols)
            .expect("pooled counts stay consistent")
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Mean error rate over independent restarts with a 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartEstimate {
    pub restarts: usize,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Aggregate restarts given each run's rate and 95% interval: a Student-t
/// interval over the rates, widened to contain the mean of the per-run
/// intervals so that a set of error-free restarts still carries an upper
/// bound.
pub fn restart_interval(runs: &[(f64, f64, f64)]) -> Result<RestartEstimate, MetricsError> {
    if runs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = runs.len();
    let nf = n as f64;
    let mean = runs.iter().map(|r| r.0).sum::<f64>() / nf;
    let mut lo = runs.iter().map(|r| r.1).sum::<f64>() / nf;
    let mut hi = runs.iter().map(|r| r.2).sum::<f64>() / nf;
    if n > 1 {
        let var = runs.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let t = StudentsT::new(0.0, 1.0, nf - 1.0)
            .map_err(|e| MetricsError::Argument(e.to_string()))?
            .inverse_cdf(0.975);
        let half = t * (var / nf).sqrt();
        lo = lo.min(mean - half);
        hi = hi.max(mean + half);
    }
    Ok(RestartEstimate { restarts: n, mean, ci_lo: lo.max(0.0), ci_hi: hi.min(1.0) })
}

impl SerEstimate {
    /// `(rate, ci_lo, ci_hi)` as consumed by [`restart_interval`].
    pub fn bounds(&self) -> (f64, f64, f64) {
        (self.rate, self.ci_lo, self.ci_hi)
    }
}

/// Fraction of mismatched decisions between aligned sequences.
pub fn ser(decided: &[f64], truth: &[f64]) -> Result<SerEstimate, MetricsError> {
    if decided.len() != truth.len() {
        return Err(MetricsError::Length(decided.len(), truth.len()));
    }
    let errors = decided.iter().zip(truth).filter(|(a, b)| a != b).count() as u64;
    SerEstimate::from_counts(errors, decided.len() as u64)
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Symbol error rate of PAM-`m` over an AWGN channel without band
/// limitation at the given Es/N0.
pub fn theory_ser_pam(m: usize, snr_db: f64) -> f64 {
    let m_f = m as f64;
    let snr = 10f64.powf(snr_db / 10.0);
    2.0 * (m_f - 1.0) / m_f * q_function((6.0 / (m_f * m_f - 1.0) * snr).sqrt())
}

/// SNR (dB) at which [`theory_ser_pam`] equals `rate`, by bisection.
pub fn theory_snr_for_ser(m: usize, rate: f64) -> f64 {
    let (mut lo, mut hi) = (-20.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if theory_ser_pam(m, mid) > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// KP4 forward-error-correction limit expressed as a PAM-4 symbol error rate.
pub fn kp4_threshold() -> f64 {
    4.0f64.log2() * 2.4e-4
}

/// Lag `L` in `[−max_lag, max_lag]` maximizing the magnitude of the
/// normalized correlation between `x_hat[k]` and `x[k − L]`.
pub fn estimate_delay(x_hat: &[f64], x: &[f64], max_lag: usize) -> Result<isize, MetricsError> {
    const MIN_OVERLAP: usize = 100;
    let mut best: Option<(isize, f64)> = None;
    let max_lag = max_lag as isize;
    for lag in -max_lag..=max_lag {
        // pairs (k, k − lag) with both indices in range
        let k0 = lag.max(0) as usize;
        let k1 = (x_hat.len() as isize).min(x.len() as isize + lag).max(0) as usize;
        if k1 <= k0 || k1 - k0 < MIN_OVERLAP {
            continue;
        }
        let (mut cross, mut ea, mut eb) = (0.0, 0.0, 0.0);
        for k in k0..k1 {
            let a = x_hat[k];
            let b = x[(k as isize - lag) as usize];
            cross += a * b;
            ea += a * a;
            eb += b * b;
        }
        let rho = if ea > 0.0 && eb > 0.0 { (cross / (ea * eb).sqrt()).abs() } else { 0.0 };
        if best.is_none_or(|(_, r)| rho > r) {
            best = Some((lag, rho));
        }
    }
    let (lag, peak) = best.ok_or(MetricsError::Argument(format!(
        "no lag within ±{max_lag} overlaps by {MIN_OVERLAP} samples"
    )))?;
    if peak < 0.1 {
        return Err(MetricsError::AlignmentFailed { peak });
    }
    Ok(lag)
}

/// Drop the unmatched ends of two sequences related by `x_hat[k] ≈ x[k − lag]`.
pub fn apply_lag<'a>(x_hat: &'a [f64], x: &'a [f64], lag: isize) -> (&'a [f64], &'a [f64]) {
    let (a, b) = if lag >= 0 {
        (&x_hat[(lag as usize).min(x_hat.len())..], x)
    } else {
        (x_hat, &x[((-lag) as usize).min(x.len())..])
    };
    let n = a.len().min(b.len());
    (&a[..n], &b[..n])
}
