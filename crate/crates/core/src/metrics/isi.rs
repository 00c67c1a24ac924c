//! Folded-spectrum zero-ISI diagnostic.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::MetricsError;
use crate::dsp::spectral;

/// Folded total response `B(f) = Σ_m H(f + m·R_s)` over one symbol-rate
/// interval and its flatness.
#[derive(Clone, Debug, PartialEq)]
pub struct IsiMetric {
    /// Frequencies of the folded bins in `[0, R_s)`.
    pub freqs_hz: Vec<f64>,
    pub folded: Vec<Complex64>,
    /// `sqrt(mean |B − mean B|²) / mean |B|`; zero for a Nyquist system.
    pub flatness: f64,
}

/// Bins per symbol-rate interval on the evaluation grid.
const FOLD_BINS: usize = 512;

/// Fold the total response of pulse shaper, analog front ends and receiver
/// filter. `analog` holds continuous responses evaluated on the grid of
/// `sps · 512` bins at `sps · symbol_rate`. The integer-sample delay at the
/// peak of the total impulse response is removed before folding.
pub fn nyquist_isi_metric(
    h_p: &[f64],
    h_r: &[f64],
    analog: &[&dyn Fn(f64) -> Complex64],
    sps: usize,
    symbol_rate: f64,
) -> Result<IsiMetric, MetricsError> {
    if h_p.is_empty() || h_r.is_empty() {
        return Err(MetricsError::Empty);
    }
    if sps == 0 || !(symbol_rate > 0.0) {
        return Err(MetricsError::Argument("sps and symbol rate must be positive".into()));
    }
    let bins = FOLD_BINS.max((h_p.len() + h_r.len()).div_ceil(sps) * 2);
    let n = sps * bins;
    let fs = sps as f64 * symbol_rate;
    let mut h = centered_spectrum(h_p, n);
    for (a, b) in h.iter_mut().zip(centered_spectrum(h_r, n)) {
        *a *= b;
    }
    for (a, f) in h.iter_mut().zip(spectral::frequency_grid(n, fs)) {
        for resp in analog {
            *a *= resp(f);
        }
    }
    let mut impulse = h.clone();
    spectral::ifft(&mut impulse);
    let peak = impulse
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    for (k, a) in h.iter_mut().enumerate() {
        *a *= Complex64::from_polar(1.0, 2.0 * PI * (k * peak % n) as f64 / n as f64);
    }
    let folded: Vec<Complex64> = (0..bins).map(|k| (0..sps).map(|m| h[k + m * bins]).sum()).collect();
    let mean = folded.iter().sum::<Complex64>() / bins as f64;
    let spread = (folded.iter().map(|b| (b - mean).norm_sqr()).sum::<f64>() / bins as f64).sqrt();
    let level = folded.iter().map(|b| b.norm()).sum::<f64>() / bins as f64;
    if !(level > 0.0) {
        return Err(MetricsError::Argument("total response is zero".into()));
    }
    let df = symbol_rate / bins as f64;
    Ok(IsiMetric { freqs_hz: (0..bins).map(|k| k as f64 * df).collect(), folded, flatness: spread / level })
}

/// DFT of a same-mode FIR with its centre tap at time zero.
fn centered_spectrum(taps: &[f64], n: usize) -> Vec<Complex64> {
    let c = (taps.len() - 1) / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, &t) in taps.iter().enumerate() {
        let idx = (i as isize - c as isize).rem_euclid(n as isize) as usize;
        buf[idx] += t;
    }
    spectral::fft(&mut buf);
    buf
}
