use super::{DspError, FilterTaps, SampledSignal};

/// Full linear convolution of length `x.len() + h.len() − 1`.
pub fn convolve_full(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![0.0; x.len() + h.len() - 1];
    for (i, a) in x.iter().enumerate() {
        for (j, b) in h.iter().enumerate() {
            y[i + j] += a * b;
        }
    }
    y
}

/// "Same" convolution centered on the middle tap, zero padded:
/// `y[n] = Σ_k h[k]·x[n − k + c]`, `c = (len(h) − 1)/2`.
pub fn convolve_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    let c = (h.len().saturating_sub(1) / 2) as isize;
    let mut y = vec![0.0; n];
    for (k, &hk) in h.iter().enumerate() {
        if hk == 0.0 {
            continue;
        }
        let shift = c - k as isize;
        // y[i] += hk * x[i + shift]
        let lo = (-shift).max(0) as usize;
        let hi = (n as isize - shift).min(n as isize).max(0) as usize;
        for i in lo..hi {
            y[i] += hk * x[(i as isize + shift) as usize];
        }
    }
    y
}

/// Adjoint of [`convolve_same`] with respect to the signal.
pub fn convolve_same_adjoint(gy: &[f64], h: &[f64]) -> Vec<f64> {
    let n = gy.len();
    let c = (h.len().saturating_sub(1) / 2) as isize;
    let mut gx = vec![0.0; n];
    for (k, &hk) in h.iter().enumerate() {
        if hk == 0.0 {
            continue;
        }
        let shift = c - k as isize;
        let lo = (-shift).max(0) as usize;
        let hi = (n as isize - shift).min(n as isize).max(0) as usize;
        for i in lo..hi {
            gx[(i as isize + shift) as usize] += hk * gy[i];
        }
    }
    gx
}

/// Adjoint of [`convolve_same`] with respect to the taps.
pub fn taps_adjoint(gy: &[f64], x: &[f64], n_taps: usize) -> Vec<f64> {
    let n = x.len();
    let c = (n_taps.saturating_sub(1) / 2) as isize;
    (0..n_taps)
        .map(|k| {
            let shift = c - k as isize;
            let lo = (-shift).max(0) as usize;
            let hi = (n as isize - shift).min(n as isize).max(0) as usize;
            (lo..hi).map(|i| gy[i] * x[(i as isize + shift) as usize]).sum()
        })
        .collect()
}

pub fn fir_convolve(signal: &SampledSignal, taps: &FilterTaps) -> Result<SampledSignal, DspError> {
    if taps.is_empty() {
        return Err(DspError::Argument("empty tap vector".into()));
    }
    Ok(signal.with_samples(convolve_same(signal.samples(), taps.coeffs())))
}
