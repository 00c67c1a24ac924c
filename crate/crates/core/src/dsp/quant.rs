use super::{DspError, SampledSignal};

/// Clip to `[lo, hi]` and round to the nearest of `2^bits` uniformly
/// spaced levels that include both endpoints.
pub fn quantize_uniform(signal: &SampledSignal, bits: u32, lo: f64, hi: f64) -> Result<SampledSignal, DspError> {
    Ok(signal.with_samples(quantize_slice(signal.samples(), bits, lo, hi)?))
}

pub(crate) fn quantize_slice(x: &[f64], bits: u32, lo: f64, hi: f64) -> Result<Vec<f64>, DspError> {
    if !(lo < hi) {
        return Err(DspError::Argument(format!("quantizer range [{lo}, {hi}] is empty")));
    }
    if bits == 0 || bits > 52 {
        return Err(DspError::Argument(format!("unsupported bit depth {bits}")));
    }
    let steps = ((1u64 << bits) - 1) as f64;
    let step = (hi - lo) / steps;
    Ok(x
        .iter()
        .map(|&v| {
            let idx = ((v.clamp(lo, hi) - lo) / step).round().clamp(0.0, steps);
            if idx == steps {
                hi
            } else {
                lo + idx * step
            }
        })
        .collect())
}
