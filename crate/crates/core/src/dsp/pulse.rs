use std::f64::consts::PI;

use super::{DspError, FilterTaps};

/// Root-raised-cosine taps spanning `span` symbols at `sps` samples per
/// symbol, unit L2 norm, `span·sps + 1` taps.
pub fn rrc_taps(sps: usize, span: usize, rolloff: f64) -> Result<FilterTaps, DspError> {
    if sps == 0 {
        return Err(DspError::Argument("sps must be at least 1".into()));
    }
    if span < 2 {
        return Err(DspError::Argument(format!("span {span} must be at least 2 symbols")));
    }
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(DspError::Argument(format!("rolloff {rolloff} outside [0, 1]")));
    }
    let n = span * sps + 1;
    if n % 2 == 0 {
        return Err(DspError::EvenLength(n));
    }
    let center = (n / 2) as f64;
    let mut coeffs: Vec<f64> =
        (0..n).map(|i| rrc_value((i as f64 - center) / sps as f64, rolloff)).collect();
    // Enforce exact symmetry against rounding in the closed form.
    for i in 0..n / 2 {
        let avg = 0.5 * (coeffs[i] + coeffs[n - 1 - i]);
        coeffs[i] = avg;
        coeffs[n - 1 - i] = avg;
    }
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    coeffs.iter_mut().for_each(|c| *c /= norm);
    FilterTaps::new(coeffs, sps)
}

/// RRC impulse response at `t` symbol periods (unnormalized, T = 1).
fn rrc_value(t: f64, rho: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - rho + 4.0 * rho / PI;
    }
    if rho > 0.0 && (t.abs() - 1.0 / (4.0 * rho)).abs() < 1e-9 {
        let a = PI / (4.0 * rho);
        return rho / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - rho)).sin() + 4.0 * rho * t * (PI * t * (1.0 + rho)).cos();
    let den = PI * t * (1.0 - (4.0 * rho * t).powi(2));
    num / den
}

/// RRC initialization for an `n_taps` filter: a `span`-symbol RRC (or a
/// longer one when `n_taps` exceeds it) cropped around its center and
/// renormalized.
pub fn rrc_init(sps: usize, n_taps: usize, rolloff: f64, span: usize) -> Result<FilterTaps, DspError> {
    if n_taps % 2 == 0 {
        return Err(DspError::EvenLength(n_taps));
    }
    let mut span = span.max(2);
    while span * sps + 1 < n_taps || (span * sps + 1) % 2 == 0 {
        span += 1;
    }
    let full = rrc_taps(sps, span, rolloff)?;
    let start = (full.len() - n_taps) / 2;
    let mut coeffs = full.coeffs()[start..start + n_taps].to_vec();
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    coeffs.iter_mut().for_each(|c| *c /= norm);
    FilterTaps::new(coeffs, sps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::fir::convolve_same;

    fn sinc(x: f64) -> f64 {
        if x == 0.0 {
            1.0
        } else {
            (PI * x).sin() / (PI * x)
        }
    }

    #[test]
    fn zero_rolloff_is_normalized_sinc() {
        let taps = rrc_taps(4, 10, 0.0).unwrap();
        let raw: Vec<f64> = (0..41).map(|i| sinc((i as f64 - 20.0) / 4.0)).collect();
        let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
        for (a, b) in taps.coeffs().iter().zip(&raw) {
            assert!((a - b / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_and_unit_energy() {
        for (sps, span, rho) in [(4, 24, 0.01), (8, 16, 0.35), (2, 6, 1.0), (3, 4, 0.25)] {
            let taps = rrc_taps(sps, span, rho).unwrap();
            let c = taps.coeffs();
            let n = c.len();
            assert_eq!(n, span * sps + 1);
            for i in 0..n {
                assert_eq!(c[i], c[n - 1 - i]);
            }
            let (argmax, _) = c
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            assert_eq!(argmax, n / 2);
            assert!((taps.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_points_use_limits() {
        for rho in [0.25, 0.5, 1.0] {
            let ts = 1.0 / (4.0 * rho);
            for t in [ts, -ts] {
                let at = rrc_value(t, rho);
                let left = rrc_value(t - 1e-6, rho);
                let right = rrc_value(t + 1e-6, rho);
                assert!((at - left).abs() < 1e-5 && (at - right).abs() < 1e-5, "rho {rho}: {left} {at} {right}");
            }
            assert!((rrc_value(1e-7, rho) - rrc_value(0.0, rho)).abs() < 1e-6);
        }
    }

    #[test]
    fn odd_sps_and_odd_span_is_rejected() {
        assert_eq!(rrc_taps(3, 3, 0.1), Err(DspError::EvenLength(10)));
    }

    #[test]
    fn raised_cosine_nyquist_residue() {
        let (sps, span) = (4, 24);
        let taps = rrc_taps(sps, span, 0.01).unwrap();
        let c = taps.coeffs();
        let mut x = vec![0.0; 2 * c.len() + 1];
        let mid = c.len();
        x[mid] = 1.0;
        let once = convolve_same(&x, c);
        let twice = convolve_same(&once, c);
        assert!((twice[mid] - 1.0).abs() < 1e-12);
        // Lags strictly inside the half span; at ±span/2 the truncated
        // pulses overlap in a single sample and the residue is 0.038.
        for k in 1..span / 2 {
            let (a, b) = (twice[mid + k * sps], twice[mid - k * sps]);
            assert!(a.abs() <= 2e-2 && b.abs() <= 2e-2, "ISI {a} at lag {k}");
        }
        let edge = twice[mid + span / 2 * sps];
        assert!((edge.abs() - 0.037968).abs() < 1e-5, "edge residue {edge}");
    }

    #[test]
    fn init_crops_long_rrc() {
        let t = rrc_init(4, 15, 0.01, 24).unwrap();
        assert_eq!(t.len(), 15);
        assert!((t.norm() - 1.0).abs() < 1e-12);
        let long = rrc_init(8, 301, 0.01, 24).unwrap();
        assert_eq!(long.len(), 301);
    }
}
