use super::{DspError, FilterTaps, SampledSignal};

/// Scale so that `mean(|x|²) = target_power`.
pub fn power_normalize(signal: &SampledSignal, target_power: f64) -> Result<SampledSignal, DspError> {
    let p = signal.mean_power();
    if !(p > 0.0) {
        return Err(DspError::ZeroPower);
    }
    let k = (target_power / p).sqrt();
    Ok(signal.with_samples(signal.samples().iter().map(|x| x * k).collect()))
}

pub fn unit_norm_project(taps: &FilterTaps) -> Result<FilterTaps, DspError> {
    let norm = taps.norm();
    if !(norm > 0.0) {
        return Err(DspError::ZeroNorm);
    }
    FilterTaps::new(taps.coeffs().iter().map(|c| c / norm).collect(), taps.sps())
}

/// In-place projection used by the trainer.
pub(crate) fn project_unit_norm(coeffs: &mut [f64]) -> Result<(), DspError> {
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(DspError::ZeroNorm);
    }
    coeffs.iter_mut().for_each(|c| *c /= norm);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pam4_target_power() {
        let levels = [-3.0, -1.0, 1.0, 3.0];
        let p = levels.iter().map(|x: &f64| x * x).sum::<f64>() / 4.0;
        assert_eq!(p, 5.0);
        let sig = SampledSignal::new(levels.to_vec(), 1.0).unwrap();
        let out = power_normalize(&sig, 5.0).unwrap();
        assert_eq!(out.samples(), &levels);
    }

    #[test]
    fn scale_invariant() {
        let x = vec![0.5, -1.5, 2.0, 0.1];
        let a = power_normalize(&SampledSignal::new(x.clone(), 1.0).unwrap(), 1.0).unwrap();
        let b = power_normalize(&SampledSignal::new(x.iter().map(|v| v * 7.0).collect(), 1.0).unwrap(), 1.0)
            .unwrap();
        for (u, v) in a.samples().iter().zip(b.samples()) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_power_is_an_error() {
        let z = SampledSignal::new(vec![0.0; 4], 1.0).unwrap();
        assert_eq!(power_normalize(&z, 1.0), Err(DspError::ZeroPower));
    }

    #[test]
    fn projection() {
        let t = FilterTaps::new(vec![3.0, 4.0, 0.0], 1).unwrap();
        let p = unit_norm_project(&t).unwrap();
        assert_eq!(p.coeffs(), &[0.6, 0.8, 0.0]);
        assert_eq!(unit_norm_project(&p).unwrap(), p);
        assert!((p.norm() - 1.0).abs() < 1e-12);
        let z = FilterTaps::new(vec![0.0; 3], 1).unwrap();
        assert_eq!(unit_norm_project(&z), Err(DspError::ZeroNorm));
    }
}
