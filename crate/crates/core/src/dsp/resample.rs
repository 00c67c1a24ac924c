use super::{DspError, SampledSignal};

/// Zero-insertion upsampling of a symbol sequence to `sps` samples per
/// symbol; the output rate is `sps · symbol_rate`.
pub fn upsample(symbols: &[f64], sps: usize, symbol_rate: f64) -> Result<SampledSignal, DspError> {
    if sps == 0 {
        return Err(DspError::Argument("sps must be at least 1".into()));
    }
    SampledSignal::new(upsample_vec(symbols, sps), symbol_rate * sps as f64)
}

pub(crate) fn upsample_vec(symbols: &[f64], sps: usize) -> Vec<f64> {
    let mut out = vec![0.0; symbols.len() * sps];
    for (k, s) in symbols.iter().enumerate() {
        out[k * sps] = *s;
    }
    out
}

/// `output[k] = samples[k·factor + offset]`; empty when the signal is
/// shorter than one decimation period.
pub fn downsample(signal: &SampledSignal, factor: usize, offset: usize) -> Result<Vec<f64>, DspError> {
    if factor == 0 || offset >= factor {
        return Err(DspError::Argument(format!(
            "offset {offset} must lie in [0, factor) with factor {factor} ≥ 1"
        )));
    }
    let x = signal.samples();
    if x.len() < factor {
        return Ok(Vec::new());
    }
    Ok(x.iter().skip(offset).step_by(factor).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsample_definition() {
        let s = upsample(&[1.0, -1.0], 4, 1.0).unwrap();
        assert_eq!(s.samples(), &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.sample_rate(), 4.0);
        let id = upsample(&[0.5, 2.0, -3.0], 1, 10.0).unwrap();
        assert_eq!(id.samples(), &[0.5, 2.0, -3.0]);
    }

    #[test]
    fn upsample_preserves_energy() {
        let sym = [0.3, -1.2, 3.0, 1.0];
        let s = upsample(&sym, 8, 1.0).unwrap();
        let e: f64 = sym.iter().map(|x| x * x).sum();
        assert_eq!(s.energy(), e);
    }

    #[test]
    fn downsample_definition_and_round_trip() {
        let ramp = SampledSignal::new((0..12).map(f64::from).collect(), 4.0).unwrap();
        assert_eq!(downsample(&ramp, 4, 2).unwrap(), vec![2.0, 6.0, 10.0]);
        assert_eq!(downsample(&ramp, 1, 0).unwrap(), ramp.samples());
        let sym = vec![1.0, -3.0, 3.0, -1.0];
        let up = upsample(&sym, 4, 1.0).unwrap();
        assert_eq!(downsample(&up, 4, 0).unwrap(), sym);
    }

    #[test]
    fn short_signal_gives_empty_output() {
        let s = SampledSignal::new(vec![1.0, 2.0], 1.0).unwrap();
        assert!(downsample(&s, 4, 0).unwrap().is_empty());
        assert!(downsample(&s, 4, 4).is_err());
    }
}
