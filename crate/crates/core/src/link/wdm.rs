//! Wavelength multiplexing of identically processed channels and
//! selection of the middle channel.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::LinkError;
use crate::dsp::analog::super_gaussian_response;
use crate::dsp::{spectral, ComplexSignal};

/// Frequency offsets for `n` channels listed from lowest to highest
/// carrier, the middle one at 0 Hz.
pub fn wdm_offsets(n: usize, spacing_hz: f64) -> Vec<f64> {
    let mid = (n / 2) as f64;
    (0..n).map(|k| (k as f64 - mid) * spacing_hz).collect()
}

/// Offset of the `c`-th channel when channels are listed with the channel
/// of interest first, then neighbours in growing distance (−f₀, +f₀,
/// −2f₀, +2f₀, …).
pub fn interest_first_offset(c: usize, spacing_hz: f64) -> f64 {
    if c == 0 {
        return 0.0;
    }
    let ring = c.div_ceil(2) as f64;
    if c % 2 == 1 {
        -ring * spacing_hz
    } else {
        ring * spacing_hz
    }
}

/// `exp(j·2π·offset·n/fs)` for `n` samples.
pub fn carrier(n: usize, sample_rate: f64, offset_hz: f64) -> Arc<[Complex64]> {
    let w = 2.0 * PI * offset_hz / sample_rate;
    (0..n).map(|i| Complex64::from_polar(1.0, w * i as f64)).collect()
}

/// Sum of the channel fields shifted to their carriers; the list runs from
/// lowest to highest carrier with the middle entry at 0 Hz.
pub fn wdm_multiplex(channels: &[ComplexSignal], spacing_hz: f64) -> Result<ComplexSignal, LinkError> {
    let first = channels.first().ok_or_else(|| LinkError::Config("no WDM channels".into()))?;
    if channels.len() % 2 == 0 {
        return Err(LinkError::Config(format!("{} WDM channels; need an odd count", channels.len())));
    }
    let (n, fs) = (first.len(), first.sample_rate());
    if channels.iter().any(|c| c.len() != n || c.sample_rate() != fs) {
        return Err(LinkError::Config("WDM channels differ in length or rate".into()));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (ch, off) in channels.iter().zip(wdm_offsets(channels.len(), spacing_hz)) {
        let c = carrier(n, fs, off);
        for ((o, e), z) in out.iter_mut().zip(ch.samples()).zip(c.iter()) {
            *o += e * z;
        }
    }
    Ok(first.with_samples(out))
}

/// Zero-phase super-Gaussian selection of the channel at 0 Hz.
pub fn wdm_select(field: &ComplexSignal, f3db: f64, order: usize) -> ComplexSignal {
    let h = super_gaussian_response(field.len(), field.sample_rate(), 0.0, f3db, order);
    field.with_samples(spectral::filter_complex(field.samples(), &h))
}
