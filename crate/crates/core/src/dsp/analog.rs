//! Analog prototype filters evaluated on the FFT grid.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use num_complex::Complex64;

use super::{spectral, ComplexSignal, DspError, SampledSignal};

/// Bessel (maximally flat delay) low-pass prototype of a given order,
/// normalized so that `|H|² = ½` at the cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct BesselPrototype {
    order: usize,
    /// Reverse Bessel polynomial coefficients, lowest power first.
    coeffs: Vec<f64>,
    /// 3 dB frequency of the delay-normalized polynomial (rad/s).
    w3db: f64,
}

impl BesselPrototype {
    pub fn new(order: usize) -> Result<Self, DspError> {
        if order == 0 {
            return Err(DspError::Argument("Bessel order must be at least 1".into()));
        }
        let n = order;
        let fact = |m: usize| (1..=m).map(|v| v as f64).product::<f64>();
        let coeffs: Vec<f64> = (0..=n)
            .map(|k| fact(2 * n - k) / (2f64.powi((n - k) as i32) * fact(k) * fact(n - k)))
            .collect();
        let mut proto = Self { order, coeffs, w3db: 1.0 };
        let gain_sq = |w: f64| proto.normalized(w).norm_sqr();
        let (mut lo, mut hi) = (0.0, 1.0);
        while gain_sq(hi) > 0.5 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gain_sq(mid) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        proto.w3db = 0.5 * (lo + hi);
        Ok(proto)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `H(jw)` of the delay-normalized prototype.
    fn normalized(&self, w: f64) -> Complex64 {
        let s = Complex64::new(0.0, w);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * s + c;
        }
        Complex64::new(self.coeffs[0], 0.0) / acc
    }

    /// `H(j2πf)` for a filter with 3 dB cutoff `f3db` (Hz).
    pub fn response(&self, f: f64, f3db: f64) -> Complex64 {
        self.normalized(f / f3db * self.w3db)
    }

    /// Response sampled on an `n`-point FFT grid.
    ///
    /// For even `n` the Nyquist bin has no mirror image, so only the real
    /// part of the response is kept there; real inputs then stay real.
    pub fn grid(&self, n: usize, sample_rate: f64, f3db: f64) -> Arc<[Complex64]> {
        let mut h = spectral::sample_response(n, sample_rate, |f| self.response(f, f3db)).to_vec();
        if n % 2 == 0 && n > 0 {
            h[n / 2] = Complex64::new(h[n / 2].re, 0.0);
        }
        h.into()
    }

    /// Group delay `−dφ/dω` (seconds) on a uniform grid over `[0, f3db]`,
    /// from central differences of the unwrapped phase.
    pub fn group_delay_profile(&self, f3db: f64, points: usize) -> Vec<f64> {
        let points = points.max(3);
        let df = f3db / (points - 1) as f64;
        let mut phase = Vec::with_capacity(points);
        let mut prev = 0.0;
        let mut offset = 0.0;
        for i in 0..points {
            let raw = self.response(i as f64 * df, f3db).arg();
            if i > 0 {
                let mut d = raw + offset - prev;
                while d > PI {
                    offset -= 2.0 * PI;
                    d -= 2.0 * PI;
                }
                while d < -PI {
                    offset += 2.0 * PI;
                    d += 2.0 * PI;
                }
            }
            prev = raw + offset;
            phase.push(prev);
        }
        let dw = 2.0 * PI * df;
        (0..points)
            .map(|i| {
                let (a, b, span) = match i {
                    0 => (0, 1, 1.0),
                    i if i == points - 1 => (i - 1, i, 1.0),
                    i => (i - 1, i + 1, 2.0),
                };
                -(phase[b] - phase[a]) / (span * dw)
            })
            .collect()
    }
}

fn check_cutoff(f3db: f64, sample_rate: f64) -> Result<(), DspError> {
    let nyquist = sample_rate / 2.0;
    if !(f3db > 0.0 && f3db < nyquist) {
        return Err(DspError::CutoffAboveNyquist { f3db, nyquist });
    }
    Ok(())
}

/// Apply the analog Bessel prototype to a real signal on its FFT grid.
pub fn bessel_lpf(signal: &SampledSignal, order: usize, f3db: f64) -> Result<SampledSignal, DspError> {
    check_cutoff(f3db, signal.sample_rate())?;
    let proto = BesselPrototype::new(order)?;
    let h = proto.grid(signal.len(), signal.sample_rate(), f3db);
    Ok(signal.with_samples(spectral::filter_real(signal.samples(), &h)))
}

/// Response grid for [`bessel_lpf`], validated against the sample rate.
pub fn bessel_response(
    n: usize,
    sample_rate: f64,
    order: usize,
    f3db: f64,
) -> Result<Arc<[Complex64]>, DspError> {
    check_cutoff(f3db, sample_rate)?;
    Ok(BesselPrototype::new(order)?.grid(n, sample_rate, f3db))
}

/// Mean passband group delay in seconds.
pub fn bessel_group_delay(order: usize, f3db: f64) -> Result<f64, DspError> {
    if !(f3db > 0.0) {
        return Err(DspError::Argument(format!("cutoff {f3db} must be positive")));
    }
    let profile = BesselPrototype::new(order)?.group_delay_profile(f3db, 1001);
    Ok(profile.iter().sum::<f64>() / profile.len() as f64)
}

/// `exp(−ln2/2 · ((f − center)/f3db)^(2·order))`, zero phase.
pub fn super_gaussian_gain(f: f64, center: f64, f3db: f64, order: usize) -> f64 {
    let r = (f - center) / f3db;
    (-LN_2 / 2.0 * r.powi(2 * order as i32)).exp()
}

pub fn super_gaussian_response(
    n: usize,
    sample_rate: f64,
    center: f64,
    f3db: f64,
    order: usize,
) -> Arc<[Complex64]> {
    spectral::sample_response(n, sample_rate, |f| {
        Complex64::new(super_gaussian_gain(f, center, f3db, order), 0.0)
    })
}

/// Super-Gaussian band-pass applied to an optical field.
pub fn super_gaussian_bpf(
    signal: &ComplexSignal,
    center: f64,
    f3db: f64,
    order: usize,
) -> Result<ComplexSignal, DspError> {
    if order == 0 {
        return Err(DspError::Argument("super-Gaussian order must be at least 1".into()));
    }
    let h = super_gaussian_response(signal.len(), signal.sample_rate(), center, f3db, order);
    Ok(signal.with_samples(spectral::filter_complex(signal.samples(), &h)))
}
