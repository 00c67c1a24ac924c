//! Deterministic signal-processing primitives shared by the link models.

pub mod analog;
pub mod fir;
pub mod norm;
pub mod pulse;
pub mod quant;
pub mod resample;
pub mod spectral;

use num_complex::Complex64;
use thiserror::Error;

pub use analog::{bessel_group_delay, bessel_lpf, super_gaussian_bpf, BesselPrototype};
pub use fir::fir_convolve;
pub use norm::{power_normalize, unit_norm_project};
pub use pulse::{rrc_init, rrc_taps};
pub use quant::quantize_uniform;
pub use resample::{downsample, upsample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("invalid sample rate {0} Hz")]
    SampleRate(f64),
    #[error("empty signal")]
    Empty,
    #[error("cutoff {f3db} Hz is not below Nyquist {nyquist} Hz")]
    CutoffAboveNyquist { f3db: f64, nyquist: f64 },
    #[error("filter length {0} is even; pick a span so that span·sps + 1 is odd")]
    EvenLength(usize),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("zero-power signal cannot be normalized")]
    ZeroPower,
    #[error("zero tap vector cannot be projected to unit norm")]
    ZeroNorm,
}

/// A real or complex waveform with its sample rate in Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal<T = f64> {
    samples: Vec<T>,
    sample_rate: f64,
}

pub type ComplexSignal = SampledSignal<Complex64>;

impl<T> SampledSignal<T> {
    pub fn new(samples: Vec<T>, sample_rate: f64) -> Result<Self, DspError> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(DspError::SampleRate(sample_rate));
        }
        if samples.is_empty() {
            return Err(DspError::Empty);
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same rate, new samples; length is kept non-empty by callers.
    pub(crate) fn with_samples<U>(&self, samples: Vec<U>) -> SampledSignal<U> {
        SampledSignal { samples, sample_rate: self.sample_rate }
    }
}

impl SampledSignal<f64> {
    pub fn to_complex(&self) -> ComplexSignal {
        self.with_samples(self.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    pub fn mean_power(&self) -> f64 {
        self.energy() / self.len() as f64
    }
}

impl SampledSignal<Complex64> {
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Real FIR coefficients operating at `sps` samples per symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterTaps {
    coeffs: Vec<f64>,
    sps: usize,
}

impl FilterTaps {
    pub fn new(coeffs: Vec<f64>, sps: usize) -> Result<Self, DspError> {
        if coeffs.len() % 2 == 0 {
            return Err(DspError::EvenLength(coeffs.len()));
        }
        if sps == 0 {
            return Err(DspError::Argument("sps must be at least 1".into()));
        }
        Ok(Self { coeffs, sps })
    }

    /// Unit impulse at the center tap.
    pub fn identity(n_taps: usize, sps: usize) -> Result<Self, DspError> {
        let mut coeffs = vec![0.0; n_taps];
        if n_taps > 0 {
            coeffs[n_taps / 2] = 1.0;
        }
        Self::new(coeffs, sps)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn sps(&self) -> usize {
        self.sps
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}
