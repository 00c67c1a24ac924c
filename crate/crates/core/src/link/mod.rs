//! Forward models of the simulated links and their physical blocks.

pub mod chain;
pub mod config;
pub mod noise;
pub mod optics;
pub mod spline;
pub mod symbols;
pub mod wdm;

use thiserror::Error;

use crate::dsp::DspError;
use crate::grad::GradError;

pub use chain::{
    awgn_link_forward, imdd_link_forward, ForwardOptions, ForwardOutput, LinkModel, LinkParams, ParamVars,
    Trainable,
};
pub use config::{LinkConfig, LinkKind};
pub use noise::{GaussianNoise, NoiseRecorder, NoiseReplay, NoiseSource, Silent};
pub use optics::{
    adc, awgn_noise_scale, dac, eam_mod, fiber_cd, ideal_mod, photodiode, photodiode_variances, ssfm, Mode,
    SsfmParams,
};
pub use spline::{absorption, AbsorptionSpline, AbsorptionTable};
pub use symbols::{draw_pam_symbols, draw_pam_symbols_from, pam_levels};
pub use wdm::{wdm_multiplex, wdm_select};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("physical model: {0}")]
    Physics(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Grad(#[from] GradError),
}
