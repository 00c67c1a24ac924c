//! Configuration variants, their trainable sets and initial parameters.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::dsp::fir::convolve_same;
use crate::dsp::resample::upsample_vec;
use crate::dsp::rrc_init;
use crate::equalizer::VolterraKernel;
use crate::harness::seed::{stream_seed, Stream};
use crate::link::{draw_pam_symbols_from, LinkConfig, LinkKind, LinkParams, Trainable};

/// Which filters are learned and which equalizer follows the receiver
/// filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "PS")]
    Ps,
    #[serde(rename = "RxF")]
    RxF,
    #[serde(rename = "PS_RxF")]
    PsRxF,
    #[serde(rename = "RRC_FFE")]
    RrcFfe,
    #[serde(rename = "RRC_Volterra")]
    RrcVolterra,
    #[serde(rename = "PS_Volterra")]
    PsVolterra,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::Ps, Variant::RxF, Variant::PsRxF, Variant::RrcFfe, Variant::RrcVolterra, Variant::PsVolterra];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Ps => "PS",
            Variant::RxF => "RxF",
            Variant::PsRxF => "PS_RxF",
            Variant::RrcFfe => "RRC_FFE",
            Variant::RrcVolterra => "RRC_Volterra",
            Variant::PsVolterra => "PS_Volterra",
        }
    }

    pub fn has_volterra(self) -> bool {
        matches!(self, Variant::RrcVolterra | Variant::PsVolterra)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| TrainError::Plan(format!("unknown variant {s:?}")))
    }
}

/// Everything one training run needs beyond the link configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainPlan {
    pub variant: Variant,
    pub n_taps: usize,
    pub n_symbols: usize,
    pub batch_size: usize,
    pub max_lr_filters: f64,
    pub max_lr_scalars: f64,
    pub clip_norm: f64,
    pub seed: u64,
    pub train_g_dac: bool,
    pub train_v_b: bool,
}

impl TrainPlan {
    /// Plan with the hyperparameters of `cfg.training`; IM/DD links learn
    /// the DAC gain and the EAM link also its bias.
    pub fn new(variant: Variant, n_taps: usize, cfg: &LinkConfig, seed: u64) -> Self {
        let t = &cfg.training;
        Self {
            variant,
            n_taps,
            n_symbols: t.n_symbols,
            batch_size: t.batch_size,
            max_lr_filters: t.max_lr_filters,
            max_lr_scalars: t.max_lr_scalars,
            clip_norm: t.clip_norm,
            seed,
            train_g_dac: cfg.kind.is_imdd(),
            train_v_b: cfg.kind == LinkKind::ImddEam,
        }
    }

    pub fn trainable(&self) -> Trainable {
        let v = self.variant;
        Trainable {
            h_p: matches!(v, Variant::Ps | Variant::PsRxF | Variant::PsVolterra),
            h_r: matches!(v, Variant::RxF | Variant::PsRxF),
            ffe: v == Variant::RrcFfe,
            volterra: v.has_volterra(),
            g_dac: self.train_g_dac,
            v_b: self.train_v_b,
        }
    }

    pub fn n_batches(&self) -> usize {
        self.n_symbols / self.batch_size.max(1)
    }

    pub fn validate(&self, cfg: &LinkConfig) -> Result<(), TrainError> {
        if self.n_taps == 0 || self.n_taps % 2 == 0 {
            return Err(TrainError::Plan(format!("filter length {} must be odd", self.n_taps)));
        }
        if self.batch_size == 0 || self.n_batches() == 0 {
            return Err(TrainError::Plan(format!(
                "{} symbols do not fill one batch of {}",
                self.n_symbols, self.batch_size
            )));
        }
        if !(self.clip_norm > 0.0 && self.max_lr_filters > 0.0 && self.max_lr_scalars > 0.0) {
            return Err(TrainError::Plan("learning rates and clip norm must be positive".into()));
        }
        if (self.train_g_dac || self.train_v_b) && !cfg.kind.is_imdd() {
            return Err(TrainError::Plan("DAC parameters are only learned on IM/DD links".into()));
        }
        if self.train_v_b && cfg.kind != LinkKind::ImddEam {
            return Err(TrainError::Plan("the bias is only learned for the EAM".into()));
        }
        Ok(())
    }
}

/// Starting point of a run: RRC filters, identity equalizers, the EAM bias
/// from the configuration and a DAC gain that maps the 99.9th percentile of
/// the pulse-shaped magnitude onto the clip boundary.
pub fn initial_params(plan: &TrainPlan, cfg: &LinkConfig) -> Result<LinkParams, TrainError> {
    plan.validate(cfg)?;
    let t = &cfg.training;
    let sps = cfg.system.sps;
    let rrc = rrc_init(sps, plan.n_taps, t.rrc_rolloff, t.rrc_span_symbols)?.into_coeffs();
    let ffe = (plan.variant == Variant::RrcFfe).then(|| {
        let mut d = vec![0.0; plan.n_taps];
        d[plan.n_taps / 2] = 1.0;
        d
    });
    let volterra = plan.variant.has_volterra().then(|| VolterraKernel::identity(t.volterra_n1, t.volterra_n2));
    let (g_dac, v_b) = match cfg.kind {
        LinkKind::Awgn => (1.0, 0.0),
        LinkKind::ImddIdeal => (dac_gain_for(&rrc, cfg, plan.seed)?, cfg.dac.v_pp_v / 2.0),
        LinkKind::ImddEam => (dac_gain_for(&rrc, cfg, plan.seed)?, cfg.dac.v_b_v),
    };
    Ok(LinkParams { h_p: rrc.clone(), h_r: rrc, ffe, volterra, g_dac, v_b })
}

/// `0.5 / p99.9(|h_p ∗ upsampled symbols|)`.
pub fn dac_gain_for(h_p: &[f64], cfg: &LinkConfig, seed: u64) -> Result<f64, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, Stream::Init));
    let symbols = draw_pam_symbols_from(cfg.system.constellation_order, 10_000, &mut rng)?;
    let x = convolve_same(&upsample_vec(&symbols, cfg.system.sps), h_p);
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let idx = ((mags.len() as f64 * 0.999).ceil() as usize).clamp(1, mags.len()) - 1;
    let p = mags[idx];
    if !(p > 0.0) {
        return Err(TrainError::Plan("pulse-shaped signal is zero".into()));
    }
    Ok(0.5 / p)
}
