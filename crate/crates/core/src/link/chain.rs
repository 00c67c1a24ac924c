//! Tape-recorded forward models of the AWGN and IM/DD links.

use std::sync::Arc;

use super::config::{LinkConfig, LinkKind};
use super::noise::NoiseSource;
use super::optics::{
    adc_on_tape, add_scaled_noise, awgn_variance_factor, dac_on_tape, eam_mod_on_tape, fiber_cd_response,
    ideal_mod_on_tape, photodiode_on_tape, ssfm_samples, straight_through, Mode, SsfmParams,
};
use super::spline::AbsorptionSpline;
use super::wdm::{carrier, interest_first_offset};
use super::LinkError;
use crate::dsp::analog::{bessel_group_delay, bessel_response, super_gaussian_response};
use crate::dsp::resample::upsample_vec;
use crate::equalizer::VolterraKernel;
use crate::grad::{Tape, Value, Var};

/// Filter, equalizer and DAC settings of one transceiver pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkParams {
    pub h_p: Vec<f64>,
    pub h_r: Vec<f64>,
    pub ffe: Option<Vec<f64>>,
    pub volterra: Option<VolterraKernel>,
    pub g_dac: f64,
    pub v_b: f64,
}

/// Which parameters enter the tape as trainable leaves.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Trainable {
    pub h_p: bool,
    pub h_r: bool,
    pub ffe: bool,
    pub volterra: bool,
    pub g_dac: bool,
    pub v_b: bool,
}

/// Tape handles of the link parameters.
#[derive(Clone, Copy, Debug)]
pub struct ParamVars {
    pub h_p: Var,
    pub h_r: Var,
    pub ffe: Option<Var>,
    /// `(k1, k2, n2)`
    pub volterra: Option<(Var, Var, usize)>,
    pub g_dac: Var,
    pub v_b: Var,
}

impl ParamVars {
    /// Record the parameters on `tape`, trainable ones as parameter leaves
    /// and the rest as constants.
    pub fn place(tape: &mut Tape, params: &LinkParams, trainable: Trainable) -> Self {
        let mut leaf = |v: &[f64], train: bool| if train { tape.param(v) } else { tape.constant(v.to_vec()) };
        let h_p = leaf(&params.h_p, trainable.h_p);
        let h_r = leaf(&params.h_r, trainable.h_r);
        let ffe = params.ffe.as_ref().map(|f| leaf(f, trainable.ffe));
        let volterra = params.volterra.as_ref().map(|k| {
            (leaf(&k.k1, trainable.volterra), leaf(&k.k2, trainable.volterra), k.n2())
        });
        let g_dac = leaf(&[params.g_dac], trainable.g_dac);
        let v_b = leaf(&[params.v_b], trainable.v_b);
        Self { h_p, h_r, ffe, volterra, g_dac, v_b }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForwardOptions {
    pub mode: Mode,
    /// Replace the linear fiber by the split-step model (evaluation only;
    /// gradients follow the linear fiber).
    pub nonlinear_fiber: bool,
}

impl ForwardOptions {
    pub fn train() -> Self {
        Self { mode: Mode::Train, nonlinear_fiber: false }
    }

    pub fn eval() -> Self {
        Self { mode: Mode::Eval, nonlinear_fiber: false }
    }
}

#[derive(Clone, Debug)]
pub struct ForwardOutput {
    /// Delay-aligned, edge-trimmed, unit-power soft symbols.
    pub soft: Var,
    /// Transmitted symbols of the channel of interest matching `soft`.
    pub targets: Arc<[f64]>,
    /// Oversampled receiver output just before downsampling.
    pub rx: Var,
    /// Alignment delay in samples.
    pub delay: usize,
    /// Symbols dropped at each block edge.
    pub edge: usize,
    /// Modulator inputs clamped to the model's domain.
    pub clamped: usize,
}

/// Link of a given configuration, ready to run forward passes.
#[derive(Clone, Debug)]
pub struct LinkModel {
    cfg: LinkConfig,
    spline: Option<AbsorptionSpline>,
}

impl LinkModel {
    pub fn new(cfg: LinkConfig) -> Result<Self, LinkError> {
        cfg.validate()?;
        let spline = match cfg.kind {
            LinkKind::ImddEam => Some(cfg.modulator.absorption.spline()?),
            _ => None,
        };
        Ok(Self { cfg, spline })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn n_channels(&self) -> usize {
        self.cfg.wdm.n_channels
    }

    /// Integer-sample delay of the converter filters, from their mean
    /// passband group delay.
    pub fn delay_samples(&self) -> Result<usize, LinkError> {
        let c = &self.cfg;
        if c.kind == LinkKind::Awgn && !c.awgn.bandlimit {
            return Ok(0);
        }
        let tau = bessel_group_delay(c.dac.bessel_order, c.dac.f3db_ghz * 1e9)?
            + bessel_group_delay(c.adc.bessel_order, c.adc.f3db_ghz * 1e9)?;
        Ok((tau * c.sample_rate()).round() as usize)
    }

    /// Run the link on one block. `symbols[0]` is the channel of interest;
    /// further entries drive the interferers and must number
    /// `n_channels − 1`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParamVars,
        symbols: &[Vec<f64>],
        noise: &mut dyn NoiseSource,
        opts: ForwardOptions,
    ) -> Result<ForwardOutput, LinkError> {
        self.check_symbols(symbols)?;
        let (r, clamped) = match self.cfg.kind {
            LinkKind::Awgn => (self.awgn_front(tape, params, symbols, noise)?, 0),
            _ => self.imdd_front(tape, params, symbols, noise, opts)?,
        };
        self.receive(tape, params, r, &symbols[0], clamped)
    }

    fn check_symbols(&self, symbols: &[Vec<f64>]) -> Result<(), LinkError> {
        if symbols.len() != self.n_channels() {
            return Err(LinkError::Config(format!(
                "{} symbol streams for {} channels",
                symbols.len(),
                self.n_channels()
            )));
        }
        let n = symbols[0].len();
        if symbols.iter().any(|s| s.len() != n) {
            return Err(LinkError::Config("symbol streams differ in length".into()));
        }
        let edge = self.cfg.training.edge_symbols;
        if n <= 2 * edge {
            return Err(LinkError::Config(format!("{n} symbols leave nothing after trimming {edge} per edge")));
        }
        Ok(())
    }

    fn pulse_shape(&self, tape: &mut Tape, params: &ParamVars, symbols: &[f64]) -> Result<Var, LinkError> {
        let u = tape.constant(upsample_vec(symbols, self.cfg.system.sps));
        Ok(tape.fir(u, params.h_p)?)
    }

    fn multiplex(&self, tape: &mut Tape, fields: &[Var]) -> Result<Var, LinkError> {
        let n = tape.len_of(fields[0]);
        let fs = self.cfg.sample_rate();
        let spacing = self.cfg.wdm.spacing_ghz * 1e9;
        let shifted = fields
            .iter()
            .enumerate()
            .map(|(c, &f)| tape.mul_const(f, carrier(n, fs, interest_first_offset(c, spacing))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(tape.sum(&shifted)?)
    }

    fn select(&self, tape: &mut Tape, field: Var, f3db_ghz: f64) -> Result<Var, LinkError> {
        let n = tape.len_of(field);
        let h = super_gaussian_response(n, self.cfg.sample_rate(), 0.0, f3db_ghz * 1e9, self.cfg.wdm.select_order);
        Ok(tape.spectral(field, h)?)
    }

    fn awgn_front(
        &self,
        tape: &mut Tape,
        params: &ParamVars,
        symbols: &[Vec<f64>],
        noise: &mut dyn NoiseSource,
    ) -> Result<Var, LinkError> {
        let c = &self.cfg;
        let (sps, fs) = (c.system.sps, c.sample_rate());
        let len = symbols[0].len() * sps;
        let (dac_h, adc_h) = if c.awgn.bandlimit {
            (
                Some(bessel_response(len, fs, c.dac.bessel_order, c.dac.f3db_ghz * 1e9)?),
                Some(bessel_response(len, fs, c.adc.bessel_order, c.adc.f3db_ghz * 1e9)?),
            )
        } else {
            (None, None)
        };
        let mut tx = Vec::with_capacity(symbols.len());
        for s in symbols {
            let mut x = self.pulse_shape(tape, params, s)?;
            if let Some(h) = &dac_h {
                x = tape.spectral(x, h.clone())?;
            }
            tx.push(x);
        }
        // Noise level follows the power of the channel of interest at the
        // injection point.
        let energy = tape.dot(tx[0], tx[0])?;
        let power = tape.scale(energy, 1.0 / len as f64)?;
        let k = awgn_variance_factor(c.awgn.snr_db, sps);
        let mut r = if symbols.len() == 1 {
            if k > 0.0 {
                add_scaled_noise(tape, tx[0], power, 0.0, k, noise)?
            } else {
                tx[0]
            }
        } else {
            let mut field = self.multiplex(tape, &tx)?;
            if k > 0.0 {
                field = add_scaled_noise(tape, field, power, 0.0, k, noise)?;
            }
            let sel = self.select(tape, field, c.wdm.select_f3db_ghz)?;
            tape.real_part(sel)?
        };
        if let Some(h) = adc_h {
            r = tape.spectral(r, h)?;
        }
        Ok(r)
    }

    fn imdd_front(
        &self,
        tape: &mut Tape,
        params: &ParamVars,
        symbols: &[Vec<f64>],
        noise: &mut dyn NoiseSource,
        opts: ForwardOptions,
    ) -> Result<(Var, usize), LinkError> {
        let c = &self.cfg;
        let fs = c.sample_rate();
        let p_in = c.laser_power_w();
        // The ideal modulator is biased to the centre of [0, v_pp].
        let v_b = match c.kind {
            LinkKind::ImddIdeal => tape.constant(vec![c.dac.v_pp_v / 2.0]),
            _ => params.v_b,
        };
        let mut clamped = 0;
        let mut fields = Vec::with_capacity(symbols.len());
        for s in symbols {
            let x = self.pulse_shape(tape, params, s)?;
            let v = dac_on_tape(tape, x, params.g_dac, v_b, &c.dac, fs, opts.mode)?;
            let (e, k) = match (&self.spline, c.kind) {
                (Some(spline), LinkKind::ImddEam) => {
                    eam_mod_on_tape(tape, v, p_in, c.modulator.chirp_alpha, spline)?
                }
                _ => ideal_mod_on_tape(tape, v, p_in)?,
            };
            clamped += k;
            fields.push(e);
        }
        let mut field = if fields.len() > 1 { self.multiplex(tape, &fields)? } else { fields[0] };
        let f = &c.fiber;
        if f.length_km > 0.0 {
            if matches!(tape.value(field), Value::Real(_)) {
                field = tape.to_complex(field)?;
            }
            let n = tape.len_of(field);
            let launch = tape.complex(field)?.to_vec();
            let h = fiber_cd_response(n, fs, f.length_km, f.dispersion_ps_nm_km, c.modulator.wavelength_nm, f.attenuation_db_km);
            field = tape.spectral(field, h)?;
            if opts.nonlinear_fiber {
                let p = SsfmParams {
                    length_km: f.length_km,
                    gamma_per_w_km: f.gamma_per_w_km,
                    step_km: f.ssfm_step_km,
                    dispersion_ps_nm_km: f.dispersion_ps_nm_km,
                    wavelength_nm: c.modulator.wavelength_nm,
                    attenuation_db_km: f.attenuation_db_km,
                };
                let out = ssfm_samples(&launch, fs, &p)?;
                field = straight_through(tape, field, Value::Complex(out))?;
            }
        }
        if fields.len() > 1 {
            field = self.select(tape, field, c.wdm.select_f3db_ghz)?;
        }
        let i = photodiode_on_tape(tape, field, &c.photodiode, fs, noise)?;
        let r = adc_on_tape(tape, i, &c.adc, fs, opts.mode)?;
        // DC block and gain normalization ahead of the receiver filter.
        let r = tape.center_mean(r)?;
        let r = tape.power_normalize(r, 1.0)?;
        Ok((r, clamped))
    }

    fn receive(
        &self,
        tape: &mut Tape,
        params: &ParamVars,
        r: Var,
        symbols: &[f64],
        clamped: usize,
    ) -> Result<ForwardOutput, LinkError> {
        let sps = self.cfg.system.sps;
        let mut y = tape.fir(r, params.h_r)?;
        if let Some(f) = params.ffe {
            y = tape.fir(y, f)?;
        }
        if let Some((k1, k2, n2)) = params.volterra {
            y = tape.volterra(y, k1, k2, n2)?;
        }
        let rx = y;
        let delay = self.delay_samples()?;
        let edge = self.cfg.training.edge_symbols;
        if delay >= (edge + 1) * sps {
            return Err(LinkError::Config(format!(
                "alignment delay of {delay} samples exceeds the {edge}-symbol edge trim"
            )));
        }
        let count = symbols.len() - 2 * edge;
        let soft = tape.gather(y, edge * sps + delay, sps, count)?;
        let soft = tape.power_normalize(soft, 1.0)?;
        tape.label(soft, "soft_symbols");
        Ok(ForwardOutput { soft, targets: symbols[edge..edge + count].into(), rx, delay, edge, clamped })
    }
}

/// AWGN link with converter band limitation.
pub fn awgn_link_forward(
    tape: &mut Tape,
    cfg: &LinkConfig,
    params: &ParamVars,
    symbols: &[Vec<f64>],
    noise: &mut dyn NoiseSource,
    opts: ForwardOptions,
) -> Result<ForwardOutput, LinkError> {
    if cfg.kind != LinkKind::Awgn {
        return Err(LinkError::Config(format!("{} config passed to the AWGN link", cfg.kind.as_str())));
    }
    LinkModel::new(cfg.clone())?.forward(tape, params, symbols, noise, opts)
}

/// Intensity-modulation / direct-detection link.
pub fn imdd_link_forward(
    tape: &mut Tape,
    cfg: &LinkConfig,
    params: &ParamVars,
    symbols: &[Vec<f64>],
    noise: &mut dyn NoiseSource,
    opts: ForwardOptions,
) -> Result<ForwardOutput, LinkError> {
    if !cfg.kind.is_imdd() {
        return Err(LinkError::Config("AWGN config passed to the IM/DD link".into()));
    }
    LinkModel::new(cfg.clone())?.forward(tape, params, symbols, noise, opts)
}
