//! Physical blocks of the links. Each block has a tape-recorded form used
//! by the forward chains and a plain-signal wrapper built on it.

use std::f64::consts::{LN_10, PI};
use std::sync::Arc;

use num_complex::Complex64;

use super::config::{AdcConfig, DacConfig, PhotodiodeConfig};
use super::noise::NoiseSource;
use super::spline::AbsorptionSpline;
use super::LinkError;
use crate::dsp::analog::bessel_response;
use crate::dsp::quant::quantize_slice;
use crate::dsp::{spectral, ComplexSignal, SampledSignal};
use crate::grad::{Tape, Value, Var};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Training chains are differentiable end to end; evaluation chains add
/// the converter quantizers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-sample noise standard deviation for a target SNR (Es/N0 of the
/// real baseband signal at `sps` samples per symbol).
pub fn awgn_noise_scale(snr_db: f64, signal_power: f64, sps: usize) -> f64 {
    (signal_power * awgn_variance_factor(snr_db, sps)).sqrt()
}

/// `σ² / P_s` for the given SNR; zero for an infinite SNR.
pub(crate) fn awgn_variance_factor(snr_db: f64, sps: usize) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    sps as f64 / (2.0 * 10f64.powf(snr_db / 10.0))
}

/// `sqrt(a + b·s)` of a scalar node.
pub(crate) fn sqrt_affine(tape: &mut Tape, s: Var, a: f64, b: f64) -> Result<Var, LinkError> {
    let arg = a + b * tape.scalar(s)?;
    if !(arg > 0.0) {
        return Err(LinkError::Physics(format!("noise variance {arg} is not positive")));
    }
    let root = arg.sqrt();
    Ok(tape.map(s, vec![root], vec![b / (2.0 * root)])?)
}

/// Replace the value of `x` with `target` while passing gradients through
/// unchanged (used for quantizers and the split-step fiber in evaluation).
pub(crate) fn straight_through(tape: &mut Tape, x: Var, target: Value) -> Result<Var, LinkError> {
    let delta = match (tape.value(x), target) {
        (Value::Real(a), Value::Real(b)) => Value::Real(b.iter().zip(a).map(|(t, v)| t - v).collect()),
        (Value::Complex(a), Value::Complex(b)) => {
            Value::Complex(b.iter().zip(a).map(|(t, v)| t - v).collect())
        }
        _ => return Err(LinkError::Physics("straight-through kinds differ".into())),
    };
    Ok(tape.add_const(x, &delta)?)
}

/// Additive Gaussian noise whose standard deviation `sqrt(a + b·level)`
/// follows a scalar node. Complex signals get independent real and
/// imaginary draws of that deviation each.
pub(crate) fn add_scaled_noise(
    tape: &mut Tape,
    x: Var,
    level: Var,
    a: f64,
    b: f64,
    noise: &mut dyn NoiseSource,
) -> Result<Var, LinkError> {
    let sigma = sqrt_affine(tape, level, a, b)?;
    let n = tape.len_of(x);
    let z = match tape.value(x) {
        Value::Real(_) => tape.constant(noise.standard_normal(n)),
        Value::Complex(_) => {
            let re = noise.standard_normal(n);
            let im = noise.standard_normal(n);
            tape.constant_complex(re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect())
        }
    };
    let scaled = tape.scale_by(z, sigma)?;
    Ok(tape.sum(&[x, scaled])?)
}

/// Normalized drive `clip(g·x, −½, ½)`, quantized in eval mode.
pub(crate) fn dac_drive(tape: &mut Tape, x: Var, g_dac: Var, cfg: &DacConfig, mode: Mode) -> Result<Var, LinkError> {
    let mut y = tape.scale_by(x, g_dac)?;
    y = tape.clip(y, -0.5, 0.5)?;
    tape.label(y, "dac_clip");
    if mode == Mode::Eval {
        let q = quantize_slice(tape.real(y)?, cfg.quant_bits, -0.5, 0.5)?;
        y = straight_through(tape, y, Value::Real(q))?;
    }
    Ok(y)
}

/// `v = v_b + v_pp · clip(g·x, −½, ½)` then the DAC Bessel filter; eval
/// mode quantizes between the clip and the `v_pp` scaling.
pub(crate) fn dac_on_tape(
    tape: &mut Tape,
    x: Var,
    g_dac: Var,
    v_b: Var,
    cfg: &DacConfig,
    sample_rate: f64,
    mode: Mode,
) -> Result<Var, LinkError> {
    let n = tape.len_of(x);
    let mut y = dac_drive(tape, x, g_dac, cfg, mode)?;
    y = tape.scale(y, cfg.v_pp_v)?;
    y = tape.offset(y, v_b)?;
    let h = bessel_response(n, sample_rate, cfg.bessel_order, cfg.f3db_ghz * 1e9)?;
    Ok(tape.spectral(y, h)?)
}

/// Plain-signal DAC.
pub fn dac(
    signal: &SampledSignal,
    g_dac: f64,
    v_b: f64,
    cfg: &DacConfig,
    mode: Mode,
) -> Result<SampledSignal, LinkError> {
    let mut tape = Tape::new();
    let x = tape.constant(signal.samples().to_vec());
    let g = tape.constant(vec![g_dac]);
    let b = tape.constant(vec![v_b]);
    let y = dac_on_tape(&mut tape, x, g, b, cfg, signal.sample_rate(), mode)?;
    Ok(SampledSignal::new(tape.real(y)?.to_vec(), signal.sample_rate())?)
}

/// Ideal square-root modulator `E = sqrt(p_in · max(v, 0))` with its
/// derivative and the number of negative inputs clamped to zero.
pub(crate) fn ideal_field(v: &[f64], p_in: f64) -> (Vec<f64>, Vec<f64>, usize) {
    let mut clamped = 0;
    let mut e = Vec::with_capacity(v.len());
    let mut de = Vec::with_capacity(v.len());
    for &vi in v {
        if vi > 0.0 {
            let f = (p_in * vi).sqrt();
            e.push(f);
            de.push(p_in / (2.0 * f));
        } else {
            if vi < 0.0 {
                clamped += 1;
            }
            e.push(0.0);
            de.push(0.0);
        }
    }
    (e, de, clamped)
}

pub(crate) fn ideal_mod_on_tape(tape: &mut Tape, v: Var, p_in: f64) -> Result<(Var, usize), LinkError> {
    let (e, de, clamped) = ideal_field(tape.real(v)?, p_in);
    let y = tape.map(v, e, de)?;
    tape.label(y, "ideal_mod");
    Ok((y, clamped))
}

/// Ideal modulator; returns the real field and the clamp count.
pub fn ideal_mod(v: &SampledSignal, p_in: f64) -> Result<(SampledSignal, usize), LinkError> {
    if !(p_in > 0.0) {
        return Err(LinkError::Physics(format!("laser power {p_in} W must be positive")));
    }
    let (e, _, clamped) = ideal_field(v.samples(), p_in);
    Ok((SampledSignal::new(e, v.sample_rate())?, clamped))
}

/// EAM field `E = exp((½ + j·α/2)·(ln p_in − α_dB(v)·ln10/10))` and `dE/dv`.
pub(crate) fn eam_field(
    v: &[f64],
    p_in: f64,
    chirp_alpha: f64,
    spline: &AbsorptionSpline,
) -> (Vec<Complex64>, Vec<Complex64>, usize) {
    let k = Complex64::new(0.5, chirp_alpha / 2.0);
    let mut clamped = 0;
    let mut e = Vec::with_capacity(v.len());
    let mut de = Vec::with_capacity(v.len());
    for &vi in v {
        let s = spline.eval(vi);
        clamped += s.clamped as usize;
        let log_power = p_in.ln() - s.value * LN_10 / 10.0;
        let f = (k * log_power).exp();
        e.push(f);
        de.push(f * k * (-LN_10 / 10.0 * s.slope));
    }
    (e, de, clamped)
}

pub(crate) fn eam_mod_on_tape(
    tape: &mut Tape,
    v: Var,
    p_in: f64,
    chirp_alpha: f64,
    spline: &AbsorptionSpline,
) -> Result<(Var, usize), LinkError> {
    let (e, de, clamped) = eam_field(tape.real(v)?, p_in, chirp_alpha, spline);
    let y = tape.map_to_complex(v, e, de)?;
    tape.label(y, "eam_mod");
    Ok((y, clamped))
}

/// Electro-absorption modulator; returns the field and the number of
/// voltages outside the knot domain.
pub fn eam_mod(
    v: &SampledSignal,
    p_in: f64,
    chirp_alpha: f64,
    spline: &AbsorptionSpline,
) -> Result<(ComplexSignal, usize), LinkError> {
    if !(p_in > 0.0) {
        return Err(LinkError::Physics(format!("laser power {p_in} W must be positive")));
    }
    let (e, _, clamped) = eam_field(v.samples(), p_in, chirp_alpha, spline);
    Ok((ComplexSignal::new(e, v.sample_rate())?, clamped))
}

/// Linear fiber response `exp(j·(D·λ²·π/c)·L·f²) · 10^(−atten·L/20)`.
pub fn fiber_cd_response(
    n: usize,
    sample_rate: f64,
    length_km: f64,
    dispersion_ps_nm_km: f64,
    wavelength_nm: f64,
    attenuation_db_km: f64,
) -> Arc<[Complex64]> {
    // ps/(nm·km) → s/m²
    let d = dispersion_ps_nm_km * 1e-6;
    let lambda = wavelength_nm * 1e-9;
    let coef = d * lambda * lambda * PI / SPEED_OF_LIGHT * length_km * 1e3;
    let gain = 10f64.powf(-attenuation_db_km * length_km / 20.0);
    spectral::sample_response(n, sample_rate, |f| Complex64::from_polar(gain, coef * f * f))
}

pub fn fiber_cd(
    field: &ComplexSignal,
    length_km: f64,
    dispersion_ps_nm_km: f64,
    wavelength_nm: f64,
    attenuation_db_km: f64,
) -> ComplexSignal {
    let h = fiber_cd_response(
        field.len(),
        field.sample_rate(),
        length_km,
        dispersion_ps_nm_km,
        wavelength_nm,
        attenuation_db_km,
    );
    field.with_samples(spectral::filter_complex(field.samples(), &h))
}

/// Fiber parameters for the split-step model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsfmParams {
    pub length_km: f64,
    pub gamma_per_w_km: f64,
    pub step_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub wavelength_nm: f64,
    pub attenuation_db_km: f64,
}

/// Symmetric split-step Fourier propagation: half linear step, Kerr phase
/// `exp(−j·γ·|E|²·Δz_eff)` over the full step, half linear step, with
/// `Δz_eff = 2·sinh(αΔz/2)/α` so that the midpoint power times `Δz_eff`
/// equals the power integrated over the step. Signals
/// evolve as `exp(+jωt)`, so the Kerr phase carries the same sign as the
/// dispersion phase `−β₂ω²z/2`. A trailing
/// partial step covers any remainder of the length.
pub fn ssfm(field: &ComplexSignal, p: &SsfmParams) -> Result<ComplexSignal, LinkError> {
    Ok(field.with_samples(ssfm_samples(field.samples(), field.sample_rate(), p)?))
}

pub(crate) fn ssfm_samples(x: &[Complex64], sample_rate: f64, p: &SsfmParams) -> Result<Vec<Complex64>, LinkError> {
    if !(p.step_km > 0.0) || p.length_km < 0.0 {
        return Err(LinkError::Physics("SSFM needs a positive step and non-negative length".into()));
    }
    let mut steps = Vec::new();
    let full = (p.length_km / p.step_km + 1e-9).floor() as usize;
    steps.extend(std::iter::repeat_n(p.step_km, full));
    let rest = p.length_km - full as f64 * p.step_km;
    if rest > 1e-12 * p.length_km.max(1.0) {
        steps.push(rest);
    }
    let alpha = p.attenuation_db_km * LN_10 / 10.0;
    let half = |dz: f64| {
        fiber_cd_response(x.len(), sample_rate, dz / 2.0, p.dispersion_ps_nm_km, p.wavelength_nm, p.attenuation_db_km)
    };
    let mut e = x.to_vec();
    let mut cached: Option<(f64, Arc<[Complex64]>)> = None;
    for dz in steps {
        let h = match &cached {
            Some((len, h)) if *len == dz => h.clone(),
            _ => {
                let h = half(dz);
                cached = Some((dz, h.clone()));
                h
            }
        };
        // the Kerr phase uses the power after the first half step, so the
        // loss over the step is integrated about the midpoint
        let dz_eff = if alpha > 0.0 { 2.0 * (alpha * dz / 2.0).sinh() / alpha } else { dz };
        e = spectral::filter_complex(&e, &h);
        for z in e.iter_mut() {
            *z *= Complex64::from_polar(1.0, -p.gamma_per_w_km * z.norm_sqr() * dz_eff);
        }
        e = spectral::filter_complex(&e, &h);
    }
    Ok(e)
}

/// Thermal and shot noise variances (A²) at sample rate `fs` for a block
/// with mean photocurrent `mean_current`.
pub fn photodiode_variances(pd: &PhotodiodeConfig, sample_rate: f64, mean_current: f64) -> (f64, f64) {
    let bw = pd.bandwidth_ghz * 1e9;
    let thermal = 4.0 * pd.boltzmann_j_per_k * pd.temperature_k * sample_rate / (bw * pd.impedance_ohm);
    let shot = 2.0 * pd.electron_charge_c * (mean_current + pd.dark_current_a) * sample_rate / bw;
    (thermal, shot)
}

/// Square-law detection `R·|E|²` plus thermal and shot noise whose shot
/// term follows the block-mean photocurrent.
pub(crate) fn photodiode_on_tape(
    tape: &mut Tape,
    field: Var,
    pd: &PhotodiodeConfig,
    sample_rate: f64,
    noise: &mut dyn NoiseSource,
) -> Result<Var, LinkError> {
    let p = tape.abs_sq(field)?;
    let i = tape.scale(p, pd.responsivity_a_per_w)?;
    if !pd.noise {
        return Ok(i);
    }
    // σ² = (thermal + dark shot) + (2·e·F_s/B)·mean current
    let (fixed, fixed_shot) = photodiode_variances(pd, sample_rate, 0.0);
    let per_amp = 2.0 * pd.electron_charge_c * sample_rate / (pd.bandwidth_ghz * 1e9);
    let mean = tape.mean(i)?;
    let y = add_scaled_noise(tape, i, mean, fixed + fixed_shot, per_amp, noise)?;
    tape.label(y, "photodiode");
    Ok(y)
}

pub fn photodiode(
    field: &ComplexSignal,
    pd: &PhotodiodeConfig,
    noise: &mut dyn NoiseSource,
) -> Result<SampledSignal, LinkError> {
    let mut tape = Tape::new();
    let e = tape.constant_complex(field.samples().to_vec());
    let y = photodiode_on_tape(&mut tape, e, pd, field.sample_rate(), noise)?;
    Ok(SampledSignal::new(tape.real(y)?.to_vec(), field.sample_rate())?)
}

/// ADC Bessel filter; eval mode quantizes over the block's [min, max].
pub(crate) fn adc_on_tape(
    tape: &mut Tape,
    x: Var,
    cfg: &AdcConfig,
    sample_rate: f64,
    mode: Mode,
) -> Result<Var, LinkError> {
    let n = tape.len_of(x);
    let h = bessel_response(n, sample_rate, cfg.bessel_order, cfg.f3db_ghz * 1e9)?;
    let y = tape.spectral(x, h)?;
    if mode == Mode::Train {
        return Ok(y);
    }
    let v = tape.real(y)?;
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| (l.min(s), h.max(s)));
    if !(lo < hi) {
        return Ok(y);
    }
    let q = quantize_slice(v, cfg.quant_bits, lo, hi)?;
    straight_through(tape, y, Value::Real(q))
}

pub fn adc(signal: &SampledSignal, cfg: &AdcConfig, mode: Mode) -> Result<SampledSignal, LinkError> {
    let mut tape = Tape::new();
    let x = tape.constant(signal.samples().to_vec());
    let y = adc_on_tape(&mut tape, x, cfg, signal.sample_rate(), mode)?;
    Ok(SampledSignal::new(tape.real(y)?.to_vec(), signal.sample_rate())?)
}
