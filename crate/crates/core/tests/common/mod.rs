//! Gradient checks shared by the gradient and acceptance test targets.

// Each test target uses a different subset of these helpers.
#![allow(dead_code)]

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isi_core::grad::{finite_diff_check, GradError, Tape, Value, Var};
use isi_core::link::{
    draw_pam_symbols, ForwardOptions, GaussianNoise, LinkConfig, LinkModel, LinkParams, NoiseRecorder,
    NoiseReplay, ParamVars, Trainable,
};
use isi_core::train::{initial_params, TrainPlan, Variant};

/// Largest accepted `|g_ad − g_fd| / |g_fd|`.
pub const TOL: f64 = 1e-4;

fn uniform(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn phasors(n: usize, seed: u64) -> Arc<[Complex64]> {
    uniform(n, 0.0, std::f64::consts::TAU, seed)
        .into_iter()
        .zip(uniform(n, 0.5, 1.5, seed + 1))
        .map(|(ph, r)| Complex64::from_polar(r, ph))
        .collect()
}

/// Weighted sum of a real node, or of `|·|²` of a complex one.
fn functional(tape: &mut Tape, y: Var, seed: u64) -> Result<Var, GradError> {
    let y = match tape.value(y) {
        Value::Real(_) => y,
        Value::Complex(_) => tape.abs_sq(y)?,
    };
    let w = tape.constant(uniform(tape.len_of(y), -1.0, 1.0, seed));
    tape.dot(y, w)
}

fn check(point: &[f64], build: impl Fn(&mut Tape, Var) -> Result<Var, GradError>) -> f64 {
    finite_diff_check(build, point, 1e-6).unwrap()
}

pub fn fir_in_signal_and_taps() -> f64 {
    let mut worst = 0.0_f64;
    let mut point = uniform(40, -1.0, 1.0, 1);
    point.extend(uniform(7, -1.0, 1.0, 2));
    let err = check(&point, |t, p| {
        let x = t.gather(p, 0, 1, 40)?;
        let h = t.gather(p, 40, 1, 7)?;
        let y = t.fir(x, h)?;
        functional(t, y, 3)
    });
    worst = worst.max(err);
    worst
}

pub fn spectral_real_and_complex() -> f64 {
    let mut worst = 0.0_f64;
    let point = uniform(32, -1.0, 1.0, 4);
    let response = phasors(32, 5);
    let err = check(&point, |t, p| {
        let y = t.spectral(p, response.clone())?;
        functional(t, y, 6)
    });
    worst = worst.max(err);
    let err = check(&point, |t, p| {
        let z = t.mul_const(p, phasors(32, 7))?;
        let y = t.spectral(z, response.clone())?;
        functional(t, y, 8)
    });
    worst = worst.max(err);
    worst
}

pub fn gather_scale_offset() -> f64 {
    let mut worst = 0.0_f64;
    let point = uniform(30, -1.0, 1.0, 9);
    let err = check(&point, |t, p| {
        let x = t.gather(p, 2, 3, 8)?;
        let k = t.gather(p, 0, 1, 1)?;
        let b = t.gather(p, 1, 1, 1)?;
        let y = t.scale_by(x, k)?;
        let y = t.scale(y, -1.7)?;
        let y = t.offset(y, b)?;
        functional(t, y, 10)
    });
    worst = worst.max(err);
    worst
}

pub fn add_const_map_clip() -> f64 {
    let mut worst = 0.0_f64;
    let point: Vec<f64> = uniform(40, -1.0, 1.0, 11).into_iter().filter(|v| (v.abs() - 0.6).abs() > 1e-3).collect();
    let err = check(&point, |t, p| {
        let y = t.add_const(p, &Value::Real(uniform(point.len(), -0.1, 0.1, 12)))?;
        let vals: Vec<f64> = t.real(y)?.iter().map(|v| v.sin()).collect();
        let der: Vec<f64> = t.real(y)?.iter().map(|v| v.cos()).collect();
        let y = t.map(y, vals, der)?;
        let y = t.clip(y, -0.6, 0.6)?;
        functional(t, y, 13)
    });
    worst = worst.max(err);
    worst
}

pub fn complex_conversions() -> f64 {
    let mut worst = 0.0_f64;
    let point = uniform(24, -1.0, 1.0, 14);
    let err = check(&point, |t, p| {
        let vals: Vec<Complex64> = t.real(p)?.iter().map(|&v| Complex64::new(v.cos(), v * v)).collect();
        let der: Vec<Complex64> = t.real(p)?.iter().map(|&v| Complex64::new(-v.sin(), 2.0 * v)).collect();
        let z = t.map_to_complex(p, vals, der)?;
        let w = t.to_complex(p)?;
        let w = t.mul_const(w, phasors(24, 15))?;
        let s = t.sum(&[z, w])?;
        let re = t.real_part(s)?;
        let a = functional(t, re, 16)?;
        let b = functional(t, s, 17)?;
        t.sum(&[a, b])
    });
    worst = worst.max(err);
    worst
}

pub fn normalizations_and_reductions() -> f64 {
    let mut worst = 0.0_f64;
    let point = uniform(50, -1.0, 2.0, 18);
    let target: Arc<[f64]> = uniform(50, -1.0, 1.0, 19).into();
    let err = check(&point, |t, p| {
        let c = t.center_mean(p)?;
        let n = t.power_normalize(c, 2.0)?;
        let m = t.mean(p)?;
        let e = t.mse(n, target.clone())?;
        let d = t.dot(p, n)?;
        let d = t.scale(d, 0.01)?;
        t.sum(&[e, m, d])
    });
    worst = worst.max(err);
    worst
}

pub fn volterra_in_signal_and_kernels() -> f64 {
    let mut worst = 0.0_f64;
    let (n1, n2) = (5, 3);
    let mut point = uniform(30, -1.0, 1.0, 20);
    point.extend(uniform(n1, -1.0, 1.0, 21));
    point.extend(uniform(n2 * (n2 + 1) / 2, -0.5, 0.5, 22));
    let err = check(&point, |t, p| {
        let x = t.gather(p, 0, 1, 30)?;
        let k1 = t.gather(p, 30, 1, n1)?;
        let k2 = t.gather(p, 30 + n1, 1, n2 * (n2 + 1) / 2)?;
        let y = t.volterra(x, k1, k2, n2)?;
        functional(t, y, 23)
    });
    worst = worst.max(err);
    worst
}

/// Every tape operation, grouped into checks, with the worst relative error.
pub const BLOCKS: &[(&str, fn() -> f64)] = &[
    ("fir_in_signal_and_taps", fir_in_signal_and_taps),
    ("spectral_real_and_complex", spectral_real_and_complex),
    ("gather_scale_offset", gather_scale_offset),
    ("add_const_map_clip", add_const_map_clip),
    ("complex_conversions", complex_conversions),
    ("normalizations_and_reductions", normalizations_and_reductions),
    ("volterra_in_signal_and_kernels", volterra_in_signal_and_kernels),
];

/// Flattened trainable parameters of a plan, in a fixed order.
fn flatten(params: &LinkParams, tr: Trainable) -> Vec<f64> {
    let mut v = Vec::new();
    if tr.h_p {
        v.extend(&params.h_p);
    }
    if tr.h_r {
        v.extend(&params.h_r);
    }
    if tr.ffe {
        v.extend(params.ffe.as_ref().unwrap());
    }
    if tr.volterra {
        let k = params.volterra.as_ref().unwrap();
        v.extend(&k.k1);
        v.extend(&k.k2);
    }
    if tr.g_dac {
        v.push(params.g_dac);
    }
    if tr.v_b {
        v.push(params.v_b);
    }
    v
}

/// Parameter handles taking trainable entries from consecutive slices of
/// the leaf `p` and the rest from `params` as constants.
fn unflatten(t: &mut Tape, p: Var, params: &LinkParams, tr: Trainable) -> Result<ParamVars, GradError> {
    let mut at = 0;
    let mut take = |t: &mut Tape, v: &[f64], trainable: bool| -> Result<Var, GradError> {
        if trainable {
            let s = t.gather(p, at, 1, v.len())?;
            at += v.len();
            Ok(s)
        } else {
            Ok(t.constant(v.to_vec()))
        }
    };
    let h_p = take(t, &params.h_p, tr.h_p)?;
    let h_r = take(t, &params.h_r, tr.h_r)?;
    let ffe = match &params.ffe {
        Some(f) => Some(take(t, f, tr.ffe)?),
        None => None,
    };
    let volterra = match &params.volterra {
        Some(k) => Some((take(t, &k.k1, tr.volterra)?, take(t, &k.k2, tr.volterra)?, k.n2())),
        None => None,
    };
    let g_dac = take(t, &[params.g_dac], tr.g_dac)?;
    let v_b = take(t, &[params.v_b], tr.v_b)?;
    Ok(ParamVars { h_p, h_r, ffe, volterra, g_dac, v_b })
}

/// Finite-difference check of the training loss of a full link, with the
/// noise of one forward pass recorded and replayed.
pub fn chain_error(cfg: &LinkConfig, variant: Variant, n_taps: usize) -> f64 {
    let plan = TrainPlan::new(variant, n_taps, cfg, 3);
    let tr = plan.trainable();
    let mut params = initial_params(&plan, cfg).unwrap();
    // move away from the symmetric start
    for (h, d) in params.h_p.iter_mut().zip(uniform(n_taps, -0.02, 0.02, 24)) {
        *h += d;
    }
    let model = LinkModel::new(cfg.clone()).unwrap();
    let n_sym = 2 * cfg.training.edge_symbols + 64;
    let symbols: Vec<Vec<f64>> =
        (0..model.n_channels()).map(|c| draw_pam_symbols(4, n_sym, 100 + c as u64).unwrap()).collect();

    let mut rec = NoiseRecorder::new(GaussianNoise::new(7));
    {
        let mut t = Tape::new();
        let vars = ParamVars::place(&mut t, &params, tr);
        model.forward(&mut t, &vars, &symbols, &mut rec, ForwardOptions::train()).unwrap();
    }
    let replay: RefCell<NoiseReplay> = RefCell::new(rec.into_replay());

    let point = flatten(&params, tr);
    finite_diff_check(
        |t, p| {
            let vars = unflatten(t, p, &params, tr)?;
            let mut noise = replay.borrow_mut();
            noise.rewind();
            let out = model
                .forward(t, &vars, &symbols, &mut *noise, ForwardOptions::train())
                .map_err(|e| GradError::Shape { op: "link forward", detail: e.to_string() })?;
            t.mse(out.soft, out.targets.clone())
        },
        &point,
        1e-6,
    )
    .unwrap()
}
