//! The training loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{clip_grad_norm, AdamState, OneCycle};
use super::plan::{initial_params, TrainPlan};
use super::TrainError;
use crate::dsp::norm::project_unit_norm;
use crate::grad::{GradError, Tape, Var};
use crate::harness::seed::{stream_seed, Stream};
use crate::link::{
    draw_pam_symbols_from, ForwardOptions, GaussianNoise, LinkConfig, LinkError, LinkModel, LinkParams, ParamVars,
};

/// Consecutive batches above the divergence level that abort a run.
const DIVERGENCE_PATIENCE: usize = 100;
/// Divergence level as a multiple of the first batch loss.
const DIVERGENCE_FACTOR: f64 = 10.0;

/// One line of the training log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub batch: usize,
    pub lr: f64,
    pub loss: f64,
    pub grad_norm: f64,
}

/// Result of a completed run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: LinkParams,
    pub trace: Vec<BatchRecord>,
    /// Alignment delay in samples, fixed for training and evaluation.
    pub delay: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Group {
    HP,
    HR,
    Ffe,
    K1,
    K2,
    GDac,
    VB,
}

impl Group {
    fn is_scalar(self) -> bool {
        matches!(self, Group::GDac | Group::VB)
    }

    fn is_filter(self) -> bool {
        matches!(self, Group::HP | Group::HR | Group::Ffe)
    }

    fn slice(self, p: &mut LinkParams) -> &mut [f64] {
        match self {
            Group::HP => &mut p.h_p,
            Group::HR => &mut p.h_r,
            Group::Ffe => p.ffe.as_mut().map(Vec::as_mut_slice).unwrap_or_default(),
            Group::K1 => p.volterra.as_mut().map(|k| k.k1.as_mut_slice()).unwrap_or_default(),
            Group::K2 => p.volterra.as_mut().map(|k| k.k2.as_mut_slice()).unwrap_or_default(),
            Group::GDac => std::slice::from_mut(&mut p.g_dac),
            Group::VB => std::slice::from_mut(&mut p.v_b),
        }
    }

    fn var(self, v: &ParamVars) -> Option<Var> {
        match self {
            Group::HP => Some(v.h_p),
            Group::HR => Some(v.h_r),
            Group::Ffe => v.ffe,
            Group::K1 => v.volterra.map(|k| k.0),
            Group::K2 => v.volterra.map(|k| k.1),
            Group::GDac => Some(v.g_dac),
            Group::VB => Some(v.v_b),
        }
    }
}

/// Train from the variant's initial parameters.
pub fn train(plan: &TrainPlan, cfg: &LinkConfig) -> Result<TrainOutcome, TrainError> {
    let init = initial_params(plan, cfg)?;
    train_from(plan, cfg, init)
}

/// Train starting from `params`. Parameters outside the plan's trainable
/// set are returned unchanged.
pub fn train_from(plan: &TrainPlan, cfg: &LinkConfig, mut params: LinkParams) -> Result<TrainOutcome, TrainError> {
    plan.validate(cfg)?;
    let model = LinkModel::new(cfg.clone())?;
    let delay = model.delay_samples()?;
    let trainable = plan.trainable();
    let t = &cfg.training;

    let groups: Vec<Group> = [
        (Group::HP, trainable.h_p),
        (Group::HR, trainable.h_r),
        (Group::Ffe, trainable.ffe && params.ffe.is_some()),
        (Group::K1, trainable.volterra && params.volterra.is_some()),
        (Group::K2, trainable.volterra && params.volterra.is_some()),
        (Group::GDac, trainable.g_dac),
        (Group::VB, trainable.v_b),
    ]
    .into_iter()
    .filter_map(|(g, on)| on.then_some(g))
    .collect();
    if groups.is_empty() {
        return Err(TrainError::Plan(format!("variant {} has nothing to train", plan.variant)));
    }
    let mut adam: Vec<AdamState> = groups
        .iter()
        .map(|&g| AdamState::new(g.slice(&mut params).len(), t.adam_beta1, t.adam_beta2, t.adam_eps))
        .collect();

    let total = plan.n_batches();
    let schedule = |max_lr: f64| OneCycle {
        max_lr,
        total_steps: total,
        warmup_frac: t.warmup_frac,
        div_factor: t.div_factor,
        final_div_factor: t.final_div_factor,
    };
    let (filter_lr, scalar_lr) = (schedule(plan.max_lr_filters), schedule(plan.max_lr_scalars));

    let mut symbol_rng = ChaCha8Rng::seed_from_u64(stream_seed(plan.seed, Stream::TrainSymbols));
    let mut noise = GaussianNoise::new(stream_seed(plan.seed, Stream::TrainNoise));
    let block = plan.batch_size + 2 * t.edge_symbols;
    let m = cfg.system.constellation_order;

    let mut trace = Vec::with_capacity(total);
    let mut above = 0;
    for b in 0..total {
        let symbols = (0..model.n_channels())
            .map(|_| draw_pam_symbols_from(m, block, &mut symbol_rng))
            .collect::<Result<Vec<_>, _>>()?;
        let mut tape = Tape::new();
        let vars = ParamVars::place(&mut tape, &params, trainable);
        let step = (|| -> Result<(f64, crate::grad::Gradients), LinkError> {
            let out = model.forward(&mut tape, &vars, &symbols, &mut noise, ForwardOptions::train())?;
            let loss = tape.mse(out.soft, out.targets.clone())?;
            let value = tape.scalar(loss)?;
            Ok((value, tape.backward(loss)?))
        })();
        let (loss, grads) = match step {
            Ok(v) => v,
            Err(LinkError::Grad(e @ (GradError::NonFiniteValue { .. } | GradError::NonFiniteAdjoint { .. }))) => {
                return Err(TrainError::Aborted { batch: b, reason: e.to_string(), trace });
            }
            Err(e) => return Err(e.into()),
        };
        if !loss.is_finite() {
            return Err(TrainError::Aborted { batch: b, reason: "loss is not finite".into(), trace });
        }

        let mut g: Vec<Vec<f64>> = groups
            .iter()
            .map(|&grp| {
                let var = grp.var(&vars).expect("trainable group has a tape leaf");
                grads.get_or_zero(var, grp.slice(&mut params).len())
            })
            .collect();
        let grad_norm = clip_grad_norm(&mut g, plan.clip_norm);
        let lr = filter_lr.lr(b);
        for ((&grp, state), gi) in groups.iter().zip(&mut adam).zip(&g) {
            let rate = if grp.is_scalar() { scalar_lr.lr(b) } else { lr };
            state.update(grp.slice(&mut params), gi, rate)?;
            if grp.is_filter() {
                project_unit_norm(grp.slice(&mut params))?;
            }
        }
        trace.push(BatchRecord { batch: b, lr, loss, grad_norm });
        log::debug!("{} batch {b}: loss {loss:.6e}, |g| {grad_norm:.3e}, lr {lr:.3e}", plan.variant);

        if loss > DIVERGENCE_FACTOR * trace[0].loss {
            above += 1;
            if above >= DIVERGENCE_PATIENCE {
                return Err(TrainError::Aborted {
                    batch: b,
                    reason: format!("loss above {DIVERGENCE_FACTOR}x its initial value for {above} batches"),
                    trace,
                });
            }
        } else {
            above = 0;
        }
    }
    Ok(TrainOutcome { params, trace, delay })
}

/// Training log as CSV (`batch,lr,loss,grad_norm`).
pub fn write_training_log<W: std::io::Write>(trace: &[BatchRecord], out: W) -> Result<(), TrainError> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(r).map_err(|e| TrainError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| TrainError::Io(e.to_string()))?;
    Ok(())
}
