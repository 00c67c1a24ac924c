//! Loss, learning-rate schedule, gradient clipping and the Adam optimizer.

use std::f64::consts::PI;

use super::TrainError;

/// Mean squared error over aligned soft and true symbols.
pub fn mse_loss(x_hat: &[f64], x: &[f64]) -> Result<f64, TrainError> {
    if x_hat.len() != x.len() {
        return Err(TrainError::Length(x_hat.len(), x.len()));
    }
    if x.is_empty() {
        return Err(TrainError::Plan("empty batch".into()));
    }
    Ok(x_hat.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64)
}

/// Cosine one-cycle schedule: warm up from `max_lr / div_factor` to
/// `max_lr` over the first `warmup_frac` of the steps, then anneal to
/// `max_lr / final_div_factor`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneCycle {
    pub max_lr: f64,
    pub total_steps: usize,
    pub warmup_frac: f64,
    pub div_factor: f64,
    pub final_div_factor: f64,
}

impl OneCycle {
    pub fn new(max_lr: f64, total_steps: usize) -> Self {
        Self { max_lr, total_steps, warmup_frac: 0.3, div_factor: 25.0, final_div_factor: 1e4 }
    }

    /// Index of the step at which the peak rate is reached.
    pub fn peak_step(&self) -> usize {
        ((self.warmup_frac * self.total_steps as f64).round() as usize).saturating_sub(1)
    }

    pub fn lr(&self, step: usize) -> f64 {
        let start = self.max_lr / self.div_factor;
        let end = self.max_lr / self.final_div_factor;
        let peak = self.peak_step();
        let last = self.total_steps.saturating_sub(1);
        if step <= peak {
            if peak == 0 {
                return self.max_lr;
            }
            cosine(start, self.max_lr, step as f64 / peak as f64)
        } else {
            let span = (last - peak).max(1);
            cosine(self.max_lr, end, ((step - peak) as f64 / span as f64).min(1.0))
        }
    }
}

fn cosine(from: f64, to: f64, pct: f64) -> f64 {
    to + 0.5 * (from - to) * (1.0 + (PI * pct).cos())
}

/// One-cycle rate with the default warmup fraction and div factors.
pub fn onecycle_lr(step: usize, total_steps: usize, max_lr: f64) -> f64 {
    OneCycle::new(max_lr, total_steps).lr(step)
}

/// Scale all gradient groups together so their global L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [Vec<f64>], max_norm: f64) -> f64 {
    let norm = grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= k);
    }
    norm
}

/// Adam moment accumulators of one parameter group.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], step: 0, beta1, beta2, eps }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Bias-corrected update `θ ← θ − lr·m̂/(√v̂ + ε)`.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<(), TrainError> {
        if params.len() != self.len() || grads.len() != self.len() {
            return Err(TrainError::Length(grads.len(), self.len()));
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::update`].
pub fn adam_update(state: &mut AdamState, params: &[f64], grads: &[f64], lr: f64) -> Result<Vec<f64>, TrainError> {
    let mut out = params.to_vec();
    state.update(&mut out, grads, lr)?;
    Ok(out)
}
