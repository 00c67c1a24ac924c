//! Error-rate evaluation of trained parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TrainError;
use crate::grad::Tape;
use crate::harness::seed::{stream_seed, Stream};
use crate::link::{
    draw_pam_symbols_from, pam_levels, ForwardOptions, GaussianNoise, LinkConfig, LinkModel, LinkParams, Mode,
    ParamVars, Trainable,
};
use crate::metrics::{decide, SerEstimate};

/// Receiver output of one evaluation block.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalBlock {
    /// Unit-power soft symbols after alignment and edge trimming.
    pub soft: Vec<f64>,
    /// Transmitted symbols matching `soft`.
    pub targets: Vec<f64>,
    /// Oversampled receiver output before downsampling.
    pub rx: Vec<f64>,
    /// Sample index of the first entry of `targets` in `rx`.
    pub first_sample: usize,
    pub sps: usize,
    pub clamped: usize,
}

/// Stateful evaluator drawing consecutive blocks from the evaluation
/// streams of `seed`.
pub struct Evaluator {
    model: LinkModel,
    params: LinkParams,
    opts: ForwardOptions,
    symbols: ChaCha8Rng,
    noise: GaussianNoise,
}

impl Evaluator {
    pub fn new(cfg: &LinkConfig, params: LinkParams, seed: u64, nonlinear_fiber: bool) -> Result<Self, TrainError> {
        Ok(Self {
            model: LinkModel::new(cfg.clone())?,
            params,
            opts: ForwardOptions { mode: Mode::Eval, nonlinear_fiber },
            symbols: ChaCha8Rng::seed_from_u64(stream_seed(seed, Stream::EvalSymbols)),
            noise: GaussianNoise::new(stream_seed(seed, Stream::EvalNoise)),
        })
    }

    /// Run one block carrying `n_symbols` scored symbols.
    pub fn block(&mut self, n_symbols: usize) -> Result<EvalBlock, TrainError> {
        let cfg = self.model.config();
        let edge = cfg.training.edge_symbols;
        let m = cfg.system.constellation_order;
        let symbols = (0..self.model.n_channels())
            .map(|_| draw_pam_symbols_from(m, n_symbols + 2 * edge, &mut self.symbols))
            .collect::<Result<Vec<_>, _>>()?;
        let mut tape = Tape::new();
        let vars = ParamVars::place(&mut tape, &self.params, Trainable::default());
        let out = self.model.forward(&mut tape, &vars, &symbols, &mut self.noise, self.opts)?;
        Ok(EvalBlock {
            soft: tape.real(out.soft)?.to_vec(),
            targets: out.targets.to_vec(),
            rx: tape.real(out.rx)?.to_vec(),
            first_sample: out.edge * cfg.system.sps + out.delay,
            sps: cfg.system.sps,
            clamped: out.clamped,
        })
    }

    /// Count symbol errors over blocks until the configured minimum error
    /// and symbol counts are reached or the symbol cap is hit.
    pub fn ser(&mut self) -> Result<SerEstimate, TrainError> {
        let e = self.model.config().evaluation.clone();
        let levels = pam_levels(self.model.config().system.constellation_order)?;
        let (mut errors, mut symbols) = (0u64, 0u64);
        while symbols < e.max_symbols && (errors < e.min_errors || symbols < e.min_symbols) {
            let n = (e.block_symbols as u64).min(e.max_symbols - symbols) as usize;
            let b = self.block(n)?;
            let decided = decide(&b.soft, &levels);
            errors += decided.iter().zip(&b.targets).filter(|(d, t)| d != t).count() as u64;
            symbols += b.targets.len() as u64;
        }
        Ok(SerEstimate::from_counts(errors, symbols)?)
    }
}

/// SER of `params` on the link `cfg`.
pub fn evaluate(cfg: &LinkConfig, params: &LinkParams, seed: u64, nonlinear_fiber: bool) -> Result<SerEstimate, TrainError> {
    Evaluator::new(cfg, params.clone(), seed, nonlinear_fiber)?.ser()
}
