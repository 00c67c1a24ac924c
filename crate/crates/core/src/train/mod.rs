//! Learning of the transceiver filters: loss, optimizer, variants and the
//! training and evaluation loops.

pub mod eval;
pub mod optim;
pub mod plan;
pub mod run;

use thiserror::Error;

use crate::dsp::DspError;
use crate::grad::GradError;
use crate::link::LinkError;
use crate::metrics::MetricsError;

pub use eval::{evaluate, EvalBlock, Evaluator};
pub use optim::{adam_update, clip_grad_norm, mse_loss, onecycle_lr, AdamState, OneCycle};
pub use plan::{dac_gain_for, initial_params, TrainPlan, Variant};
pub use run::{train, train_from, write_training_log, BatchRecord, TrainOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("invalid training plan: {0}")]
    Plan(String),
    #[error("training aborted at batch {batch}: {reason}")]
    Aborted { batch: usize, reason: String, trace: Vec<BatchRecord> },
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
