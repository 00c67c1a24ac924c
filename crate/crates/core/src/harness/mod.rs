//! Experiment orchestration, seeding, presets and result files.

pub mod diagnostics;
pub mod params;
pub mod plot;
pub mod presets;
pub mod results;
pub mod run;
pub mod seed;
pub mod spec;

use std::path::Path;

use thiserror::Error;

use crate::dsp::DspError;
use crate::link::LinkError;
use crate::metrics::MetricsError;
use crate::train::TrainError;

pub use diagnostics::{link_eye, link_isi_metric, write_eye_csv, write_isi_csv};
pub use params::ParamFile;
pub use plot::gnuplot_script;
pub use presets::{preset, preset_names};
pub use results::{read_results, serialize_results, ResultRow, SweepResult, RESULT_HEADER};
pub use run::{run_experiment, RunOptions};
pub use seed::{seed_derive, stream_seed, Stream};
pub use spec::{EvalOverrides, ExperimentSection, ExperimentSpec, SweepVar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io(format!("{}: {e}", path.display()))
    }
}
