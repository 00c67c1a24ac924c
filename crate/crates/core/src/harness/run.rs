//! Execution of experiment specifications.

use rayon::prelude::*;

use super::results::{ResultRow, SweepResult};
use super::seed::seed_derive;
use super::spec::ExperimentSpec;
use super::HarnessError;
use crate::train::{evaluate, train, TrainError, TrainPlan, Variant};

/// Parallelism of a run; `jobs = 1` runs everything on the calling thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1 }
    }
}

/// One training run and the sweep points evaluated with its parameters.
#[derive(Clone, Debug, PartialEq)]
struct Job {
    variant: Variant,
    n_taps: usize,
    fiber_km: f64,
    repeat: usize,
    train_value: f64,
    train_index: usize,
    /// `(index into the sweep grid, flattened evaluation index)`
    points: Vec<(usize, usize)>,
}

fn plan_jobs(spec: &ExperimentSpec) -> Vec<Job> {
    let e = &spec.experiment;
    let nv = e.values.len();
    let mut jobs = Vec::new();
    for (fi, &fiber_km) in e.fiber_km.iter().enumerate() {
        for (ni, &n_taps) in e.n_taps.iter().enumerate() {
            let group = fi * e.n_taps.len() + ni;
            let eval_index = |vi: usize| group * nv + vi;
            for &variant in &e.variants {
                for repeat in 0..e.repeats {
                    match e.train_at {
                        Some(t) => jobs.push(Job {
                            variant,
                            n_taps,
                            fiber_km,
                            repeat,
                            train_value: t,
                            train_index: group * (nv + 1) + nv,
                            points: (0..nv).map(|vi| (vi, eval_index(vi))).collect(),
                        }),
                        // every point of a group trains from the same draws
                        None => jobs.extend((0..nv).map(|vi| Job {
                            variant,
                            n_taps,
                            fiber_km,
                            repeat,
                            train_value: e.values[vi],
                            train_index: group * (nv + 1),
                            points: vec![(vi, eval_index(vi))],
                        })),
                    }
                }
            }
        }
    }
    jobs
}

fn run_job(spec: &ExperimentSpec, job: &Job, hash: &str) -> Result<Vec<ResultRow>, HarnessError> {
    let e = &spec.experiment;
    let train_cfg = spec.train_config(job.train_value, job.fiber_km);
    let seed = seed_derive(e.master_seed, job.variant.as_str(), job.train_index, job.repeat);
    let plan = TrainPlan::new(job.variant, job.n_taps, &train_cfg, seed);
    let row = |vi: usize, ser: f64, lo: f64, hi: f64| ResultRow {
        sweep_var_name: e.sweep.as_str().to_string(),
        sweep_value: e.values[vi],
        variant: job.variant,
        n_taps: job.n_taps,
        fiber_km: job.fiber_km,
        seed: job.repeat as u64,
        ser,
        ser_ci_lo: lo,
        ser_ci_hi: hi,
        trained_at: job.train_value,
        config_hash: hash.to_string(),
    };
    let outcome = match train(&plan, &train_cfg) {
        Ok(o) => o,
        Err(err @ TrainError::Aborted { .. }) => {
            log::warn!("{} N={} at {}: {err}", job.variant, job.n_taps, job.train_value);
            return Ok(job.points.iter().map(|&(vi, _)| row(vi, f64::NAN, f64::NAN, f64::NAN)).collect());
        }
        Err(err) => return Err(err.into()),
    };
    let mut rows = Vec::with_capacity(job.points.len());
    for &(vi, ei) in &job.points {
        let cfg = spec.eval_config(e.values[vi], job.fiber_km);
        let eval_seed = seed_derive(e.master_seed, "eval", ei, job.repeat);
        let s = evaluate(&cfg, &outcome.params, eval_seed, e.eval.nonlinear_fiber)?;
        log::info!(
            "{} N={} L={} {}={}: SER {:.3e} ({} / {})",
            job.variant,
            job.n_taps,
            job.fiber_km,
            e.sweep.as_str(),
            e.values[vi],
            s.rate,
            s.errors,
            s.symbols
        );
        rows.push(row(vi, s.rate, s.ci_lo, s.ci_hi));
    }
    Ok(rows)
}

/// Train and evaluate every (variant, filter length, fiber length, point,
/// repeat) combination of `spec`. Rows come back sorted, so the result is
/// the same for any degree of parallelism.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<SweepResult, HarnessError> {
    spec.validate()?;
    let hash = spec.config_hash();
    let jobs = plan_jobs(spec);
    log::info!("{}: {} training runs", spec.experiment.name, jobs.len());
    let batches: Vec<Vec<ResultRow>> = if opts.jobs <= 1 {
        jobs.iter().map(|j| run_job(spec, j, &hash)).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| HarnessError::Spec(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(|j| run_job(spec, j, &hash)).collect::<Result<_, _>>())?
    };
    Ok(SweepResult::new(batches.into_iter().flatten().collect()))
}
