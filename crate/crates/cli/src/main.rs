//! `isi-e2e`: train and evaluate pulse-shaper / receiver-filter pairs, run
//! the preset sweeps and export link diagnostics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use isi_core::harness::{
    gnuplot_script, link_eye, link_isi_metric, preset, run_experiment, serialize_results,
    write_eye_csv, write_isi_csv, ExperimentSpec, ParamFile, RunOptions, SweepVar,
};
use isi_core::link::{pam_levels, LinkConfig};
use isi_core::metrics::eye_opening;
use isi_core::train::{evaluate, train, write_training_log, TrainPlan, Variant};

#[derive(Parser, Debug)]
#[command(name = "isi-e2e", version, about = "End-to-end FIR filter learning for band-limited links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one variant and write its parameter file.
    Train(TrainArgs),
    /// Estimate the symbol error rate of a parameter file.
    Evaluate(EvalArgs),
    /// Run an experiment grid and write the result CSV plus a gnuplot script.
    Sweep(SweepArgs),
    /// Run a launch-power robustness experiment (default preset `robustness`).
    Robustness(SweepArgs),
    /// Export the folded zero-ISI spectrum of an AWGN parameter file.
    IsiMetric(DiagArgs),
    /// Export an eye diagram of the receiver output.
    Eye(EyeArgs),
}

/// Where the link configuration comes from.
#[derive(Args, Debug, Clone, Default)]
struct LinkSource {
    /// Link configuration TOML file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Take the training link of a named preset.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    link: LinkSource,
    /// PS, RxF, PS_RxF, RRC_FFE, RRC_Volterra or PS_Volterra.
    #[arg(long, default_value = "PS_RxF")]
    variant: Variant,
    #[arg(long, default_value_t = 25)]
    n_taps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parameter file to write.
    #[arg(long, value_name = "PATH", default_value = "params.toml")]
    out: PathBuf,
    /// Optional per-batch training log (CSV).
    #[arg(long, value_name = "PATH")]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Parameter file written by `train`.
    #[arg(long, value_name = "PATH")]
    params: PathBuf,
    /// Evaluate on this link instead of the one stored with the parameters.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Propagate through the nonlinear (split-step) fiber model.
    #[arg(long)]
    nonlinear: bool,
    /// Write the estimate as a one-row CSV.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Experiment specification TOML file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment preset.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override the master seed of the experiment.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 gives bit-exact reproducible output.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Result CSV; defaults to the experiment's `output` or `<name>.csv`.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagArgs {
    #[arg(long, value_name = "PATH")]
    params: PathBuf,
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EyeArgs {
    #[command(flatten)]
    diag: DiagArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    traces: usize,
}

fn load_preset(name: &str) -> Result<ExperimentSpec> {
    Ok(preset(name)?)
}

fn training_link(src: &LinkSource) -> Result<LinkConfig> {
    if let Some(path) = &src.config {
        return LinkConfig::from_file(path).with_context(|| format!("loading {}", path.display()));
    }
    if let Some(name) = &src.preset {
        let spec = load_preset(name)?;
        let e = &spec.experiment;
        let value = e.train_at.unwrap_or(e.values[0]);
        return Ok(spec.train_config(value, e.fiber_km[0]));
    }
    Ok(LinkConfig::default())
}

fn load_params(path: &Path, config: Option<&Path>) -> Result<(ParamFile, LinkConfig)> {
    let file = ParamFile::load(path).with_context(|| format!("loading {}", path.display()))?;
    let link = match config {
        Some(c) => LinkConfig::from_file(c).with_context(|| format!("loading {}", c.display()))?,
        None => file.link.clone(),
    };
    Ok((file, link))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let cfg = training_link(&a.link)?;
    let plan = TrainPlan::new(a.variant, a.n_taps, &cfg, a.seed);
    let out = train(&plan, &cfg)?;
    if let Some(path) = &a.log {
        write_training_log(&out.trace, create(path)?)?;
    }
    ParamFile::new(a.variant, &out.params, out.delay, &cfg).save(&a.out)?;
    let last = out.trace.last().map_or(f64::NAN, |r| r.loss);
    println!("{} N={} final loss {last:.6e} -> {}", a.variant, a.n_taps, a.out.display());
    Ok(())
}

fn cmd_evaluate(a: &EvalArgs) -> Result<()> {
    let (file, link) = load_params(&a.params, a.config.as_deref())?;
    let s = evaluate(&link, &file.params()?, a.seed, a.nonlinear)?;
    println!(
        "{} SER {:.4e} [{:.4e}, {:.4e}] ({} errors / {} symbols)",
        file.variant, s.rate, s.ci_lo, s.ci_hi, s.errors, s.symbols
    );
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        writeln!(w, "variant,errors,symbols,ser,ser_ci_lo,ser_ci_hi")?;
        writeln!(w, "{},{},{},{:.8e},{:.8e},{:.8e}", file.variant, s.errors, s.symbols, s.rate, s.ci_lo, s.ci_hi)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, default_preset: Option<&str>, require: Option<SweepVar>) -> Result<()> {
    let mut spec = match (&a.config, a.preset.as_deref().or(default_preset)) {
        (Some(path), _) => ExperimentSpec::from_file(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(name)) => load_preset(name)?,
        (None, None) => bail!("either --config or --preset is required"),
    };
    if let Some(var) = require {
        if spec.experiment.sweep != var {
            bail!("experiment sweeps {}, expected {}", spec.experiment.sweep.as_str(), var.as_str());
        }
    }
    if let Some(seed) = a.seed {
        spec.experiment.master_seed = seed;
    }
    let out = a
        .out
        .clone()
        .or_else(|| spec.experiment.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.experiment.name)));
    let result = run_experiment(&spec, &RunOptions { jobs: a.jobs.max(1) })?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    serialize_results(&result, &out)?;
    let script = out.with_extension("gp");
    let png = out.with_extension("png");
    std::fs::write(&script, gnuplot_script(&spec, &out.to_string_lossy(), &png.to_string_lossy()))
        .with_context(|| format!("writing {}", script.display()))?;
    let aborted = result.rows.iter().filter(|r| r.aborted()).count();
    println!("{} rows ({aborted} aborted) -> {}; plot script {}", result.rows.len(), out.display(), script.display());
    Ok(())
}

fn cmd_isi(a: &DiagArgs) -> Result<()> {
    let (file, link) = load_params(&a.params, a.config.as_deref())?;
    let m = link_isi_metric(&link, &file.params()?)?;
    println!("{} flatness {:.6e}", file.variant, m.flatness);
    if let Some(path) = &a.out {
        write_isi_csv(&m, create(path)?)?;
    }
    Ok(())
}

fn cmd_eye(a: &EyeArgs) -> Result<()> {
    let (file, link) = load_params(&a.diag.params, a.diag.config.as_deref())?;
    let (eye, labels) = link_eye(&link, &file.params()?, a.seed, a.traces)?;
    let opening = eye_opening(&eye, &labels, &pam_levels(4)?)?;
    println!("{} eye opening {opening:.4}", file.variant);
    if let Some(path) = &a.diag.out {
        write_eye_csv(&eye, &labels, create(path)?)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a, None, None),
        Command::Robustness(a) => cmd_sweep(a, Some("robustness"), Some(SweepVar::LaunchPowerDbm)),
        Command::IsiMetric(a) => cmd_isi(a),
        Command::Eye(a) => cmd_eye(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
