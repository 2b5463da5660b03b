//! The `gpmoead` command line.
//!
//! ```text
//! gpmoead gen-data   --years 1998:2009 --seed 7 -o raw.csv [--sunspot-out ssn.csv] [--noise S] [--rows N]
//! gpmoead encode     --input raw.csv --sunspot ssn.csv -o encoded.csv
//! gpmoead train      --algo moead --fitness-csv fit.csv --validation-csv val.csv -o run/ [--config c.toml] [--seed N] [--gen-max G]
//! gpmoead experiment -o report/ [--config c.toml] [--algos moead,nsga2] [--jobs N] [--resume]
//! gpmoead predict    --model run/best_model.txt --input encoded.csv [-o predictions.csv]
//! ```
//!
//! Failures print one line `error kind=<kind> exit=<code> message=<text>` to
//! stderr. Exit codes: 0 success, 1 usage or config, 2 data, 3 internal.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{load_config, RunConfigFile};
use crate::dataio::{
    encode_records, fit_sunspot, load_encoded_csv, load_raw_csv, load_sunspot_csv, synth_sunspot_monthly, synth_vtec,
    write_encoded_csv, write_raw_csv, write_sunspot_csv, write_text,
};
use crate::error::{Error, Result};
use crate::experiment::{hex_digest, run_experiment, RunOptions, TOOL_VERSION};
use crate::exprtree::parse_prefix;
use crate::fitness::rmse_of;
use crate::optimizers::{run, Algorithm};

#[derive(Debug, Parser)]
#[command(name = "gpmoead", version, about = "Multi-objective GP for vTEC symbolic regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic raw vTEC CSV and its monthly sunspot series.
    GenData(GenDataArgs),
    /// Encode a raw CSV into model inputs.
    Encode(EncodeArgs),
    /// Run one optimizer and write its report bundle.
    Train(TrainArgs),
    /// Run the cross-validation experiment.
    Experiment(ExperimentArgs),
    /// Apply a saved prefix-notation model to an encoded CSV.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Inclusive year range, `A:B`.
    #[arg(long)]
    pub years: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Gaussian noise standard deviation in TECU.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Random subsample size.
    #[arg(long)]
    pub rows: Option<usize>,
    /// Generator settings from the `[synth]` table of a run config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Monthly sunspot series; defaults to `<output stem>_sunspot.csv`.
    #[arg(long)]
    pub sunspot_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub sunspot: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub components: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub algo: String,
    /// Optimizer settings from `[optimizer]` (and `[overrides.<algo>]`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub fitness_csv: PathBuf,
    #[arg(long)]
    pub validation_csv: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub gen_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Comma-separated subset of sgp, nsga2, moead.
    #[arg(long)]
    pub algos: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Skip cells already completed in `output`.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `out`, errors to `err`.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&msg).trim_start_matches("error: ");
            let _ = writeln!(err, "error kind=usage exit=1 message={first}");
            return 1;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let message = e.to_string().replace(['\n', '\r'], " ");
            let _ = writeln!(err, "error kind={} exit={} message={message}", e.kind(), e.exit_code());
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::GenData(a) => gen_data(a, out),
        Command::Encode(a) => encode(a, out),
        Command::Train(a) => train(a, out),
        Command::Experiment(a) => experiment(a, out),
        Command::Predict(a) => predict(a, out),
    }
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn optional_config(path: Option<&Path>) -> Result<RunConfigFile> {
    match path {
        Some(p) => load_config(p),
        None => Ok(RunConfigFile::default()),
    }
}

fn parse_years(s: &str) -> Result<(i32, i32)> {
    let bad = || Error::Config(format!("--years expects A:B, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn gen_data(a: GenDataArgs, out: &mut dyn Write) -> Result<()> {
    let mut synth = optional_config(a.config.as_deref())?.synth;
    if let Some(years) = &a.years {
        (synth.start_year, synth.end_year) = parse_years(years)?;
    }
    if let Some(noise) = a.noise {
        synth.noise = noise;
    }
    if a.rows.is_some() {
        synth.rows = a.rows;
    }
    synth.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let records = synth_vtec(&synth, &mut rng)?;
    let monthly = synth_sunspot_monthly(&synth, &mut rng)?;
    let sunspot_out = a.sunspot_out.unwrap_or_else(|| {
        let stem = a.output.file_stem().map_or("data".into(), |s| s.to_string_lossy().into_owned());
        a.output.with_file_name(format!("{stem}_sunspot.csv"))
    });
    write_raw_csv(&records, &a.output)?;
    write_sunspot_csv(&monthly, &sunspot_out)?;
    let echo = toml::to_string(&synth).map_err(|e| Error::Invariant(e.to_string()))?;
    let digest = hex_digest(format!("seed = {}\n{echo}", a.seed).as_bytes());
    say(
        out,
        format_args!(
            "rows={} months={} digest={} output={} sunspot={}",
            records.len(),
            monthly.len(),
            &digest[..16],
            a.output.display(),
            sunspot_out.display()
        ),
    )
}

fn encode(a: EncodeArgs, out: &mut dyn Write) -> Result<()> {
    let records = load_raw_csv(&a.input)?;
    let monthly = load_sunspot_csv(&a.sunspot)?;
    let model = fit_sunspot(&monthly, a.components)?;
    let data = encode_records(&records, &model)?;
    write_encoded_csv(&data, &a.output)?;
    say(
        out,
        format_args!("rows={} sunspot_residual_rmse={} output={}", data.len(), model.residual_rmse, a.output.display()),
    )
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let algorithm: Algorithm = a.algo.parse()?;
    let plan = optional_config(a.config.as_deref())?;
    let mut config = plan.optimizer_for(algorithm).clone();
    if let Some(g) = a.gen_max {
        config.gen_max = g;
    }
    config.validate()?;
    let fitness = load_encoded_csv(&a.fitness_csv)?;
    let validation = load_encoded_csv(&a.validation_csv)?;
    let result = run(algorithm, &config, &fitness, &validation, a.seed)?;
    result.write_bundle(&a.output)?;
    let echo = toml::to_string(&config).map_err(|e| Error::Invariant(e.to_string()))?;
    write_text(&a.output.join("config.toml"), |w| {
        writeln!(w, "# {TOOL_VERSION}\n# algorithm = {algorithm}, seed = {}\n{echo}", a.seed)
    })?;
    let best = result.best();
    say(
        out,
        format_args!(
            "algo={algorithm} generations={} ep_size={} best_validation_rmse={} best_fitness_rmse={} size={} model={}",
            result.generations(),
            result.archive.len(),
            result.best_validation_rmse(),
            best.rmse(),
            best.size(),
            best.tree
        ),
    )
}

fn experiment(a: ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let mut plan = optional_config(a.config.as_deref())?;
    if let Some(list) = &a.algos {
        plan.experiment.algorithms = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse())
            .collect::<Result<_>>()?;
    }
    plan.validate()?;
    let options = RunOptions {
        out_dir: Some(a.output.clone()),
        jobs: a.jobs,
        resume: a.resume,
    };
    let report = run_experiment(&plan, &options)?;
    for (algorithm, s) in &report.aggregate {
        say(
            out,
            format_args!(
                "algo={algorithm} folds={} median_test_rmse_mean={} std={} min={} max={}",
                report.folds.len(),
                s.mean,
                s.std,
                s.min,
                s.max
            ),
        )?;
    }
    say(out, format_args!("report={}", a.output.display()))
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&a.model).map_err(|e| Error::io(&a.model, e))?;
    let tree = parse_prefix(text.trim())?;
    let data = load_encoded_csv(&a.input)?;
    let predictions = tree.evaluate_columns(data.columns());
    let body = |w: &mut dyn Write| -> std::io::Result<()> {
        writeln!(w, "prediction")?;
        for p in &predictions {
            writeln!(w, "{p}")?;
        }
        Ok(())
    };
    match &a.output {
        Some(path) => {
            write_text(path, body)?;
            let score = if data.is_empty() { f64::NAN } else { rmse_of(&predictions, data.target())? };
            say(out, format_args!("rows={} rmse={score} output={}", predictions.len(), path.display()))
        }
        None => body(out).map_err(|e| Error::io("<stdout>", e)),
    }
}
