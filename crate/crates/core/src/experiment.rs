//! Cross-validation harness.
//!
//! The chronologically ordered dataset is cut into `k` contiguous folds. For
//! each fold the other folds are split into fitness and validation sets, every
//! algorithm is run `replicates` times, and the selected models are scored on
//! the held-out fold. Cells (fold × algorithm × replicate) run in parallel but
//! every seed is derived arithmetically, so reports do not depend on the
//! schedule.
//!
//! Bundle layout:
//!
//! ```text
//! config.toml                      resolved plan and tool version
//! folds/<f>/<algo>/<r>/            ep.csv, best_model.txt, trace.csv, cell.json
//! per_fold_rmse.csv                one row per cell
//! table1.csv                       moead (M) vs nsga2 (N) per fold, mean, std
//! aggregate.json                   per-algorithm stats of the per-fold medians
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{
    build_folds, check_chronological, encode_records, fit_sunspot, load_encoded_csv, load_raw_csv, load_sunspot_csv,
    split_training, synth_sunspot_monthly, synth_vtec, write_text, Dataset, SynthConfig,
};
use crate::error::{Error, Result};
use crate::fitness::rmse;
use crate::metrics::{c_metric, delta_metric, nds, rmse_stats, FrontSnapshot, RmseStats};
use crate::optimizers::{run, Algorithm, OptimizerConfig, RunResult};

pub const TOOL_VERSION: &str = concat!("gpmoead ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Generated from `[synth]` with `data.seed`.
    Synthetic,
    /// An encoded CSV at `data.path`.
    Encoded,
    /// A raw CSV at `data.path` plus the monthly series at `data.sunspot_csv`.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub source: DataSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sunspot_csv: Option<PathBuf>,
    pub seed: u64,
    /// Random subsample size of the synthetic hourly records.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    /// Sinusoids in the smoothed solar index.
    pub sunspot_components: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Synthetic,
            path: None,
            sunspot_csv: None,
            seed: 1,
            rows: Some(5000),
            sunspot_components: 2,
        }
    }
}

impl DataConfig {
    fn validate(&self) -> Result<()> {
        if self.sunspot_components < 1 {
            return Err(Error::Config("data.sunspot_components must be >= 1".into()));
        }
        match self.source {
            DataSource::Synthetic => Ok(()),
            DataSource::Encoded if self.path.is_some() => Ok(()),
            DataSource::Raw if self.path.is_some() && self.sunspot_csv.is_some() => Ok(()),
            DataSource::Encoded => Err(Error::Config("data.source = \"encoded\" needs data.path".into())),
            DataSource::Raw => Err(Error::Config("data.source = \"raw\" needs data.path and data.sunspot_csv".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub algorithms: Vec<Algorithm>,
    pub k_folds: usize,
    pub replicates: usize,
    pub base_seed: u64,
    /// Share of each training block used for fitness evaluation.
    pub split_fraction: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            algorithms: Algorithm::ALL.to_vec(),
            k_folds: 10,
            replicates: 5,
            base_seed: 1,
            split_fraction: 0.67,
        }
    }
}

/// Everything an experiment needs; also the run-config document.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentPlan {
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub experiment: ProtocolConfig,
    pub optimizer: OptimizerConfig,
    /// Per-algorithm replacements for `[optimizer]`, keyed by algorithm name.
    pub overrides: BTreeMap<String, OptimizerConfig>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        if self.data.source == DataSource::Synthetic {
            self.synth_config().validate()?;
        }
        let p = &self.experiment;
        if p.algorithms.is_empty() {
            return Err(Error::Config("experiment.algorithms is empty".into()));
        }
        let mut seen = p.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != p.algorithms.len() {
            return Err(Error::Config("experiment.algorithms lists an algorithm twice".into()));
        }
        if p.k_folds < 2 {
            return Err(Error::Config(format!("experiment.k_folds {} must be >= 2", p.k_folds)));
        }
        if p.replicates < 1 {
            return Err(Error::Config("experiment.replicates must be >= 1".into()));
        }
        if !(p.split_fraction > 0.0 && p.split_fraction < 1.0) {
            return Err(Error::Config(format!("experiment.split_fraction {} outside (0, 1)", p.split_fraction)));
        }
        for name in self.overrides.keys() {
            name.parse::<Algorithm>()?;
        }
        self.optimizer.validate()?;
        for a in &p.algorithms {
            self.optimizer_for(*a).validate()?;
        }
        Ok(())
    }

    /// The generator settings; `synth.rows` takes precedence over `data.rows`.
    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            rows: self.synth.rows.or(self.data.rows),
            ..self.synth.clone()
        }
    }

    pub fn optimizer_for(&self, algorithm: Algorithm) -> &OptimizerConfig {
        self.overrides.get(algorithm.name()).unwrap_or(&self.optimizer)
    }

    /// Loads or generates the encoded dataset in chronological order.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let d = &self.data;
        match d.source {
            DataSource::Encoded => load_encoded_csv(d.path.as_ref().expect("validated")),
            DataSource::Raw => {
                let raw = load_raw_csv(d.path.as_ref().expect("validated"))?;
                check_chronological(&raw)?;
                let monthly = load_sunspot_csv(d.sunspot_csv.as_ref().expect("validated"))?;
                encode_records(&raw, &fit_sunspot(&monthly, d.sunspot_components)?)
            }
            DataSource::Synthetic => {
                let mut rng = ChaCha8Rng::seed_from_u64(d.seed);
                let synth = self.synth_config();
                let raw = synth_vtec(&synth, &mut rng)?;
                let monthly = synth_sunspot_monthly(&synth, &mut rng)?;
                encode_records(&raw, &fit_sunspot(&monthly, d.sunspot_components)?)
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invariant(format!("plan does not serialise: {e}")))
    }

    /// SHA-256 of the resolved plan, hex encoded.
    pub fn digest(&self) -> Result<String> {
        Ok(hex_digest(self.to_toml()?.as_bytes()))
    }

    pub fn replicate_seed(&self, fold: usize, replicate: usize) -> u64 {
        let p = &self.experiment;
        p.base_seed
            .wrapping_add((fold as u64).wrapping_mul(p.replicates as u64))
            .wrapping_add(replicate as u64)
    }

    pub fn split_seed(&self, fold: usize) -> u64 {
        self.experiment.base_seed.wrapping_add(fold as u64)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Outcome of one (fold, algorithm, replicate) run, as persisted in `cell.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub fold: usize,
    pub algorithm: Algorithm,
    pub replicate: usize,
    pub seed: u64,
    pub plan_digest: String,
    pub test_rmse: f64,
    pub validation_rmse: f64,
    pub fitness_rmse: f64,
    pub size: usize,
    pub model: String,
    pub generations: usize,
    /// Distinct archive objective vectors (fitness RMSE, size), sorted.
    pub front: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmFold {
    pub algorithm: Algorithm,
    /// Test RMSE of each replicate's selected model.
    pub test_rmse: Vec<f64>,
    /// Replicate with the (lower) median test RMSE.
    pub median_replicate: usize,
    pub median_test_rmse: f64,
    /// Archive of the median replicate.
    pub front: FrontSnapshot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldReport {
    pub fold: usize,
    pub test_rows: usize,
    pub algorithms: Vec<AlgorithmFold>,
}

impl FoldReport {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmFold> {
        self.algorithms.iter().find(|a| a.algorithm == algorithm)
    }
}

/// One comparison-table row: `C(N,M), C(M,N), Δ(N), Δ(M), NDS(N), NDS(M)`.
/// Δ is absent for a single-point front.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub fold: usize,
    pub c_nm: f64,
    pub c_mn: f64,
    pub delta_n: Option<f64>,
    pub delta_m: Option<f64>,
    pub nds_n: usize,
    pub nds_m: usize,
}

impl ComparisonRow {
    fn values(&self) -> [Option<f64>; 6] {
        [
            Some(self.c_nm),
            Some(self.c_mn),
            self.delta_n,
            self.delta_m,
            Some(self.nds_n as f64),
            Some(self.nds_m as f64),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// Column statistics over the folds where the column is defined.
    pub column_stats: [Option<RmseStats>; 6],
}

pub const TABLE1_HEADER: &str = "fold,C(N;M),C(M;N),Delta(N),Delta(M),NDS(N),NDS(M)";

/// Per-fold comparison of front `M` against front `N`.
pub fn compare_fronts(m: &[(usize, FrontSnapshot)], n: &[(usize, FrontSnapshot)]) -> Result<ComparisonTable> {
    if m.len() != n.len() || m.iter().zip(n).any(|(a, b)| a.0 != b.0) {
        return Err(Error::Invariant("compared reports cover different folds".into()));
    }
    let delta = |f: &FrontSnapshot| if f.len() >= 2 { delta_metric(f, None).ok() } else { None };
    let mut rows = Vec::with_capacity(m.len());
    for ((fold, fm), (_, fnn)) in m.iter().zip(n) {
        rows.push(ComparisonRow {
            fold: *fold,
            c_nm: c_metric(fnn, fm)?,
            c_mn: c_metric(fm, fnn)?,
            delta_n: delta(fnn),
            delta_m: delta(fm),
            nds_n: nds(fnn),
            nds_m: nds(fm),
        });
    }
    let column_stats = std::array::from_fn(|c| {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.values()[c]).collect();
        rmse_stats(&vals).ok()
    });
    Ok(ComparisonTable { rows, column_stats })
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let mut out = format!("{TABLE1_HEADER}\n");
        for r in &self.rows {
            let vals: Vec<String> = r.values().iter().map(|v| cell(*v)).collect();
            out.push_str(&format!("{},{}\n", r.fold, vals.join(",")));
        }
        for (label, pick) in [("mean", 0), ("std", 1)] {
            let vals: Vec<String> = self
                .column_stats
                .iter()
                .map(|s| cell(s.map(|s| if pick == 0 { s.mean } else { s.std })))
                .collect();
            out.push_str(&format!("{label},{}\n", vals.join(",")));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub folds: Vec<FoldReport>,
    pub cells: Vec<CellResult>,
    /// Stats over the per-fold median test RMSE, per algorithm.
    pub aggregate: BTreeMap<Algorithm, RmseStats>,
    /// Present when both moead and nsga2 ran.
    pub table1: Option<ComparisonTable>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Bundle directory; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
    /// Reuse cells whose `cell.json` already exists for the same plan.
    pub resume: bool,
}

struct FoldData {
    fitness: Dataset,
    validation: Dataset,
    test: Dataset,
}

fn cell_dir(out: &Path, fold: usize, algorithm: Algorithm, replicate: usize) -> PathBuf {
    out.join("folds").join(fold.to_string()).join(algorithm.name()).join(replicate.to_string())
}

fn distinct_front(result: &RunResult) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = result.archive.iter().map(|m| [m.rmse(), m.size() as f64]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    pts
}

fn read_cell(path: &Path) -> Option<CellResult> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    write_text(path, |w| writeln!(w, "{text}"))
}

/// Runs the whole protocol and, with `out_dir`, writes the report bundle.
pub fn run_experiment(plan: &ExperimentPlan, options: &RunOptions) -> Result<ExperimentReport> {
    plan.validate()?;
    let digest = plan.digest()?;
    let data = plan.load_dataset()?;
    let p = &plan.experiment;
    if data.len() < p.k_folds {
        return Err(Error::Data(format!("{} rows cannot fill {} folds", data.len(), p.k_folds)));
    }
    let folds = build_folds(data.len(), p.k_folds)?;

    let mut fold_data = Vec::with_capacity(p.k_folds);
    for f in 0..p.k_folds {
        let test_range = folds.fold(f);
        let training = folds.training_indices(f);
        let mut rng = ChaCha8Rng::seed_from_u64(plan.split_seed(f));
        let (fit_idx, val_idx) = split_training(&training, p.split_fraction, &mut rng)?;
        if fit_idx.iter().chain(&val_idx).any(|i| test_range.contains(i)) {
            return Err(Error::Invariant(format!("fold {f}: training rows overlap the test fold")));
        }
        if fit_idx.is_empty() || val_idx.is_empty() {
            return Err(Error::Data(format!("fold {f}: empty fitness or validation set")));
        }
        let test_idx: Vec<usize> = test_range.collect();
        fold_data.push(FoldData {
            fitness: data.subset(&fit_idx),
            validation: data.subset(&val_idx),
            test: data.subset(&test_idx),
        });
    }

    if let Some(out) = &options.out_dir {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let echo = format!("# {TOOL_VERSION}\n{}", plan.to_toml()?);
        write_text(&out.join("config.toml"), |w| w.write_all(echo.as_bytes()))?;
    }

    let mut jobs = Vec::new();
    for f in 0..p.k_folds {
        for &a in &p.algorithms {
            for r in 0..p.replicates {
                jobs.push((f, a, r));
            }
        }
    }

    let run_cell = |&(f, a, r): &(usize, Algorithm, usize)| -> Result<CellResult> {
        let seed = plan.replicate_seed(f, r);
        let dir = options.out_dir.as_ref().map(|o| cell_dir(o, f, a, r));
        if let (true, Some(dir)) = (options.resume, &dir) {
            if let Some(done) = read_cell(&dir.join("cell.json")) {
                if done.plan_digest == digest && done.seed == seed {
                    log::info!("fold {f} {a} replicate {r}: reusing completed cell");
                    return Ok(done);
                }
            }
        }
        let fd = &fold_data[f];
        let result = run(a, plan.optimizer_for(a), &fd.fitness, &fd.validation, seed)?;
        let best = result.best();
        let cell = CellResult {
            fold: f,
            algorithm: a,
            replicate: r,
            seed,
            plan_digest: digest.clone(),
            test_rmse: rmse(&best.tree, &fd.test)?,
            validation_rmse: result.best_validation_rmse(),
            fitness_rmse: best.rmse(),
            size: best.size(),
            model: best.tree.to_prefix(),
            generations: result.generations(),
            front: distinct_front(&result),
        };
        if let Some(dir) = &dir {
            result.write_bundle(dir)?;
            // written last: its presence marks the cell complete
            write_json(&dir.join("cell.json"), &cell)?;
        }
        log::info!("fold {f} {a} replicate {r}: test rmse {:.6}", cell.test_rmse);
        Ok(cell)
    };

    let cells: Vec<CellResult> = if options.jobs == 0 {
        jobs.par_iter().map(run_cell).collect::<Result<_>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(run_cell).collect::<Result<_>>())?
    };

    let report = assemble(plan, &cells, &fold_data)?;
    if let Some(out) = &options.out_dir {
        write_reports(out, plan, &report)?;
    }
    Ok(report)
}

fn assemble(plan: &ExperimentPlan, cells: &[CellResult], fold_data: &[FoldData]) -> Result<ExperimentReport> {
    let p = &plan.experiment;
    let mut folds = Vec::with_capacity(p.k_folds);
    for (f, fd) in fold_data.iter().enumerate() {
        let mut algorithms = Vec::new();
        for &a in &p.algorithms {
            let mut reps: Vec<&CellResult> = cells.iter().filter(|c| c.fold == f && c.algorithm == a).collect();
            reps.sort_by_key(|c| c.replicate);
            let test_rmse: Vec<f64> = reps.iter().map(|c| c.test_rmse).collect();
            let mut order: Vec<usize> = (0..reps.len()).collect();
            order.sort_by(|&x, &y| test_rmse[x].total_cmp(&test_rmse[y]).then(x.cmp(&y)));
            let median_replicate = order[(order.len() - 1) / 2];
            let label = format!("{a} fold {f}");
            algorithms.push(AlgorithmFold {
                algorithm: a,
                median_test_rmse: test_rmse[median_replicate],
                front: FrontSnapshot::new(label, reps[median_replicate].front.clone())?,
                median_replicate,
                test_rmse,
            });
        }
        folds.push(FoldReport {
            fold: f,
            test_rows: fd.test.len(),
            algorithms,
        });
    }

    let mut aggregate = BTreeMap::new();
    for &a in &p.algorithms {
        let medians: Vec<f64> = folds.iter().map(|f| f.get(a).expect("ran").median_test_rmse).collect();
        aggregate.insert(a, rmse_stats(&medians)?);
    }

    let table1 = if p.algorithms.contains(&Algorithm::Moead) && p.algorithms.contains(&Algorithm::Nsga2) {
        let pick = |a| -> Vec<(usize, FrontSnapshot)> {
            folds.iter().map(|f| (f.fold, f.get(a).expect("ran").front.clone())).collect()
        };
        Some(compare_fronts(&pick(Algorithm::Moead), &pick(Algorithm::Nsga2))?)
    } else {
        None
    };

    let mut cells = cells.to_vec();
    cells.sort_by_key(|c| (c.fold, c.algorithm, c.replicate));
    Ok(ExperimentReport {
        folds,
        cells,
        aggregate,
        table1,
    })
}

#[derive(Serialize)]
struct AggregateEntry<'a> {
    per_fold_median_test_rmse: Vec<f64>,
    median_replicate: Vec<usize>,
    stats: &'a RmseStats,
}

#[derive(Serialize)]
struct AggregateFile<'a> {
    tool_version: &'static str,
    plan_digest: String,
    k_folds: usize,
    replicates: usize,
    algorithms: BTreeMap<&'static str, AggregateEntry<'a>>,
}

fn write_reports(out: &Path, plan: &ExperimentPlan, report: &ExperimentReport) -> Result<()> {
    write_text(&out.join("per_fold_rmse.csv"), |w| {
        writeln!(w, "fold,algorithm,replicate,seed,test_rmse,validation_rmse,fitness_rmse,size,median")?;
        for c in &report.cells {
            let median = report.folds[c.fold].get(c.algorithm).map(|a| a.median_replicate) == Some(c.replicate);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                c.fold,
                c.algorithm,
                c.replicate,
                c.seed,
                c.test_rmse,
                c.validation_rmse,
                c.fitness_rmse,
                c.size,
                u8::from(median)
            )?;
        }
        Ok(())
    })?;

    let table_path = out.join("table1.csv");
    match &report.table1 {
        Some(t) => write_text(&table_path, |w| w.write_all(t.to_csv().as_bytes()))?,
        None if table_path.exists() => std::fs::remove_file(&table_path).map_err(|e| Error::io(&table_path, e))?,
        None => {}
    }

    let algorithms = report
        .aggregate
        .iter()
        .map(|(a, stats)| {
            let entry = AggregateEntry {
                per_fold_median_test_rmse: report.folds.iter().map(|f| f.get(*a).expect("ran").median_test_rmse).collect(),
                median_replicate: report.folds.iter().map(|f| f.get(*a).expect("ran").median_replicate).collect(),
                stats,
            };
            (a.name(), entry)
        })
        .collect();
    write_json(
        &out.join("aggregate.json"),
        &AggregateFile {
            tool_version: TOOL_VERSION,
            plan_digest: plan.digest()?,
            k_folds: plan.experiment.k_folds,
            replicates: plan.experiment.replicates,
            algorithms,
        },
    )
}
