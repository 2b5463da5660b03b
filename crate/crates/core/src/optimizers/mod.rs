//! End-to-end search procedures: GP-MOEA/D, GP-NSGA-II and single-objective GP.
//!
//! All three share the tree language, the mutation operators and the
//! (RMSE, size) objectives, and all finish the same way: every archived model
//! is scored on the validation set and the lowest validation RMSE wins.

mod moead;
mod nsga2;
mod sgp;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{write_text, Dataset};
use crate::error::{Error, Result};
use crate::evo::OperatorConfig;
use crate::exprtree::ExprTree;
use crate::fitness::Individual;
use crate::pareto::ParetoArchive;

pub use moead::{moead_run, neighborhoods, tchebycheff, uniform_weights, update_reference, WeightVector};
pub use nsga2::nsga2_run;
pub use sgp::sgp_run;

/// The random source every run draws from.
pub type RunRng = ChaCha8Rng;

pub fn run_rng(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sgp,
    Nsga2,
    Moead,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Sgp, Algorithm::Nsga2, Algorithm::Moead];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sgp => "sgp",
            Algorithm::Nsga2 => "nsga2",
            Algorithm::Moead => "moead",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgp" => Ok(Algorithm::Sgp),
            "nsga2" => Ok(Algorithm::Nsga2),
            "moead" => Ok(Algorithm::Moead),
            other => Err(Error::Config(format!("unknown algorithm {other:?} (expected sgp, nsga2 or moead)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Population size `m` (number of subproblems for MOEA/D).
    pub population_size: usize,
    pub gen_max: usize,
    /// MOEA/D neighbourhood size `T`; `max(2, ceil(m/10))` when absent.
    pub neighborhood_size: Option<usize>,
    /// sGP stops once the best RMSE improves by less than this ...
    pub convergence_epsilon: f64,
    /// ... for this many consecutive generations.
    pub convergence_patience: usize,
    pub operators: OperatorConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population_size: 200,
            gen_max: 50,
            neighborhood_size: None,
            convergence_epsilon: 1e-6,
            convergence_patience: 5,
            operators: OperatorConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.operators.validate()?;
        if self.population_size < 2 {
            return Err(Error::Config(format!("population_size {} must be >= 2", self.population_size)));
        }
        if let Some(t) = self.neighborhood_size {
            if t < 1 || t > self.population_size {
                return Err(Error::Config(format!(
                    "neighborhood_size {t} must be in 1..={}",
                    self.population_size
                )));
            }
        }
        if self.convergence_epsilon.is_nan() || self.convergence_epsilon < 0.0 {
            return Err(Error::Config("convergence_epsilon must be >= 0".into()));
        }
        if self.convergence_patience < 1 {
            return Err(Error::Config("convergence_patience must be >= 1".into()));
        }
        Ok(())
    }

    pub fn neighborhood(&self) -> usize {
        self.neighborhood_size
            .unwrap_or_else(|| 2.max(self.population_size.div_ceil(10)))
            .min(self.population_size)
    }
}

/// One row of the per-generation trace.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    /// Lowest fitness-set RMSE in the working population.
    pub best_rmse: f64,
    pub archive_size: usize,
    /// Evaluations so far, initial population included.
    pub evaluations: usize,
    /// Wall time of this generation. Kept out of written reports.
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub algorithm: Algorithm,
    /// Archive members, each scored on the validation set.
    pub archive: Vec<Individual>,
    /// Index of the selected model in `archive`.
    pub best_index: usize,
    pub trace: Vec<GenerationStats>,
}

impl RunResult {
    pub fn best(&self) -> &Individual {
        &self.archive[self.best_index]
    }

    pub fn generations(&self) -> usize {
        self.trace.len()
    }

    pub fn best_validation_rmse(&self) -> f64 {
        self.best().validation.map_or(f64::NAN, |v| v.rmse)
    }

    /// Writes `ep.csv`, `best_model.txt` and `trace.csv` into `dir`.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_text(&dir.join("ep.csv"), |w| {
            writeln!(w, "rmse_fitness,size,rmse_validation,prefix_expression")?;
            for m in &self.archive {
                let v = m.validation.map_or(f64::NAN, |v| v.rmse);
                writeln!(w, "{},{},{},{}", m.rmse(), m.size(), v, m.tree)?;
            }
            Ok(())
        })?;
        write_text(&dir.join("best_model.txt"), |w| writeln!(w, "{}", self.best().tree))?;
        write_text(&dir.join("trace.csv"), |w| {
            writeln!(w, "generation,best_rmse,archive_size,evaluations")?;
            for t in &self.trace {
                writeln!(w, "{},{},{},{}", t.generation, t.best_rmse, t.archive_size, t.evaluations)?;
            }
            Ok(())
        })
    }
}

/// Read-only view handed to observers at the end of each generation.
pub struct GenerationView<'a> {
    pub generation: usize,
    pub population: &'a [Individual],
    /// MOEA/D's reference point; `None` for the other algorithms.
    pub reference: Option<[f64; 2]>,
    pub weights: Option<&'a [WeightVector]>,
}

/// Hooks into a running search, e.g. to log every evaluation.
pub trait Observer {
    fn evaluated(&mut self, _individual: &Individual) {}
    fn generation_end(&mut self, _view: &GenerationView<'_>) {}
}

impl Observer for () {}

/// Runs `algorithm` with a fresh RNG seeded from `seed`.
pub fn run(
    algorithm: Algorithm,
    config: &OptimizerConfig,
    fitness_set: &Dataset,
    validation_set: &Dataset,
    seed: u64,
) -> Result<RunResult> {
    run_observed(algorithm, config, fitness_set, validation_set, seed, &mut ())
}

pub fn run_observed(
    algorithm: Algorithm,
    config: &OptimizerConfig,
    fitness_set: &Dataset,
    validation_set: &Dataset,
    seed: u64,
    observer: &mut dyn Observer,
) -> Result<RunResult> {
    let mut rng = run_rng(seed);
    match algorithm {
        Algorithm::Sgp => sgp_run(config, fitness_set, validation_set, &mut rng, observer),
        Algorithm::Nsga2 => nsga2_run(config, fitness_set, validation_set, &mut rng, observer),
        Algorithm::Moead => moead_run(config, fitness_set, validation_set, &mut rng, observer),
    }
}

fn check_inputs(config: &OptimizerConfig, fitness_set: &Dataset, validation_set: &Dataset) -> Result<()> {
    config.validate()?;
    if fitness_set.is_empty() {
        return Err(Error::Data("empty fitness-evaluation set".into()));
    }
    if validation_set.is_empty() {
        return Err(Error::Data("empty validation set".into()));
    }
    Ok(())
}

/// Scores a batch of trees in parallel; results keep the input order.
fn evaluate_batch(trees: Vec<ExprTree>, data: &Dataset) -> Result<Vec<Individual>> {
    trees.into_par_iter().map(|t| Individual::evaluate(t, data)).collect()
}

fn min_rmse(population: &[Individual]) -> f64 {
    population.iter().map(Individual::rmse).fold(f64::INFINITY, f64::min)
}

/// Scores every archive member on the validation set and picks the lowest
/// validation RMSE, then the smaller tree, then the earlier member.
fn select_by_validation(
    algorithm: Algorithm,
    archive: ParetoArchive<Individual>,
    validation_set: &Dataset,
    trace: Vec<GenerationStats>,
) -> Result<RunResult> {
    let archive: Vec<Individual> = archive
        .into_members()
        .into_par_iter()
        .map(|m| m.with_validation(validation_set))
        .collect::<Result<_>>()?;
    if archive.is_empty() {
        return Err(Error::Invariant("empty archive at the end of a run".into()));
    }
    let key = |m: &Individual| (m.validation.expect("scored").rmse, m.size());
    let mut best_index = 0;
    for (i, m) in archive.iter().enumerate().skip(1) {
        let (v, s) = key(m);
        let (bv, bs) = key(&archive[best_index]);
        if v < bv || (v == bv && s < bs) {
            best_index = i;
        }
    }
    Ok(RunResult {
        algorithm,
        archive,
        best_index,
        trace,
    })
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::pareto::nondominated_filter;
    use std::collections::BTreeSet;

    fn small(gen_max: usize) -> OptimizerConfig {
        OptimizerConfig {
            population_size: 30,
            gen_max,
            ..Default::default()
        }
    }

    fn keyed(members: &[Individual]) -> BTreeSet<(u64, usize, String)> {
        members.iter().map(|m| (m.rmse().to_bits(), m.size(), m.tree.to_prefix())).collect()
    }

    #[test]
    fn config_checks() {
        assert!(OptimizerConfig::default().validate().is_ok());
        assert!(small(0).validate().is_ok());
        let bad = OptimizerConfig { population_size: 1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig { neighborhood_size: Some(0), ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!(OptimizerConfig::default().neighborhood(), 20);
        assert_eq!(small(0).neighborhood(), 3);
        let tiny = OptimizerConfig { population_size: 5, ..Default::default() };
        assert_eq!(tiny.neighborhood(), 2);
        assert_eq!("moead".parse::<Algorithm>().unwrap(), Algorithm::Moead);
        assert!("nsga3".parse::<Algorithm>().is_err());
    }

    #[test]
    fn empty_sets_rejected() {
        let d = target_data("ssn", 20, 1);
        for a in Algorithm::ALL {
            assert!(run(a, &small(1), &Dataset::new(), &d, 1).is_err());
            assert!(run(a, &small(1), &d, &Dataset::new(), 1).is_err());
        }
    }

    #[test]
    fn gen_max_zero_is_initialisation_only() {
        let fit = target_data("(+ ssn sinday)", 60, 2);
        let val = target_data("(+ ssn sinday)", 30, 3);
        for a in [Algorithm::Moead, Algorithm::Nsga2] {
            let mut rec = Recorder::default();
            let r = run_observed(a, &small(0), &fit, &val, 4, &mut rec).unwrap();
            assert_eq!(r.generations(), 0);
            assert_eq!(rec.evaluated.len(), 30);
            let front: Vec<Individual> = nondominated_filter(&rec.evaluated)
                .into_iter()
                .map(|i| rec.evaluated[i].clone())
                .collect();
            assert_eq!(keyed(&r.archive), keyed(&front));
            let best_val = r.archive.iter().map(|m| m.validation.unwrap().rmse).fold(f64::INFINITY, f64::min);
            assert_eq!(r.best_validation_rmse(), best_val);
        }
    }

    #[test]
    fn archive_is_front_of_all_evaluations() {
        let fit = target_data("(* sinhour (+ ssn cosday))", 80, 5);
        let val = target_data("(* sinhour (+ ssn cosday))", 40, 6);
        for a in [Algorithm::Moead, Algorithm::Nsga2] {
            for seed in 0..3 {
                let mut rec = Recorder::default();
                let r = run_observed(a, &small(8), &fit, &val, seed, &mut rec).unwrap();
                assert_eq!(rec.evaluated.len(), 30 * 9);
                let front: Vec<Individual> = nondominated_filter(&rec.evaluated)
                    .into_iter()
                    .map(|i| rec.evaluated[i].clone())
                    .collect();
                assert_eq!(keyed(&r.archive), keyed(&front), "{a} seed {seed}");
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let fit = target_data("(- ssn (* coshour ssn))", 60, 7);
        let val = target_data("(- ssn (* coshour ssn))", 30, 8);
        for a in Algorithm::ALL {
            let r1 = run(a, &small(5), &fit, &val, 11).unwrap();
            let r2 = run(a, &small(5), &fit, &val, 11).unwrap();
            assert_eq!(r1.archive, r2.archive);
            assert_eq!(r1.best_index, r2.best_index);
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            let r3 = pool.install(|| run(a, &small(5), &fit, &val, 11)).unwrap();
            assert_eq!(r1.archive, r3.archive);
        }
    }

    #[test]
    fn bundle_files() {
        let fit = target_data("(+ sinhour ssn)", 40, 9);
        let val = target_data("(+ sinhour ssn)", 20, 10);
        let r = run(Algorithm::Moead, &small(3), &fit, &val, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        r.write_bundle(dir.path()).unwrap();
        let ep = std::fs::read_to_string(dir.path().join("ep.csv")).unwrap();
        assert_eq!(ep.lines().count(), r.archive.len() + 1);
        assert!(ep.starts_with("rmse_fitness,size,rmse_validation,prefix_expression\n"));
        let best = std::fs::read_to_string(dir.path().join("best_model.txt")).unwrap();
        assert_eq!(crate::exprtree::parse_prefix(best.trim()).unwrap(), *r.best().tree);
        let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 4);
    }
}
