//! Multi-objective genetic programming for vertical total electron content
//! (vTEC) symbolic regression.
//!
//! Models are prefix-notation expression trees over five inputs (`sinhour`,
//! `coshour`, `sinday`, `cosday`, `ssn`) scored on two minimised objectives:
//! training RMSE and tree size. Three optimizers share one operator set:
//!
//! * [`Algorithm::Sgp`]: single-objective elitist GP with a convergence stop.
//! * [`Algorithm::Nsga2`]: non-dominated sorting with crowding distance.
//! * [`Algorithm::Moead`]: decomposition with Tchebycheff scalarisation.
//!
//! ```no_run
//! use gpmoead::{dataio, run, Algorithm, OptimizerConfig};
//!
//! let fit = dataio::load_encoded_csv("fitness.csv")?;
//! let val = dataio::load_encoded_csv("validation.csv")?;
//! let result = run(Algorithm::Moead, &OptimizerConfig::default(), &fit, &val, 7)?;
//! println!("{} (validation RMSE {})", result.best().tree, result.best_validation_rmse());
//! # Ok::<(), gpmoead::Error>(())
//! ```
//!
//! The crate's `examples/` directory has one runnable program per capability.

pub mod cli;
pub mod config;
pub mod dataio;
pub mod error;
pub mod evo;
pub mod experiment;
pub mod exprtree;
pub mod fitness;
pub mod metrics;
pub mod optimizers;
pub mod pareto;

pub use config::{load_config, parse_config, RunConfigFile};
pub use dataio::{Dataset, SynthConfig};
pub use error::{Error, Result};
pub use evo::OperatorConfig;
pub use experiment::{run_experiment, ExperimentPlan, ExperimentReport, RunOptions};
pub use exprtree::{parse_prefix, ExprTree};
pub use fitness::Individual;
pub use metrics::{c_metric, delta_metric, nds, rmse_stats, FrontSnapshot, RmseStats};
pub use optimizers::{run, run_observed, Algorithm, OptimizerConfig, RunResult};
pub use pareto::{dominates, ParetoArchive};
