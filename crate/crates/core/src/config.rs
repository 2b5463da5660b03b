//! Run-config documents (TOML).
//!
//! Every key is optional and falls back to its default; unknown keys are
//! errors. The full default document:
//!
//! ```toml
//! [data]
//! source = "synthetic"        # or "encoded" (path) / "raw" (path + sunspot_csv)
//! seed = 1                    # synthetic generator seed
//! rows = 5000                 # random subsample of the synthetic hourly records
//! sunspot_components = 2
//!
//! [synth]
//! start_year = 1998
//! end_year = 2009
//! noise = 2.0
//! # ... see SynthConfig for the remaining shape parameters
//!
//! [experiment]
//! algorithms = ["sgp", "nsga2", "moead"]
//! k_folds = 10
//! replicates = 5
//! base_seed = 1
//! split_fraction = 0.67
//!
//! [optimizer]
//! population_size = 200
//! gen_max = 50
//! # neighborhood_size = 20   # default max(2, ceil(m/10))
//! convergence_epsilon = 1e-6
//! convergence_patience = 5
//!
//! [optimizer.operators]
//! tournament_size = 7
//! p_subtree = 0.6
//! max_depth = 12
//! init_depth = 6
//! ephemeral_constants = false
//! constant_range = [-5.0, 5.0]
//!
//! # [overrides.sgp]           # replaces [optimizer] for one algorithm
//! # population_size = 1000
//! ```
//!
//! Relative data paths resolve against the config file's directory.

use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::ExperimentPlan;

pub type RunConfigFile = ExperimentPlan;

pub fn parse_config(text: &str) -> Result<RunConfigFile> {
    let plan: RunConfigFile = toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
    plan.validate()?;
    Ok(plan)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfigFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut plan = parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [&mut plan.data.path, &mut plan.data.sunspot_csv].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(plan)
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
