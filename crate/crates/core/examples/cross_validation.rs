//! The k-fold experiment harness with its report files.
//!
//! cargo run --release --example cross_validation [out_dir]

use std::path::PathBuf;

use gpmoead::{parse_config, run_experiment, Result, RunOptions};

const PLAN: &str = r#"
[data]
rows = 1200

[experiment]
algorithms = ["sgp", "nsga2", "moead"]
k_folds = 4
replicates = 2

[optimizer]
population_size = 60
gen_max = 15
"#;

fn main() -> Result<()> {
    let out_dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("gpmoead-cv"), PathBuf::from);
    let plan = parse_config(PLAN)?;
    let report = run_experiment(
        &plan,
        &RunOptions {
            out_dir: Some(out_dir.clone()),
            jobs: 0,
            resume: false,
        },
    )?;

    for fold in &report.folds {
        let medians: Vec<String> = fold
            .algorithms
            .iter()
            .map(|a| format!("{} {:.3}", a.algorithm, a.median_test_rmse))
            .collect();
        println!("fold {} ({} test rows): {}", fold.fold, fold.test_rows, medians.join(", "));
    }
    for (algorithm, s) in &report.aggregate {
        println!("{:>5}: mean {:.3} std {:.3} [{:.3}, {:.3}]", algorithm.name(), s.mean, s.std, s.min, s.max);
    }
    if let Some(table) = &report.table1 {
        print!("\n{}", table.to_csv());
    }
    println!("\nreport written to {}", out_dir.display());
    Ok(())
}
