//! sGP, GP-NSGA-II and GP-MOEA/D on the same split, compared by held-out RMSE
//! and by their fronts.
//!
//! cargo run --release --example compare_algorithms

use gpmoead::dataio::{build_folds, encode_records, fit_sunspot, split_training, synth_sunspot_monthly, synth_vtec};
use gpmoead::fitness::rmse;
use gpmoead::optimizers::run_rng;
use gpmoead::{c_metric, nds, run, Algorithm, FrontSnapshot, OptimizerConfig, Result, SynthConfig};

fn main() -> Result<()> {
    let synth = SynthConfig {
        rows: Some(2000),
        ..SynthConfig::default()
    };
    let mut rng = run_rng(5);
    let records = synth_vtec(&synth, &mut rng)?;
    let sunspot = fit_sunspot(&synth_sunspot_monthly(&synth, &mut rng)?, 2)?;
    let data = encode_records(&records, &sunspot)?;

    let folds = build_folds(data.len(), 5)?;
    let test = data.subset(&folds.fold(4).collect::<Vec<_>>());
    let (fit, val) = split_training(&folds.training_indices(4), 0.67, &mut rng)?;
    let (fit, val) = (data.subset(&fit), data.subset(&val));

    let config = OptimizerConfig {
        population_size: 100,
        gen_max: 30,
        ..OptimizerConfig::default()
    };
    let mut fronts = Vec::new();
    for algorithm in Algorithm::ALL {
        let result = run(algorithm, &config, &fit, &val, 42)?;
        let best = result.best();
        println!(
            "{:>5}: test RMSE {:>7.3}  size {:>3}  generations {:>2}  |EP| {}",
            algorithm.name(),
            rmse(&best.tree, &test)?,
            best.size(),
            result.generations(),
            result.archive.len()
        );
        let mut points: Vec<[f64; 2]> = result.archive.iter().map(|m| [m.rmse(), m.size() as f64]).collect();
        points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        points.dedup();
        fronts.push((algorithm, FrontSnapshot::new(algorithm.name(), points)?));
    }

    let moead = &fronts[2].1;
    let nsga2 = &fronts[1].1;
    println!("\nC(moead, nsga2) = {:.3}", c_metric(moead, nsga2)?);
    println!("C(nsga2, moead) = {:.3}", c_metric(nsga2, moead)?);
    println!("NDS: moead {} nsga2 {}", nds(moead), nds(nsga2));
    Ok(())
}
