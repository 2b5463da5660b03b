//! One GP-MOEA/D run on synthetic data, printing the trace and the final front.
//!
//! cargo run --release --example evolve_moead

use gpmoead::dataio::{encode_records, fit_sunspot, split_training, synth_sunspot_monthly, synth_vtec};
use gpmoead::optimizers::{run_observed, run_rng, GenerationView, Observer};
use gpmoead::{Algorithm, OptimizerConfig, Result, SynthConfig};

struct Progress;

impl Observer for Progress {
    fn generation_end(&mut self, view: &GenerationView<'_>) {
        if view.generation.is_multiple_of(10) {
            let z = view.reference.unwrap_or_default();
            println!("gen {:>3}: ideal point rmse {:.3} size {}", view.generation, z[0], z[1]);
        }
    }
}

fn main() -> Result<()> {
    let synth = SynthConfig {
        rows: Some(1500),
        ..SynthConfig::default()
    };
    let mut rng = run_rng(1);
    let records = synth_vtec(&synth, &mut rng)?;
    let sunspot = fit_sunspot(&synth_sunspot_monthly(&synth, &mut rng)?, 2)?;
    let data = encode_records(&records, &sunspot)?;
    let all: Vec<usize> = (0..data.len()).collect();
    let (fit, val) = split_training(&all, 0.67, &mut rng)?;

    let config = OptimizerConfig {
        population_size: 100,
        gen_max: 40,
        ..OptimizerConfig::default()
    };
    let result = run_observed(Algorithm::Moead, &config, &data.subset(&fit), &data.subset(&val), 7, &mut Progress)?;

    println!("\nexternal population ({} models):", result.archive.len());
    let mut front = result.archive.clone();
    front.sort_by(|a, b| a.size().cmp(&b.size()).then(a.rmse().total_cmp(&b.rmse())));
    for m in &front {
        let v = m.validation.map_or(f64::NAN, |v| v.rmse);
        println!("  size {:>3}  fit {:>7.3}  val {:>7.3}  {}", m.size(), m.rmse(), v, m.tree);
    }
    println!("\nselected: {} (validation RMSE {:.3})", result.best().tree, result.best_validation_rmse());
    Ok(())
}
