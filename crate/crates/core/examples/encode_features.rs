//! Synthetic vTEC records, sunspot smoothing and the quadrature encoding.
//!
//! cargo run --example encode_features

use gpmoead::dataio::{encode_day, encode_hour, encode_records, fit_sunspot, synth_sunspot_monthly, synth_vtec};
use gpmoead::optimizers::run_rng;
use gpmoead::{Result, SynthConfig};

fn main() -> Result<()> {
    for hour in [0, 6, 12, 18, 23] {
        let (s, c) = encode_hour(hour)?;
        println!("hour {hour:>2} -> sinhour {s:+.4} coshour {c:+.4}");
    }
    for day in [1, 91, 182, 274, 365] {
        let (s, c) = encode_day(day)?;
        println!("day {day:>3} -> sinday {s:+.4} cosday {c:+.4}");
    }

    let synth = SynthConfig {
        start_year: 1998,
        end_year: 2009,
        rows: Some(2000),
        ..SynthConfig::default()
    };
    let mut rng = run_rng(11);
    let records = synth_vtec(&synth, &mut rng)?;
    let monthly = synth_sunspot_monthly(&synth, &mut rng)?;

    let model = fit_sunspot(&monthly, 2)?;
    println!(
        "\nsunspot fit: mean {:.1}, residual RMSE {:.2} over {} months",
        model.mean_level,
        model.residual_rmse,
        monthly.len()
    );
    for c in &model.components {
        println!("  amplitude {:>6.2}  period {:>6.1} months", c.amplitude, c.period_months());
    }

    let data = encode_records(&records, &model)?;
    println!("\nfirst encoded rows of {}:", data.len());
    println!("{:>8} {:>8} {:>8} {:>8} {:>7} {:>7}", "sinhour", "coshour", "sinday", "cosday", "ssn", "vtec");
    for row in data.rows().take(5) {
        println!(
            "{:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>7.1} {:>7.2}",
            row.sinhour, row.coshour, row.sinday, row.cosday, row.ssn, row.target_vtec
        );
    }
    Ok(())
}
