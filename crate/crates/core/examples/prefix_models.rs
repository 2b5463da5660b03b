//! Prefix-notation models: parsing, evaluation, protected division and mutation.
//!
//! cargo run --example prefix_models

use gpmoead::evo::{mutate_traced, OperatorConfig};
use gpmoead::optimizers::run_rng;
use gpmoead::{parse_prefix, Result};

fn main() -> Result<()> {
    let with_constants = parse_prefix("(+ (* 20 (* sinhour (/ ssn 100))) 5)")?;
    println!("{with_constants}  size {}", with_constants.size());

    let tree = parse_prefix("(+ (* sinhour ssn) (/ cosday coshour))")?;
    println!("{tree}  size {} depth {}", tree.size(), tree.depth());

    // sinhour, coshour, sinday, cosday, ssn
    let noon = [0.0, -1.0, 0.5, 0.8, 120.0];
    let six = [1.0, 0.0, 0.5, 0.8, 120.0];
    println!("at noon: {}", tree.evaluate(&noon));
    println!("at 06:00 coshour = 0, protected division gives 1: {}", tree.evaluate(&six));

    let cfg = OperatorConfig::default();
    let mut rng = run_rng(3);
    let mut current = tree;
    for step in 1..=5 {
        let (next, kind) = mutate_traced(&current, &mut rng, &cfg);
        println!("{step}: {kind:?} -> {next}");
        current = next;
    }
    let again = parse_prefix(&current.to_prefix())?;
    assert_eq!(again, current);
    Ok(())
}
