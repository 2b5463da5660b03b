//! Single-objective GP baseline: the same language and operators, selection
//! on fitness-set RMSE alone (tree size breaks ties), elitism, and a stall
//! based stopping rule.

use std::time::Instant;

use rand::Rng;

use super::{
    check_inputs, evaluate_batch, select_by_validation, Algorithm, GenerationStats, GenerationView, Observer,
    OptimizerConfig, RunResult,
};
use crate::dataio::Dataset;
use crate::error::Result;
use crate::evo::{mutate, tournament_index};
use crate::exprtree::ramped_half_and_half;
use crate::fitness::Individual;
use crate::pareto::ParetoArchive;

fn better(a: &Individual, b: &Individual) -> bool {
    a.rmse() < b.rmse() || (a.rmse() == b.rmse() && a.size() < b.size())
}

fn best_index(population: &[Individual]) -> usize {
    (1..population.len()).fold(0, |best, i| if better(&population[i], &population[best]) { i } else { best })
}

/// One sGP run.
///
/// Stops after `convergence_patience` consecutive generations that improve
/// the best fitness-set RMSE by less than `convergence_epsilon`, or at
/// `gen_max`. Each generation's best is scored on the validation set and the
/// lowest validation RMSE seen is returned as the sole archive member.
pub fn sgp_run<R: Rng + ?Sized>(
    config: &OptimizerConfig,
    fitness_set: &Dataset,
    validation_set: &Dataset,
    rng: &mut R,
    observer: &mut dyn Observer,
) -> Result<RunResult> {
    check_inputs(config, fitness_set, validation_set)?;
    let ops = &config.operators;
    let m = config.population_size;

    let trees = ramped_half_and_half(rng, m, ops.init_depth, &ops.pset());
    let mut population = evaluate_batch(trees, fitness_set)?;
    population.iter().for_each(|p| observer.evaluated(p));
    let mut evaluations = m;
    let mut trace = Vec::new();

    let mut elite = population[best_index(&population)].clone();
    let mut chosen = elite.clone().with_validation(validation_set)?;
    let mut stalled = 0;

    for generation in 1..=config.gen_max {
        if stalled >= config.convergence_patience {
            break;
        }
        let started = Instant::now();
        let mut children = Vec::with_capacity(m - 1);
        for _ in 1..m {
            let p = tournament_index(m, ops.tournament_size, rng, |a, b| better(&population[a], &population[b]))?;
            children.push(mutate(&population[p].tree, rng, ops));
        }
        let children = evaluate_batch(children, fitness_set)?;
        evaluations += children.len();
        children.iter().for_each(|c| observer.evaluated(c));
        population = std::iter::once(elite.clone()).chain(children).collect();

        let best = population[best_index(&population)].clone();
        if elite.rmse() - best.rmse() < config.convergence_epsilon {
            stalled += 1;
        } else {
            stalled = 0;
        }
        elite = best;
        let scored = elite.clone().with_validation(validation_set)?;
        let (v, bv) = (scored.validation.expect("scored").rmse, chosen.validation.expect("scored").rmse);
        if v < bv || (v == bv && scored.size() < chosen.size()) {
            chosen = scored;
        }

        trace.push(GenerationStats {
            generation,
            best_rmse: elite.rmse(),
            archive_size: 1,
            evaluations,
            elapsed: started.elapsed(),
        });
        observer.generation_end(&GenerationView {
            generation,
            population: &population,
            reference: None,
            weights: None,
        });
        log::debug!("sgp gen {generation}: best rmse {:.6}", elite.rmse());
    }

    let mut archive = ParetoArchive::new();
    archive.update(chosen);
    select_by_validation(Algorithm::Sgp, archive, validation_set, trace)
}
