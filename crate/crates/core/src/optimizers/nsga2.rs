//! GP-NSGA-II: generational search ranked by non-dominated fronts and
//! crowding distance, using the same mutation operators as MOEA/D.

use std::time::Instant;

use rand::Rng;

use super::{
    check_inputs, evaluate_batch, min_rmse, select_by_validation, Algorithm, GenerationStats, GenerationView,
    Observer, OptimizerConfig, RunResult,
};
use crate::dataio::Dataset;
use crate::error::Result;
use crate::evo::{mutate, tournament_index};
use crate::exprtree::ramped_half_and_half;
use crate::fitness::Individual;
use crate::pareto::{crowding_distance, fast_nondominated_sort, ParetoArchive};

/// Front rank and crowding distance of every member of `population`.
fn rank_and_crowd(population: &[Individual]) -> (Vec<usize>, Vec<f64>, Vec<Vec<usize>>) {
    let fronts = fast_nondominated_sort(population);
    let mut rank = vec![0; population.len()];
    let mut crowd = vec![0.0; population.len()];
    for (r, front) in fronts.iter().enumerate() {
        let members: Vec<&Individual> = front.iter().map(|&i| &population[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd, fronts)
}

/// Keeps the best `m` of `merged`: whole fronts while they fit, then the
/// most crowded-apart members of the split front (lower index on ties).
fn truncate(merged: Vec<Individual>, m: usize) -> Vec<Individual> {
    let (_, crowd, fronts) = rank_and_crowd(&merged);
    let mut keep = Vec::with_capacity(m);
    for front in fronts {
        if keep.len() + front.len() <= m {
            keep.extend(front);
        } else {
            let mut rest = front;
            rest.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));
            rest.truncate(m - keep.len());
            rest.sort_unstable();
            keep.extend(rest);
        }
        if keep.len() == m {
            break;
        }
    }
    let mut slots: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().expect("kept once")).collect()
}

/// One NSGA-II run. Every evaluated individual is offered to the archive.
pub fn nsga2_run<R: Rng + ?Sized>(
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
    let mut archive = ParetoArchive::new();
    for ind in &population {
        observer.evaluated(ind);
        archive.update(ind.clone());
    }
    let mut evaluations = m;
    let mut trace = Vec::with_capacity(config.gen_max);

    for generation in 1..=config.gen_max {
        let started = Instant::now();
        let (rank, crowd, _) = rank_and_crowd(&population);
        let mut children = Vec::with_capacity(m);
        for _ in 0..m {
            let p = tournament_index(m, ops.tournament_size, rng, |a, b| {
                (rank[a], -crowd[a], population[a].size()) < (rank[b], -crowd[b], population[b].size())
            })?;
            children.push(mutate(&population[p].tree, rng, ops));
        }
        let children = evaluate_batch(children, fitness_set)?;
        evaluations += m;
        for child in &children {
            observer.evaluated(child);
            archive.update(child.clone());
        }
        population.extend(children);
        population = truncate(population, m);

        trace.push(GenerationStats {
            generation,
            best_rmse: min_rmse(&population),
            archive_size: archive.len(),
            evaluations,
            elapsed: started.elapsed(),
        });
        observer.generation_end(&GenerationView {
            generation,
            population: &population,
            reference: None,
            weights: None,
        });
        log::debug!("nsga2 gen {generation}: best rmse {:.6}, |EP| {}", min_rmse(&population), archive.len());
    }

    select_by_validation(Algorithm::Nsga2, archive, validation_set, trace)
}
