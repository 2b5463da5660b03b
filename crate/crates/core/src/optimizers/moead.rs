//! GP-MOEA/D: the (RMSE, size) problem decomposed into `m` Tchebycheff
//! subproblems along uniformly spread weight vectors.
//!
//! ```text
//! g(X | w, z) = max_j w_j · (f_j(X) − z_j)      (minimised)
//! ```
//!
//! with `z` the componentwise minimum of every objective vector seen so far.

use std::time::Instant;

use rand::Rng;

use super::{
    check_inputs, evaluate_batch, min_rmse, select_by_validation, Algorithm, GenerationStats, GenerationView,
    Observer, OptimizerConfig, RunResult,
};
use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::evo::{mutate, tournament_index};
use crate::exprtree::ramped_half_and_half;
use crate::fitness::Objectives;
use crate::pareto::ParetoArchive;

pub type WeightVector = [f64; 2];

/// `w_i = (i/(m−1), 1 − i/(m−1))` for `i = 0..m`.
pub fn uniform_weights(m: usize) -> Result<Vec<WeightVector>> {
    if m < 2 {
        return Err(Error::Config(format!("need at least 2 weight vectors, got {m}")));
    }
    let last = (m - 1) as f64;
    Ok((0..m)
        .map(|i| {
            let a = i as f64 / last;
            [a, 1.0 - a]
        })
        .collect())
}

/// For every weight, the `t` nearest weights by Euclidean distance (itself
/// included), nearest first, ties to the lower index.
pub fn neighborhoods(weights: &[WeightVector], t: usize) -> Vec<Vec<usize>> {
    let t = t.clamp(1, weights.len().max(1));
    weights
        .iter()
        .map(|wi| {
            let mut order: Vec<(f64, usize)> = weights
                .iter()
                .enumerate()
                .map(|(j, wj)| (((wi[0] - wj[0]).powi(2) + (wi[1] - wj[1]).powi(2)).sqrt(), j))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.into_iter().take(t).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Tchebycheff value of `f`; fails if `z` is not below `f` (a stale reference).
pub fn tchebycheff(f: &[f64; 2], w: &WeightVector, z: &[f64; 2]) -> Result<f64> {
    if f[0] < z[0] || f[1] < z[1] {
        return Err(Error::Invariant(format!(
            "reference point {z:?} is not below objective vector {f:?}"
        )));
    }
    Ok((w[0] * (f[0] - z[0])).max(w[1] * (f[1] - z[1])))
}

pub fn update_reference(z: &[f64; 2], f: &[f64; 2]) -> [f64; 2] {
    [z[0].min(f[0]), z[1].min(f[1])]
}

/// One MOEA/D run.
///
/// Each generation first draws one parent per subproblem by a global
/// tournament keyed on that subproblem's `g` (then size, then RMSE), mutates
/// all parents and scores the offspring in parallel. The offspring are then
/// applied in subproblem order: update `z`, replace each neighbour whose
/// incumbent the child beats on the neighbour's `g`, and offer it to the
/// archive.
pub fn moead_run<R: Rng + ?Sized>(
    config: &OptimizerConfig,
    fitness_set: &Dataset,
    validation_set: &Dataset,
    rng: &mut R,
    observer: &mut dyn Observer,
) -> Result<RunResult> {
    check_inputs(config, fitness_set, validation_set)?;
    let ops = &config.operators;
    let m = config.population_size;
    let weights = uniform_weights(m)?;
    let hoods = neighborhoods(&weights, config.neighborhood());

    let trees = ramped_half_and_half(rng, m, ops.init_depth, &ops.pset());
    let mut population = evaluate_batch(trees, fitness_set)?;
    let mut z = [f64::INFINITY; 2];
    let mut archive = ParetoArchive::new();
    for ind in &population {
        observer.evaluated(ind);
        z = update_reference(&z, &ind.objectives());
        archive.update(ind.clone());
    }
    let mut evaluations = m;
    let mut trace = Vec::with_capacity(config.gen_max);

    for generation in 1..=config.gen_max {
        let started = Instant::now();
        let objs: Vec<[f64; 2]> = population.iter().map(|p| p.objectives()).collect();
        let mut children = Vec::with_capacity(m);
        for w in &weights {
            let g: Vec<f64> = objs.iter().map(|f| tchebycheff(f, w, &z)).collect::<Result<_>>()?;
            let p = tournament_index(m, ops.tournament_size, rng, |a, b| {
                (g[a], objs[a][1], objs[a][0]) < (g[b], objs[b][1], objs[b][0])
            })?;
            children.push(mutate(&population[p].tree, rng, ops));
        }
        let children = evaluate_batch(children, fitness_set)?;
        evaluations += m;

        for (i, child) in children.into_iter().enumerate() {
            observer.evaluated(&child);
            let fy = child.objectives();
            z = update_reference(&z, &fy);
            for &j in &hoods[i] {
                let incumbent = population[j].objectives();
                if tchebycheff(&fy, &weights[j], &z)? < tchebycheff(&incumbent, &weights[j], &z)? {
                    population[j] = child.clone();
                }
            }
            archive.update(child);
        }

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
            reference: Some(z),
            weights: Some(&weights),
        });
        log::debug!("moead gen {generation}: best rmse {:.6}, |EP| {}", min_rmse(&population), archive.len());
    }

    select_by_validation(Algorithm::Moead, archive, validation_set, trace)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{run_observed, run_rng};
    use super::*;
    use crate::pareto::dominates;
    use proptest::prelude::*;

    #[test]
    fn weight_examples() {
        assert_eq!(uniform_weights(2).unwrap(), vec![[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(uniform_weights(3).unwrap(), vec![[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]);
        let w5 = uniform_weights(5).unwrap();
        for k in 1..5 {
            assert!((w5[k][0] - w5[k - 1][0] - 0.25).abs() < 1e-15);
        }
        for w in uniform_weights(17).unwrap() {
            assert!(w[0] >= 0.0 && w[1] >= 0.0 && (w[0] + w[1] - 1.0).abs() < 1e-12);
        }
        assert!(uniform_weights(1).is_err());
    }

    #[test]
    fn neighborhood_examples() {
        let w = uniform_weights(5).unwrap();
        for (i, h) in neighborhoods(&w, 1).iter().enumerate() {
            assert_eq!(h, &vec![i]);
        }
        for h in neighborhoods(&w, 5) {
            let mut s = h.clone();
            s.sort_unstable();
            assert_eq!(s, vec![0, 1, 2, 3, 4]);
        }
        let h = neighborhoods(&w, 3);
        let mut h2 = h[2].clone();
        h2.sort_unstable();
        assert_eq!(h2, vec![1, 2, 3]);
        // ties go to the lower index
        assert_eq!(h[0], vec![0, 1, 2]);
        assert_eq!(neighborhoods(&w, 2)[2], vec![2, 1]);
    }

    #[test]
    fn tchebycheff_examples() {
        assert_eq!(tchebycheff(&[5.0, 100.0], &[1.0, 0.0], &[2.0, 3.0]).unwrap(), 3.0);
        assert_eq!(tchebycheff(&[2.0, 3.0], &[0.3, 0.7], &[2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(tchebycheff(&[4.0, 8.0], &[0.5, 0.5], &[2.0, 2.0]).unwrap(), 3.0);
        assert!(tchebycheff(&[1.0, 8.0], &[0.5, 0.5], &[2.0, 2.0]).is_err());
    }

    #[test]
    fn reference_examples() {
        assert_eq!(update_reference(&[1.0, 5.0], &[3.0, 2.0]), [1.0, 2.0]);
        assert_eq!(update_reference(&[1.0, 2.0], &[1.0, 2.0]), [1.0, 2.0]);
    }

    fn point() -> impl Strategy<Value = [f64; 2]> {
        prop_oneof![
            (0i32..10, 1i32..10).prop_map(|(a, b)| [a as f64, b as f64]),
            (0.0f64..5.0, 1.0f64..30.0).prop_map(|(a, b)| [a, b.floor()]),
        ]
    }

    proptest! {
        #[test]
        fn reference_fold_is_componentwise_min(pts in prop::collection::vec(point(), 1..40)) {
            let z = pts.iter().fold([f64::INFINITY; 2], |z, f| update_reference(&z, f));
            let lo0 = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let lo1 = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(z, [lo0, lo1]);
        }

        #[test]
        fn minimisers_are_nondominated(pts in prop::collection::vec(point(), 1..50), k in 1usize..20) {
            let z = pts.iter().fold([f64::INFINITY; 2], |z, f| update_reference(&z, f));
            let w = [k as f64 / 20.0, 1.0 - k as f64 / 20.0];
            let g: Vec<f64> = pts.iter().map(|f| tchebycheff(f, &w, &z).unwrap()).collect();
            let best = g.iter().cloned().fold(f64::INFINITY, f64::min);
            // among the minimisers, the non-dominated ones include any that survive a tie-break;
            // with strictly positive weights a strict dominator would have a g no larger,
            // so at least one minimiser is non-dominated and every dominated minimiser has an equal-g dominator
            for (i, gi) in g.iter().enumerate() {
                if *gi == best {
                    for (j, f) in pts.iter().enumerate() {
                        if dominates(f, &pts[i]) {
                            prop_assert_eq!(g[j], best, "dominator of a minimiser must tie");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn incumbents_improve_under_fixed_reference() {
        struct Check {
            last: Option<(Vec<[f64; 2]>, [f64; 2])>,
            checked: usize,
        }
        impl Observer for Check {
            fn generation_end(&mut self, view: &GenerationView<'_>) {
                let z = view.reference.unwrap();
                let w = view.weights.unwrap();
                let now: Vec<[f64; 2]> = view.population.iter().map(|p| p.objectives()).collect();
                if let Some((prev, z_prev)) = &self.last {
                    // a moving z can reorder two vectors, so only compare under a fixed z
                    if *z_prev != z {
                        self.last = Some((now, z));
                        return;
                    }
                    for i in 0..now.len() {
                        let before = tchebycheff(&prev[i], &w[i], &z).unwrap();
                        let after = tchebycheff(&now[i], &w[i], &z).unwrap();
                        assert!(after <= before, "subproblem {i}: {after} > {before}");
                        self.checked += 1;
                    }
                }
                self.last = Some((now, z));
            }
        }
        let fit = target_data("(+ (* sinhour ssn) cosday)", 80, 21);
        let val = target_data("(+ (* sinhour ssn) cosday)", 40, 22);
        let cfg = OptimizerConfig {
            population_size: 40,
            gen_max: 15,
            ..Default::default()
        };
        let mut check = Check { last: None, checked: 0 };
        run_observed(Algorithm::Moead, &cfg, &fit, &val, 5, &mut check).unwrap();
        assert!(check.checked > 0);
    }

    #[test]
    fn recovers_a_simple_target() {
        let fit = target_data("(* sinhour coshour)", 200, 31);
        let val = target_data("(* sinhour coshour)", 100, 32);
        let cfg = OptimizerConfig {
            population_size: 100,
            gen_max: 50,
            ..Default::default()
        };
        let hits = (0..5)
            .filter(|&s| {
                let r = moead_run(&cfg, &fit, &val, &mut run_rng(s), &mut ()).unwrap();
                r.best().rmse() < 1e-6
            })
            .count();
        assert!(hits >= 4, "{hits}/5");
    }
}
