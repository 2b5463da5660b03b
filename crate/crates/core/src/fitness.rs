//! Objective evaluation: prediction RMSE and tree size.

use std::sync::Arc;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::exprtree::ExprTree;

/// RMSE assigned when a tree's predictions (or their squared errors) overflow.
///
/// Protected division keeps evaluation total but not bounded: nested
/// divisions by values such as `sin(π)` ≈ 1.2e-16 can still overflow `f64`.
/// Such trees get the largest finite RMSE so every objective stays finite.
pub const PENALTY_RMSE: f64 = f64::MAX;

/// The (RMSE, size) point a model occupies in objective space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveVector {
    pub rmse: f64,
    pub size: usize,
}

impl ObjectiveVector {
    pub fn new(rmse: f64, size: usize) -> Self {
        ObjectiveVector { rmse, size }
    }
}

/// Anything with a point in the two-objective (minimised) space.
pub trait Objectives {
    fn objectives(&self) -> [f64; 2];
}

impl Objectives for ObjectiveVector {
    fn objectives(&self) -> [f64; 2] {
        [self.rmse, self.size as f64]
    }
}

impl Objectives for [f64; 2] {
    fn objectives(&self) -> [f64; 2] {
        *self
    }
}

impl<T: Objectives + ?Sized> Objectives for &T {
    fn objectives(&self) -> [f64; 2] {
        (**self).objectives()
    }
}

/// A tree with its cached objective vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub tree: Arc<ExprTree>,
    /// On the fitness-evaluation set.
    pub fitness: ObjectiveVector,
    /// On the validation set, once computed.
    pub validation: Option<ObjectiveVector>,
}

impl Individual {
    pub fn evaluate(tree: ExprTree, data: &Dataset) -> Result<Self> {
        let fitness = objective_vector(&tree, data)?;
        Ok(Individual {
            tree: Arc::new(tree),
            fitness,
            validation: None,
        })
    }

    pub fn size(&self) -> usize {
        self.fitness.size
    }

    pub fn rmse(&self) -> f64 {
        self.fitness.rmse
    }

    pub fn with_validation(mut self, data: &Dataset) -> Result<Self> {
        self.validation = Some(objective_vector(&self.tree, data)?);
        Ok(self)
    }
}

impl Objectives for Individual {
    fn objectives(&self) -> [f64; 2] {
        self.fitness.objectives()
    }
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Root-mean-square error between predictions and targets, accumulated
/// sequentially in row order with compensated summation.
pub fn rmse_of(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::Data("RMSE over an empty dataset".into()));
    }
    if predictions.len() != targets.len() {
        return Err(Error::Invariant(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    let mut acc = CompensatedSum::default();
    for (p, t) in predictions.iter().zip(targets) {
        let e = p - t;
        acc.add(e * e);
    }
    let r = (acc.value() / targets.len() as f64).sqrt();
    Ok(if r.is_finite() { r } else { PENALTY_RMSE })
}

pub fn rmse(tree: &ExprTree, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Data("RMSE over an empty dataset".into()));
    }
    let predictions = tree.evaluate_columns(data.columns());
    rmse_of(&predictions, data.target())
}

pub fn objective_vector(tree: &ExprTree, data: &Dataset) -> Result<ObjectiveVector> {
    Ok(ObjectiveVector::new(rmse(tree, data)?, tree.size()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::EncodedRow;
    use crate::exprtree::{parse_prefix, Function};
    use proptest::prelude::*;

    fn row(sinhour: f64, coshour: f64, target: f64) -> EncodedRow {
        EncodedRow {
            sinhour,
            coshour,
            sinday: 0.0,
            cosday: 1.0,
            ssn: 100.0,
            target_vtec: target,
        }
    }

    #[test]
    fn rmse_examples() {
        let t = ExprTree::var(0);
        let exact = Dataset::from_rows([row(1.0, 0.0, 1.0), row(2.0, 0.0, 2.0)]);
        assert_eq!(rmse(&t, &exact).unwrap(), 0.0);

        let offset = Dataset::from_rows([row(1.0, 0.0, 1.5), row(-3.0, 0.0, -2.5), row(7.0, 0.0, 7.5)]);
        assert!((rmse(&t, &offset).unwrap() - 0.5).abs() < 1e-15);

        // targets {1, 3}, predictions {2, 2}
        let d = Dataset::from_rows([row(2.0, 0.0, 1.0), row(2.0, 0.0, 3.0)]);
        assert_eq!(rmse(&t, &d).unwrap(), 1.0);

        assert!(rmse(&t, &Dataset::new()).is_err());
    }

    #[test]
    fn objective_examples() {
        let d = Dataset::from_rows([row(0.3, 0.5, 1.0)]);
        assert_eq!(objective_vector(&ExprTree::var(0), &d).unwrap().size, 1);
        let ex = parse_prefix("(+ sinhour (* 3 coshour))").unwrap();
        let a = objective_vector(&ex, &d).unwrap();
        assert_eq!(a.size, 5);
        assert_eq!(a, objective_vector(&ex, &d).unwrap());
    }

    #[test]
    fn overflow_gets_penalty() {
        let d = Dataset::from_rows([row(1e200, 0.0, 0.0)]);
        let t = ExprTree::apply(Function::Mul, &ExprTree::var(0), &ExprTree::var(0));
        assert_eq!(rmse(&t, &d).unwrap(), PENALTY_RMSE);
    }

    #[test]
    fn compensated_sum_beats_naive_drift() {
        let mut acc = CompensatedSum::default();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 1000.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rmse_permutation_invariant_and_additive(
            vals in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -50.0f64..50.0), 2..60),
            split in 1usize..59,
        ) {
            let rows: Vec<EncodedRow> = vals.iter().map(|&(a, b, t)| row(a, b, t)).collect();
            let tree = parse_prefix("(- (* sinhour 3) coshour)").unwrap();
            let full = rmse(&tree, &Dataset::from_rows(rows.clone())).unwrap();
            let mut rev = rows.clone();
            rev.reverse();
            let r2 = rmse(&tree, &Dataset::from_rows(rev)).unwrap();
            prop_assert!((full - r2).abs() <= 1e-12 * full.max(1.0));

            let k = split.min(rows.len() - 1);
            let a = rmse(&tree, &Dataset::from_rows(rows[..k].to_vec())).unwrap();
            let b = rmse(&tree, &Dataset::from_rows(rows[k..].to_vec())).unwrap();
            let lhs = full * full * rows.len() as f64;
            let rhs = a * a * k as f64 + b * b * (rows.len() - k) as f64;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0));
        }
    }
}
