//! Pareto-front quality indicators and RMSE summary statistics.
//!
//! ```text
//! Δ(A)   = (d_f + d_l + Σ|d_j − d̄|) / (d_f + d_l + |A|·d̄)
//! C(A,B) = |{a ∈ A : some b ∈ B dominates a}| / |A|
//! NDS(A) = |A|
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{CompensatedSum, Objectives};
use crate::pareto::dominates;

/// A labelled set of mutually non-dominated objective vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontSnapshot {
    points: Vec<[f64; 2]>,
    label: String,
}

impl FrontSnapshot {
    pub fn new(label: impl Into<String>, points: Vec<[f64; 2]>) -> Result<Self> {
        let label = label.into();
        for (i, p) in points.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::Data(format!("front {label:?}: non-finite point {p:?}")));
            }
            if let Some(q) = points.iter().find(|q| dominates(q, p)) {
                return Err(Error::Data(format!("front {label:?}: point {i} {p:?} is dominated by {q:?}")));
            }
        }
        Ok(FrontSnapshot { points, label })
    }

    pub fn from_members<T: Objectives>(label: impl Into<String>, members: &[T]) -> Result<Self> {
        Self::new(label, members.iter().map(|m| m.objectives()).collect())
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Spread indicator. Points are ordered by the first objective (second on
/// ties). `extremes` are the reference end points matched to the first and
/// last point of that order; without them `d_f = d_l = 0`.
///
/// A front whose points all coincide has no spread to measure and yields 0.
pub fn delta_metric(front: &FrontSnapshot, extremes: Option<([f64; 2], [f64; 2])>) -> Result<f64> {
    if front.len() < 2 {
        return Err(Error::Data(format!(
            "delta metric needs at least 2 points, front {:?} has {}",
            front.label,
            front.len()
        )));
    }
    let mut pts = front.points.clone();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let gaps: Vec<f64> = pts.windows(2).map(|w| distance(&w[0], &w[1])).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let (d_f, d_l) = match extremes {
        Some((first, last)) => (distance(&first, &pts[0]), distance(&last, &pts[pts.len() - 1])),
        None => (0.0, 0.0),
    };
    let spread: f64 = gaps.iter().map(|d| (d - mean).abs()).sum();
    let denominator = d_f + d_l + front.len() as f64 * mean;
    if denominator == 0.0 {
        return Ok(0.0);
    }
    Ok((d_f + d_l + spread) / denominator)
}

/// Fraction of `a` dominated by at least one point of `b`.
pub fn c_metric(a: &FrontSnapshot, b: &FrontSnapshot) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Data(format!("coverage of an empty front {:?}", a.label)));
    }
    let covered = a.points.iter().filter(|p| b.points.iter().any(|q| dominates(q, p))).count();
    Ok(covered as f64 / a.len() as f64)
}

pub fn nds(front: &FrontSnapshot) -> usize {
    front.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmseStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation (divisor `n`).
    pub std: f64,
}

pub fn rmse_stats(values: &[f64]) -> Result<RmseStats> {
    if values.is_empty() {
        return Err(Error::Data("statistics of an empty list".into()));
    }
    let n = values.len() as f64;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = CompensatedSum::default();
    values.iter().for_each(|&v| sum.add(v));
    let mean = (sum.value() / n).clamp(min, max);
    let mut sq = CompensatedSum::default();
    values.iter().for_each(|&v| sq.add((v - mean) * (v - mean)));
    Ok(RmseStats {
        min,
        max,
        mean,
        std: (sq.value() / n).sqrt(),
    })
}
