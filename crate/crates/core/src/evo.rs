//! Selection and variation operators shared by the optimizers.
//!
//! Breeding is mutation only: subtree mutation with probability `p_subtree`,
//! point mutation otherwise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprtree::{generate_grow, ExprTree, Function, Node, PrimitiveSet, Terminal, NUM_VARS};
use crate::fitness::Individual;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorConfig {
    pub tournament_size: usize,
    pub p_subtree: f64,
    pub max_depth: usize,
    /// Deepest ramp level used at initialisation.
    pub init_depth: usize,
    /// Adds an ephemeral random constant terminal.
    pub ephemeral_constants: bool,
    pub constant_range: (f64, f64),
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            tournament_size: 7,
            p_subtree: 0.6,
            max_depth: 12,
            init_depth: 6,
            ephemeral_constants: false,
            constant_range: (-5.0, 5.0),
        }
    }
}

impl OperatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tournament_size < 1 {
            return Err(Error::Config("tournament_size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_subtree) {
            return Err(Error::Config(format!("p_subtree {} outside [0, 1]", self.p_subtree)));
        }
        if self.init_depth < 1 || self.max_depth < self.init_depth {
            return Err(Error::Config(format!(
                "need max_depth >= init_depth >= 1, got max_depth {} init_depth {}",
                self.max_depth, self.init_depth
            )));
        }
        let (lo, hi) = self.constant_range;
        if self.ephemeral_constants && !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad constant_range ({lo}, {hi})")));
        }
        Ok(())
    }

    pub fn pset(&self) -> PrimitiveSet {
        if self.ephemeral_constants {
            PrimitiveSet::with_constants(self.constant_range.0, self.constant_range.1)
        } else {
            PrimitiveSet::default()
        }
    }
}

/// Runs one tournament over `len` candidates and returns the winner's index.
///
/// `better(a, b)` is true when candidate `a` strictly beats `b`. Entrants are
/// drawn uniformly with replacement; a full tie keeps the earlier draw.
pub fn tournament_index<R: Rng + ?Sized>(
    len: usize,
    tournament_size: usize,
    rng: &mut R,
    mut better: impl FnMut(usize, usize) -> bool,
) -> Result<usize> {
    if len == 0 {
        return Err(Error::Invariant("tournament over an empty population".into()));
    }
    let mut best = rng.gen_range(0..len);
    for _ in 1..tournament_size.max(1) {
        let c = rng.gen_range(0..len);
        if better(c, best) {
            best = c;
        }
    }
    Ok(best)
}

/// Tournament on a scalar key (lower is better), smaller tree on exact ties.
pub fn tournament_select<'a, R: Rng + ?Sized>(
    population: &'a [Individual],
    key: impl Fn(&Individual) -> f64,
    rng: &mut R,
    config: &OperatorConfig,
) -> Result<&'a Individual> {
    let keys: Vec<f64> = population.iter().map(&key).collect();
    let i = tournament_index(population.len(), config.tournament_size, rng, |a, b| {
        keys[a] < keys[b] || (keys[a] == keys[b] && population[a].size() < population[b].size())
    })?;
    Ok(&population[i])
}

/// Replaces a uniformly chosen node by a grow tree that fits the depth limit.
pub fn subtree_mutation<R: Rng + ?Sized>(tree: &ExprTree, rng: &mut R, config: &OperatorConfig) -> ExprTree {
    let idx = rng.gen_range(0..tree.size());
    let node_depth = tree.node_depths()[idx];
    let budget = config.max_depth.saturating_sub(node_depth);
    let replacement = generate_grow(rng, budget, &config.pset());
    tree.replace_subtree(idx, &replacement)
}

/// Swaps a uniformly chosen node's symbol for a different one of equal arity.
pub fn point_mutation<R: Rng + ?Sized>(tree: &ExprTree, rng: &mut R, config: &OperatorConfig) -> ExprTree {
    let idx = rng.gen_range(0..tree.size());
    let pset = config.pset();
    let node = match tree.nodes()[idx] {
        Node::Func(f) => {
            let others: Vec<Function> = Function::ALL.into_iter().filter(|&g| g != f).collect();
            Node::Func(others[rng.gen_range(0..others.len())])
        }
        Node::Term(Terminal::Var(v)) => {
            // other variables, plus the constant slot when enabled
            let slots = pset.terminal_slots() - 1;
            let k = rng.gen_range(0..slots);
            if k < NUM_VARS - 1 {
                let k = k as u8;
                Node::Term(Terminal::Var(if k >= v { k + 1 } else { k }))
            } else {
                Node::Term(Terminal::Const(pset.random_constant(rng).expect("constant slot exists")))
            }
        }
        Node::Term(Terminal::Const(c)) => {
            // any variable, or a fresh constant
            let k = rng.gen_range(0..NUM_VARS + 1);
            if k < NUM_VARS {
                Node::Term(Terminal::Var(k as u8))
            } else {
                let mut fresh = c;
                for _ in 0..16 {
                    fresh = pset.random_constant(rng).unwrap_or(c);
                    if fresh != c {
                        break;
                    }
                }
                Node::Term(Terminal::Const(fresh))
            }
        }
    };
    tree.replace_node(idx, node)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationKind {
    Subtree,
    Point,
}

/// Applies one of the two mutations and reports which one.
pub fn mutate_traced<R: Rng + ?Sized>(
    tree: &ExprTree,
    rng: &mut R,
    config: &OperatorConfig,
) -> (ExprTree, MutationKind) {
    if rng.gen::<f64>() < config.p_subtree {
        (subtree_mutation(tree, rng, config), MutationKind::Subtree)
    } else {
        (point_mutation(tree, rng, config), MutationKind::Point)
    }
}

pub fn mutate<R: Rng + ?Sized>(tree: &ExprTree, rng: &mut R, config: &OperatorConfig) -> ExprTree {
    mutate_traced(tree, rng, config).0
}
