//! Birthday trees: random rooted labelled trees with law `∏ p_i^{c_i}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trees::LabeledRootedTree;

/// Default cap on the number of label draws per tree.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000_000;

/// A nonincreasing probability vector on the labels `0..N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PVector {
    p: Vec<f64>,
    cumulative: Vec<f64>,
    sum_sq: f64,
    uniform: bool,
}

impl PVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidPVector("empty vector".into()));
        }
        if p.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidPVector("entries must be positive and finite".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPVector(format!("entries sum to {total}")));
        }
        if p.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidPVector("entries must be nonincreasing".into()));
        }
        let uniform = p.iter().all(|&x| x == p[0]);
        let mut acc = 0.0;
        let cumulative = p
            .iter()
            .map(|x| {
                acc += x / total;
                acc
            })
            .collect();
        let sum_sq = p.iter().map(|x| x * x).sum();
        Ok(Self {
            p,
            cumulative,
            sum_sq,
            uniform,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPVector("empty vector".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    /// `Σ p_i²`.
    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    /// Edge-length scale `(Σ p_i²)^{1/2}`.
    pub fn sigma(&self) -> f64 {
        self.sum_sq.sqrt()
    }

    /// The ratios `p_i / σ` for the `k` largest entries, whose stabilisation
    /// as `N` grows is the hypothesis behind the inhomogeneous limit.
    pub fn theta_ratios(&self, k: usize) -> Vec<f64> {
        let s = self.sigma();
        self.p.iter().take(k).map(|x| x / s).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.uniform {
            return rng.random_range(0..self.p.len());
        }
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u).min(self.p.len() - 1)
    }
}

pub fn sample_ptree<R: Rng + ?Sized>(p: &PVector, rng: &mut R) -> Result<LabeledRootedTree> {
    sample_ptree_with_budget(p, DEFAULT_STEP_BUDGET, rng)
}

/// Draws i.i.d. labels; the first label is the root and every first
/// occurrence becomes a child of the label drawn just before it.
pub fn sample_ptree_with_budget<R: Rng + ?Sized>(p: &PVector, budget: u64, rng: &mut R) -> Result<LabeledRootedTree> {
    let n = p.n();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let root = p.sample(rng);
    seen[root] = true;
    let mut found = 1;
    let mut prev = root;
    let mut steps = 1u64;
    while found < n {
        if steps >= budget {
            return Err(Error::BudgetExceeded {
                what: "label draws",
                budget,
            });
        }
        let y = p.sample(rng);
        steps += 1;
        if !seen[y] {
            seen[y] = true;
            parent[y] = Some(prev);
            found += 1;
        }
        prev = y;
    }
    LabeledRootedTree::new(root, parent)
}
