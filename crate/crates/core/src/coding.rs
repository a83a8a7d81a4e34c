//! Łukasiewicz paths, height and contour sequences, and the exact identities
//! relating ancestor lines to the two Łukasiewicz paths.
//!
//! `W↑` is built from the lexicographic enumeration, `W↓` from the
//! reverse-lexicographic one. Both include the final `-1` step, so they have
//! `n + 1` entries.

use crate::error::{Error, Result};
use crate::trees::PlaneTree;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingPaths {
    pub luk_up: Vec<i64>,
    pub luk_down: Vec<i64>,
    pub height: Vec<i64>,
    pub contour: Vec<i64>,
}

/// Which vertex enumeration an index refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ordering {
    Lex,
    Revlex,
}

fn lukasiewicz(counts: impl Iterator<Item = usize>, n: usize) -> Vec<i64> {
    let mut w = Vec::with_capacity(n + 1);
    let mut acc = 0i64;
    w.push(0);
    for c in counts {
        acc += c as i64 - 1;
        w.push(acc);
    }
    w
}

/// Contour sequence derived from the height sequence: between consecutive
/// lex vertices the walk climbs down to the parent of the next vertex and
/// steps up once; it finally returns to the root.
fn contour_from_height(h: &[i64]) -> Vec<i64> {
    let n = h.len();
    let mut c = Vec::with_capacity(2 * (n - 1) + 1);
    c.push(0);
    for k in 0..n - 1 {
        let mut cur = h[k];
        while cur >= h[k + 1] {
            cur -= 1;
            c.push(cur);
        }
        c.push(cur + 1);
    }
    let mut cur = h[n - 1];
    while cur > 0 {
        cur -= 1;
        c.push(cur);
    }
    c
}

pub fn compute_paths(tree: &PlaneTree) -> CodingPaths {
    let n = tree.n();
    let luk_up = lukasiewicz(tree.child_counts().iter().copied(), n);
    let luk_down = lukasiewicz(tree.revlex_order().into_iter().map(|v| tree.child_count(v)), n);
    let height: Vec<i64> = tree.depths().iter().map(|&d| d as i64).collect();
    let contour = contour_from_height(&height);
    CodingPaths {
        luk_up,
        luk_down,
        height,
        contour,
    }
}

impl CodingPaths {
    pub fn n(&self) -> usize {
        self.height.len()
    }

    pub fn path(&self, ordering: Ordering) -> &[i64] {
        match ordering {
            Ordering::Lex => &self.luk_up,
            Ordering::Revlex => &self.luk_down,
        }
    }

    /// `ΔW(k + 1) = W(k + 1) - W(k)`, the child count of vertex `k` minus one.
    pub fn increment(&self, ordering: Ordering, k: usize) -> i64 {
        let w = self.path(ordering);
        w[k + 1] - w[k]
    }

    /// Number of descendants read off the path:
    /// `inf{m > k : W(m) - W(k) = -1} - (k + 1)`.
    pub fn descendants(&self, ordering: Ordering, k: usize) -> Result<usize> {
        Error::check_index(k, self.n())?;
        let w = self.path(ordering);
        let m = (k + 1..=self.n())
            .find(|&m| w[m] - w[k] == -1)
            .expect("paths end at -1");
        Ok(m - (k + 1))
    }
}

/// Ancestry recovered from a coding path: `u(i) ≼ u(j)` iff `i ≤ j` and
/// `W(i)` is the minimum of `W` over `[i, j]`.
pub fn ancestor_by_path(paths: &CodingPaths, ordering: Ordering, i: usize, j: usize) -> Result<bool> {
    let n = paths.n();
    Error::check_index(i, n)?;
    Error::check_index(j, n)?;
    if i > j {
        return Ok(false);
    }
    let w = paths.path(ordering);
    Ok(w[i..=j].iter().all(|&x| x >= w[i]))
}

/// Reverse-lexicographic index of lex vertex `k` and its number of
/// descendants, via `k̃ = n - 1 - k + |u(k)| - D(k)`.
pub fn lex_to_revlex(tree: &PlaneTree, k: usize) -> Result<(usize, usize)> {
    tree.check(k)?;
    let d = tree.descendants(k);
    Ok((tree.n() - 1 - k + tree.depth(k) - d, d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaDecomposition {
    pub sigma: i64,
    pub luk_term: i64,
    pub rev_term: i64,
    pub remainder: i64,
    pub rev_index: usize,
    pub descendants: usize,
}

/// Sum of `c(v) - 1` over the non-leaf vertices on the path from the root to
/// `u(k)`, split as `W↑(k) + W↓(k̃) + R`.
pub fn sigma_up(tree: &PlaneTree, paths: &CodingPaths, k: usize) -> Result<SigmaDecomposition> {
    tree.check(k)?;
    let own = paths.increment(Ordering::Lex, k);
    let mut sigma = -own.min(0);
    for v in tree.ancestors(k) {
        sigma += paths.increment(Ordering::Lex, v);
    }
    let (rev_index, descendants) = lex_to_revlex(tree, k)?;
    Ok(SigmaDecomposition {
        sigma,
        luk_term: paths.luk_up[k],
        rev_term: paths.luk_down[rev_index],
        remainder: own - own.min(0),
        rev_index,
        descendants,
    })
}

/// `σ↑` for every lex vertex in one pass.
pub fn sigma_up_all(tree: &PlaneTree) -> Vec<i64> {
    let n = tree.n();
    // strict[k]: sum of c - 1 over strict ancestors of k
    let mut strict = vec![0i64; n];
    let mut out = vec![0i64; n];
    for k in 0..n {
        if let Some(p) = tree.parent(k) {
            strict[k] = strict[p] + tree.child_count(p) as i64 - 1;
        }
        out[k] = strict[k] + (tree.child_count(k) as i64 - 1).max(0);
    }
    out
}

/// Numbers of children of `u(i)` visited before and after `u(j)` in the
/// chosen enumeration; indices refer to that enumeration.
pub fn children_split(
    tree: &PlaneTree,
    paths: &CodingPaths,
    ordering: Ordering,
    i: usize,
    j: usize,
) -> Result<(i64, i64)> {
    tree.check(i)?;
    tree.check(j)?;
    let (vi, vj) = match ordering {
        Ordering::Lex => (i, j),
        Ordering::Revlex => {
            let order = tree.revlex_order();
            (order[i], order[j])
        }
    };
    if i >= j || !tree.is_ancestor(vi, vj) {
        return Err(Error::Precondition(format!(
            "vertex {i} is not a strict ancestor of {j}"
        )));
    }
    let w = paths.path(ordering);
    let inf = *w[i + 1..=j].iter().min().expect("nonempty range");
    Ok((w[i + 1] - inf, inf - w[i]))
}

/// Threshold-truncated before/after sums over the strict ancestors of lex
/// vertex `k`: the small-jump parts and the right-hand sides that bound them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncatedSums {
    pub after_small: i64,
    pub after_bound: i64,
    pub before_small: i64,
    pub before_bound: i64,
}

/// Before/after child counts of every strict ancestor of lex vertex `k`,
/// read off both coding paths with one suffix-minimum sweep each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AncestorSplits {
    /// Strict ancestors in lex order, root first.
    pub ancestors: Vec<usize>,
    /// `ΔW(v + 1)` of each ancestor (the same in both enumerations).
    pub increments: Vec<i64>,
    /// `(before, after)` from `W↑` at lex indices.
    pub lex: Vec<(i64, i64)>,
    /// `(before, after)` from `W↓` at revlex indices.
    pub revlex: Vec<(i64, i64)>,
    pub rev_index: usize,
}

fn sweep(w: &[i64], anc: &[usize], j: usize) -> Vec<(i64, i64)> {
    let mut out = vec![(0, 0); anc.len()];
    let mut inf = i64::MAX;
    let mut m = j + 1;
    for (slot, &i) in anc.iter().enumerate().rev() {
        while m > i + 1 {
            m -= 1;
            inf = inf.min(w[m]);
        }
        out[slot] = (w[i + 1] - inf, inf - w[i]);
    }
    out
}

impl AncestorSplits {
    pub fn new(tree: &PlaneTree, paths: &CodingPaths, k: usize) -> Result<Self> {
        tree.check(k)?;
        let (rev_index, _) = lex_to_revlex(tree, k)?;
        let mut ancestors = tree.ancestors(k);
        ancestors.pop();
        // revlex is a preorder too, so ranks increase along the ancestor line
        let rank = tree.revlex_rank();
        let rev_anc: Vec<usize> = ancestors.iter().map(|&v| rank[v]).collect();
        Ok(Self {
            increments: ancestors.iter().map(|&v| paths.increment(Ordering::Lex, v)).collect(),
            lex: sweep(&paths.luk_up, &ancestors, k),
            revlex: sweep(&paths.luk_down, &rev_anc, rev_index),
            ancestors,
            rev_index,
        })
    }

    /// Both truncation inequalities for an integer jump threshold: ancestors
    /// with `ΔW(v + 1) ≤ threshold` count as small.
    pub fn truncated(&self, paths: &CodingPaths, k: usize, threshold: i64) -> TruncatedSums {
        let mut out = TruncatedSums {
            after_small: 0,
            after_bound: paths.luk_up[k],
            before_small: 0,
            before_bound: paths.luk_down[self.rev_index],
        };
        for (s, &inc) in self.increments.iter().enumerate() {
            let (before, after) = self.lex[s];
            if inc <= threshold {
                out.after_small += after;
                out.before_small += before;
            } else {
                out.after_bound -= after;
                // the before bound subtracts large-jump "after" counts in revlex order
                out.before_bound -= self.revlex[s].1;
            }
        }
        out
    }
}

/// Evaluates both truncation inequalities at lex vertex `k`.
pub fn truncated_sums(tree: &PlaneTree, paths: &CodingPaths, k: usize, threshold: i64) -> Result<TruncatedSums> {
    Ok(AncestorSplits::new(tree, paths, k)?.truncated(paths, k, threshold))
}

/// Cumulative branch-point and skeleton pruning mass along the root-to-`u(k)`
/// path as functions of the distance from the root.
#[derive(Clone, Debug, PartialEq)]
pub struct PruningProfile {
    /// Distance from the root of each path vertex and the branch-point atom
    /// it carries.
    pub bra_atoms: Vec<(f64, f64)>,
    /// Skeleton mass per unit length.
    pub ske_density: f64,
    pub path_length: f64,
}

impl PruningProfile {
    pub fn f_bra(&self, delta: f64) -> f64 {
        self.bra_atoms
            .iter()
            .take_while(|(pos, _)| *pos <= delta)
            .map(|(_, m)| m)
            .sum()
    }

    pub fn f_ske(&self, delta: f64) -> f64 {
        self.ske_density * delta.clamp(0.0, self.path_length)
    }

    /// `sup_δ |F^bra(δ) - F^ske(δ)|`, using left limits of the skeleton part
    /// at the end of each edge.
    pub fn sup_gap(&self) -> f64 {
        let mut best = 0.0f64;
        let mut acc = 0.0;
        for (idx, (pos, m)) in self.bra_atoms.iter().enumerate() {
            acc += m;
            best = best.max((acc - self.f_ske(*pos)).abs());
            let end = self.bra_atoms.get(idx + 1).map_or(self.path_length, |(p, _)| *p);
            best = best.max((acc - self.f_ske(end)).abs());
        }
        best
    }
}

/// Profile along the ancestor line of lex vertex `k` for a tree with uniform
/// `edge_length`, skeleton mass `a` per edge and branch-point atoms
/// `b (c(v) - 1)` on non-leaf vertices.
pub fn pruning_profile(tree: &PlaneTree, edge_length: f64, a: f64, b: f64, k: usize) -> Result<PruningProfile> {
    tree.check(k)?;
    let bra_atoms = tree
        .ancestors(k)
        .into_iter()
        .map(|v| {
            let c = tree.child_count(v) as f64;
            let atom = if c >= 1.0 { b * (c - 1.0) } else { 0.0 };
            (tree.depth(v) as f64 * edge_length, atom)
        })
        .collect();
    Ok(PruningProfile {
        bra_atoms,
        ske_density: a / edge_length,
        path_length: tree.depth(k) as f64 * edge_length,
    })
}

/// `sup_t |b σ↑(⌊(n-1)t⌋) - a H(t)|` with `H` linearly interpolated between
/// integer times and `σ↑` constant on each step.
pub fn sigma_height_sup(tree: &PlaneTree, a: f64, b: f64) -> f64 {
    let sigma = sigma_up_all(tree);
    let n = tree.n();
    let mut best = 0.0f64;
    for k in 0..n {
        let s = b * sigma[k] as f64;
        best = best.max((s - a * tree.depth(k) as f64).abs());
        if k + 1 < n {
            best = best.max((s - a * tree.depth(k + 1) as f64).abs());
        }
    }
    best
}

/// `sup_t |b W↓(⌊nt⌋) - b W↑(⌊n(1-t)⌋)|`: the distance between the reverse
/// path and the time-reversed forward path, both read as step functions.
pub fn reverse_path_sup(paths: &CodingPaths, b: f64) -> f64 {
    let n = paths.n();
    let (up, down) = (&paths.luk_up, &paths.luk_down);
    let mut best = 0.0f64;
    for k in 0..=n {
        let mut d = (down[k] - up[n - k]).abs();
        if k < n {
            d = d.max((down[k] - up[n - k - 1]).abs());
        }
        best = best.max(b * d as f64);
    }
    best
}
