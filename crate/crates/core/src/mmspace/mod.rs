//! Finite pointed metric measure spaces and the distances between them.

pub mod energy;
pub mod glue;
pub mod prokhorov;
pub mod spanned;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trees::BiMeasureTree;

pub use energy::{energy_distance, energy_distance_unbiased};
pub use glue::{exhaustive_gp, glue_metric, gp_upper_bound};
pub use prokhorov::{prokhorov_distance, ProkhorovMethod};
pub use spanned::{sample_spanned_bimeasure, SpannedSample};

/// Tolerance for the metric axioms.
pub const METRIC_TOL: f64 = 1e-12;

/// A finite metric space with a measure, a root and marked points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteMMSpace {
    pub dist: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
    pub root: usize,
    #[serde(default)]
    pub marked: Vec<usize>,
}

/// Checks symmetry, zero diagonal, nonnegativity and the triangle
/// inequality. Distinct points at distance zero are allowed.
pub fn check_pseudometric(dist: &[Vec<f64>]) -> Result<()> {
    let n = dist.len();
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidMetric(format!("row {i} has length {}", row.len())));
        }
        if row[i].abs() > METRIC_TOL {
            return Err(Error::InvalidMetric(format!("nonzero diagonal at {i}")));
        }
        for j in 0..n {
            let d = row[j];
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidMetric(format!("bad distance at ({i}, {j})")));
            }
            if (d - dist[j][i]).abs() > METRIC_TOL {
                return Err(Error::InvalidMetric(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if dist[i][k] > dist[i][j] + dist[j][k] + METRIC_TOL {
                    return Err(Error::InvalidMetric(format!(
                        "triangle inequality fails for ({i}, {j}, {k})"
                    )));
                }
            }
        }
    }
    Ok(())
}

impl FiniteMMSpace {
    pub fn new(dist: Vec<Vec<f64>>, mass: Vec<f64>, root: usize, marked: Vec<usize>) -> Result<Self> {
        let s = Self {
            dist,
            mass,
            root,
            marked,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dist.len();
        if n == 0 {
            return Err(Error::InvalidMetric("empty space".into()));
        }
        if self.mass.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} points but {} masses",
                self.mass.len()
            )));
        }
        if self.mass.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidMeasure("masses must be finite and nonnegative".into()));
        }
        Error::check_index(self.root, n)?;
        for &m in &self.marked {
            Error::check_index(m, n)?;
        }
        check_pseudometric(&self.dist)
    }

    pub fn size(&self) -> usize {
        self.dist.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// The four-point condition characterising tree metrics.
    pub fn is_tree_like(&self) -> bool {
        let n = self.size();
        let d = &self.dist;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    for w in 0..n {
                        let a = d[x][y] + d[z][w];
                        let b = d[x][z] + d[y][w];
                        let c = d[x][w] + d[y][z];
                        if a > b.max(c) + 1e-9 {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Point distribution of the normalised measure.
    fn sampler(&self) -> Result<Vec<f64>> {
        let total = self.total_mass();
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("total mass is zero".into()));
        }
        let mut acc = 0.0;
        Ok(self
            .mass
            .iter()
            .map(|m| {
                acc += m / total;
                acc
            })
            .collect())
    }
}

fn draw(cumulative: &[f64], mass: &[f64], rng: &mut (impl Rng + ?Sized)) -> usize {
    let u: f64 = rng.random();
    let i = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
    if mass[i] > 0.0 {
        i
    } else {
        // rounding at the top end; fall back to the last charged point
        mass.iter().rposition(|m| *m > 0.0).expect("positive total mass")
    }
}

/// Upper-triangular distances (row by row) among the listed points.
pub fn upper_triangle(points: &[usize], d: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let k = points.len();
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            out.push(d(points[i], points[j]));
        }
    }
    out
}

/// One draw from the `m`-point distance matrix distribution: the root, the
/// marked points, then `m` i.i.d. samples from the normalised measure.
pub fn distance_matrix_sample<R: Rng + ?Sized>(space: &FiniteMMSpace, m: usize, rng: &mut R) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Precondition("at least one sample point is needed".into()));
    }
    let cumulative = space.sampler()?;
    let mut points = vec![space.root];
    points.extend_from_slice(&space.marked);
    for _ in 0..m {
        points.push(draw(&cumulative, &space.mass, rng));
    }
    Ok(upper_triangle(&points, |a, b| space.dist[a][b]))
}

/// The same observable for a tree with uniform edge lengths, without
/// materialising the distance matrix.
pub fn tree_distance_sample<R: Rng + ?Sized>(
    tree: &BiMeasureTree,
    marked: &[usize],
    m: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Precondition("at least one sample point is needed".into()));
    }
    let space_mass = &tree.mu;
    let total = tree.total_mu();
    if total <= 0.0 {
        return Err(Error::InvalidMeasure("total mass is zero".into()));
    }
    let mut acc = 0.0;
    let cumulative: Vec<f64> = space_mass
        .iter()
        .map(|x| {
            acc += x / total;
            acc
        })
        .collect();
    let mut points = vec![0];
    points.extend_from_slice(marked);
    for _ in 0..m {
        points.push(draw(&cumulative, space_mass, rng));
    }
    Ok(upper_triangle(&points, |a, b| {
        tree.distance(a, b).expect("indices come from the tree")
    }))
}

/// `inf { μ(B(v, δ)) : v ∈ supp μ, r(ρ, v) ≤ R }` with open balls `B`;
/// returns `f64::INFINITY` when no support point lies within `R` of the root.
pub fn lower_mass(space: &FiniteMMSpace, delta: f64, radius: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!("delta {delta} must be positive")));
    }
    let n = space.size();
    let mut best = f64::INFINITY;
    for v in 0..n {
        if space.mass[v] <= 0.0 || space.dist[space.root][v] > radius {
            continue;
        }
        let ball: f64 = (0..n)
            .filter(|&w| space.dist[v][w] < delta)
            .map(|w| space.mass[w])
            .sum();
        best = best.min(ball);
    }
    Ok(best)
}

/// [`lower_mass`] on a tree, optionally restricted to an ancestrally closed
/// alive set. Balls are explored by breadth-first search and abandoned as
/// soon as they exceed the current minimum.
pub fn lower_mass_tree(tree: &BiMeasureTree, alive: Option<&[bool]>, delta: f64, radius: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!("delta {delta} must be positive")));
    }
    let shape = &tree.shape;
    let n = tree.n();
    let is_alive = |v: usize| alive.is_none_or(|a| a[v]);
    let ell = tree.edge_length;
    // largest number of steps s with s * ell < delta
    let mut steps = (delta / ell).ceil() as usize;
    while steps > 0 && steps as f64 * ell >= delta {
        steps -= 1;
    }
    let mut best = f64::INFINITY;
    let mut mark = vec![usize::MAX; n];
    let mut frontier = Vec::new();
    let mut next = Vec::new();
    for v in 0..n {
        if !is_alive(v) || tree.mu[v] <= 0.0 || shape.depth(v) as f64 * ell > radius {
            continue;
        }
        mark[v] = v;
        frontier.clear();
        frontier.push(v);
        let mut ball = tree.mu[v];
        'bfs: for _ in 0..steps {
            next.clear();
            for &u in &frontier {
                let nbrs = shape.parent(u).into_iter().chain(shape.children(u).iter().copied());
                for w in nbrs {
                    if mark[w] != v && is_alive(w) {
                        mark[w] = v;
                        ball += tree.mu[w];
                        next.push(w);
                    }
                }
            }
            if ball >= best || next.is_empty() {
                break 'bfs;
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        best = best.min(ball);
    }
    Ok(best)
}
