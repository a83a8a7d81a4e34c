//! Sampled spanned subtrees carrying the restricted pruning measure.

use rand::Rng;
use serde::Serialize;

use super::FiniteMMSpace;
use crate::error::{Error, Result};
use crate::trees::{spanned_subtree, BiMeasureTree};

/// The reduced tree spanned by the root and `n` sampled points.
///
/// Reduced vertices are the root, the distinct sampled points in sampling
/// order, then the remaining branch points in lexicographic order. Each
/// non-root reduced vertex owns the path down from its reduced parent,
/// excluding the parent itself; the root owns only its own atom.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpannedSample {
    /// Source-tree vertex of each sampled point.
    pub samples: Vec<usize>,
    /// Metric on the reduced vertices; marks are the samples, each carrying
    /// mass `1 / n`.
    pub space: FiniteMMSpace,
    /// Source-tree vertex of each reduced vertex.
    pub original: Vec<usize>,
    pub reduced_parent: Vec<Option<usize>>,
    /// ν carried by the edges of each owned path.
    pub edge_nu: Vec<f64>,
    /// ν atoms on each owned path.
    pub atom_nu: Vec<f64>,
    /// Fixed-length summary; see [`lwv_features`].
    pub features: Vec<f64>,
}

fn cumulative(mu: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = mu.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidMeasure("total mu mass is zero".into()));
    }
    let mut acc = 0.0;
    Ok(mu
        .iter()
        .map(|m| {
            acc += m / total;
            acc
        })
        .collect())
}

fn draw(cum: &[f64], mu: &[f64], rng: &mut (impl Rng + ?Sized)) -> usize {
    let u: f64 = rng.random();
    let i = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
    if mu[i] > 0.0 {
        i
    } else {
        mu.iter().rposition(|m| *m > 0.0).expect("positive total mass")
    }
}

/// Distances among the root and the points, then for each point `u_i` the
/// edge ν and atom ν of the segment joining it to the span of the root and
/// the earlier points (for the first point, the whole root path including
/// the root atom). The segments partition the span, and the vector has
/// length `n(n+1)/2 + 2n`.
pub fn lwv_features(tree: &BiMeasureTree, points: &[usize]) -> Result<Vec<f64>> {
    let shape = &tree.shape;
    for &p in points {
        shape.check(p)?;
    }
    let mut out = Vec::with_capacity(points.len() * (points.len() + 5) / 2);
    let all: Vec<usize> = std::iter::once(0).chain(points.iter().copied()).collect();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            out.push(tree.distance(all[i], all[j])?);
        }
    }
    let edge_nu = tree.nu_edge_density * tree.edge_length;
    for (i, &p) in points.iter().enumerate() {
        // attachment point: deepest common ancestor with an earlier point
        let (edges, mut atoms) = if i == 0 {
            (shape.depth(p), 0.0)
        } else {
            let mut top = 0;
            for &q in &points[..i] {
                let m = shape.mrca(p, q)?;
                if shape.depth(m) > shape.depth(top) {
                    top = m;
                }
            }
            (shape.depth(p) - shape.depth(top), 0.0)
        };
        let mut v = p;
        for _ in 0..edges {
            atoms += tree.nu_atoms[v];
            v = shape.parent(v).expect("walk stays below the attachment point");
        }
        if i == 0 {
            atoms += tree.nu_atoms[0];
        }
        out.push(edges as f64 * edge_nu);
        out.push(atoms);
    }
    Ok(out)
}

/// Draws `n` i.i.d. points from the normalised μ and returns their reduced
/// spanned subtree with ν restricted to it.
pub fn sample_spanned_bimeasure<R: Rng + ?Sized>(tree: &BiMeasureTree, n: usize, rng: &mut R) -> Result<SpannedSample> {
    if n == 0 {
        return Err(Error::Precondition("at least one point is needed".into()));
    }
    let cum = cumulative(&tree.mu)?;
    let samples: Vec<usize> = (0..n).map(|_| draw(&cum, &tree.mu, rng)).collect();
    spanned_sample(tree, samples)
}

/// [`sample_spanned_bimeasure`] for given points.
pub fn spanned_sample(tree: &BiMeasureTree, samples: Vec<usize>) -> Result<SpannedSample> {
    let span = spanned_subtree(tree, &samples)?;
    let local = &span.shape;
    let m = local.n();
    let mut reduced_of = vec![usize::MAX; m];
    let mut order = vec![0usize];
    reduced_of[0] = 0;
    let mut add = |v: usize, order: &mut Vec<usize>| {
        if reduced_of[v] == usize::MAX {
            reduced_of[v] = order.len();
            order.push(v);
        }
    };
    for &v in &span.marks {
        add(v, &mut order);
    }
    for v in 0..m {
        if local.child_count(v) >= 2 {
            add(v, &mut order);
        }
    }
    let k = order.len();
    let mut reduced_parent = vec![None; k];
    let mut edge_nu = vec![0.0; k];
    let mut atom_nu = vec![0.0; k];
    atom_nu[0] = span.nu_atoms[0];
    for (r, &v) in order.iter().enumerate().skip(1) {
        let mut u = v;
        let mut edges = 0usize;
        loop {
            atom_nu[r] += span.nu_atoms[u];
            edges += 1;
            u = local.parent(u).expect("non-root vertex");
            if reduced_of[u] != usize::MAX {
                break;
            }
        }
        reduced_parent[r] = Some(reduced_of[u]);
        edge_nu[r] = edges as f64 * span.edge_length * span.nu_edge_density;
    }
    let dist = order
        .iter()
        .map(|&x| {
            order
                .iter()
                .map(|&y| {
                    let z = local.mrca(x, y).expect("local indices");
                    (local.depth(x) + local.depth(y) - 2 * local.depth(z)) as f64 * span.edge_length
                })
                .collect()
        })
        .collect();
    let marked: Vec<usize> = span.marks.iter().map(|&v| reduced_of[v]).collect();
    let mut mass = vec![0.0; k];
    for &r in &marked {
        mass[r] += 1.0 / marked.len() as f64;
    }
    let features = lwv_features(tree, &samples)?;
    Ok(SpannedSample {
        space: FiniteMMSpace {
            dist,
            mass,
            root: 0,
            marked,
        },
        original: order.iter().map(|&v| span.original[v]).collect(),
        samples,
        reduced_parent,
        edge_nu,
        atom_nu,
        features,
    })
}
