//! Exhaustive lists of small trees with their exact probabilities.

use super::offspring::OffspringLaw;
use super::ptree::PVector;
use crate::error::{Error, Result};
use crate::trees::{LabeledRootedTree, PlaneTree};

pub const PLANE_CAP: usize = 8;
pub const LABELED_CAP: usize = 5;

/// Every child-count excursion of length `n`, in increasing lexicographic
/// order of the count sequence.
fn excursions(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, open: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        let placed = prefix.len();
        if placed == n {
            if open == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        if open == 0 {
            return;
        }
        // `open` vertices still to be visited; the rest must fit in n - placed
        for c in 0..n {
            let next = open - 1 + c;
            if next > n - placed - 1 {
                break;
            }
            prefix.push(c);
            extend(prefix, next, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), 1, n, &mut out);
    out
}

/// All plane trees with `n` vertices and their probabilities under the
/// Galton-Watson law conditioned on size `n` (weights `∏ η(c(u))`).
pub fn enumerate_plane(n: usize, law: &OffspringLaw) -> Result<Vec<(PlaneTree, f64)>> {
    if n == 0 {
        return Err(Error::Precondition("tree size must be positive".into()));
    }
    if n > PLANE_CAP {
        return Err(Error::SizeCap {
            what: "plane enumeration",
            size: n,
            cap: PLANE_CAP,
        });
    }
    let mut out: Vec<(PlaneTree, f64)> = excursions(n)
        .into_iter()
        .map(|counts| {
            let w = counts.iter().map(|&c| law.prob(c)).product();
            (PlaneTree::from_child_counts(counts).expect("excursion"), w)
        })
        .collect();
    let total: f64 = out.iter().map(|x| x.1).sum();
    if total <= 0.0 {
        return Err(Error::Unreachable {
            n,
            reason: "every tree of this size has probability zero".into(),
        });
    }
    for x in &mut out {
        x.1 /= total;
    }
    Ok(out)
}

/// All rooted trees on the labels of `p` with weights `∏ p_i^{c_i}`, in
/// order of (root, parent vector). The weights already sum to one.
pub fn enumerate_labeled(p: &PVector) -> Result<Vec<(LabeledRootedTree, f64)>> {
    let n = p.n();
    if n > LABELED_CAP {
        return Err(Error::SizeCap {
            what: "labelled enumeration",
            size: n,
            cap: LABELED_CAP,
        });
    }
    let mut out = Vec::new();
    for root in 0..n {
        let others: Vec<usize> = (0..n).filter(|&v| v != root).collect();
        let combos = n.pow(others.len() as u32);
        for code in 0..combos {
            let mut parent = vec![None; n];
            let mut c = code;
            for &v in &others {
                parent[v] = Some(c % n);
                c /= n;
            }
            if let Ok(t) = LabeledRootedTree::new(root, parent) {
                let w = t
                    .child_counts()
                    .iter()
                    .zip(p.probs())
                    .map(|(&c, &q)| q.powi(c as i32))
                    .product();
                out.push((t, w));
            }
        }
    }
    Ok(out)
}
