//! Metrics on the disjoint union of two spaces built from a relation
//! between them, and the pointed Gromov-Prokhorov bounds they give.

use serde::{Deserialize, Serialize};

use super::prokhorov::{prokhorov_distance, ProkhorovMethod};
use super::{check_pseudometric, FiniteMMSpace};
use crate::error::{Error, Result};

/// Largest `|A| * |B|` accepted by [`exhaustive_gp`].
pub const EXHAUSTIVE_CAP: usize = 20;

/// A relation between the points of two spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Correspondence {
    pub pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        Self { pairs }
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).map(|i| (i, i)).collect())
    }

    /// Roots and marked points paired in order.
    pub fn designated(a: &FiniteMMSpace, b: &FiniteMMSpace) -> Result<Self> {
        if a.marked.len() != b.marked.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} and {} marked points",
                a.marked.len(),
                b.marked.len()
            )));
        }
        let mut pairs = vec![(a.root, b.root)];
        pairs.extend(a.marked.iter().copied().zip(b.marked.iter().copied()));
        Ok(Self::new(pairs))
    }

    fn validate(&self, a: &FiniteMMSpace, b: &FiniteMMSpace) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::Precondition("empty correspondence".into()));
        }
        for &(x, y) in &self.pairs {
            Error::check_index(x, a.size())?;
            Error::check_index(y, b.size())?;
        }
        if !self.pairs.contains(&(a.root, b.root)) {
            return Err(Error::Precondition("roots must be paired".into()));
        }
        Ok(())
    }

    /// `sup |d_A(x, x') - d_B(y, y')|` over pairs of related pairs.
    pub fn distortion(&self, a: &FiniteMMSpace, b: &FiniteMMSpace) -> f64 {
        let mut worst = 0.0f64;
        for &(x, y) in &self.pairs {
            for &(x2, y2) in &self.pairs {
                worst = worst.max((a.dist[x][x2] - b.dist[y][y2]).abs());
            }
        }
        worst
    }
}

/// The metric on `A ⊔ B` (points of `A` first) with cross distances
/// `min over (x', y') in R of d_A(x, x') + d_B(y', y) + dist(R) / 2`.
/// Masses are concatenated; the root is `A`'s, marks are `A`'s then `B`'s.
pub fn glue_metric(a: &FiniteMMSpace, b: &FiniteMMSpace, rel: &Correspondence) -> Result<FiniteMMSpace> {
    rel.validate(a, b)?;
    let half = rel.distortion(a, b) / 2.0;
    if !half.is_finite() {
        return Err(Error::InvalidMetric("infinite distortion".into()));
    }
    let (na, nb) = (a.size(), b.size());
    let mut dist = vec![vec![0.0; na + nb]; na + nb];
    for x in 0..na {
        dist[x][..na].copy_from_slice(&a.dist[x]);
    }
    for y in 0..nb {
        dist[na + y][na..].copy_from_slice(&b.dist[y]);
    }
    for x in 0..na {
        for y in 0..nb {
            let d = rel
                .pairs
                .iter()
                .map(|&(x2, y2)| a.dist[x][x2] + b.dist[y2][y])
                .fold(f64::INFINITY, f64::min)
                + half;
            dist[x][na + y] = d;
            dist[na + y][x] = d;
        }
    }
    check_pseudometric(&dist)?;
    let mut mass = a.mass.clone();
    mass.extend_from_slice(&b.mass);
    let mut marked = a.marked.clone();
    marked.extend(b.marked.iter().map(|&m| na + m));
    Ok(FiniteMMSpace {
        dist,
        mass,
        root: a.root,
        marked,
    })
}

/// Prokhorov distance of the two measures inside the glued space plus the
/// distances between the roots and between corresponding marked points.
/// Every glued metric is admissible in the pointed Gromov-Prokhorov
/// infimum, so this bounds that distance from above.
pub fn gp_upper_bound(a: &FiniteMMSpace, b: &FiniteMMSpace, rel: &Correspondence) -> Result<f64> {
    if a.marked.len() != b.marked.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} and {} marked points",
            a.marked.len(),
            b.marked.len()
        )));
    }
    let glued = glue_metric(a, b, rel)?;
    let na = a.size();
    let total = glued.size();
    let mut mu_a = vec![0.0; total];
    mu_a[..na].copy_from_slice(&a.mass);
    let mut mu_b = vec![0.0; total];
    mu_b[na..].copy_from_slice(&b.mass);
    let pr = prokhorov_distance(&glued.dist, &mu_a, &mu_b, ProkhorovMethod::Flow)?;
    let root = glued.dist[a.root][na + b.root];
    let marks: f64 = a
        .marked
        .iter()
        .zip(&b.marked)
        .map(|(&x, &y)| glued.dist[x][na + y])
        .sum();
    Ok(pr + root + marks)
}

/// Smallest [`gp_upper_bound`] over every relation that contains the
/// designated pairs. Exponential in `|A| * |B|`.
pub fn exhaustive_gp(a: &FiniteMMSpace, b: &FiniteMMSpace) -> Result<f64> {
    let cells = a.size() * b.size();
    if cells > EXHAUSTIVE_CAP {
        return Err(Error::SizeCap {
            what: "exhaustive correspondence search",
            size: cells,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let required = Correspondence::designated(a, b)?;
    let all: Vec<(usize, usize)> = (0..a.size()).flat_map(|x| (0..b.size()).map(move |y| (x, y))).collect();
    let forced: u32 = all
        .iter()
        .enumerate()
        .filter(|(_, p)| required.pairs.contains(p))
        .fold(0, |m, (i, _)| m | 1 << i);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << cells) {
        if mask & forced != forced {
            continue;
        }
        let pairs = (0..cells).filter(|i| mask >> i & 1 == 1).map(|i| all[i]).collect();
        best = best.min(gp_upper_bound(a, b, &Correspondence::new(pairs))?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::testutil::arb_tree;
    use crate::trees::BiMeasureTree;
    use proptest::prelude::*;
    use rand::Rng;

    fn point(mass: f64) -> FiniteMMSpace {
        FiniteMMSpace::new(vec![vec![0.0]], vec![mass], 0, vec![]).unwrap()
    }

    fn segment(len: f64) -> FiniteMMSpace {
        FiniteMMSpace::new(vec![vec![0.0, len], vec![len, 0.0]], vec![0.5, 0.5], 0, vec![]).unwrap()
    }

    fn tree_space(tree: &crate::trees::PlaneTree, rng: &mut impl Rng) -> FiniteMMSpace {
        let t = BiMeasureTree::uniform(tree.clone(), rng.random_range(0.5..2.0)).unwrap();
        let n = t.n();
        let dist = (0..n)
            .map(|i| (0..n).map(|j| t.distance(i, j).unwrap()).collect())
            .collect();
        let mass = (0..n).map(|_| rng.random::<f64>()).collect();
        FiniteMMSpace::new(dist, mass, 0, vec![]).unwrap()
    }

    #[test]
    fn examples() {
        let glued = glue_metric(&point(1.0), &point(1.0), &Correspondence::identity(1)).unwrap();
        assert_eq!(glued.dist[0][1], 0.0);

        let rel = Correspondence::new(vec![(0, 0), (1, 1)]);
        let glued = glue_metric(&segment(1.0), &segment(2.0), &rel).unwrap();
        assert_eq!(glued.dist[0][2], 0.5);
        assert_eq!(glued.dist[1][3], 0.5);
        assert_eq!(glued.dist[0][3], 1.5);

        let s = segment(1.0);
        assert_eq!(gp_upper_bound(&s, &s, &Correspondence::identity(2)).unwrap(), 0.0);
        assert!((gp_upper_bound(&point(0.7), &point(0.4), &Correspondence::identity(1)).unwrap() - 0.3).abs() < 1e-12);

        assert!(glue_metric(&s, &s, &Correspondence::new(vec![])).is_err());
        assert!(glue_metric(&s, &s, &Correspondence::new(vec![(1, 1)])).is_err());
        assert!(glue_metric(&s, &s, &Correspondence::new(vec![(0, 0), (0, 5)])).is_err());
    }

    #[test]
    fn exhaustive_is_below_designated_bound() {
        let mut rng = stream(11, 0);
        let shapes = [vec![3, 0, 0, 0], vec![1, 2, 0, 0], vec![1, 1, 1, 0], vec![2, 1, 0, 0]];
        for i in 0..shapes.len() {
            for j in 0..shapes.len() {
                let ta = crate::trees::PlaneTree::from_child_counts(shapes[i].clone()).unwrap();
                let tb = crate::trees::PlaneTree::from_child_counts(shapes[j].clone()).unwrap();
                let a = tree_space(&ta, &mut rng);
                let b = tree_space(&tb, &mut rng);
                let exact = exhaustive_gp(&a, &b).unwrap();
                let bound = gp_upper_bound(&a, &b, &Correspondence::identity(4)).unwrap();
                assert!(exact <= bound + 1e-12);
                assert!(exact >= 0.0);
            }
        }
        let a = tree_space(&crate::trees::fixtures::path(5), &mut rng);
        assert!(matches!(exhaustive_gp(&a, &a), Err(Error::SizeCap { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn glued_metric_is_metric(ta in arb_tree(7), tb in arb_tree(7), seed in 0u64..1000) {
            let mut rng = stream(seed, 2);
            let a = tree_space(&ta, &mut rng);
            let b = tree_space(&tb, &mut rng);
            let mut pairs = vec![(0, 0)];
            for _ in 0..rng.random_range(0..6) {
                pairs.push((rng.random_range(0..a.size()), rng.random_range(0..b.size())));
            }
            let glued = glue_metric(&a, &b, &Correspondence::new(pairs)).unwrap();
            prop_assert!(glued.validate().is_ok());
            prop_assert_eq!(gp_upper_bound(&a, &a, &Correspondence::identity(a.size())).unwrap(), 0.0);
        }
    }
}
