//! Rooted plane trees, labelled trees and bi-measure trees.
//!
//! Vertices are always stored in lexicographic (depth-first, left-to-right)
//! order, so vertex `0` is the root, every parent precedes its children and
//! the subtree of `v` is the contiguous index block `v..v + subtree_size(v)`.
//! The reverse-lexicographic order is derived on demand.

use crate::error::{Error, Result};

/// Sentinel stored as the parent of the root.
pub const ROOT_PARENT: usize = usize::MAX;

/// A rooted ordered tree on `n` vertices in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneTree {
    parent: Vec<usize>,
    child_count: Vec<usize>,
    depth: Vec<usize>,
    size: Vec<usize>,
    child_start: Vec<usize>,
    children: Vec<usize>,
}

impl PlaneTree {
    /// The tree with a single vertex.
    pub fn single() -> Self {
        Self::from_child_counts(vec![0]).expect("single vertex is a valid tree")
    }

    /// Decodes a tree from its child counts listed in lexicographic order.
    ///
    /// The counts must form a Łukasiewicz excursion: partial sums of
    /// `c - 1` stay nonnegative and first reach `-1` after the last vertex.
    pub fn from_child_counts(counts: Vec<usize>) -> Result<Self> {
        let n = counts.len();
        if n == 0 {
            return Err(Error::InvalidTree("empty child-count sequence".into()));
        }
        let mut parent = vec![ROOT_PARENT; n];
        // (vertex, children still to attach)
        let mut stack: Vec<(usize, usize)> = Vec::new();
        if counts[0] > 0 {
            stack.push((0, counts[0]));
        }
        for k in 1..n {
            let Some(top) = stack.last_mut() else {
                return Err(Error::InvalidTree(format!("child counts exhausted before vertex {k}")));
            };
            parent[k] = top.0;
            top.1 -= 1;
            if top.1 == 0 {
                stack.pop();
            }
            if counts[k] > 0 {
                stack.push((k, counts[k]));
            }
        }
        if !stack.is_empty() {
            return Err(Error::InvalidTree(
                "child counts require more vertices than given".into(),
            ));
        }
        Ok(Self::build(parent, counts))
    }

    /// Builds a tree from the parents of vertices `1..n`, which must already
    /// be in lexicographic order (each parent lies on the current
    /// root-to-previous-vertex path).
    pub fn from_parents(parents: &[usize]) -> Result<Self> {
        let n = parents.len() + 1;
        let mut parent = vec![ROOT_PARENT; n];
        let mut counts = vec![0usize; n];
        let mut path = vec![0usize];
        for (i, &p) in parents.iter().enumerate() {
            let k = i + 1;
            if p >= k {
                return Err(Error::InvalidTree(format!(
                    "parent {p} of vertex {k} does not precede it"
                )));
            }
            while path.last().is_some_and(|&top| top != p) {
                path.pop();
            }
            if path.is_empty() {
                return Err(Error::InvalidTree(format!(
                    "vertex {k} with parent {p} breaks lexicographic order"
                )));
            }
            parent[k] = p;
            counts[p] += 1;
            path.push(k);
        }
        Ok(Self::build(parent, counts))
    }

    fn build(parent: Vec<usize>, child_count: Vec<usize>) -> Self {
        let n = parent.len();
        let mut depth = vec![0usize; n];
        for k in 1..n {
            depth[k] = depth[parent[k]] + 1;
        }
        let mut size = vec![1usize; n];
        for k in (1..n).rev() {
            size[parent[k]] += size[k];
        }
        let mut child_start = vec![0usize; n + 1];
        for k in 0..n {
            child_start[k + 1] = child_start[k] + child_count[k];
        }
        let mut fill = child_start.clone();
        let mut children = vec![0usize; n.saturating_sub(1)];
        for k in 1..n {
            let p = parent[k];
            children[fill[p]] = k;
            fill[p] += 1;
        }
        Self {
            parent,
            child_count,
            depth,
            size,
            child_start,
            children,
        }
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    /// Parent of `k`, `None` for the root.
    pub fn parent(&self, k: usize) -> Option<usize> {
        let p = self.parent[k];
        (p != ROOT_PARENT).then_some(p)
    }

    /// Raw parent array; `parent[0]` is [`ROOT_PARENT`].
    pub fn parent_array(&self) -> &[usize] {
        &self.parent
    }

    /// Parents of vertices `1..n`, the serialised form.
    pub fn parents(&self) -> Vec<usize> {
        self.parent[1..].to_vec()
    }

    pub fn child_count(&self, k: usize) -> usize {
        self.child_count[k]
    }

    pub fn child_counts(&self) -> &[usize] {
        &self.child_count
    }

    /// Children of `k`, left to right.
    pub fn children(&self, k: usize) -> &[usize] {
        &self.children[self.child_start[k]..self.child_start[k + 1]]
    }

    /// Graph distance from the root.
    pub fn depth(&self, k: usize) -> usize {
        self.depth[k]
    }

    pub fn depths(&self) -> &[usize] {
        &self.depth
    }

    /// Number of vertices in the subtree rooted at `k`, including `k`.
    pub fn subtree_size(&self, k: usize) -> usize {
        self.size[k]
    }

    /// Number of strict descendants of `k`.
    pub fn descendants(&self, k: usize) -> usize {
        self.size[k] - 1
    }

    pub fn is_leaf(&self, k: usize) -> bool {
        self.child_count[k] == 0
    }

    /// Maximal depth.
    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// `a ≼ b` in the genealogical order (`a` lies on the path from the root
    /// to `b`).
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        a <= b && b < a + self.size[a]
    }

    /// Checked accessor used by the public query operations.
    pub fn check(&self, k: usize) -> Result<()> {
        Error::check_index(k, self.n())
    }

    /// Most recent common ancestor of `i` and `j`.
    pub fn mrca(&self, i: usize, j: usize) -> Result<usize> {
        self.check(i)?;
        self.check(j)?;
        let (mut a, mut b) = (i, j);
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        Ok(a)
    }

    /// Ancestors of `k` from the root down to `k` itself.
    pub fn ancestors(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.depth[k] + 1);
        let mut v = k;
        loop {
            out.push(v);
            match self.parent(v) {
                Some(p) => v = p,
                None => break,
            }
        }
        out.reverse();
        out
    }

    /// Lexicographic indices listed in reverse-lexicographic order
    /// (depth first, children visited right to left).
    pub fn revlex_order(&self) -> Vec<usize> {
        let n = self.n();
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            order.push(v);
            // leftmost child pushed first so the rightmost pops first
            stack.extend_from_slice(self.children(v));
        }
        order
    }

    /// `rank[k]` is the reverse-lexicographic index of lex vertex `k`.
    pub fn revlex_rank(&self) -> Vec<usize> {
        let order = self.revlex_order();
        let mut rank = vec![0usize; order.len()];
        for (i, &v) in order.iter().enumerate() {
            rank[v] = i;
        }
        rank
    }

    /// The same unordered tree with the order of children reversed at every
    /// vertex. Lex vertex `k` of the result is revlex vertex `k` of `self`.
    pub fn mirror(&self) -> PlaneTree {
        let counts = self.revlex_order().into_iter().map(|v| self.child_count[v]).collect();
        PlaneTree::from_child_counts(counts).expect("mirror of a valid tree is valid")
    }

    /// The subtree induced on an ancestrally closed vertex set given in
    /// increasing lex order. Returns `None` when the set is not closed or
    /// does not start at the root.
    pub fn induced(&self, kept: &[usize]) -> Option<PlaneTree> {
        if kept.first() != Some(&0) {
            return None;
        }
        let mut local = vec![ROOT_PARENT; self.n()];
        for (i, &v) in kept.iter().enumerate() {
            local[v] = i;
        }
        let mut parents = Vec::with_capacity(kept.len().saturating_sub(1));
        for &v in &kept[1..] {
            let p = self.parent[v];
            if local[p] == ROOT_PARENT {
                return None;
            }
            parents.push(local[p]);
        }
        PlaneTree::from_parents(&parents).ok()
    }
}

/// A rooted tree on the labels `0..n` (no planar order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledRootedTree {
    root: usize,
    parent: Vec<Option<usize>>,
}

/// A labelled tree flattened to lexicographic order with children sorted by
/// label.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalTree {
    pub tree: PlaneTree,
    pub label_of_lex: Vec<usize>,
    pub lex_of_label: Vec<usize>,
}

impl LabeledRootedTree {
    pub fn new(root: usize, parent: Vec<Option<usize>>) -> Result<Self> {
        let n = parent.len();
        Error::check_index(root, n)?;
        for (v, p) in parent.iter().enumerate() {
            match (v == root, p) {
                (true, Some(_)) => {
                    return Err(Error::InvalidTree("root has a parent".into()));
                }
                (false, None) => {
                    return Err(Error::InvalidTree(format!("label {v} has no parent")));
                }
                (false, Some(p)) if *p >= n || *p == v => {
                    return Err(Error::InvalidTree(format!("label {v} has bad parent {p}")));
                }
                _ => {}
            }
        }
        // every label must reach the root; mark verified labels to stay linear
        let mut state = vec![0u8; n]; // 0 unknown, 1 on current walk, 2 reaches root
        state[root] = 2;
        for start in 0..n {
            let mut walk = Vec::new();
            let mut v = start;
            while state[v] == 0 {
                state[v] = 1;
                walk.push(v);
                v = parent[v].expect("non-root labels have parents");
            }
            if state[v] == 1 {
                return Err(Error::InvalidTree("parent links contain a cycle".into()));
            }
            for w in walk {
                state[w] = 2;
            }
        }
        Ok(Self { root, parent })
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, label: usize) -> Option<usize> {
        self.parent[label]
    }

    /// Out-degree of every label.
    pub fn child_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n()];
        for p in self.parent.iter().flatten() {
            c[*p] += 1;
        }
        c
    }

    pub fn canonicalize(&self) -> CanonicalTree {
        let n = self.n();
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
        // labels visited in increasing order so each child list is sorted
        for (v, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                kids[*p].push(v);
            }
        }
        let mut label_of_lex = Vec::with_capacity(n);
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            label_of_lex.push(v);
            stack.extend(kids[v].iter().rev());
        }
        let mut lex_of_label = vec![0; n];
        for (i, &l) in label_of_lex.iter().enumerate() {
            lex_of_label[l] = i;
        }
        let counts = label_of_lex.iter().map(|&l| kids[l].len()).collect();
        let tree = PlaneTree::from_child_counts(counts).expect("labelled tree is connected");
        CanonicalTree {
            tree,
            label_of_lex,
            lex_of_label,
        }
    }
}

/// A finite bi-measure tree: plane tree shape, uniform edge length, sampling
/// measure `mu` on vertices, and pruning measure `nu` split into a constant
/// density along edges plus vertex atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct BiMeasureTree {
    pub shape: PlaneTree,
    pub edge_length: f64,
    pub mu: Vec<f64>,
    pub nu_edge_density: f64,
    pub nu_atoms: Vec<f64>,
}

impl BiMeasureTree {
    pub fn new(
        shape: PlaneTree,
        edge_length: f64,
        mu: Vec<f64>,
        nu_edge_density: f64,
        nu_atoms: Vec<f64>,
    ) -> Result<Self> {
        let n = shape.n();
        if mu.len() != n || nu_atoms.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "tree has {n} vertices, mu has {}, nu atoms {}",
                mu.len(),
                nu_atoms.len()
            )));
        }
        if !(edge_length.is_finite() && edge_length > 0.0) {
            return Err(Error::InvalidMeasure(format!("edge length {edge_length}")));
        }
        if !(nu_edge_density.is_finite() && nu_edge_density >= 0.0) {
            return Err(Error::InvalidMeasure(format!("edge density {nu_edge_density}")));
        }
        if mu.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidMeasure("mu atoms must be finite and nonnegative".into()));
        }
        if mu.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidMeasure("total mu mass must be positive".into()));
        }
        for (k, a) in nu_atoms.iter().enumerate() {
            if !(a.is_finite() && *a >= 0.0) {
                return Err(Error::InvalidMeasure(format!("nu atom {a} at {k}")));
            }
            if *a > 0.0 && shape.is_leaf(k) {
                return Err(Error::InvalidMeasure(format!(
                    "nu charges leaf {k}; pruning atoms live on branch points"
                )));
            }
        }
        Ok(Self {
            shape,
            edge_length,
            mu,
            nu_edge_density,
            nu_atoms,
        })
    }

    /// Uniform probability `mu`, no pruning measure.
    pub fn uniform(shape: PlaneTree, edge_length: f64) -> Result<Self> {
        let n = shape.n();
        Self::new(shape, edge_length, vec![1.0 / n as f64; n], 0.0, vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.shape.n()
    }

    pub fn total_mu(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// ν mass carried by the edge from `v` to its parent (zero for the root).
    pub fn edge_nu(&self, v: usize) -> f64 {
        if v == 0 {
            0.0
        } else {
            self.nu_edge_density * self.edge_length
        }
    }

    /// Atom at `v` plus the edge above it.
    pub fn nu_weight(&self, v: usize) -> f64 {
        self.nu_atoms[v] + self.edge_nu(v)
    }

    pub fn total_nu(&self) -> f64 {
        (0..self.n()).map(|v| self.nu_weight(v)).sum()
    }

    /// Distance between two vertices.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let m = self.shape.mrca(i, j)?;
        let d = self.shape.depth(i) + self.shape.depth(j) - 2 * self.shape.depth(m);
        Ok(d as f64 * self.edge_length)
    }
}

/// Total μ mass of `v` and its descendants.
pub fn subtree_mass(tree: &BiMeasureTree, v: usize) -> Result<f64> {
    tree.shape.check(v)?;
    let end = v + tree.shape.subtree_size(v);
    Ok(tree.mu[v..end].iter().sum())
}

/// Splits the span of `supp(mu)` into the μ-skeleton and the μ-leaves.
///
/// For a finite tree every support point is an atom, so the leaf part is
/// always empty; it is still computed literally.
pub fn mu_skeleton_and_leaves(tree: &BiMeasureTree) -> (Vec<usize>, Vec<usize>) {
    let n = tree.n();
    let mut in_span = vec![false; n];
    let mut in_skeleton = vec![false; n];
    for v in 0..n {
        if tree.mu[v] > 0.0 {
            in_skeleton[v] = true;
            in_span[v] = true;
            let mut w = v;
            while let Some(p) = tree.shape.parent(w) {
                in_span[p] = true;
                in_skeleton[p] = true;
                w = p;
            }
        }
    }
    let skeleton = (0..n).filter(|&v| in_skeleton[v]).collect();
    let leaves = (0..n).filter(|&v| in_span[v] && !in_skeleton[v]).collect();
    (skeleton, leaves)
}

/// The subtree spanned by the root and a list of marked vertices, with ν
/// restricted to it and μ dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct SpannedSubtree {
    pub shape: PlaneTree,
    /// Lex index in the source tree of each local vertex.
    pub original: Vec<usize>,
    pub edge_length: f64,
    pub nu_edge_density: f64,
    pub nu_atoms: Vec<f64>,
    /// Local index of each marked point, in the order given.
    pub marks: Vec<usize>,
}

impl SpannedSubtree {
    pub fn total_length(&self) -> f64 {
        (self.shape.n() - 1) as f64 * self.edge_length
    }

    pub fn total_nu(&self) -> f64 {
        self.nu_atoms.iter().sum::<f64>() + self.total_length() * self.nu_edge_density
    }
}

/// Union of the root-to-point paths.
pub fn spanned_subtree(tree: &BiMeasureTree, points: &[usize]) -> Result<SpannedSubtree> {
    if points.is_empty() {
        return Err(Error::Precondition("spanned subtree needs at least one point".into()));
    }
    let n = tree.n();
    let mut kept = vec![false; n];
    kept[0] = true;
    let mut list = vec![0usize];
    for &p in points {
        tree.shape.check(p)?;
        let mut v = p;
        while !kept[v] {
            kept[v] = true;
            list.push(v);
            v = tree.shape.parent(v).expect("root is always kept");
        }
    }
    list.sort_unstable();
    let shape = tree.shape.induced(&list).expect("union of root paths is closed");
    let mut local = vec![usize::MAX; n];
    for (i, &v) in list.iter().enumerate() {
        local[v] = i;
    }
    Ok(SpannedSubtree {
        shape,
        nu_atoms: list.iter().map(|&v| tree.nu_atoms[v]).collect(),
        marks: points.iter().map(|&p| local[p]).collect(),
        original: list,
        edge_length: tree.edge_length,
        nu_edge_density: tree.nu_edge_density,
    })
}

/// Built-in fixtures.
pub mod fixtures {
    use super::PlaneTree;

    /// Child counts of the 17-vertex example tree in lexicographic order.
    pub const FIG2_CHILD_COUNTS: [usize; 17] = [3, 2, 0, 3, 0, 0, 0, 1, 0, 4, 0, 1, 2, 0, 0, 0, 0];

    /// The 17-vertex example plane tree used throughout the test suite.
    pub fn fig2() -> PlaneTree {
        PlaneTree::from_child_counts(FIG2_CHILD_COUNTS.to_vec()).expect("fixture is valid")
    }

    /// Path with `n` vertices.
    pub fn path(n: usize) -> PlaneTree {
        let mut counts = vec![1; n];
        counts[n - 1] = 0;
        PlaneTree::from_child_counts(counts).expect("path is valid")
    }

    pub fn by_name(name: &str) -> Option<PlaneTree> {
        match name {
            "fig2" => Some(fig2()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::{fig2, path};
    use super::*;
    use crate::testutil::arb_tree;
    use proptest::prelude::*;

    fn fig2_uniform() -> BiMeasureTree {
        BiMeasureTree::uniform(fig2(), 1.0).unwrap()
    }

    #[test]
    fn fig2_structure() {
        let t = fig2();
        assert_eq!(t.n(), 17);
        assert_eq!(t.children(0), &[1, 7, 9]);
        assert_eq!(t.children(9), &[10, 11, 15, 16]);
        assert_eq!(t.children(12), &[13, 14]);
        assert_eq!(t.child_counts().iter().sum::<usize>(), 16);
        let rebuilt = PlaneTree::from_parents(&t.parents()).unwrap();
        assert_eq!(rebuilt, t);
    }

    #[test]
    fn from_parents_rejects_non_lex_order() {
        // vertex 2 attached to 0 after 1 then vertex 3 to 1: 1's block reopened
        assert!(PlaneTree::from_parents(&[0, 0, 1]).is_err());
        assert!(PlaneTree::from_parents(&[1]).is_err());
        assert!(PlaneTree::from_child_counts(vec![1, 0, 0]).is_err());
        assert!(PlaneTree::from_child_counts(vec![2, 0]).is_err());
    }

    #[test]
    fn mrca_examples() {
        let t = fig2();
        assert_eq!(t.mrca(13, 16).unwrap(), 9);
        assert_eq!(t.mrca(5, 5).unwrap(), 5);
        for k in 0..17 {
            assert_eq!(t.mrca(0, k).unwrap(), 0);
        }
        assert!(matches!(t.mrca(0, 17), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn spanned_subtree_examples() {
        let t = fig2();
        let atoms: Vec<f64> = t
            .child_counts()
            .iter()
            .map(|&c| if c >= 1 { c as f64 - 1.0 } else { 0.0 })
            .collect();
        let bt = BiMeasureTree::new(t.clone(), 1.0, vec![1.0 / 17.0; 17], 0.0, atoms).unwrap();
        let s = spanned_subtree(&bt, &[13]).unwrap();
        assert_eq!(s.original, vec![0, 9, 11, 12, 13]);
        assert_eq!(s.total_length(), 4.0);
        assert_eq!(s.nu_atoms, vec![2.0, 3.0, 0.0, 1.0, 0.0]);
        assert_eq!(s.marks, vec![4]);

        let root = spanned_subtree(&bt, &[0]).unwrap();
        assert_eq!(root.shape.n(), 1);
        assert_eq!(root.total_length(), 0.0);

        let leaves: Vec<usize> = (0..17).filter(|&v| t.is_leaf(v)).collect();
        let all = spanned_subtree(&bt, &leaves).unwrap();
        assert_eq!(all.shape, t);
        assert!(spanned_subtree(&bt, &[]).is_err());
    }

    #[test]
    fn subtree_mass_examples() {
        let bt = fig2_uniform();
        assert!((subtree_mass(&bt, 9).unwrap() - 8.0 / 17.0).abs() < 1e-15);
        assert!((subtree_mass(&bt, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((subtree_mass(&bt, 13).unwrap() - 1.0 / 17.0).abs() < 1e-15);
    }

    #[test]
    fn mirror_examples() {
        assert_eq!(PlaneTree::single().mirror(), PlaneTree::single());
        assert_eq!(path(5).mirror(), path(5));
        let t = fig2();
        let rank = t.revlex_rank();
        // right-hand labels of the 17-vertex example
        assert_eq!(rank[9], 1);
        assert_eq!(rank[16], 2);
        assert_eq!(rank[13], 7);
        assert_eq!(rank[7], 9);
        assert_eq!(rank[1], 11);
        assert_eq!(rank[2], 16);
        let m = t.mirror();
        for k in 0..17 {
            assert_eq!(m.child_count(rank[k]), t.child_count(k));
        }
    }

    #[test]
    fn skeleton_examples() {
        let bt = fig2_uniform();
        let (sk, lf) = mu_skeleton_and_leaves(&bt);
        assert_eq!(sk.len(), 17);
        assert!(lf.is_empty());

        let t = fig2();
        let mu: Vec<f64> = (0..17).map(|v| if t.is_leaf(v) { 1.0 } else { 0.0 }).collect();
        let bt = BiMeasureTree::new(t.clone(), 1.0, mu, 0.0, vec![0.0; 17]).unwrap();
        let (sk, lf) = mu_skeleton_and_leaves(&bt);
        assert_eq!(sk.len(), 17);
        assert!(lf.is_empty());

        let mut mu = vec![0.0; 17];
        mu[0] = 1.0;
        let bt = BiMeasureTree::new(t, 1.0, mu, 0.0, vec![0.0; 17]).unwrap();
        assert_eq!(mu_skeleton_and_leaves(&bt), (vec![0], vec![]));
    }

    #[test]
    fn bimeasure_rejects_nu_on_leaves() {
        let t = fig2();
        let mut atoms = vec![0.0; 17];
        atoms[2] = 1.0;
        assert!(BiMeasureTree::new(t, 1.0, vec![1.0; 17], 0.0, atoms).is_err());
    }

    #[test]
    fn labelled_canonicalization() {
        // root 2 with children 0 and 1; 1 has child 3
        let lt = LabeledRootedTree::new(2, vec![Some(2), Some(2), None, Some(1)]).unwrap();
        let c = lt.canonicalize();
        assert_eq!(c.label_of_lex, vec![2, 0, 1, 3]);
        assert_eq!(c.tree.child_counts(), &[2, 0, 1, 0]);
        assert!(LabeledRootedTree::new(0, vec![None, Some(2), Some(1)]).is_err());
    }

    proptest! {
        #[test]
        fn mrca_matches_brute_force(t in arb_tree(200), a in 0usize..1000, b in 0usize..1000) {
            let (i, j) = (a % t.n(), b % t.n());
            let m = t.mrca(i, j).unwrap();
            prop_assert_eq!(m, t.mrca(j, i).unwrap());
            let ai = t.ancestors(i);
            let aj = t.ancestors(j);
            let common: Vec<usize> = ai.iter().copied().filter(|v| aj.contains(v)).collect();
            prop_assert_eq!(*common.last().unwrap(), m);
            for c in common {
                prop_assert!(t.is_ancestor(c, m));
            }
        }

        #[test]
        fn mirror_is_an_involution(t in arb_tree(300)) {
            let m = t.mirror();
            prop_assert_eq!(m.mirror(), t.clone());
            let mut a = t.child_counts().to_vec();
            let mut b = m.child_counts().to_vec();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
            let mut ha = t.depths().to_vec();
            let mut hb = m.depths().to_vec();
            ha.sort_unstable();
            hb.sort_unstable();
            prop_assert_eq!(ha, hb);
        }

        #[test]
        fn spanned_length_matches_edge_union(t in arb_tree(150), pts in prop::collection::vec(0usize..1000, 1..6)) {
            let bt = BiMeasureTree::uniform(t.clone(), 0.5).unwrap();
            let pts: Vec<usize> = pts.into_iter().map(|p| p % t.n()).collect();
            let s = spanned_subtree(&bt, &pts).unwrap();
            let mut edges = std::collections::BTreeSet::new();
            for &p in &pts {
                let mut v = p;
                while let Some(q) = t.parent(v) {
                    edges.insert(v);
                    v = q;
                }
            }
            prop_assert!((s.total_length() - 0.5 * edges.len() as f64).abs() < 1e-12);
        }

        #[test]
        fn subtree_masses_add_up(t in arb_tree(150)) {
            let n = t.n();
            let mu: Vec<f64> = (0..n).map(|k| 1.0 + (k % 5) as f64).collect();
            let bt = BiMeasureTree::new(t.clone(), 1.0, mu, 0.0, vec![0.0; n]).unwrap();
            prop_assert!((subtree_mass(&bt, 0).unwrap() - bt.total_mu()).abs() < 1e-9);
            for v in 0..n {
                let kids: f64 = t.children(v).iter().map(|&c| subtree_mass(&bt, c).unwrap()).sum();
                prop_assert!((kids + bt.mu[v] - subtree_mass(&bt, v).unwrap()).abs() < 1e-9);
            }
        }
    }
}
