//! Poisson pruning of bi-measure trees.
//!
//! Cuts fall at the points of a Poisson process with intensity `dt ⊗ ν`
//! restricted to the current root component. The process is simulated as a
//! jump chain: the waiting time is exponential with rate equal to the alive
//! ν mass, and the location is drawn from ν restricted to the alive set.
//! A cut at a vertex removes the vertex and everything above it; a cut
//! inside an edge removes the child endpoint and its subtree (the stub below
//! the cut carries no μ mass and is not kept).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::{PVector, ScalingConstants};
use crate::trees::{BiMeasureTree, CanonicalTree, PlaneTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Length measure on the skeleton.
    Ske,
    /// Atoms on branch points.
    Bra,
    /// Sum of both.
    Mix,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 3] = [MeasureKind::Ske, MeasureKind::Bra, MeasureKind::Mix];

    fn has_ske(self) -> bool {
        matches!(self, MeasureKind::Ske | MeasureKind::Mix)
    }

    fn has_bra(self) -> bool {
        matches!(self, MeasureKind::Bra | MeasureKind::Mix)
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::Ske => "ske",
            MeasureKind::Bra => "bra",
            MeasureKind::Mix => "mix",
        })
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ske" => Ok(MeasureKind::Ske),
            "bra" => Ok(MeasureKind::Bra),
            "mix" => Ok(MeasureKind::Mix),
            _ => Err(Error::Config(format!("unknown pruning measure '{s}'"))),
        }
    }
}

/// Normalisation of the pruning measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasureScale {
    /// Skeleton mass `a` per edge, branch atoms `b (c(v) - 1)`.
    GaltonWatson { a: f64, b: f64 },
    /// Skeleton mass `sigma` per edge, branch atoms `μ({v}) / sigma`.
    PTree { sigma: f64 },
}

impl From<ScalingConstants> for MeasureScale {
    fn from(s: ScalingConstants) -> Self {
        MeasureScale::GaltonWatson { a: s.a, b: s.b }
    }
}

/// Replaces the pruning measure of `tree` by the requested kind. Branch
/// atoms are placed on vertices with at least one child.
pub fn make_pruning_measure(tree: &BiMeasureTree, kind: MeasureKind, scale: MeasureScale) -> Result<BiMeasureTree> {
    let shape = &tree.shape;
    let n = shape.n();
    let (edge_mass, atoms): (f64, Vec<f64>) = match scale {
        MeasureScale::GaltonWatson { a, b } => {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::InvalidMeasure("scaling constants must be positive".into()));
            }
            let atoms = (0..n)
                .map(|v| {
                    let c = shape.child_count(v);
                    if c >= 1 {
                        b * (c as f64 - 1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            (a, atoms)
        }
        MeasureScale::PTree { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::InvalidMeasure("sigma must be positive".into()));
            }
            let atoms = (0..n)
                .map(|v| {
                    if shape.child_count(v) >= 1 {
                        tree.mu[v] / sigma
                    } else {
                        0.0
                    }
                })
                .collect();
            (sigma, atoms)
        }
    };
    let density = if kind.has_ske() {
        edge_mass / tree.edge_length
    } else {
        0.0
    };
    let atoms = if kind.has_bra() { atoms } else { vec![0.0; n] };
    BiMeasureTree::new(shape.clone(), tree.edge_length, tree.mu.clone(), density, atoms)
}

/// A Galton-Watson tree rescaled by `a_N` with uniform μ and the requested
/// pruning measure.
pub fn gw_bimeasure(shape: PlaneTree, scale: ScalingConstants, kind: MeasureKind) -> Result<BiMeasureTree> {
    let base = BiMeasureTree::uniform(shape, scale.a)?;
    make_pruning_measure(&base, kind, scale.into())
}

/// A p-tree rescaled by `σ = (Σ p_i²)^{1/2}` with μ given by `p`.
pub fn ptree_bimeasure(tree: &CanonicalTree, p: &PVector, kind: MeasureKind) -> Result<BiMeasureTree> {
    let mu = tree.label_of_lex.iter().map(|&l| p.probs()[l]).collect();
    let n = tree.tree.n();
    let base = BiMeasureTree::new(tree.tree.clone(), p.sigma(), mu, 0.0, vec![0.0; n])?;
    make_pruning_measure(&base, kind, MeasureScale::PTree { sigma: p.sigma() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CutLocation {
    Vertex {
        vertex: usize,
    },
    /// A point inside the edge from `child` to its parent, at `offset` from
    /// the parent.
    Edge {
        child: usize,
        offset: f64,
    },
}

impl CutLocation {
    /// The vertex whose subtree the cut removes.
    pub fn removed_root(&self) -> usize {
        match *self {
            CutLocation::Vertex { vertex } => vertex,
            CutLocation::Edge { child, .. } => child,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutEvent {
    pub time: f64,
    pub location: CutLocation,
}

/// Summary of the root component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub time: f64,
    pub mass_mu: f64,
    pub mass_nu: f64,
    pub alive_count: usize,
    /// Height in graph steps; `None` once the root itself is cut.
    pub height: Option<usize>,
}

/// The root component at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneState {
    pub alive: Vec<bool>,
    pub time: f64,
    pub mass_mu: f64,
    pub mass_nu: f64,
    pub alive_count: usize,
    pub height: Option<usize>,
    /// Set when the root was cut and nothing survives.
    pub degenerate: bool,
}

impl PruneState {
    /// Builds the state for an alive mask, recomputing every summary.
    pub fn from_alive(tree: &BiMeasureTree, alive: Vec<bool>, time: f64) -> Result<Self> {
        if alive.len() != tree.n() {
            return Err(Error::DimensionMismatch("alive mask length".into()));
        }
        for v in 1..tree.n() {
            if alive[v] && !alive[tree.shape.parent(v).expect("non-root")] {
                return Err(Error::Precondition(format!("alive set not closed at {v}")));
            }
        }
        let mut mass_mu = 0.0;
        let mut mass_nu = 0.0;
        let mut alive_count = 0;
        let mut height = None;
        for v in 0..tree.n() {
            if alive[v] {
                mass_mu += tree.mu[v];
                mass_nu += tree.nu_weight(v);
                alive_count += 1;
                height = height.max(Some(tree.shape.depth(v)));
            }
        }
        Ok(Self {
            degenerate: !alive[0],
            alive,
            time,
            mass_mu,
            mass_nu,
            alive_count,
            height,
        })
    }

    pub fn summary(&self) -> StateSummary {
        StateSummary {
            time: self.time,
            mass_mu: self.mass_mu,
            mass_nu: self.mass_nu,
            alive_count: self.alive_count,
            height: self.height,
        }
    }

    /// Alive vertices encoded as a bitmask (trees with at most 64 vertices).
    pub fn alive_bits(&self) -> u64 {
        self.alive
            .iter()
            .enumerate()
            .filter(|(_, a)| **a)
            .fold(0u64, |acc, (v, _)| acc | (1 << v))
    }
}

/// Fenwick tree over nonnegative weights with prefix search.
#[derive(Clone, Debug)]
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        tree[1..].copy_from_slice(weights);
        for i in 1..=n {
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                tree[j] += tree[i];
            }
        }
        Self { tree }
    }

    fn add(&mut self, idx: usize, delta: f64) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`, with the
    /// remainder inside that index's weight.
    fn find(&self, mut target: f64) -> (usize, f64) {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        (pos.min(n - 1), target)
    }
}

/// Jump-chain simulator for one pruning trajectory.
#[derive(Clone, Debug)]
pub struct Pruner<'a> {
    tree: &'a BiMeasureTree,
    alive: Vec<bool>,
    weights: Vec<f64>,
    fenwick: Fenwick,
    /// Alive vertices carrying positive ν weight; zero means ν is exhausted.
    carriers: usize,
    depth_count: Vec<usize>,
    height: usize,
    alive_count: usize,
    mass_mu: f64,
    mass_nu: f64,
    time: f64,
    degenerate: bool,
}

impl<'a> Pruner<'a> {
    pub fn new(tree: &'a BiMeasureTree) -> Self {
        let n = tree.n();
        let weights: Vec<f64> = (0..n).map(|v| tree.nu_weight(v)).collect();
        let mut depth_count = vec![0usize; tree.shape.height() + 1];
        for &d in tree.shape.depths() {
            depth_count[d] += 1;
        }
        Self {
            tree,
            alive: vec![true; n],
            fenwick: Fenwick::new(&weights),
            carriers: weights.iter().filter(|w| **w > 0.0).count(),
            mass_nu: weights.iter().sum(),
            weights,
            height: tree.shape.height(),
            depth_count,
            alive_count: n,
            mass_mu: tree.total_mu(),
            time: 0.0,
            degenerate: false,
        }
    }

    pub fn tree(&self) -> &BiMeasureTree {
        self.tree
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    /// Current alive ν mass; exactly zero once no carrier survives.
    pub fn mass_nu(&self) -> f64 {
        if self.carriers == 0 {
            0.0
        } else {
            self.mass_nu.max(0.0)
        }
    }

    pub fn summary(&self) -> StateSummary {
        StateSummary {
            time: self.time,
            mass_mu: self.mass_mu.max(0.0),
            mass_nu: self.mass_nu(),
            alive_count: self.alive_count,
            height: (!self.degenerate).then_some(self.height),
        }
    }

    pub fn state(&self) -> PruneState {
        let s = self.summary();
        PruneState {
            alive: self.alive.clone(),
            time: s.time,
            mass_mu: s.mass_mu,
            mass_nu: s.mass_nu,
            alive_count: s.alive_count,
            height: s.height,
            degenerate: self.degenerate,
        }
    }

    /// Draws the next cut without applying it; `None` when ν is exhausted.
    pub fn sample_next_cut<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<CutEvent> {
        let rate = self.mass_nu();
        if rate <= 0.0 {
            return None;
        }
        let wait = Exp::new(rate).expect("positive rate").sample(rng);
        let u = rng.random::<f64>() * rate;
        let (mut v, mut rem) = self.fenwick.find(u);
        // rounding can land on a dead vertex or past the end; walk to the
        // nearest alive carrier
        if !(self.alive[v] && self.weights[v] > 0.0) {
            v = self.nearest_carrier(v);
            rem = rng.random::<f64>() * self.weights[v];
        }
        let atom = self.tree.nu_atoms[v];
        let location = if rem < atom {
            CutLocation::Vertex { vertex: v }
        } else {
            let offset = loop {
                let x = rng.random::<f64>() * self.tree.edge_length;
                if x > 0.0 {
                    break x;
                }
            };
            CutLocation::Edge { child: v, offset }
        };
        Some(CutEvent {
            time: self.time + wait,
            location,
        })
    }

    fn nearest_carrier(&self, from: usize) -> usize {
        let n = self.alive.len();
        let ok = |v: usize| self.alive[v] && self.weights[v] > 0.0;
        (from..n)
            .find(|&v| ok(v))
            .or_else(|| (0..from).rev().find(|&v| ok(v)))
            .expect("a carrier exists while mass is positive")
    }

    /// Removes the part of the tree cut off by `event`.
    pub fn apply_cut(&mut self, event: &CutEvent) -> Result<()> {
        let v = event.location.removed_root();
        self.tree.shape.check(v)?;
        if !self.alive[v] {
            return Err(Error::Precondition(format!("cut location {v} is not alive")));
        }
        match event.location {
            CutLocation::Vertex { vertex } if self.tree.nu_atoms[vertex] <= 0.0 => {
                return Err(Error::Precondition(format!("vertex {vertex} carries no atom")));
            }
            CutLocation::Edge { child, offset } => {
                if child == 0 || !(offset > 0.0 && offset < self.tree.edge_length) {
                    return Err(Error::Precondition("edge cut must be strictly inside an edge".into()));
                }
                if self.tree.edge_nu(child) <= 0.0 {
                    return Err(Error::Precondition("edge carries no pruning mass".into()));
                }
            }
            _ => {}
        }
        self.time = event.time;
        self.kill_subtree(v);
        if v == 0 {
            self.degenerate = true;
        }
        Ok(())
    }

    fn kill_subtree(&mut self, v: usize) {
        let shape = &self.tree.shape;
        let end = v + shape.subtree_size(v);
        let mut u = v;
        while u < end {
            if !self.alive[u] {
                // everything above a dead vertex is already dead
                u += shape.subtree_size(u);
                continue;
            }
            self.alive[u] = false;
            self.alive_count -= 1;
            self.mass_mu -= self.tree.mu[u];
            let w = self.weights[u];
            if w > 0.0 {
                self.fenwick.add(u, -w);
                self.mass_nu -= w;
                self.carriers -= 1;
            }
            self.depth_count[shape.depth(u)] -= 1;
            u += 1;
        }
        while self.height > 0 && self.depth_count[self.height] == 0 {
            self.height -= 1;
        }
        if self.alive_count == 0 {
            self.mass_mu = 0.0;
            self.mass_nu = 0.0;
        }
    }

    /// Samples and applies one cut if it falls before `horizon`.
    pub fn step<R: Rng + ?Sized>(&mut self, horizon: f64, rng: &mut R) -> Option<CutEvent> {
        if self.degenerate {
            return None;
        }
        let event = self.sample_next_cut(rng)?;
        if event.time > horizon {
            return None;
        }
        self.apply_cut(&event).expect("sampled cuts are alive");
        Some(event)
    }
}

/// One recorded jump: the cut and the root component right after it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub event: CutEvent,
    pub after: StateSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: StateSummary,
    pub events: Vec<TrajectoryEvent>,
    pub horizon: f64,
}

/// State of the root component at a requested time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub summary: StateSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alive: Option<Vec<bool>>,
}

pub fn prune_trajectory<R: Rng + ?Sized>(tree: &BiMeasureTree, horizon: f64, rng: &mut R) -> Result<Trajectory> {
    Ok(prune_with_snapshots(tree, horizon, &[], false, rng)?.0)
}

/// Runs the jump chain up to `horizon`, recording every event and the state
/// at each snapshot time (times beyond the horizon are clamped to it).
pub fn prune_with_snapshots<R: Rng + ?Sized>(
    tree: &BiMeasureTree,
    horizon: f64,
    snap_times: &[f64],
    keep_masks: bool,
    rng: &mut R,
) -> Result<(Trajectory, Vec<Snapshot>)> {
    if !(horizon >= 0.0) {
        return Err(Error::Precondition(format!("horizon {horizon} must be nonnegative")));
    }
    if snap_times.iter().any(|t| !(*t >= 0.0)) || snap_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition(
            "snapshot times must be nonnegative and sorted".into(),
        ));
    }
    let mut pruner = Pruner::new(tree);
    let initial = pruner.summary();
    let mut events = Vec::new();
    let mut snaps = Vec::with_capacity(snap_times.len());
    let mut next_snap = 0;
    let take = |p: &Pruner, t: f64| Snapshot {
        summary: StateSummary { time: t, ..p.summary() },
        alive: keep_masks.then(|| p.alive.clone()),
    };
    loop {
        let event = if pruner.degenerate {
            None
        } else {
            pruner.sample_next_cut(rng)
        };
        let stop_at = event.map_or(f64::INFINITY, |e| e.time);
        while next_snap < snap_times.len() && snap_times[next_snap].min(horizon) < stop_at {
            snaps.push(take(&pruner, snap_times[next_snap].min(horizon)));
            next_snap += 1;
        }
        match event {
            Some(e) if e.time <= horizon => {
                pruner.apply_cut(&e)?;
                events.push(TrajectoryEvent {
                    event: e,
                    after: pruner.summary(),
                });
            }
            _ => break,
        }
    }
    while next_snap < snap_times.len() {
        snaps.push(take(&pruner, snap_times[next_snap].min(horizon)));
        next_snap += 1;
    }
    Ok((
        Trajectory {
            initial,
            events,
            horizon,
        },
        snaps,
    ))
}

/// Time-`t` root component after a trajectory, as a full state.
pub fn prune_to_time<R: Rng + ?Sized>(tree: &BiMeasureTree, t: f64, rng: &mut R) -> Result<PruneState> {
    let mut pruner = Pruner::new(tree);
    while pruner.step(t, rng).is_some() {}
    let mut s = pruner.state();
    s.time = t;
    Ok(s)
}

/// Fixed-time marginal by independent thinning: the edge above each vertex
/// survives with probability `exp(-t ν(edge))`, each atom with probability
/// `exp(-t ν({v}))`, and the root component is kept.
pub fn percolation_marginal<R: Rng + ?Sized>(tree: &BiMeasureTree, t: f64, rng: &mut R) -> Result<PruneState> {
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!("time {t} must be nonnegative")));
    }
    let n = tree.n();
    let mut alive = vec![false; n];
    for v in 0..n {
        let parent_ok = tree.shape.parent(v).is_none_or(|p| alive[p]);
        let edge_ok = rng.random::<f64>() < (-t * tree.edge_nu(v)).exp();
        let atom_ok = rng.random::<f64>() < (-t * tree.nu_atoms[v]).exp();
        alive[v] = parent_ok && edge_ok && atom_ok;
    }
    PruneState::from_alive(tree, alive, t)
}

/// Exact probability of each ancestrally closed alive set under the
/// thinning marginal, keyed by bitmask (trees with at most 20 vertices).
pub fn marginal_law(tree: &BiMeasureTree, t: f64) -> Result<Vec<(u64, f64)>> {
    let n = tree.n();
    if n > 20 {
        return Err(Error::SizeCap {
            what: "exact marginal law",
            size: n,
            cap: 20,
        });
    }
    let survive: Vec<f64> = (0..n).map(|v| (-t * tree.nu_weight(v)).exp()).collect();
    let mut out = Vec::new();
    // empty set: the root itself is cut
    out.push((0u64, 1.0 - survive[0]));
    for mask in 1u64..(1 << n) {
        if mask & 1 == 0 {
            continue;
        }
        let closed = (1..n).all(|v| mask >> v & 1 == 0 || mask >> tree.shape.parent(v).unwrap() & 1 == 1);
        if !closed {
            continue;
        }
        let mut p = 1.0;
        for v in 0..n {
            let in_set = mask >> v & 1 == 1;
            let parent_in = v == 0 || mask >> tree.shape.parent(v).unwrap() & 1 == 1;
            if in_set {
                p *= survive[v];
            } else if parent_in {
                p *= 1.0 - survive[v];
            }
        }
        out.push((mask, p));
    }
    Ok(out)
}
