//! Prokhorov distance between two finite measures on a common finite
//! metric space.
//!
//! With `A^ε` the closed ε-neighbourhood of `A`, the distance is the
//! infimum of `ε > 0` such that `μ(A) ≤ μ'(A^ε) + ε` and
//! `μ'(A) ≤ μ(A^ε) + ε` for every `A`. The neighbourhoods only change at
//! pairwise distances `d_0 = 0 < d_1 < ...`, so with `G_i` the largest mass
//! deficit at radius `d_i` the answer is `min_i max(d_i, G_i)`. The two
//! methods differ only in how `G_i` is obtained.

use std::collections::VecDeque;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest space the subset enumeration accepts.
pub const SUBSETS_CAP: usize = 20;

const FLOW_EPS: f64 = 1e-15;

/// Deficits below this are rounding noise and count as zero.
const DEFICIT_EPS: f64 = 1e-12;

fn snap(deficit: f64) -> f64 {
    if deficit < DEFICIT_EPS {
        0.0
    } else {
        deficit
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProkhorovMethod {
    Subsets,
    Flow,
}

impl FromStr for ProkhorovMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subsets" => Ok(Self::Subsets),
            "flow" => Ok(Self::Flow),
            _ => Err(Error::Parse(format!("unknown Prokhorov method {s:?}"))),
        }
    }
}

fn check_inputs(dist: &[Vec<f64>], a: &[f64], b: &[f64]) -> Result<()> {
    let n = dist.len();
    if a.len() != n || b.len() != n || dist.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "{n} points, measures of sizes {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::InvalidMeasure("masses must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Distinct pairwise distances in increasing order, starting at 0.
fn radius_grid(dist: &[Vec<f64>]) -> Vec<f64> {
    let mut grid: Vec<f64> = dist.iter().flatten().copied().chain([0.0]).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Exact Prokhorov distance between `mu_a` and `mu_b` on the metric `dist`.
pub fn prokhorov_distance(dist: &[Vec<f64>], mu_a: &[f64], mu_b: &[f64], method: ProkhorovMethod) -> Result<f64> {
    check_inputs(dist, mu_a, mu_b)?;
    if dist.is_empty() {
        return Ok(0.0);
    }
    let grid = radius_grid(dist);
    match method {
        ProkhorovMethod::Subsets => {
            if dist.len() > SUBSETS_CAP {
                return Err(Error::SizeCap {
                    what: "subset enumeration",
                    size: dist.len(),
                    cap: SUBSETS_CAP,
                });
            }
            let best = grid
                .iter()
                .map(|&r| r.max(deficit_by_subsets(dist, mu_a, mu_b, r)))
                .fold(f64::INFINITY, f64::min);
            Ok(best)
        }
        ProkhorovMethod::Flow => {
            let gap = |i: usize| deficit_by_flow(dist, mu_a, mu_b, grid[i]);
            // first grid index where the radius catches up with the deficit;
            // deficits are nonincreasing in the radius
            let (mut lo, mut hi) = (0, grid.len());
            while lo < hi {
                let mid = (lo + hi) / 2;
                if grid[mid] >= gap(mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Ok(if lo == grid.len() {
                gap(grid.len() - 1)
            } else if lo == 0 {
                grid[0]
            } else {
                grid[lo].min(gap(lo - 1))
            })
        }
    }
}

/// `max_A max(μ(A) - μ'(A^r), μ'(A) - μ(A^r))` over all subsets.
fn deficit_by_subsets(dist: &[Vec<f64>], a: &[f64], b: &[f64], r: f64) -> f64 {
    let n = dist.len();
    let near: Vec<u32> = (0..n)
        .map(|i| (0..n).filter(|&j| dist[i][j] <= r).fold(0u32, |m, j| m | 1 << j))
        .collect();
    let size = 1usize << n;
    let mut hood = vec![0u32; size];
    let mut mass_a = vec![0.0; size];
    let mut mass_b = vec![0.0; size];
    let mut best = 0.0f64;
    for s in 1..size {
        let low = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        hood[s] = hood[rest] | near[low];
        mass_a[s] = mass_a[rest] + a[low];
        mass_b[s] = mass_b[rest] + b[low];
    }
    for s in 1..size {
        let h = hood[s] as usize;
        best = best.max(mass_a[s] - mass_b[h]).max(mass_b[s] - mass_a[h]);
    }
    snap(best)
}

/// The same deficit through max-flow: the largest mass of one measure that
/// can be matched within distance `r` to the other leaves exactly the worst
/// Hall-type deficit unmatched, and the matching value is symmetric.
fn deficit_by_flow(dist: &[Vec<f64>], a: &[f64], b: &[f64], r: f64) -> f64 {
    let n = dist.len();
    let source = 2 * n;
    let sink = 2 * n + 1;
    let mut net = FlowNetwork::new(2 * n + 2);
    let total_a: f64 = a.iter().sum();
    let total_b: f64 = b.iter().sum();
    let infinite = total_a + total_b + 1.0;
    for i in 0..n {
        if a[i] > 0.0 {
            net.add_edge(source, i, a[i]);
        }
        if b[i] > 0.0 {
            net.add_edge(n + i, sink, b[i]);
        }
    }
    for i in (0..n).filter(|&i| a[i] > 0.0) {
        for j in (0..n).filter(|&j| b[j] > 0.0 && dist[i][j] <= r) {
            net.add_edge(i, n + j, infinite);
        }
    }
    let flow = net.max_flow(source, sink);
    snap(total_a.max(total_b) - flow)
}

struct Edge {
    to: usize,
    cap: f64,
}

/// Dinic's algorithm on real capacities.
struct FlowNetwork {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
            level: vec![0; n],
            next: vec![0; n],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: 0.0 });
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.edges[e].to;
                if self.edges[e].cap > FLOW_EPS && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.adj[u].len() {
            let e = self.adj[u][self.next[u]];
            let v = self.edges[e].to;
            if self.edges[e].cap > FLOW_EPS && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.edges[e].cap));
                if got > 0.0 {
                    self.edges[e].cap -= got;
                    self.edges[e ^ 1].cap += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.next.fill(0);
            loop {
                let got = self.dfs(s, t, f64::INFINITY);
                if got <= 0.0 {
                    break;
                }
                flow += got;
            }
        }
        flow
    }
}
