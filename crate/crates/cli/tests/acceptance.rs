//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Tolerances and runtime limits are pinned below.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use serde_json::json;
use treeprune::coding::{
    ancestor_by_path, compute_paths, lex_to_revlex, sigma_up, sigma_up_all, AncestorSplits, Ordering,
};
use treeprune::diagnostics::{marginal_chi_square, run_experiment};
use treeprune::mmspace::{lower_mass, lower_mass_tree, prokhorov_distance, FiniteMMSpace, ProkhorovMethod};
use treeprune::pruning::{make_pruning_measure, MeasureKind, MeasureScale};
use treeprune::rng::stream;
use treeprune::samplers::{
    enumerate_labeled, enumerate_plane, sample_gw_conditioned, sample_ptree, LawKind, OffspringLaw, PVector,
};
use treeprune::trees::fixtures::{fig2, path};
use treeprune::trees::{BiMeasureTree, LabeledRootedTree, PlaneTree};
use treeprune::Error;

const SEED: u64 = 1;

const IDENTITY_TREES: usize = 1000;
const IDENTITY_MAX_N: usize = 300;
const EXACT_SAMPLES: usize = 100_000;
const GW_FREQ_TOL: f64 = 0.01;
const PTREE_TV_TOL: f64 = 0.02;
const MARGINAL_REPS: usize = 100_000;
const MARGINAL_ALPHA: f64 = 0.001;
const PROKHOROV_INSTANCES: usize = 200;
const PROKHOROV_MAX_SIZE: usize = 8;
const PROKHOROV_TOL: f64 = 1e-9;
const BROWNIAN_NS: [usize; 3] = [500, 5000, 50000];
const BROWNIAN_REPS: usize = 100;
const BROWNIAN_RATIO: f64 = 0.5;
const LWV_NS: [usize; 3] = [500, 2000, 8000];
const LWV_REPS: usize = 2000;

type Check = Result<String, String>;

fn criterion(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (
            false,
            format!("{d}; runtime over the {:.0} s limit", limit.as_secs_f64()),
        ),
        Err(d) => (false, d),
    };
    println!(
        "{} [{id:>2}] {name} ({:.2} s): {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture_paths() -> Check {
    let p = compute_paths(&fig2());
    let up = vec![0, 2, 3, 2, 4, 3, 2, 1, 1, 0, 3, 2, 2, 3, 2, 1, 0, -1];
    let down = vec![0, 2, 5, 4, 3, 3, 4, 3, 2, 1, 1, 0, 1, 3, 2, 1, 0, -1];
    ensure(p.luk_up == up, || format!("W-up {:?}", p.luk_up))?;
    ensure(p.luk_down == down, || format!("W-down {:?}", p.luk_down))?;
    Ok("both coding paths match the fixture exactly".into())
}

/// Children of vertices on the path to `m` that branch off right of it
/// (`right`) or left of it.
fn branching(t: &PlaneTree, m: usize, right: bool) -> i64 {
    let anc = t.ancestors(m);
    anc.windows(2)
        .map(|w| {
            let kids = t.children(w[0]);
            let pos = kids.iter().position(|&c| c == w[1]).expect("child on path");
            (if right { kids.len() - pos - 1 } else { pos }) as i64
        })
        .sum()
}

fn identities_on(t: &PlaneTree) -> Result<(), String> {
    let n = t.n();
    let p = compute_paths(t);
    let rank = t.revlex_rank();
    let order = t.revlex_order();
    let all = sigma_up_all(t);
    let max_inc = (0..n).map(|k| p.increment(Ordering::Lex, k)).max().unwrap_or(-1);
    let mut seen = vec![false; n];
    for k in 0..n {
        let fail = |what: &str| format!("N = {n}, vertex {k}: {what}");

        let s = sigma_up(t, &p, k).map_err(|e| fail(&e.to_string()))?;
        let direct: i64 = t
            .ancestors(k)
            .iter()
            .filter(|&&v| !t.is_leaf(v))
            .map(|&v| t.child_count(v) as i64 - 1)
            .sum();
        ensure(
            s.sigma == direct && s.sigma == all[k] && s.sigma == s.luk_term + s.rev_term + s.remainder,
            || fail("sigma decomposition"),
        )?;

        let (kt, d) = lex_to_revlex(t, k).map_err(|e| fail(&e.to_string()))?;
        ensure(kt == rank[k] && !seen[kt], || fail("revlex index map"))?;
        seen[kt] = true;
        ensure(
            p.increment(Ordering::Revlex, kt) == p.increment(Ordering::Lex, k),
            || fail("increments under the index map"),
        )?;
        ensure(
            d == t.descendants(k)
                && p.descendants(Ordering::Lex, k).ok() == Some(d)
                && p.descendants(Ordering::Revlex, kt).ok() == Some(d),
            || fail("descendant counts"),
        )?;

        let splits = AncestorSplits::new(t, &p, k).map_err(|e| fail(&e.to_string()))?;
        let mut before = 0;
        let mut after = 0;
        for (slot, &v) in splits.ancestors.iter().enumerate() {
            let (b, a) = splits.lex[slot];
            ensure(a + b == t.child_count(v) as i64 - 1, || fail("before + after"))?;
            before += b;
            after += a;
        }
        ensure(after == p.luk_up[k], || fail("after-sum"))?;
        ensure(before == p.luk_down[kt], || fail("before-sum"))?;
        for beta in -1..=max_inc {
            let tr = splits.truncated(&p, k, beta);
            ensure(
                tr.after_small <= tr.after_bound && tr.before_small <= tr.before_bound,
                || fail(&format!("truncated bounds at threshold {beta}")),
            )?;
        }

        ensure(p.luk_up[k] == branching(t, k, true), || fail("right-branching count"))?;
        ensure(p.luk_down[kt] == branching(t, k, false), || {
            fail("left-branching count")
        })?;

        // ancestry of every pair from the paths: the descendants of u(i) are
        // the indices right after i in both enumerations
        let dl = p.descendants(Ordering::Lex, k).unwrap();
        let dr = p.descendants(Ordering::Revlex, k).unwrap();
        for j in 0..n {
            ensure((k <= j && j <= k + dl) == t.is_ancestor(k, j), || {
                fail("lex order recovery")
            })?;
            ensure((k <= j && j <= k + dr) == t.is_ancestor(order[k], order[j]), || {
                fail("revlex order recovery")
            })?;
        }
    }
    Ok(())
}

fn exact_identities() -> Check {
    let laws = [
        OffspringLaw::new(LawKind::Geometric).map_err(|e| e.to_string())?,
        OffspringLaw::new(LawKind::Stable(1.5)).map_err(|e| e.to_string())?,
    ];
    let mut vertices = 0;
    let mut pair_checks = 0;
    for i in 0..IDENTITY_TREES {
        let mut rng = stream(SEED, 2_000 + i as u64);
        // sizes the law cannot produce (N = 2 without unary vertices) are redrawn
        let t = loop {
            let n = rng.random_range(1..=IDENTITY_MAX_N);
            match sample_gw_conditioned(&laws[i % 2], n, &mut rng) {
                Ok(t) => break t,
                Err(Error::Unreachable { .. }) => continue,
                Err(e) => return Err(e.to_string()),
            }
        };
        let n = t.n();
        identities_on(&t).map_err(|e| format!("tree {i}: {e}"))?;
        // spot checks of the pairwise criterion itself
        let p = compute_paths(&t);
        for _ in 0..20 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            ensure(
                ancestor_by_path(&p, Ordering::Lex, a, b).ok() == Some(t.is_ancestor(a, b)),
                || format!("tree {i}: ancestry of ({a}, {b})"),
            )?;
            pair_checks += 1;
        }
        vertices += n;
    }
    Ok(format!(
        "{IDENTITY_TREES} trees, {vertices} vertices, {pair_checks} pairwise spot checks, all exact"
    ))
}

fn gw_exactness() -> Check {
    let law = OffspringLaw::new(LawKind::Geometric).map_err(|e| e.to_string())?;
    let exact = enumerate_plane(4, &law).map_err(|e| e.to_string())?;
    ensure(exact.len() == 5, || {
        format!("{} plane trees with 4 vertices", exact.len())
    })?;
    let mut counts: BTreeMap<Vec<usize>, usize> = exact.iter().map(|(t, _)| (t.child_counts().to_vec(), 0)).collect();
    let mut rng = stream(SEED, 3);
    for _ in 0..EXACT_SAMPLES {
        let t = sample_gw_conditioned(&law, 4, &mut rng).map_err(|e| e.to_string())?;
        *counts
            .get_mut(t.child_counts())
            .ok_or("sample outside the enumeration")? += 1;
    }
    let freqs: Vec<f64> = counts.values().map(|&c| c as f64 / EXACT_SAMPLES as f64).collect();
    let worst = freqs.iter().map(|f| (f - 0.2).abs()).fold(0.0, f64::max);
    let shown: Vec<String> = freqs.iter().map(|f| format!("{f:.4}")).collect();
    ensure(worst < GW_FREQ_TOL, || format!("frequencies [{}]", shown.join(", ")))?;
    Ok(format!("frequencies [{}], max deviation {worst:.4}", shown.join(", ")))
}

fn ptree_exactness() -> Check {
    let p = PVector::new(vec![0.5, 0.3, 0.2]).map_err(|e| e.to_string())?;
    let exact = enumerate_labeled(&p).map_err(|e| e.to_string())?;
    ensure(exact.len() == 9, || {
        format!("{} labelled trees on 3 vertices", exact.len())
    })?;
    let key = |t: &LabeledRootedTree| -> Vec<Option<usize>> { (0..t.n()).map(|l| t.parent(l)).collect() };
    let index: HashMap<Vec<Option<usize>>, usize> = exact.iter().enumerate().map(|(i, (t, _))| (key(t), i)).collect();
    let mut counts = vec![0usize; exact.len()];
    let mut rng = stream(SEED, 4);
    for _ in 0..EXACT_SAMPLES {
        let t = sample_ptree(&p, &mut rng).map_err(|e| e.to_string())?;
        counts[*index.get(&key(&t)).ok_or("sample outside the enumeration")?] += 1;
    }
    let tv = 0.5
        * exact
            .iter()
            .zip(&counts)
            .map(|((_, w), &c)| (c as f64 / EXACT_SAMPLES as f64 - w).abs())
            .sum::<f64>();
    ensure(tv < PTREE_TV_TOL, || format!("total variation {tv:.4}"))?;
    Ok(format!("total variation {tv:.4} over 9 trees"))
}

fn pruning_marginals() -> Check {
    let base = BiMeasureTree::uniform(path(4), 1.0).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for kind in MeasureKind::ALL {
        let tree = make_pruning_measure(&base, kind, MeasureScale::GaltonWatson { a: 1.0, b: 1.0 })
            .map_err(|e| e.to_string())?;
        for t in [0.3, 1.0] {
            let chi = marginal_chi_square(&tree, t, MARGINAL_REPS, SEED).map_err(|e| e.to_string())?;
            ensure(chi.p_value > MARGINAL_ALPHA, || format!("{kind} t = {t}: {chi:?}"))?;
            parts.push(format!("{kind}@{t}: p = {:.3} (df {})", chi.p_value, chi.df));
        }
    }
    Ok(parts.join(", "))
}

fn random_instance<R: Rng>(rng: &mut R, n: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let dist = pts
        .iter()
        .map(|a| {
            pts.iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect();
    // mixed masses: some empty atoms and unequal totals
    let mut mass = || -> Vec<f64> {
        (0..n)
            .map(|_| {
                if rng.random_bool(0.25) {
                    0.0
                } else {
                    rng.random::<f64>() * 0.5
                }
            })
            .collect()
    };
    let a = mass();
    let b = mass();
    (dist, a, b)
}

fn prokhorov_agreement() -> Check {
    let both = [ProkhorovMethod::Subsets, ProkhorovMethod::Flow];
    let mut rng = stream(SEED, 6);
    let mut worst = 0.0f64;
    for k in 0..PROKHOROV_INSTANCES {
        let n = rng.random_range(1..=PROKHOROV_MAX_SIZE);
        let (dist, a, b) = random_instance(&mut rng, n);
        let s = prokhorov_distance(&dist, &a, &b, both[0]).map_err(|e| e.to_string())?;
        let f = prokhorov_distance(&dist, &a, &b, both[1]).map_err(|e| e.to_string())?;
        worst = worst.max((s - f).abs());
        ensure((s - f).abs() <= PROKHOROV_TOL, || {
            format!("instance {k}: subsets {s} vs flow {f}")
        })?;
    }
    for m in both {
        for d in [0.0, 0.25, 0.7, 1.0, 2.5] {
            let dist = vec![vec![0.0, d], vec![d, 0.0]];
            let got = prokhorov_distance(&dist, &[1.0, 0.0], &[0.0, 1.0], m).map_err(|e| e.to_string())?;
            ensure(got == d.min(1.0), || format!("{m:?}: point masses at {d} gave {got}"))?;
        }
        let got = prokhorov_distance(&[vec![0.0]], &[1.0], &[0.5], m).map_err(|e| e.to_string())?;
        ensure(got == 0.5, || format!("{m:?}: half mass gave {got}"))?;
        let far = vec![vec![0.0, 3.0], vec![3.0, 0.0]];
        let got = prokhorov_distance(&far, &[1.0, 0.0], &[0.5, 0.5], m).map_err(|e| e.to_string())?;
        ensure(got == 0.5, || format!("{m:?}: half mass moved far gave {got}"))?;
    }
    Ok(format!(
        "{PROKHOROV_INSTANCES} instances, max disagreement {worst:.1e}; point-mass and half-mass cases exact"
    ))
}

fn fixture_space(mass: Vec<f64>) -> Result<FiniteMMSpace, String> {
    let t = BiMeasureTree::uniform(fig2(), 1.0).map_err(|e| e.to_string())?;
    let dist = (0..17)
        .map(|i| (0..17).map(|j| t.distance(i, j).unwrap()).collect())
        .collect();
    FiniteMMSpace::new(dist, mass, 0, vec![]).map_err(|e| e.to_string())
}

fn lower_masses() -> Check {
    let space = fixture_space(vec![1.0 / 17.0; 17])?;
    let tree = BiMeasureTree::uniform(fig2(), 1.0).map_err(|e| e.to_string())?;
    for (delta, want) in [(1.5, 2.0 / 17.0), (0.5, 1.0 / 17.0)] {
        let a = lower_mass(&space, delta, f64::INFINITY).map_err(|e| e.to_string())?;
        let b = lower_mass_tree(&tree, None, delta, f64::INFINITY).map_err(|e| e.to_string())?;
        ensure(a == want && b == want, || {
            format!("delta {delta}: {a}, {b}, want {want}")
        })?;
    }
    // no sampled point within distance 1 of the root
    let deep: Vec<f64> = fig2()
        .depths()
        .iter()
        .map(|&d| if d >= 3 { 1.0 } else { 0.0 })
        .collect();
    let space = fixture_space(deep)?;
    let empty = lower_mass(&space, 1.0, 1.0).map_err(|e| e.to_string())?;
    ensure(empty == f64::INFINITY, || format!("empty centre set gave {empty}"))?;
    Ok("2/17 at delta 1.5, 1/17 at delta 0.5, infinity for an empty centre set".into())
}

fn verdict_values(
    report: &treeprune::diagnostics::ExperimentReport,
    series: &str,
) -> Result<(Vec<f64>, bool, f64), String> {
    let s = report
        .series(series)
        .ok_or_else(|| format!("missing series {series}"))?;
    let v = s
        .verdict
        .as_ref()
        .ok_or_else(|| format!("series {series} has no verdict"))?;
    Ok((v.values.clone(), v.strictly_decreasing, v.ratio))
}

fn brownian() -> Check {
    let cfg = json!({
        "law": "geometric",
        "ns": BROWNIAN_NS,
        "reps": BROWNIAN_REPS,
        "seed": SEED,
        "ratio_threshold": BROWNIAN_RATIO,
    });
    let report = run_experiment("brownian-sigma", &cfg).map_err(|e| e.to_string())?;
    let (values, decreasing, ratio) = verdict_values(&report, "sup_sigma_height")?;
    let shown = format!("medians {values:.4?}, ratio {ratio:.3}");
    ensure(decreasing && ratio < BROWNIAN_RATIO, || shown.clone())?;
    Ok(shown)
}

fn lwv() -> Check {
    let sources = [("gw", "geometric"), ("gw", "stable:1.5"), ("ptree", "uniform")];
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for (family, law) in sources {
        for kind in MeasureKind::ALL {
            let mut cfg = json!({
                "family": family,
                "measure": kind,
                "ns": LWV_NS,
                "points": 2,
                "reps": LWV_REPS,
                "seed": SEED,
            });
            if family == "gw" {
                cfg["law"] = json!(law);
            }
            let report = run_experiment("lwv", &cfg).map_err(|e| e.to_string())?;
            let (values, decreasing, _) = verdict_values(&report, "energy_consecutive")?;
            let unbiased: Vec<f64> = report
                .series("energy_consecutive_unbiased")
                .map(|s| s.rows.iter().filter_map(|r| r.value).collect())
                .unwrap_or_default();
            let label = format!("{family}/{law}/{kind}");
            lines.push(format!(
                "{label}: energy {values:.5?} (unbiased {unbiased:.5?}){}",
                if decreasing { "" } else { " NOT decreasing" }
            ));
            if !decreasing {
                failed.push(label);
            }
        }
    }
    for l in &lines {
        println!("       {l}");
    }
    ensure(failed.is_empty(), || {
        format!("not strictly decreasing for {}", failed.join(", "))
    })?;
    Ok("strictly decreasing for all nine configurations".into())
}

const BIN: &str = env!("CARGO_BIN_EXE_treeprune");

/// Runs the CLI session in `dir` and returns every command's stdout.
fn cli_session(dir: &Path, threads: Option<&str>) -> Result<Vec<Vec<u8>>, String> {
    fs::write(
        dir.join("a.json"),
        r#"{"dist":[[0.0,1.0,2.0],[1.0,0.0,1.5],[2.0,1.5,0.0]],"mass":[0.2,0.5,0.3],"root":0}"#,
    )
    .map_err(|e| e.to_string())?;
    fs::write(
        dir.join("b.json"),
        r#"{"dist":[[0.0,0.5],[0.5,0.0]],"mass":[0.6,0.4],"root":0}"#,
    )
    .map_err(|e| e.to_string())?;
    let experiments = [
        ("brownian-sigma", json!({"ns": [50, 200], "reps": 20, "seed": 3})),
        (
            "reverse-path",
            json!({"law": "stable:1.5", "ns": [50, 200], "reps": 20, "seed": 3}),
        ),
        (
            "lwv",
            json!({"family": "ptree", "measure": "mix", "ns": [30, 60], "reps": 50, "seed": 3}),
        ),
        (
            "mass-bound",
            json!({"measure": "bra", "ns": [50, 100], "deltas": [0.5], "horizon": 1.0, "snapshots": [0.5], "reps": 5, "seed": 3}),
        ),
        (
            "pruning-mass",
            json!({"measure": "ske", "ns": [30, 60], "times": [0.0, 0.5], "reps": 30, "seed": 3, "gate_reps": 2000}),
        ),
    ];
    for (name, cfg) in &experiments {
        fs::write(dir.join(format!("{name}.cfg.json")), cfg.to_string()).map_err(|e| e.to_string())?;
    }
    let mut commands: Vec<Vec<String>> = [
        "sample-gw --law stable:1.5 --n 2000 --reps 6 --seed 5 --out gw.jsonl",
        "sample-ptree --p uniform:200 --reps 6 --seed 5 --out pt.jsonl",
        "code --input gw.jsonl --format csv",
        "code --input pt.jsonl --format json --out code.json",
        "prune --input gw.jsonl --measure mix --scale law:stable:1.5 --horizon 2 --reps 3 --snap 0.5,1 --seed 5 --out prune-gw",
        "prune --input pt.jsonl --measure bra --scale ptree --horizon 1 --reps 3 --seed 5 --out prune-pt",
        "mass-bound --input gw.jsonl --delta 0.5 --radius 2",
        "compare --mode nu-cloud --a a.json --b b.json --m 2 --reps 300 --seed 5",
        "compare --mode gp-bound --a a.json --b b.json --exhaustive",
    ]
    .iter()
    .map(|c| c.split(' ').map(String::from).collect())
    .collect();
    for (name, _) in &experiments {
        commands.push(
            [
                "experiment",
                "--name",
                name,
                "--config",
                &format!("{name}.cfg.json"),
                "--out",
                "exp",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        );
    }
    let mut stdout = Vec::new();
    for args in &commands {
        let mut cmd = Command::new(BIN);
        cmd.args(args).current_dir(dir);
        if let Some(t) = threads {
            cmd.env("TREEPRUNE_THREADS", t);
        }
        let out = cmd.output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
        }
        stdout.push(out.stdout);
    }
    Ok(stdout)
}

fn files_under(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out_a = cli_session(a.path(), None)?;
    let out_b = cli_session(b.path(), Some("1"))?;
    ensure(out_a == out_b, || "stdout differs between runs".into())?;
    let (fa, fb) = (files_under(a.path()), files_under(b.path()));
    ensure(fa.keys().eq(fb.keys()), || "different sets of output files".into())?;
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    Ok(format!(
        "{} commands, {} files byte-identical across two runs (default pool and one thread)",
        out_a.len(),
        fa.len()
    ))
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "fixture coding paths", secs(1), fixture_paths),
        criterion(2, "exact path identities", secs(120), exact_identities),
        criterion(3, "conditioned GW exactness", secs(30), gw_exactness),
        criterion(4, "p-tree exactness", secs(30), ptree_exactness),
        criterion(5, "pruning marginal oracle", secs(120), pruning_marginals),
        criterion(6, "Prokhorov dual-method agreement", secs(60), prokhorov_agreement),
        criterion(7, "lower mass fixture", Duration::MAX, lower_masses),
        criterion(8, "Brownian sigma-height diagnostic", secs(900), brownian),
        criterion(9, "LWV energy diagnostic", secs(1200), lwv),
        criterion(10, "CLI determinism", Duration::MAX, determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
