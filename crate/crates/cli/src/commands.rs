//! Subcommand implementations.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use treeprune::coding::compute_paths;
use treeprune::diagnostics::run_experiment;
use treeprune::io::{read_tree_jsonl, space_from_json, TreeRecord};
use treeprune::mmspace::glue::Correspondence;
use treeprune::mmspace::{
    distance_matrix_sample, energy_distance, exhaustive_gp, gp_upper_bound, lower_mass_tree, prokhorov_distance,
    FiniteMMSpace, ProkhorovMethod,
};
use treeprune::pruning::{make_pruning_measure, prune_with_snapshots, MeasureKind, MeasureScale};
use treeprune::rng::{stream, stream_id};
use treeprune::samplers::{sample_gw_conditioned_with_budget, scaling_constants, LawKind, OffspringLaw, PVector};
use treeprune::trees::{fixtures, BiMeasureTree};

use crate::output::{create_dir, read_to_string, reader, runtime_io, writer, Header};
use crate::{
    CliError, CliResult, CodeArgs, CompareArgs, ExperimentArgs, MassBoundArgs, PruneArgs, SampleGwArgs,
    SamplePtreeArgs, TreeInput,
};

/// Replicas are produced in parallel in chunks of this size and written in
/// order.
const CHUNK: usize = 1024;

const TAG_SAMPLE_GW: u64 = 11;
const TAG_SAMPLE_PTREE: u64 = 12;
const TAG_PRUNE: u64 = 13;
const TAG_COMPARE: u64 = 14;

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn load_trees(input: &TreeInput) -> CliResult<Vec<TreeRecord>> {
    match (&input.input, &input.fixture) {
        (_, Some(name)) => {
            let tree = fixtures::by_name(name).ok_or_else(|| config_err(format!("unknown fixture {name:?}")))?;
            Ok(vec![TreeRecord::from_shape(&tree)])
        }
        (Some(path), None) => Ok(read_tree_jsonl(reader(path)?)?),
        (None, None) => Err(config_err("either --input or --fixture is required")),
    }
}

/// Writes `count` lines produced in parallel, in index order.
fn write_ordered(
    out: &mut dyn Write,
    count: usize,
    line: impl Fn(usize) -> CliResult<String> + Sync + Send,
) -> CliResult<()> {
    for start in (0..count).step_by(CHUNK) {
        let end = (start + CHUNK).min(count);
        let lines: Vec<String> = (start..end).into_par_iter().map(&line).collect::<CliResult<_>>()?;
        for l in lines {
            writeln!(out, "{l}").map_err(runtime_io)?;
        }
    }
    out.flush().map_err(runtime_io)
}

pub fn sample_gw(args: &SampleGwArgs) -> CliResult<()> {
    let kind: LawKind = args.law.parse().map_err(config_err)?;
    let law = OffspringLaw::new(kind)?;
    let budget = args.budget.unwrap_or(treeprune::samplers::gw::DEFAULT_BUDGET);
    let mut out = writer(args.out.as_deref())?;
    write_ordered(&mut out, args.reps, |r| {
        let mut rng = stream(args.seed, stream_id(&[TAG_SAMPLE_GW, r as u64]));
        let tree = sample_gw_conditioned_with_budget(&law, args.n, budget, &mut rng)?;
        Ok(TreeRecord::from_shape(&tree).to_json())
    })
}

fn parse_pvector(spec: &str) -> CliResult<PVector> {
    if let Some(n) = spec.strip_prefix("uniform:") {
        let n: usize = n.parse().map_err(|_| config_err(format!("bad size in {spec:?}")))?;
        return Ok(PVector::uniform(n)?);
    }
    let text = read_to_string(spec)?;
    let p: Vec<f64> = serde_json::from_str(&text).map_err(|e| config_err(format!("{spec}: {e}")))?;
    Ok(PVector::new(p)?)
}

pub fn sample_ptree(args: &SamplePtreeArgs) -> CliResult<()> {
    let p = parse_pvector(&args.p)?;
    let mut out = writer(args.out.as_deref())?;
    write_ordered(&mut out, args.reps, |r| {
        let mut rng = stream(args.seed, stream_id(&[TAG_SAMPLE_PTREE, r as u64]));
        let tree = treeprune::samplers::sample_ptree(&p, &mut rng)?.canonicalize();
        Ok(TreeRecord::from_canonical(&tree, p.probs()).to_json())
    })
}

fn cell(v: &[i64], i: usize) -> String {
    v.get(i).map(|x| x.to_string()).unwrap_or_default()
}

pub fn code(args: &CodeArgs) -> CliResult<()> {
    let trees = load_trees(&args.trees)?;
    let mut out = writer(args.out.as_deref())?;
    match args.format.as_str() {
        "csv" => {
            out.write_all(Header::new("code", None, args).csv_comment().as_bytes())
                .map_err(runtime_io)?;
            writeln!(out, "tree,index,Wup,Wdown,H,C").map_err(runtime_io)?;
            for (t, rec) in trees.iter().enumerate() {
                let p = compute_paths(&rec.shape()?);
                let rows = p.luk_up.len().max(p.contour.len());
                for i in 0..rows {
                    writeln!(
                        out,
                        "{t},{i},{},{},{},{}",
                        cell(&p.luk_up, i),
                        cell(&p.luk_down, i),
                        cell(&p.height, i),
                        cell(&p.contour, i)
                    )
                    .map_err(runtime_io)?;
                }
            }
        }
        "json" => {
            for (t, rec) in trees.iter().enumerate() {
                let p = compute_paths(&rec.shape()?);
                let line = json!({"tree": t, "Wup": p.luk_up, "Wdown": p.luk_down, "H": p.height, "C": p.contour});
                writeln!(out, "{line}").map_err(runtime_io)?;
            }
        }
        other => return Err(config_err(format!("unknown format {other:?}; expected csv or json"))),
    }
    out.flush().map_err(runtime_io)
}

/// Attaches the requested pruning measure to a serialised tree.
fn decorate(rec: &TreeRecord, kind: MeasureKind, scale: &str) -> CliResult<BiMeasureTree> {
    let base = rec.to_bimeasure()?;
    let n = base.n();
    let (edge_length, scale) = if scale == "unit" {
        (base.edge_length, MeasureScale::GaltonWatson { a: 1.0, b: 1.0 })
    } else if scale == "ptree" {
        let total = base.total_mu();
        let sigma = base.mu.iter().map(|m| (m / total).powi(2)).sum::<f64>().sqrt();
        (sigma, MeasureScale::PTree { sigma })
    } else if let Some(name) = scale.strip_prefix("law:") {
        let law = OffspringLaw::new(name.parse().map_err(config_err)?)?;
        let s = scaling_constants(&law, n);
        (s.a, s.into())
    } else {
        return Err(config_err(format!(
            "unknown scale {scale:?}; expected unit, ptree or law:NAME"
        )));
    };
    let base = BiMeasureTree::new(base.shape, edge_length, base.mu, 0.0, vec![0.0; n])?;
    Ok(make_pruning_measure(&base, kind, scale)?)
}

#[derive(Serialize)]
struct SnapshotLine {
    tree: usize,
    rep: usize,
    time: f64,
    mass_mu: f64,
    mass_nu: f64,
    alive_count: usize,
    height: Option<usize>,
    alive: Vec<usize>,
}

fn summary_row(tree: usize, rep: usize, s: &treeprune::pruning::StateSummary) -> String {
    let h = s.height.map(|h| h.to_string()).unwrap_or_default();
    format!(
        "{tree},{rep},{},{},{},{},{h}",
        s.time, s.mass_mu, s.mass_nu, s.alive_count
    )
}

pub fn prune(args: &PruneArgs) -> CliResult<()> {
    let kind: MeasureKind = args.measure.parse().map_err(config_err)?;
    if !(args.horizon >= 0.0) {
        return Err(config_err("horizon must be nonnegative"));
    }
    if args.snap.windows(2).any(|w| w[1] < w[0]) || args.snap.iter().any(|t| !(*t >= 0.0)) {
        return Err(config_err("snapshot times must be sorted and nonnegative"));
    }
    let trees: Vec<BiMeasureTree> = load_trees(&args.trees)?
        .iter()
        .map(|r| decorate(r, kind, &args.scale))
        .collect::<CliResult<_>>()?;
    create_dir(&args.out)?;
    let header = Header::new("prune", Some(args.seed), args);
    let mut events = writer(Some(&format!("{}/events.csv", args.out)))?;
    let mut snaps = writer(Some(&format!("{}/snapshots.jsonl", args.out)))?;
    events.write_all(header.csv_comment().as_bytes()).map_err(runtime_io)?;
    writeln!(events, "tree,rep,time,massMu,massNu,aliveCount,height").map_err(runtime_io)?;
    let jobs: Vec<(usize, usize)> = (0..trees.len())
        .flat_map(|t| (0..args.reps).map(move |r| (t, r)))
        .collect();
    for chunk in jobs.chunks(CHUNK) {
        let results: Vec<(String, String)> = chunk
            .par_iter()
            .map(|&(t, r)| -> CliResult<(String, String)> {
                let mut rng = stream(args.seed, stream_id(&[TAG_PRUNE, t as u64, r as u64]));
                let (traj, snapshots) = prune_with_snapshots(&trees[t], args.horizon, &args.snap, true, &mut rng)?;
                let mut ev = summary_row(t, r, &traj.initial);
                for e in &traj.events {
                    ev.push('\n');
                    ev.push_str(&summary_row(t, r, &e.after));
                }
                let lines: Vec<String> = snapshots
                    .into_iter()
                    .map(|s| {
                        let alive = s.alive.unwrap_or_default();
                        serde_json::to_string(&SnapshotLine {
                            tree: t,
                            rep: r,
                            time: s.summary.time,
                            mass_mu: s.summary.mass_mu,
                            mass_nu: s.summary.mass_nu,
                            alive_count: s.summary.alive_count,
                            height: s.summary.height,
                            alive: (0..alive.len()).filter(|&v| alive[v]).collect(),
                        })
                        .expect("snapshots serialise")
                    })
                    .collect();
                Ok((ev, lines.join("\n")))
            })
            .collect::<CliResult<_>>()?;
        for (ev, sn) in results {
            writeln!(events, "{ev}").map_err(runtime_io)?;
            if !sn.is_empty() {
                writeln!(snaps, "{sn}").map_err(runtime_io)?;
            }
        }
    }
    events.flush().map_err(runtime_io)?;
    snaps.flush().map_err(runtime_io)
}

fn load_space(path: &str) -> CliResult<FiniteMMSpace> {
    Ok(space_from_json(&read_to_string(path)?)?)
}

pub fn compare(args: &CompareArgs) -> CliResult<()> {
    let a = load_space(&args.a)?;
    let b = load_space(&args.b)?;
    let result = match args.mode.as_str() {
        "prokhorov" => {
            let method: ProkhorovMethod = args.method.parse().map_err(config_err)?;
            let same = a.size() == b.size()
                && a.dist
                    .iter()
                    .flatten()
                    .zip(b.dist.iter().flatten())
                    .all(|(x, y)| (x - y).abs() <= 1e-12);
            if !same {
                return Err(config_err("prokhorov mode needs both measures on the same metric"));
            }
            let d = prokhorov_distance(&a.dist, &a.mass, &b.mass, method)?;
            json!({"mode": "prokhorov", "method": args.method, "distance": d})
        }
        "gp-bound" => {
            let rel = Correspondence::designated(&a, &b)?;
            let bound = gp_upper_bound(&a, &b, &rel)?;
            if args.exhaustive {
                let best = exhaustive_gp(&a, &b)?;
                json!({"mode": "gp-bound", "bound": bound, "exhaustive": best})
            } else {
                json!({"mode": "gp-bound", "bound": bound})
            }
        }
        "nu-cloud" => {
            if a.marked.len() != b.marked.len() {
                return Err(config_err("spaces have different numbers of marked points"));
            }
            if args.reps == 0 || args.m == 0 {
                return Err(config_err("reps and m must be positive"));
            }
            let cloud = |space: &FiniteMMSpace, side: u64| -> CliResult<Vec<Vec<f64>>> {
                (0..args.reps)
                    .into_par_iter()
                    .map(|r| {
                        let mut rng = stream(args.seed, stream_id(&[TAG_COMPARE, side, r as u64]));
                        Ok(distance_matrix_sample(space, args.m, &mut rng)?)
                    })
                    .collect()
            };
            let e = energy_distance(&cloud(&a, 0)?, &cloud(&b, 1)?)?;
            json!({"mode": "nu-cloud", "m": args.m, "reps": args.reps, "energy_distance": e})
        }
        other => {
            return Err(config_err(format!(
                "unknown mode {other:?}; expected nu-cloud, gp-bound or prokhorov"
            )))
        }
    };
    let header = Header::new("compare", Some(args.seed), args);
    let mut out = writer(args.out.as_deref())?;
    let text = serde_json::to_string(&json!({"header": header, "result": result})).expect("json");
    writeln!(out, "{text}").map_err(runtime_io)?;
    out.flush().map_err(runtime_io)
}

pub fn mass_bound(args: &MassBoundArgs) -> CliResult<()> {
    if !(args.delta > 0.0) {
        return Err(config_err("delta must be positive"));
    }
    let radius = if args.radius == "inf" {
        f64::INFINITY
    } else {
        args.radius
            .parse::<f64>()
            .ok()
            .filter(|r| *r >= 0.0)
            .ok_or_else(|| config_err(format!("bad radius {:?}", args.radius)))?
    };
    let trees = load_trees(&args.trees)?;
    let mut out = writer(args.out.as_deref())?;
    out.write_all(Header::new("mass-bound", None, args).csv_comment().as_bytes())
        .map_err(runtime_io)?;
    writeln!(out, "tree,delta,radius,lower_mass").map_err(runtime_io)?;
    for (t, rec) in trees.iter().enumerate() {
        let m = lower_mass_tree(&rec.to_bimeasure()?, None, args.delta, radius)?;
        let shown = if m.is_infinite() {
            "inf".to_string()
        } else {
            m.to_string()
        };
        writeln!(out, "{t},{},{},{shown}", args.delta, args.radius).map_err(runtime_io)?;
    }
    out.flush().map_err(runtime_io)
}

pub fn experiment(args: &ExperimentArgs) -> CliResult<()> {
    let text = read_to_string(&args.config)?;
    let config: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", args.config)))?;
    let seed = config.get("seed").and_then(|s| s.as_u64());
    let started = Instant::now();
    let report = run_experiment(&args.name, &config)?;
    let header = Header::new("experiment", seed, &json!({"name": args.name, "config": report.config}));
    create_dir(&args.out)?;
    let mut json_out = writer(Some(&format!("{}/{}.json", args.out, args.name)))?;
    let body = serde_json::to_string_pretty(&json!({"header": header, "report": report})).expect("json");
    writeln!(json_out, "{body}").map_err(runtime_io)?;
    json_out.flush().map_err(runtime_io)?;
    let mut csv_out = writer(Some(&format!("{}/{}.csv", args.out, args.name)))?;
    csv_out.write_all(header.csv_comment().as_bytes()).map_err(runtime_io)?;
    csv_out.write_all(report.to_csv().as_bytes()).map_err(runtime_io)?;
    csv_out.flush().map_err(runtime_io)?;
    for s in &report.series {
        if let Some(v) = &s.verdict {
            eprintln!(
                "{}: {} (values {:?}, ratio {:.4})",
                s.name,
                if v.pass { "pass" } else { "fail" },
                v.values,
                v.ratio
            );
        }
    }
    eprintln!("finished in {:.1} s", started.elapsed().as_secs_f64());
    Ok(())
}
