//! Report types, order statistics and verdicts.

use serde::{Deserialize, Serialize};

/// Order statistics of one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    /// `None` for an empty sample. Non-finite values are ignored.
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            count: v.len(),
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }
}

/// Equal-width histogram on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &x in values.iter().filter(|x| x.is_finite()) {
            let i = (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Self { edges, counts }
    }
}

/// One line of a series: a per-`N` sample summary or a comparison between
/// two grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_prev: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
}

impl Row {
    pub fn summary(n: usize, values: &[f64]) -> Self {
        Self {
            n,
            n_prev: None,
            t: None,
            delta: None,
            summary: Summary::of(values),
            value: None,
            histogram: None,
        }
    }

    pub fn comparison(n_prev: usize, n: usize, value: f64) -> Self {
        Self {
            n_prev: Some(n_prev),
            value: Some(value),
            ..Self::summary(n, &[])
        }
    }

    /// The number a verdict looks at: the comparison value or the median.
    pub fn statistic(&self) -> Option<f64> {
        self.value.or(self.summary.as_ref().map(|s| s.median))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    /// Strictly decreasing with last / first below the threshold.
    Decreasing,
    /// Smallest / largest value at least the threshold.
    BoundedBelow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub values: Vec<f64>,
    pub strictly_decreasing: bool,
    pub ratio: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Verdict {
    /// `None` with fewer than two values.
    pub fn new(kind: VerdictKind, values: Vec<f64>, threshold: f64) -> Option<Self> {
        if values.len() < 2 {
            return None;
        }
        let strictly_decreasing = values.windows(2).all(|w| w[1] < w[0]);
        let (ratio, pass) = match kind {
            VerdictKind::Decreasing => {
                let r = values[values.len() - 1] / values[0];
                (r, strictly_decreasing && r < threshold)
            }
            VerdictKind::BoundedBelow => {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(0.0, f64::max);
                let r = lo / hi;
                (r, lo > 0.0 && r >= threshold)
            }
        };
        Some(Self {
            kind,
            values,
            strictly_decreasing,
            ratio,
            threshold,
            pass,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub rows: Vec<Row>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl Series {
    pub fn new(name: impl Into<String>, rows: Vec<Row>) -> Self {
        Self {
            name: name.into(),
            rows,
            verdict: None,
        }
    }

    /// Attaches a verdict on the row statistics.
    pub fn judged(mut self, kind: VerdictKind, threshold: f64) -> Self {
        let values: Option<Vec<f64>> = self.rows.iter().map(Row::statistic).collect();
        self.verdict = values.and_then(|v| Verdict::new(kind, v, threshold));
        self
    }
}

/// Outcome of a gate check run before the statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub checked: usize,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub gates: Vec<Gate>,
    pub series: Vec<Series>,
    pub notes: Vec<String>,
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Every verdict present passes.
    pub fn all_pass(&self) -> bool {
        self.series.iter().filter_map(|s| s.verdict.as_ref()).all(|v| v.pass)
    }

    /// One CSV line per row, series name first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,n_prev,n,t,delta,count,min,q1,median,q3,max,mean,value\n");
        for s in &self.series {
            for r in &s.rows {
                let sm = r.summary.as_ref();
                let fields = [
                    s.name.clone(),
                    r.n_prev.map(|v| v.to_string()).unwrap_or_default(),
                    r.n.to_string(),
                    cell(r.t),
                    cell(r.delta),
                    sm.map(|x| x.count.to_string()).unwrap_or_default(),
                    cell(sm.map(|x| x.min)),
                    cell(sm.map(|x| x.q1)),
                    cell(sm.map(|x| x.median)),
                    cell(sm.map(|x| x.q3)),
                    cell(sm.map(|x| x.max)),
                    cell(sm.map(|x| x.mean)),
                    cell(r.value),
                ];
                out.push_str(&fields.join(","));
                out.push('\n');
            }
        }
        out
    }
}
