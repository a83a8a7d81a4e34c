//! Critical offspring laws and the scaling constants attached to them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail mass below which the stable law is truncated.
pub const STABLE_TAIL_TOL: f64 = 1e-10;
/// Tail mass below which laws with light tails are truncated.
const LIGHT_TAIL_TOL: f64 = 1e-17;
/// Hard cap on the truncation point.
const MAX_SUPPORT: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Geometric,
    Poisson,
    Binary,
    /// Law with generating function `s + (1 - s)^α / α`.
    Stable(f64),
    Custom,
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawKind::Geometric => write!(f, "geometric"),
            LawKind::Poisson => write!(f, "poisson"),
            LawKind::Binary => write!(f, "binary"),
            LawKind::Stable(a) => write!(f, "stable:{a}"),
            LawKind::Custom => write!(f, "custom"),
        }
    }
}

impl FromStr for LawKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(LawKind::Geometric),
            "poisson" => Ok(LawKind::Poisson),
            "binary" => Ok(LawKind::Binary),
            _ => match s.strip_prefix("stable:") {
                Some(a) => a
                    .parse::<f64>()
                    .map(LawKind::Stable)
                    .map_err(|_| Error::Config(format!("bad stable index in '{s}'"))),
                None => Err(Error::Config(format!("unknown offspring law '{s}'"))),
            },
        }
    }
}

/// A critical offspring distribution with finite (possibly truncated)
/// support.
#[derive(Clone, Debug)]
pub struct OffspringLaw {
    kind: LawKind,
    alpha: f64,
    pmf: Vec<f64>,
    /// `tail[k] = Σ_{j ≥ k} η(j)`, summed from the far end for accuracy.
    tail: Vec<f64>,
    period: usize,
    std_dev: Option<f64>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rescales `η(k ≥ 2)` so the mean is exactly one; `η(0)` absorbs the
/// change in total mass.
fn repair_mean(pmf: &mut [f64]) -> Result<()> {
    let p1 = pmf.get(1).copied().unwrap_or(0.0);
    // summed from the far end so the long tail is not lost to rounding
    let big_mean: f64 = pmf.iter().enumerate().skip(2).rev().map(|(k, p)| k as f64 * p).sum();
    if big_mean <= 0.0 {
        return Err(Error::InvalidLaw("no mass on k >= 2".into()));
    }
    let factor = (1.0 - p1) / big_mean;
    for p in pmf.iter_mut().skip(2) {
        *p *= factor;
    }
    let big_mass: f64 = pmf.iter().skip(2).rev().sum();
    pmf[0] = 1.0 - p1 - big_mass;
    if pmf[0] <= 0.0 {
        return Err(Error::InvalidLaw("mean repair left no mass at 0".into()));
    }
    Ok(())
}

/// Generates terms until the remaining mass falls below `tol`. Light tails
/// stop on the size of the current term instead, since the running total
/// cannot resolve 1e-17.
fn truncate(mut term: impl FnMut(usize) -> f64, tol: f64) -> Result<Vec<f64>> {
    let mut pmf = Vec::new();
    let mut total = 0.0;
    for k in 0..MAX_SUPPORT {
        let p = term(k);
        pmf.push(p);
        total += p;
        let done = if tol <= LIGHT_TAIL_TOL {
            p < tol * 1e-3
        } else {
            1.0 - total < tol
        };
        if k >= 2 && done {
            while pmf.last() == Some(&0.0) {
                pmf.pop();
            }
            return Ok(pmf);
        }
    }
    Err(Error::InvalidLaw("tail decays too slowly to truncate".into()))
}

impl OffspringLaw {
    pub fn new(kind: LawKind) -> Result<Self> {
        Self::with_tolerance(kind, STABLE_TAIL_TOL)
    }

    /// Same as [`OffspringLaw::new`] with an explicit truncation tolerance
    /// for the stable law.
    pub fn with_tolerance(kind: LawKind, stable_tol: f64) -> Result<Self> {
        match kind {
            LawKind::Geometric => {
                let mut pmf = truncate(|k| 0.5f64.powi(k as i32 + 1), LIGHT_TAIL_TOL)?;
                repair_mean(&mut pmf)?;
                Self::build(kind, 2.0, pmf, Some(2f64.sqrt()))
            }
            LawKind::Poisson => {
                let mut term = (-1.0f64).exp();
                let mut pmf = truncate(
                    |k| {
                        if k > 0 {
                            term /= k as f64;
                        }
                        term
                    },
                    LIGHT_TAIL_TOL,
                )?;
                repair_mean(&mut pmf)?;
                Self::build(kind, 2.0, pmf, Some(1.0))
            }
            LawKind::Binary => Self::build(kind, 2.0, vec![0.5, 0.0, 0.5], Some(1.0)),
            LawKind::Stable(alpha) => {
                if !(alpha > 1.0 && alpha <= 2.0) {
                    return Err(Error::InvalidLaw(format!("stable index {alpha} not in (1, 2]")));
                }
                if !(stable_tol > 0.0 && stable_tol < 1e-3) {
                    return Err(Error::InvalidLaw(format!("truncation tolerance {stable_tol}")));
                }
                // |binom(α, k)| by the ratio recursion, divided by α
                let mut abs_binom = 1.0f64;
                let mut pmf = truncate(
                    |k| match k {
                        0 => 1.0 / alpha,
                        1 => {
                            abs_binom = alpha;
                            0.0
                        }
                        _ => {
                            abs_binom *= (alpha - k as f64 + 1.0).abs() / k as f64;
                            abs_binom / alpha
                        }
                    },
                    stable_tol,
                )?;
                repair_mean(&mut pmf)?;
                let sd = (alpha == 2.0).then_some(1.0);
                Self::build(kind, alpha, pmf, sd)
            }
            LawKind::Custom => Err(Error::InvalidLaw("use OffspringLaw::custom".into())),
        }
    }

    /// A finitely supported law given by its probability vector.
    pub fn custom(pmf: Vec<f64>) -> Result<Self> {
        if pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidLaw("probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = pmf.iter().sum();
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!("total mass {total}")));
        }
        if (mean - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!("mean {mean} is not critical")));
        }
        let second: f64 = pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
        let sd = (second - 1.0).max(0.0).sqrt();
        Self::build(LawKind::Custom, 2.0, pmf, Some(sd))
    }

    fn build(kind: LawKind, alpha: f64, pmf: Vec<f64>, std_dev: Option<f64>) -> Result<Self> {
        let p0 = pmf.first().copied().unwrap_or(0.0);
        let p1 = pmf.get(1).copied().unwrap_or(0.0);
        if p0 <= 0.0 {
            return Err(Error::InvalidLaw("η(0) must be positive".into()));
        }
        if p0 + p1 >= 1.0 {
            return Err(Error::InvalidLaw("η(0) + η(1) must be below 1".into()));
        }
        let period = pmf
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, p)| **p > 0.0)
            .fold(0, |g, (k, _)| gcd(g, k));
        let mut tail = vec![0.0; pmf.len() + 1];
        for k in (0..pmf.len()).rev() {
            tail[k] = tail[k + 1] + pmf[k];
        }
        Ok(Self {
            kind,
            alpha,
            pmf,
            tail,
            period,
            std_dev,
        })
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// `η(k)`, zero beyond the truncation point.
    pub fn prob(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    /// `Σ_{j ≥ k} η(j)`.
    pub fn tail(&self, k: usize) -> f64 {
        self.tail.get(k).copied().unwrap_or(0.0)
    }

    /// Largest value in the (truncated) support.
    pub fn max_value(&self) -> usize {
        self.pmf.len() - 1
    }

    /// Span of the lattice generated by the positive support.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().rev().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.tail[0]
    }

    /// Standard deviation for finite-variance laws, `None` in the heavy-tailed
    /// stable case.
    pub fn std_dev(&self) -> Option<f64> {
        self.std_dev
    }

    /// Default slowly varying constant `ℓ`: the standard deviation for finite
    /// variance laws and `1` otherwise.
    pub fn default_ell(&self) -> f64 {
        self.std_dev.unwrap_or(1.0)
    }

    /// One draw from `η` conditioned on being at least `k`.
    pub fn sample_at_least<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> usize {
        if k >= self.pmf.len() {
            return k;
        }
        let top = self.tail(k);
        let u = rng.random::<f64>() * top;
        // largest j with tail[j] > u, searched in the nonincreasing array
        let j = self.tail[k..self.pmf.len()].partition_point(|&t| t > u);
        (k + j).saturating_sub(1).max(k)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sample_at_least(0, rng)
    }
}

/// The pair `a_N = ℓ N^{1/α - 1}`, `b_N = ℓ^{-1} N^{-1/α}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub ell: f64,
}

pub fn scaling_with_ell(alpha: f64, ell: f64, n: usize) -> ScalingConstants {
    let nf = n as f64;
    ScalingConstants {
        a: ell * nf.powf(1.0 / alpha - 1.0),
        b: nf.powf(-1.0 / alpha) / ell,
        n,
        ell,
    }
}

pub fn scaling_constants(law: &OffspringLaw, n: usize) -> ScalingConstants {
    scaling_with_ell(law.alpha(), law.default_ell(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn geometric_law() {
        let law = OffspringLaw::new(LawKind::Geometric).unwrap();
        assert!((law.prob(0) - 0.5).abs() < 1e-15);
        assert!((law.prob(3) - 1.0 / 16.0).abs() < 1e-15);
        assert!((law.mean() - 1.0).abs() < 1e-12);
        assert!((law.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(law.period(), 1);
    }

    #[test]
    fn poisson_law() {
        let law = OffspringLaw::new(LawKind::Poisson).unwrap();
        assert!((law.prob(0) - (-1f64).exp()).abs() < 1e-15);
        assert!((law.prob(2) - (-1f64).exp() / 2.0).abs() < 1e-15);
        assert!((law.mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stable_two_is_binary() {
        let law = OffspringLaw::new(LawKind::Stable(2.0)).unwrap();
        assert_eq!(law.pmf(), &[0.5, 0.0, 0.5]);
        assert_eq!(law.period(), 2);
    }

    #[test]
    fn stable_heavy_tail() {
        let alpha = 1.5;
        let law = OffspringLaw::new(LawKind::Stable(alpha)).unwrap();
        // η(2) = (α-1)/2, η(3) = (α-1)(2-α)/6; the mean repair rescales the
        // k >= 2 part by the removed tail mean, about 1e-3 here
        assert!((law.prob(2) / 0.25 - 1.0).abs() < 2e-3);
        assert!((law.prob(3) / (0.5 * 0.5 / 6.0) - 1.0).abs() < 2e-3);
        assert!((law.prob(3) / law.prob(2) - 0.5 / 3.0).abs() < 1e-12);
        assert_eq!(law.prob(1), 0.0);
        assert!((law.mean() - 1.0).abs() < 1e-12);
        assert!((law.total_mass() - 1.0).abs() < 1e-12);
        assert!(law.std_dev().is_none());
        assert!(OffspringLaw::new(LawKind::Stable(1.0)).is_err());
        assert!(OffspringLaw::new(LawKind::Stable(2.5)).is_err());
    }

    #[test]
    fn custom_validation() {
        assert!(OffspringLaw::custom(vec![0.25, 0.5, 0.25]).is_ok());
        assert!(OffspringLaw::custom(vec![0.5, 0.5]).is_err());
        assert!(OffspringLaw::custom(vec![0.6, 0.0, 0.4]).is_err());
        assert!(OffspringLaw::custom(vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn law_names_round_trip() {
        for s in ["geometric", "poisson", "binary", "stable:1.5"] {
            assert_eq!(s.parse::<LawKind>().unwrap().to_string(), s);
        }
        assert!("cauchy".parse::<LawKind>().is_err());
    }

    #[test]
    fn scaling_examples() {
        let law = OffspringLaw::new(LawKind::Geometric).unwrap();
        let s = scaling_constants(&law, 10_000);
        assert!((s.a - 2f64.sqrt() * 1e-2).abs() < 1e-15);
        assert!((s.b - 1e-2 / 2f64.sqrt()).abs() < 1e-15);
        assert!((s.a * s.b * 10_000.0 - 1.0).abs() < 1e-12);
        let s = scaling_with_ell(1.5, 1.0, 8);
        assert!((s.a - 0.5).abs() < 1e-15);
        assert!((s.b - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sampling_matches_pmf() {
        let law = OffspringLaw::new(LawKind::Geometric).unwrap();
        let mut rng = stream(3, 0);
        let reps = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..reps {
            let k = law.sample(&mut rng);
            if k < 4 {
                counts[k] += 1;
            }
        }
        for (k, c) in counts.iter().enumerate() {
            let p = law.prob(k);
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((*c as f64 / reps as f64 - p).abs() < 5.0 * se, "k = {k}");
        }
        for _ in 0..1000 {
            assert!(law.sample_at_least(3, &mut rng) >= 3);
        }
    }
}
