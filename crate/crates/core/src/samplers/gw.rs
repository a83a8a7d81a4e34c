//! Galton-Watson trees conditioned on their total size.
//!
//! A conditioned tree is read off an i.i.d. offspring sequence conditioned to
//! sum to `N - 1`: the cycle lemma picks the unique rotation that is a
//! Łukasiewicz excursion, and the excursion is decoded as child counts.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::offspring::OffspringLaw;
use crate::error::{Error, Result};
use crate::trees::PlaneTree;

/// Default number of attempts before giving up.
pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// Sizes up to this use plain i.i.d. rejection.
const IID_MAX_N: usize = 64;

/// Remaining draws below this are drawn one at a time from the tail law.
const DIRECT_DRAW_MAX: u64 = 16;

/// Index at which the rotated walk starts: one past the first time the
/// walk of partial sums of `ξ - 1` reaches its minimum.
pub fn cycle_lemma_shift(xi: &[usize]) -> usize {
    let mut sum = 0i64;
    let mut best = i64::MAX;
    let mut at = 0;
    for (i, &x) in xi.iter().enumerate() {
        sum += x as i64 - 1;
        if sum < best {
            best = sum;
            at = i + 1;
        }
    }
    at % xi.len()
}

/// Rotates a sequence summing to `len - 1` into a Łukasiewicz excursion and
/// decodes it.
pub fn tree_from_cyclic_sequence(mut xi: Vec<usize>) -> Result<PlaneTree> {
    if xi.iter().sum::<usize>() + 1 != xi.len() {
        return Err(Error::Precondition("offspring sequence must sum to N - 1".into()));
    }
    let shift = cycle_lemma_shift(&xi);
    xi.rotate_left(shift);
    PlaneTree::from_child_counts(xi)
}

/// Whether `n - 1` can be written as a sum of positive support values (at
/// most `n` of them, which is automatic).
fn representable(law: &OffspringLaw, target: usize) -> bool {
    let mut ok = vec![false; target + 1];
    ok[0] = true;
    let vals: Vec<usize> = (1..=target.min(law.max_value()))
        .filter(|&k| law.prob(k) > 0.0)
        .collect();
    for s in 1..=target {
        ok[s] = vals.iter().any(|&v| v <= s && ok[s - v]);
    }
    ok[target]
}

fn check_reachable(law: &OffspringLaw, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("tree size must be positive".into()));
    }
    if !(n - 1).is_multiple_of(law.period()) {
        return Err(Error::Unreachable {
            n,
            reason: format!("offspring values are multiples of {}", law.period()),
        });
    }
    if n <= IID_MAX_N + 1 && !representable(law, n - 1) {
        return Err(Error::Unreachable {
            n,
            reason: "no offspring combination sums to N - 1".into(),
        });
    }
    Ok(())
}

fn iid_attempt<R: Rng + ?Sized>(law: &OffspringLaw, n: usize, rng: &mut R) -> Option<Vec<usize>> {
    let mut xi = Vec::with_capacity(n);
    let mut sum = 0usize;
    for _ in 0..n {
        let x = law.sample(rng);
        sum += x;
        if sum > n - 1 {
            return None;
        }
        xi.push(x);
    }
    (sum == n - 1).then_some(xi)
}

/// Draws the multiset of `n` i.i.d. values by sequential conditional
/// binomials and keeps it only if the values sum to `n - 1`.
fn multinomial_attempt<R: Rng + ?Sized>(law: &OffspringLaw, n: usize, rng: &mut R) -> Option<Vec<usize>> {
    let target = (n - 1) as u64;
    let mut xi = Vec::with_capacity(n);
    let mut remaining = n as u64;
    let mut sum = 0u64;
    let mut k = 0usize;
    while remaining > 0 {
        // every remaining value is at least k
        if sum + k as u64 * remaining > target {
            return None;
        }
        if remaining <= DIRECT_DRAW_MAX || k > law.max_value() {
            for _ in 0..remaining {
                let x = law.sample_at_least(k, rng);
                sum += x as u64;
                xi.push(x);
            }
            break;
        }
        let tail = law.tail(k);
        let p = if tail > 0.0 { (law.prob(k) / tail).min(1.0) } else { 1.0 };
        let count = if p >= 1.0 {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(remaining, p).expect("valid binomial").sample(rng)
        };
        xi.extend(std::iter::repeat_n(k, count as usize));
        remaining -= count;
        sum += k as u64 * count;
        if sum > target {
            return None;
        }
        k += 1;
    }
    if sum != target {
        return None;
    }
    xi.shuffle(rng);
    Some(xi)
}

/// Exact sample of a Galton-Watson tree with offspring law `law` conditioned
/// to have `n` vertices.
pub fn sample_gw_conditioned<R: Rng + ?Sized>(law: &OffspringLaw, n: usize, rng: &mut R) -> Result<PlaneTree> {
    sample_gw_conditioned_with_budget(law, n, DEFAULT_BUDGET, rng)
}

pub fn sample_gw_conditioned_with_budget<R: Rng + ?Sized>(
    law: &OffspringLaw,
    n: usize,
    budget: u64,
    rng: &mut R,
) -> Result<PlaneTree> {
    check_reachable(law, n)?;
    if n == 1 {
        return Ok(PlaneTree::single());
    }
    for _ in 0..budget {
        let attempt = if n <= IID_MAX_N {
            iid_attempt(law, n, rng)
        } else {
            multinomial_attempt(law, n, rng)
        };
        if let Some(xi) = attempt {
            return tree_from_cyclic_sequence(xi);
        }
    }
    Err(Error::BudgetExceeded {
        what: "rejection attempts",
        budget,
    })
}
