//! Energy distance between two point clouds.

use rayon::prelude::*;

use crate::error::{Error, Result};

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean distance over all ordered pairs (diagonal included). Rows are
/// reduced in order so the result does not depend on the thread count.
fn mean_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let rows: Vec<f64> = a
        .par_iter()
        .map(|x| b.iter().map(|y| euclid(x, y)).sum::<f64>())
        .collect();
    rows.iter().sum::<f64>() / (a.len() * b.len()) as f64
}

/// `2 E|X - Y| - E|X - X'| - E|Y - Y'|` for the empirical laws of the two
/// clouds (V-statistic form, always nonnegative).
pub fn energy_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("energy distance needs nonempty clouds".into()));
    }
    let dim = a[0].len();
    if a.iter().chain(b).any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch("vectors of different lengths".into()));
    }
    let cross = mean_distance(a, b);
    let within_a = mean_distance(a, a);
    let within_b = mean_distance(b, b);
    Ok((2.0 * cross - within_a - within_b).max(0.0))
}

/// Unbiased (U-statistic) form: within-cloud means skip the zero diagonal,
/// which removes the positive bias of order `E|X - X'| / n` the V-statistic
/// carries. May be slightly negative; needs at least two points per cloud.
pub fn energy_distance_unbiased(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Precondition(
            "unbiased energy distance needs two points per cloud".into(),
        ));
    }
    let dim = a[0].len();
    if a.iter().chain(b).any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch("vectors of different lengths".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let cross = mean_distance(a, b);
    let within_a = mean_distance(a, a) * na / (na - 1.0);
    let within_b = mean_distance(b, b) * nb / (nb - 1.0);
    Ok(2.0 * cross - within_a - within_b)
}
