//! Soft thresholding, grouping by the auxiliary sequence, the SURE
//! criterion and squared-error loss.

use alloc::vec;
use alloc::vec::Vec;

use crate::batch::{check_breakpoints, DataBatch, Grouping, HyperParams};
use crate::error::{Error, Result};
use crate::math;

/// Universal threshold `sqrt(2 ln n)`.
pub fn universal_threshold(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "must be at least 1",
        });
    }
    Ok(math::sqrt(2.0 * math::ln(n as f64)))
}

/// `y + sigma * eta_t(y)`: zero when `|y / sigma| <= t`, otherwise `y`
/// pulled toward zero by `sigma * t`.
#[inline]
pub fn soft_estimate(y: f64, sigma: f64, t: f64) -> f64 {
    let z = y / sigma;
    if z.abs() <= t {
        0.0
    } else if z > 0.0 {
        y - sigma * t
    } else {
        y + sigma * t
    }
}

/// Group index of one auxiliary value: the number of breakpoints strictly
/// below it, so a value equal to `tau[k]` lands in group `k` (the lower one).
#[inline]
pub(crate) fn group_of(s: f64, tau: &[f64]) -> usize {
    tau.partition_point(|&b| b < s)
}

pub fn partition(s: &[f64], tau: &[f64]) -> Result<Grouping> {
    check_breakpoints(tau)?;
    let mut sizes = vec![0usize; tau.len() + 1];
    let assignment = s
        .iter()
        .map(|&v| {
            let g = group_of(v, tau);
            sizes[g] += 1;
            g
        })
        .collect();
    Ok(Grouping { assignment, sizes })
}

/// Contribution of one coordinate to the SURE sum, excluding its `sigma^2`.
#[inline]
pub(crate) fn sure_term(z: f64, w: f64, t: f64) -> f64 {
    let clipped = if z < t { z } else { t };
    let kill = if z <= t { 2.0 } else { 0.0 };
    w * (clipped * clipped - kill)
}

/// Stein's unbiased estimate of the risk of [`apply_estimator`] with `hp`.
pub fn sure(batch: &DataBatch, hp: &HyperParams) -> f64 {
    sure_with_basis(batch, batch.s(), hp)
}

/// SURE with the grouping taken from `basis` instead of `batch.s()`.
pub(crate) fn sure_with_basis(batch: &DataBatch, basis: &[f64], hp: &HyperParams) -> f64 {
    let n = batch.len();
    let mut total = 0.0;
    for i in 0..n {
        let w = batch.sigma()[i] * batch.sigma()[i];
        let t = hp.t()[group_of(basis[i], hp.tau())];
        total += w + sure_term(batch.z(i), w, t);
    }
    total / n as f64
}

/// Per-group SURE sums `sum_{i in I_k} sigma_i^2 {(z_i ^ t_k)^2 - 2 I(z_i <= t_k)}`,
/// not normalized by `n`.
pub fn group_sure_terms(batch: &DataBatch, hp: &HyperParams) -> Vec<f64> {
    let mut terms = vec![0.0; hp.k()];
    for i in 0..batch.len() {
        let w = batch.sigma()[i] * batch.sigma()[i];
        let g = group_of(batch.s()[i], hp.tau());
        terms[g] += sure_term(batch.z(i), w, hp.t()[g]);
    }
    terms
}

/// Mean squared error `n^{-1} ||theta_hat - theta||^2`.
pub fn loss(theta: &[f64], theta_hat: &[f64]) -> Result<f64> {
    if theta.len() != theta_hat.len() {
        return Err(Error::LengthMismatch {
            field: "theta_hat",
            expected: theta.len(),
            actual: theta_hat.len(),
        });
    }
    if theta.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let ss: f64 = theta
        .iter()
        .zip(theta_hat)
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    Ok(ss / theta.len() as f64)
}

pub fn apply_estimator(batch: &DataBatch, hp: &HyperParams) -> Vec<f64> {
    apply_with_basis(batch, batch.s(), hp)
}

pub(crate) fn apply_with_basis(batch: &DataBatch, basis: &[f64], hp: &HyperParams) -> Vec<f64> {
    (0..batch.len())
        .map(|i| {
            let t = hp.t()[group_of(basis[i], hp.tau())];
            soft_estimate(batch.y()[i], batch.sigma()[i], t)
        })
        .collect()
}
