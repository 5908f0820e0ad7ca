//! Comparison estimators: auxiliary screening, the two oracles and the
//! extended James-Stein rule.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::batch::{DataBatch, HyperParams};
use crate::error::{Error, Result};
use crate::fit::{FitResult, GroupBasis};
use crate::kernel::{self, universal_threshold};
use crate::search::{Hybrid, Layout, Objective, Searcher};
use crate::tuner::{self, finish, SearchConfig};

/// Auxiliary screening: coordinates with `|S| <= tau` are set to zero, the
/// rest are soft-thresholded at a SURE-tuned `t_2`.
///
/// Group 1 uses `t_1 = max |z|` over its members, which zeroes it exactly.
/// Besides the interior grid on `|S|`, the search includes a breakpoint
/// below every `|S|` (plain single-group SURE thresholding) and one at the
/// largest `|S|` (everything zeroed).
pub fn fit_auxscr(batch: &DataBatch) -> Result<FitResult> {
    let abs_s: Vec<f64> = batch.s().iter().map(|v| v.abs()).collect();
    let cfg = SearchConfig::default();
    let interior = tuner::tau_grid(&abs_s, cfg.mn_factor)?;
    let lo = abs_s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = abs_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step = (hi - lo) / (interior.len() + 1) as f64;
    let mut grid = Vec::with_capacity(interior.len() + 2);
    grid.push(lo - step);
    grid.extend_from_slice(&interior);
    grid.push(hi);

    let t_n = universal_threshold(batch.len())?;
    let layout = Layout::new(batch, &abs_s, grid);
    let cells = layout.cells();

    // Per-cell zeroing cost `sum w (z^2 - 2)` and largest `z`.
    let mut cost = vec![0.0; cells];
    let mut zmax = vec![0.0f64; cells];
    for i in 0..batch.len() {
        let c = kernel::group_of(abs_s[i], layout.grid());
        let w = batch.sigma()[i] * batch.sigma()[i];
        let z = batch.z(i);
        cost[c] += w * (z * z - 2.0);
        zmax[c] = zmax[c].max(z);
    }

    let objective = Objective::Sure {
        t_n,
        hybrid: Hybrid::Off,
    };
    let mut searcher = Searcher::new(&layout, objective, false);
    let mut best: Option<(f64, usize, f64, f64)> = None;
    let mut head = 0.0;
    let mut t1 = 0.0f64;
    for j in 1..cells {
        head += cost[j - 1];
        t1 = t1.max(zmax[j - 1]);
        let tail = searcher
            .segment(j, cells)
            .expect("empty segments are feasible here");
        let total = head + tail.value;
        if best.is_none_or(|b| total < b.0) {
            best = Some((total, j, t1, tail.t));
        }
    }
    let (_, j, t1, t2) = best.ok_or(Error::NoFeasibleCandidate { k: 2 })?;
    let sizes = vec![layout.segment_size(0, j), layout.segment_size(j, cells)];
    let hp = HyperParams::new(vec![layout.grid()[j - 1]], vec![t1, t2])?;
    Ok(finish(
        "auxscr",
        batch,
        &abs_s,
        GroupBasis::AbsAux,
        hp,
        sizes,
    ))
}

/// The ASUS search with realized loss in place of SURE.
pub fn fit_oracle_loss(batch: &DataBatch, cfg: &SearchConfig) -> Result<FitResult> {
    cfg.validate()?;
    let theta = batch.require_theta()?;
    let grid = if cfg.k == 1 {
        Vec::new()
    } else {
        tuner::tau_grid(batch.s(), cfg.mn_factor)?
    };
    let layout = Layout::new(batch, batch.s(), grid);
    let objective = Objective::Loss {
        batch,
        theta,
        t_n: universal_threshold(batch.len())?,
    };
    let mut searcher = Searcher::new(&layout, objective, cfg.exclude_empty_groups);
    let split = searcher.best(cfg.k)?;
    let hp = HyperParams::new(split.tau(layout.grid()), split.thresholds())?;
    Ok(finish(
        "ol",
        batch,
        batch.s(),
        GroupBasis::Aux,
        hp,
        split.sizes,
    ))
}

fn distinct_sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn midpoints(distinct: &[f64]) -> Vec<f64> {
    distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

fn loss_split_on_latent(
    batch: &DataBatch,
    xi: &[f64],
    theta: &[f64],
    grid: Vec<f64>,
    t_n: f64,
) -> Result<(HyperParams, Vec<usize>)> {
    let k = if grid.is_empty() { 1 } else { 2 };
    let layout = Layout::new(batch, xi, grid);
    let objective = Objective::Loss { batch, theta, t_n };
    let mut searcher = Searcher::new(&layout, objective, true);
    let split = searcher.best(k)?;
    let hp = HyperParams::new(split.tau(layout.grid()), split.thresholds())?;
    Ok((hp, split.sizes))
}

/// Two groups split on the latent `xi` at the loss-minimizing midpoint
/// between consecutive distinct `xi` values. With a constant `xi` this is
/// a single group.
pub fn fit_oracle_side(batch: &DataBatch) -> Result<FitResult> {
    let xi = batch.require_xi()?;
    let theta = batch.require_theta()?;
    let grid = midpoints(&distinct_sorted(xi));
    let t_n = universal_threshold(batch.len())?;
    let (hp, sizes) = loss_split_on_latent(batch, xi, theta, grid, t_n)?;
    Ok(finish("or", batch, xi, GroupBasis::Latent, hp, sizes))
}

/// Number of pooled quantile levels offered as latent breakpoints.
pub const POOLED_LEVELS: usize = 200;

/// One latent split `(tau, t_1, t_2)` minimizing the loss summed over
/// several replications of the same design, approximating the risk
/// minimizer. Breakpoints sit just above each of [`POOLED_LEVELS`] pooled
/// `xi` quantiles, halfway to the next distinct value.
pub fn fit_oracle_side_pooled(batches: &[DataBatch]) -> Result<HyperParams> {
    let first = batches.first().ok_or(Error::EmptyBatch)?;
    let n = first.len();
    if batches.iter().any(|b| b.len() != n) {
        return Err(Error::InvalidParameter {
            name: "batches",
            reason: "every replication must have the same length",
        });
    }
    let mut y = Vec::with_capacity(n * batches.len());
    let mut sigma = Vec::with_capacity(n * batches.len());
    let mut xi = Vec::with_capacity(n * batches.len());
    let mut theta = Vec::with_capacity(n * batches.len());
    for b in batches {
        y.extend_from_slice(b.y());
        sigma.extend_from_slice(b.sigma());
        xi.extend_from_slice(b.require_xi()?);
        theta.extend_from_slice(b.require_theta()?);
    }
    let mut sorted = xi.clone();
    sorted.sort_by(f64::total_cmp);
    let distinct = distinct_sorted(&sorted);
    let grid = if distinct.len() <= POOLED_LEVELS + 1 {
        midpoints(&distinct)
    } else {
        let mut grid = Vec::with_capacity(POOLED_LEVELS);
        for q in 1..POOLED_LEVELS {
            let v = sorted[q * (sorted.len() - 1) / POOLED_LEVELS];
            let next = distinct.partition_point(|&d| d <= v);
            if next < distinct.len() {
                grid.push(0.5 * (v + distinct[next]));
            }
        }
        grid.dedup();
        grid
    };
    let pooled = DataBatch::new(y, sigma, xi.clone())?;
    let (hp, _) = loss_split_on_latent(&pooled, &xi, &theta, grid, universal_threshold(n)?)?;
    Ok(hp)
}

/// Applies hyperparameters whose breakpoints refer to the latent `xi`.
pub fn apply_on_latent(batch: &DataBatch, hp: &HyperParams, estimator: &str) -> Result<FitResult> {
    let xi = batch.require_xi()?;
    let grouping = kernel::partition(xi, hp.tau())?;
    Ok(finish(
        estimator,
        batch,
        xi,
        GroupBasis::Latent,
        hp.clone(),
        grouping.sizes,
    ))
}

/// Positive-part James-Stein shrinkage toward the precision-weighted mean.
pub fn fit_ejs(batch: &DataBatch) -> Result<FitResult> {
    let n = batch.len();
    if n < 4 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "James-Stein shrinkage needs at least four coordinates",
        });
    }
    let (y, sigma) = (batch.y(), batch.sigma());
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let p = 1.0 / (sigma[i] * sigma[i]);
        num += y[i] * p;
        den += p;
    }
    let center = num / den;
    let dispersion: f64 = (0..n)
        .map(|i| {
            let d = (y[i] - center) / sigma[i];
            d * d
        })
        .sum();
    let factor = if dispersion > 0.0 {
        (1.0 - (n as f64 - 3.0) / dispersion).max(0.0)
    } else {
        0.0
    };
    let theta_hat: Vec<f64> = y.iter().map(|&v| center + factor * (v - center)).collect();
    let loss_value = batch
        .theta()
        .map(|theta| kernel::loss(theta, &theta_hat))
        .transpose()?;
    Ok(FitResult {
        estimator: String::from("ejs"),
        theta_hat,
        hp: None,
        basis: GroupBasis::None,
        group_sizes: vec![n],
        sure_value: None,
        loss_value,
    })
}
