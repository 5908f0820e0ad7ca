//! Hyperparameter search: the breakpoint grid, per-group SURE thresholds
//! with the hybrid sparsity fallback, and the choice of the group count.

use alloc::string::String;
use alloc::vec::Vec;

use crate::batch::{DataBatch, HyperParams};
use crate::error::{Error, Result};
use crate::fit::{FitResult, GroupBasis};
use crate::kernel::{self, universal_threshold};
use crate::math;
use crate::search::{
    best_sure_threshold, hybrid_bound, hybrid_fires, Hybrid, Layout, Objective, Searcher,
};

/// Which `n` enters the hybrid bound `n^{-1/2} (ln n)^{3/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HybridScale {
    /// The size of the whole batch.
    #[default]
    Global,
    /// The size of the group being tested.
    Group,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Number of groups `K`.
    pub k: usize,
    /// Grid density: `ceil(mn_factor * ln n)` breakpoint candidates.
    pub mn_factor: f64,
    /// Fall back to the universal threshold in groups that look like noise.
    pub hybrid: bool,
    pub hybrid_scale: HybridScale,
    /// Skip breakpoint vectors that leave a group empty.
    pub exclude_empty_groups: bool,
}

impl SearchConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn with_hybrid(mut self, hybrid: bool) -> Self {
        self.hybrid = hybrid;
        self
    }

    pub fn with_mn_factor(mut self, mn_factor: f64) -> Self {
        self.mn_factor = mn_factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "must be at least 1",
            });
        }
        if !(self.mn_factor.is_finite() && self.mn_factor > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mn_factor",
                reason: "must be positive and finite",
            });
        }
        Ok(())
    }

    fn hybrid_rule(&self, n: usize) -> Hybrid {
        match (self.hybrid, self.hybrid_scale) {
            (false, _) => Hybrid::Off,
            (true, HybridScale::Global) => Hybrid::Global(n),
            (true, HybridScale::Group) => Hybrid::GroupSize,
        }
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            k: 2,
            mn_factor: 50.0,
            hybrid: true,
            hybrid_scale: HybridScale::Global,
            exclude_empty_groups: true,
        }
    }
}

/// Number of grid points `m_n = ceil(mn_factor * ln n)`.
pub fn grid_size(n: usize, mn_factor: f64) -> usize {
    math::ceil(mn_factor * math::ln(n as f64)) as usize
}

/// `m_n` equi-spaced points strictly inside `(min s, max s)`.
pub fn tau_grid(s: &[f64], mn_factor: f64) -> Result<Vec<f64>> {
    if s.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: "a breakpoint grid needs at least two coordinates",
        });
    }
    if !(mn_factor.is_finite() && mn_factor > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mn_factor",
            reason: "must be positive and finite",
        });
    }
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateAux);
    }
    let m = grid_size(s.len(), mn_factor).max(1);
    Ok(even_grid(lo, hi, m))
}

pub(crate) fn even_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let step = (hi - lo) / (m + 1) as f64;
    (1..=m).map(|j| lo + j as f64 * step).collect()
}

/// `{0} ∪ {z_i : z_i <= t_n} ∪ {t_n}`, sorted and deduplicated. The group
/// SURE is non-decreasing between consecutive `z` values, so its minimum
/// over `[0, t_n]` is attained on this set.
pub fn threshold_candidates(z: &[f64], t_n: f64) -> Vec<f64> {
    let mut out: Vec<f64> = z.iter().copied().filter(|&v| v <= t_n).collect();
    out.push(0.0);
    out.push(t_n);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupThreshold {
    pub t: f64,
    /// `sum sigma^2 {(z ^ t)^2 - 2 I(z <= t)}` over the group.
    pub objective: f64,
    pub hybrid_fired: bool,
}

/// Threshold for one group of standardized magnitudes `z = |y / sigma|`.
///
/// With `hybrid`, a group whose mean of `z^2 ^ t_n^2` exceeds one by no
/// more than `n^{-1/2} (ln n)^{3/2}` gets the universal threshold; `t_n`
/// and the bound both use `n_global`.
pub fn fit_group_threshold(
    z: &[f64],
    sigma: &[f64],
    n_global: usize,
    hybrid: bool,
) -> Result<GroupThreshold> {
    if z.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if z.len() != sigma.len() {
        return Err(Error::LengthMismatch {
            field: "sigma",
            expected: z.len(),
            actual: sigma.len(),
        });
    }
    let t_n = universal_threshold(n_global)?;
    let mut pairs: Vec<(f64, f64)> = z
        .iter()
        .zip(sigma)
        .map(|(&v, &s)| (v.abs(), s * s))
        .collect();
    if hybrid
        && hybrid_fires(
            pairs.iter().map(|p| p.0),
            pairs.len(),
            t_n,
            hybrid_bound(n_global),
        )
    {
        let objective = pairs
            .iter()
            .map(|&(v, w)| kernel::sure_term(v, w, t_n))
            .sum();
        return Ok(GroupThreshold {
            t: t_n,
            objective,
            hybrid_fired: true,
        });
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let fit = best_sure_threshold(&pairs, t_n);
    Ok(GroupThreshold {
        t: fit.t,
        objective: fit.value,
        hybrid_fired: false,
    })
}

pub(crate) fn finish(
    estimator: &str,
    batch: &DataBatch,
    basis: &[f64],
    basis_kind: GroupBasis,
    hp: HyperParams,
    sizes: Vec<usize>,
) -> FitResult {
    let theta_hat = kernel::apply_with_basis(batch, basis, &hp);
    let sure_value = kernel::sure_with_basis(batch, basis, &hp);
    let loss_value = batch
        .theta()
        .map(|theta| kernel::loss(theta, &theta_hat).expect("lengths checked at construction"));
    FitResult {
        estimator: String::from(estimator),
        theta_hat,
        hp: Some(hp),
        basis: basis_kind,
        group_sizes: sizes,
        sure_value: Some(sure_value),
        loss_value,
    }
}

fn layout_for(batch: &DataBatch, cfg: &SearchConfig) -> Result<Layout> {
    let grid = if cfg.k == 1 {
        Vec::new()
    } else {
        tau_grid(batch.s(), cfg.mn_factor)?
    };
    Ok(Layout::new(batch, batch.s(), grid))
}

fn sure_objective<'a>(batch: &'a DataBatch, cfg: &SearchConfig) -> Result<Objective<'a>> {
    Ok(Objective::Sure {
        t_n: universal_threshold(batch.len())?,
        hybrid: cfg.hybrid_rule(batch.len()),
    })
}

/// Minimizes SURE over every sorted `(K - 1)`-subset of the breakpoint grid,
/// fitting each group's threshold separately. Ties resolve to the
/// lexicographically smallest breakpoints.
pub fn fit_asus(batch: &DataBatch, cfg: &SearchConfig) -> Result<FitResult> {
    fit_asus_named("asus", batch, cfg)
}

fn fit_asus_named(name: &str, batch: &DataBatch, cfg: &SearchConfig) -> Result<FitResult> {
    cfg.validate()?;
    let layout = layout_for(batch, cfg)?;
    let mut searcher = Searcher::new(
        &layout,
        sure_objective(batch, cfg)?,
        cfg.exclude_empty_groups,
    );
    let split = searcher.best(cfg.k)?;
    let hp = HyperParams::new(split.tau(layout.grid()), split.thresholds())?;
    Ok(finish(
        name,
        batch,
        batch.s(),
        GroupBasis::Aux,
        hp,
        split.sizes,
    ))
}

/// Single-group SURE thresholding with the hybrid fallback.
pub fn fit_sureshrink(batch: &DataBatch) -> Result<FitResult> {
    fit_sureshrink_with(batch, &SearchConfig::new(1))
}

/// [`fit_sureshrink`] with the hybrid settings of `cfg`; its `k` is ignored.
pub fn fit_sureshrink_with(batch: &DataBatch, cfg: &SearchConfig) -> Result<FitResult> {
    fit_asus_named(
        "sureshrink",
        batch,
        &SearchConfig {
            k: 1,
            ..cfg.clone()
        },
    )
}

/// SURE-tuned thresholds for a fixed partition of `basis` at `tau`.
pub fn fit_partition(
    batch: &DataBatch,
    basis: &[f64],
    tau: &[f64],
    cfg: &SearchConfig,
) -> Result<FitResult> {
    if basis.len() != batch.len() {
        return Err(Error::LengthMismatch {
            field: "basis",
            expected: batch.len(),
            actual: basis.len(),
        });
    }
    crate::batch::check_breakpoints(tau)?;
    let layout = Layout::new(batch, basis, tau.to_vec());
    let mut searcher = Searcher::new(&layout, sure_objective(batch, cfg)?, false);
    let breaks: Vec<usize> = (1..=tau.len()).collect();
    let split = searcher
        .evaluate(&breaks)
        .ok_or(Error::NoFeasibleCandidate { k: tau.len() + 1 })?;
    let hp = HyperParams::new(tau.to_vec(), split.thresholds())?;
    Ok(finish(
        "partition",
        batch,
        basis,
        GroupBasis::Latent,
        hp,
        split.sizes,
    ))
}

/// SURE of the best two-group fit at every grid breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub tau_values: Vec<f64>,
    pub sure_values: Vec<f64>,
    pub thresholds: Vec<[f64; 2]>,
    pub group_sizes: Vec<[usize; 2]>,
    /// SURE of the single-group fit under the same configuration.
    pub single_group_sure: f64,
}

impl SweepCurve {
    /// Index of the smallest SURE value (first on ties).
    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, v) in self.sure_values.iter().enumerate() {
            if best.is_none_or(|b| *v < self.sure_values[b]) {
                best = Some(i);
            }
        }
        best
    }
}

pub fn sweep_tau(batch: &DataBatch, cfg: &SearchConfig) -> Result<SweepCurve> {
    cfg.validate()?;
    if cfg.k != 2 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "a breakpoint sweep needs exactly two groups",
        });
    }
    let layout = layout_for(batch, cfg)?;
    let mut searcher = Searcher::new(
        &layout,
        sure_objective(batch, cfg)?,
        cfg.exclude_empty_groups,
    );
    let mut curve = SweepCurve {
        tau_values: Vec::new(),
        sure_values: Vec::new(),
        thresholds: Vec::new(),
        group_sizes: Vec::new(),
        single_group_sure: 0.0,
    };
    for j in 1..=layout.grid().len() {
        let Some(split) = searcher.evaluate(&[j]) else {
            continue;
        };
        let hp = HyperParams::new(split.tau(layout.grid()), split.thresholds())?;
        curve.tau_values.push(hp.tau()[0]);
        curve.sure_values.push(kernel::sure(batch, &hp));
        curve.thresholds.push([hp.t()[0], hp.t()[1]]);
        curve.group_sizes.push([split.sizes[0], split.sizes[1]]);
    }
    if curve.tau_values.is_empty() {
        return Err(Error::NoFeasibleCandidate { k: 2 });
    }
    let single = SearchConfig {
        k: 1,
        ..cfg.clone()
    };
    curve.single_group_sure = fit_asus(batch, &single)?
        .sure_value
        .expect("thresholding fits carry SURE");
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    /// Group count with the smallest SURE.
    pub k: usize,
    /// Minimized SURE for `K = 1..=k_max`.
    pub sure_per_k: Vec<f64>,
    /// Smallest `K` after which one more group improves SURE by less than
    /// 5% (relative); reported only.
    pub elbow: usize,
}

const ELBOW_GAIN: f64 = 0.05;

/// Fits `K = 1..=k_max` with `cfg` (its `k` is ignored).
pub fn select_k(batch: &DataBatch, k_max: usize, cfg: &SearchConfig) -> Result<KSelection> {
    if k_max == 0 {
        return Err(Error::InvalidParameter {
            name: "k_max",
            reason: "must be at least 1",
        });
    }
    let mut sure_per_k = Vec::with_capacity(k_max);
    let single = fit_asus(
        batch,
        &SearchConfig {
            k: 1,
            ..cfg.clone()
        },
    )?;
    sure_per_k.push(single.sure_value.expect("thresholding fits carry SURE"));
    if k_max > 1 {
        // every K >= 2 searches the same grid, so segment fits are shared
        let cfg = SearchConfig {
            k: 2,
            ..cfg.clone()
        };
        cfg.validate()?;
        let layout = layout_for(batch, &cfg)?;
        let mut searcher = Searcher::new(
            &layout,
            sure_objective(batch, &cfg)?,
            cfg.exclude_empty_groups,
        );
        for k in 2..=k_max {
            let split = searcher.best(k)?;
            let hp = HyperParams::new(split.tau(layout.grid()), split.thresholds())?;
            sure_per_k.push(kernel::sure_with_basis(batch, batch.s(), &hp));
        }
    }
    let mut k_best = 1;
    for (i, v) in sure_per_k.iter().enumerate() {
        if *v < sure_per_k[k_best - 1] {
            k_best = i + 1;
        }
    }
    let elbow = (1..k_max)
        .find(|&k| {
            let prev = sure_per_k[k - 1];
            (prev - sure_per_k[k]) / prev.abs() < ELBOW_GAIN
        })
        .unwrap_or(k_max);
    Ok(KSelection {
        k: k_best,
        sure_per_k,
        elbow,
    })
}

/// Unnormalized SURE of one group at threshold `t`.
pub fn group_objective(z: &[f64], sigma: &[f64], t: f64) -> f64 {
    z.iter()
        .zip(sigma)
        .map(|(&v, &s)| kernel::sure_term(v.abs(), s * s, t))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn batch(y: &[f64], s: &[f64]) -> DataBatch {
        DataBatch::new(y.to_vec(), vec![1.0; y.len()], s.to_vec()).unwrap()
    }

    #[test]
    fn grid_examples() {
        assert_eq!(even_grid(0.0, 1.0, 1), vec![0.5]);
        assert_eq!(even_grid(0.0, 10.0, 4), vec![2.0, 4.0, 6.0, 8.0]);
        assert_eq!(grid_size(5000, 50.0), 426);
        let g = tau_grid(&[3.0, 0.0, 10.0, 7.0], 50.0).unwrap();
        assert_eq!(g.len(), grid_size(4, 50.0));
        assert!(g.iter().all(|&v| v > 0.0 && v < 10.0));
        assert_eq!(tau_grid(&[2.0, 2.0, 2.0], 50.0), Err(Error::DegenerateAux));
        assert!(tau_grid(&[1.0], 50.0).is_err());
    }

    #[test]
    fn candidate_examples() {
        assert_eq!(threshold_candidates(&[], 2.0), vec![0.0, 2.0]);
        assert_eq!(threshold_candidates(&[0.5, 3.0], 2.0), vec![0.0, 0.5, 2.0]);
        assert_eq!(
            threshold_candidates(&[0.5, 0.5, 0.0], 2.0),
            vec![0.0, 0.5, 2.0]
        );
    }

    #[test]
    fn group_threshold_examples() {
        let t_n = universal_threshold(10).unwrap();
        let fit = fit_group_threshold(&[0.0; 4], &[1.0; 4], 10, true).unwrap();
        assert!(fit.hybrid_fired);
        assert_eq!(fit.t, t_n);

        let fit = fit_group_threshold(&[5.0; 4], &[1.0; 4], 10, false).unwrap();
        assert!(t_n < 5.0);
        assert_eq!(fit.t, 0.0);
        assert_eq!(fit.objective, 0.0);

        assert_eq!(
            fit_group_threshold(&[], &[], 10, true),
            Err(Error::EmptyGroup)
        );
    }

    #[test]
    fn group_threshold_beats_candidates_by_brute_force() {
        let z = [0.1, 2.3, 0.7, 1.9, 0.05, 3.4, 0.9, 1.2];
        let sigma = [1.0, 0.5, 1.5, 1.0, 0.8, 1.2, 1.0, 0.9];
        let fit = fit_group_threshold(&z, &sigma, 40, false).unwrap();
        let t_n = universal_threshold(40).unwrap();
        for t in threshold_candidates(&z, t_n) {
            assert!(group_objective(&z, &sigma, t) >= fit.objective - 1e-12);
        }
        assert!((group_objective(&z, &sigma, fit.t) - fit.objective).abs() < 1e-12);
    }

    #[test]
    fn single_group_reduces_to_sureshrink() {
        let y = [0.3, -2.1, 4.4, 0.0, 1.0, -0.2, 2.8, 0.6];
        let s = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let b = batch(&y, &s);
        let a = fit_asus(&b, &SearchConfig::new(1)).unwrap();
        let ss = fit_sureshrink(&b).unwrap();
        assert_eq!(a.theta_hat, ss.theta_hat);
        assert_eq!(a.hp, ss.hp);
        assert_eq!(a.sure_value, ss.sure_value);
        assert_eq!(ss.estimator, "sureshrink");
    }

    #[test]
    fn all_zero_data_is_killed() {
        let b = batch(&[0.0; 6], &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let fit = fit_sureshrink(&b).unwrap();
        assert_eq!(fit.hp.unwrap().t(), &[universal_threshold(6).unwrap()]);
        assert!(fit.theta_hat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sweep_minimum_matches_fit() {
        let y = [0.3, -0.1, 0.2, 4.1, -3.7, 5.2, 0.05, -0.4, 3.3, 0.0];
        let s = [0.1, 0.3, 0.2, 2.9, 3.1, 3.3, 0.4, 0.0, 2.7, 0.5];
        let b = batch(&y, &s);
        let cfg = SearchConfig::new(2);
        let fit = fit_asus(&b, &cfg).unwrap();
        let curve = sweep_tau(&b, &cfg).unwrap();
        let j = curve.argmin().unwrap();
        assert_eq!(curve.sure_values[j], fit.sure_value.unwrap());
        assert_eq!(curve.tau_values[j], fit.hp.as_ref().unwrap().tau()[0]);
        assert_eq!(
            curve.single_group_sure,
            fit_sureshrink(&b).unwrap().sure_value.unwrap()
        );
        assert!(sweep_tau(&batch(&y, &[1.0; 10]), &cfg).is_err());
        assert!(sweep_tau(&b, &SearchConfig::new(3)).is_err());
    }

    #[test]
    fn select_k_with_one_group() {
        let b = batch(&[0.3, -2.1, 4.4, 0.0], &[1.0, 2.0, 3.0, 4.0]);
        let sel = select_k(&b, 1, &SearchConfig::default()).unwrap();
        assert_eq!(sel.k, 1);
        assert_eq!(sel.elbow, 1);
        assert_eq!(
            sel.sure_per_k,
            vec![fit_sureshrink(&b).unwrap().sure_value.unwrap()]
        );
    }

    #[test]
    fn select_k_agrees_with_separate_fits() {
        let y: Vec<f64> = (0..40)
            .map(|i| {
                if i % 5 == 0 {
                    3.0 + 0.1 * i as f64
                } else {
                    0.05 * (i % 7) as f64 - 0.15
                }
            })
            .collect();
        let s: Vec<f64> = (0..40)
            .map(|i| {
                if i % 5 == 0 {
                    0.2 * (i % 3) as f64
                } else {
                    1.0 + 0.03 * i as f64
                }
            })
            .collect();
        let b = batch(&y, &s);
        let cfg = SearchConfig::default().with_mn_factor(3.0);
        let sel = select_k(&b, 4, &cfg).unwrap();
        for k in 1..=4 {
            let fit = fit_asus(&b, &SearchConfig { k, ..cfg.clone() }).unwrap();
            assert_eq!(sel.sure_per_k[k - 1], fit.sure_value.unwrap(), "k = {k}");
        }
        assert!(sel.sure_per_k[1] < sel.sure_per_k[0]);
    }

    #[test]
    fn too_many_groups_is_infeasible() {
        let b = batch(&[0.3, -2.1, 4.4, 0.0], &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(
            fit_asus(&b, &SearchConfig::new(3)),
            Err(Error::NoFeasibleCandidate { k: 3 })
        );
    }

    #[test]
    fn three_groups_enumerate_exactly() {
        let y = [
            0.3, -0.1, 2.2, 4.1, -3.7, 5.2, 1.05, -0.4, 3.3, 0.0, 6.0, -1.4,
        ];
        let s = [0.1, 0.3, 1.2, 2.9, 3.1, 3.3, 1.4, 0.0, 2.7, 0.5, 3.5, 1.6];
        let b = batch(&y, &s);
        let cfg = SearchConfig::new(3).with_mn_factor(3.0);
        let fit = fit_asus(&b, &cfg).unwrap();
        let grid = tau_grid(&s, 3.0).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                let tau = vec![grid[i], grid[j]];
                let g = kernel::partition(&s, &tau).unwrap();
                if g.sizes.contains(&0) {
                    continue;
                }
                let f = fit_partition(&b, &s, &tau, &cfg).unwrap();
                best = best.min(f.sure_value.unwrap());
            }
        }
        assert!((fit.sure_value.unwrap() - best).abs() < 1e-12);
    }
}
