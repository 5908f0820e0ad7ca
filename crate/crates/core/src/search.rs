// Shared search machinery for every grouped thresholding fit.
//
// Coordinates are sorted once by |y/sigma|. A grid of m breakpoints on some
// basis sequence cuts the coordinates into m + 1 cells; a group is a
// contiguous run of cells, so its members can be pulled out of the sorted
// order with a single pass and no re-sorting. Group objectives (SURE or the
// realized loss) are additive across groups, which lets every candidate be
// scored from cached per-segment fits.

use alloc::vec;
use alloc::vec::Vec;

use crate::batch::DataBatch;
use crate::error::{Error, Result};
use crate::kernel::sure_term;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GroupFit {
    pub t: f64,
    /// Unnormalized objective of the group at `t`.
    pub value: f64,
    pub hybrid_fired: bool,
}

/// Sparsity test: true when the group looks like pure noise.
pub(crate) fn hybrid_fires(
    z: impl Iterator<Item = f64>,
    count: usize,
    t_n: f64,
    bound: f64,
) -> bool {
    let cap = t_n * t_n;
    let sum: f64 = z.map(|v| if v * v < cap { v * v } else { cap }).sum();
    sum / count as f64 - 1.0 <= bound
}

/// `n^{-1/2} (ln n)^{3/2}`.
pub(crate) fn hybrid_bound(n: usize) -> f64 {
    let n = n as f64;
    math::pow(math::ln(n), 1.5) / math::sqrt(n)
}

/// Minimizes `sum w (z ^ t)^2 - 2 w I(z <= t)` over `t in [0, t_n]`.
///
/// `pairs` are `(z, w)` sorted by `z` ascending. Between consecutive `z`
/// values the objective increases with `t`, so only `0`, the `z_i <= t_n`
/// and `t_n` need checking. Ties go to the smaller threshold.
pub(crate) fn best_sure_threshold(pairs: &[(f64, f64)], t_n: f64) -> GroupFit {
    let len = pairs.len();
    let mut tail = vec![0.0; len + 1];
    for i in (0..len).rev() {
        tail[i] = tail[i + 1] + pairs[i].1;
    }
    let mut head = 0.0;
    let mut i = 0;
    while i < len && pairs[i].0 <= 0.0 {
        head += pairs[i].1 * (pairs[i].0 * pairs[i].0 - 2.0);
        i += 1;
    }
    let mut best = GroupFit {
        t: 0.0,
        value: head,
        hybrid_fired: false,
    };
    while i < len && pairs[i].0 <= t_n {
        let c = pairs[i].0;
        while i < len && pairs[i].0 == c {
            head += pairs[i].1 * (c * c - 2.0);
            i += 1;
        }
        let value = head + c * c * tail[i];
        if value < best.value {
            best = GroupFit {
                t: c,
                value,
                hybrid_fired: false,
            };
        }
    }
    let value = head + t_n * t_n * tail[i];
    if value < best.value {
        best = GroupFit {
            t: t_n,
            value,
            hybrid_fired: false,
        };
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LossItem {
    pub z: f64,
    pub sigma: f64,
    /// `y - theta`
    pub err: f64,
    /// sign of `y`
    pub sign: f64,
    pub theta: f64,
}

/// Minimizes the realized squared error of soft thresholding over
/// `t in [0, t_n]`. `items` are sorted by `z` ascending.
///
/// On an interval where the same coordinates survive the threshold the loss
/// is a quadratic in `t`, and it is continuous at the breakpoints, so the
/// exact minimum is the best clamped vertex over all intervals.
pub(crate) fn best_loss_threshold(items: &[LossItem], t_n: f64) -> GroupFit {
    let len = items.len();
    // suffix sums over surviving coordinates
    let mut p = vec![0.0; len + 1];
    let mut q = vec![0.0; len + 1];
    let mut r = vec![0.0; len + 1];
    for i in (0..len).rev() {
        let it = &items[i];
        p[i] = p[i + 1] + it.err * it.err;
        q[i] = q[i + 1] + it.sigma * it.sign * it.err;
        r[i] = r[i + 1] + it.sigma * it.sigma;
    }
    let mut killed = 0.0;
    let mut i = 0;
    while i < len && items[i].z <= 0.0 {
        killed += items[i].theta * items[i].theta;
        i += 1;
    }
    let mut lo = 0.0;
    let mut best: Option<GroupFit> = None;
    loop {
        let hi = if i < len && items[i].z < t_n {
            items[i].z
        } else {
            t_n
        };
        let t = if r[i] > 0.0 {
            (q[i] / r[i]).clamp(lo, hi)
        } else {
            lo
        };
        let value = killed + p[i] - 2.0 * q[i] * t + r[i] * t * t;
        if best.is_none_or(|b| value < b.value) {
            best = Some(GroupFit {
                t,
                value,
                hybrid_fired: false,
            });
        }
        if i >= len || items[i].z >= t_n {
            break;
        }
        lo = items[i].z;
        while i < len && items[i].z == lo {
            killed += items[i].theta * items[i].theta;
            i += 1;
        }
    }
    best.expect("at least one interval is evaluated")
}

/// Whether the sparsity fallback to `t_n` is applied, and which `n` enters
/// its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Hybrid {
    Off,
    Global(usize),
    GroupSize,
}

/// How the threshold of a single group is chosen.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Objective<'a> {
    /// SURE, optionally with the hybrid fallback to `t_n`.
    Sure { t_n: f64, hybrid: Hybrid },
    /// Realized loss against `theta`.
    Loss {
        batch: &'a DataBatch,
        theta: &'a [f64],
        t_n: f64,
    },
}

impl Objective<'_> {
    /// Fits one group given its members as ranks into the layout's `z`
    /// order.
    pub(crate) fn fit(&self, layout: &Layout, ranks: &[usize]) -> GroupFit {
        match *self {
            Objective::Sure { t_n, hybrid } => {
                let pairs: Vec<(f64, f64)> = ranks
                    .iter()
                    .map(|&r| (layout.ranked_z[r], layout.ranked_var[r]))
                    .collect();
                let bound_n = match hybrid {
                    Hybrid::Off => None,
                    Hybrid::Global(n) => Some(n),
                    Hybrid::GroupSize => Some(pairs.len()),
                };
                if let Some(n_b) = bound_n {
                    let z = pairs.iter().map(|p| p.0);
                    if hybrid_fires(z, pairs.len(), t_n, hybrid_bound(n_b)) {
                        let value = pairs.iter().map(|&(z, w)| sure_term(z, w, t_n)).sum();
                        return GroupFit {
                            t: t_n,
                            value,
                            hybrid_fired: true,
                        };
                    }
                }
                best_sure_threshold(&pairs, t_n)
            }
            Objective::Loss { batch, theta, t_n } => {
                let items: Vec<LossItem> = ranks
                    .iter()
                    .map(|&r| loss_item(batch, theta, layout.order[r]))
                    .collect();
                best_loss_threshold(&items, t_n)
            }
        }
    }
}

pub(crate) fn loss_item(batch: &DataBatch, theta: &[f64], i: usize) -> LossItem {
    let y = batch.y()[i];
    LossItem {
        z: batch.z(i),
        sigma: batch.sigma()[i],
        err: y - theta[i],
        sign: if y > 0.0 {
            1.0
        } else if y < 0.0 {
            -1.0
        } else {
            0.0
        },
        theta: theta[i],
    }
}

/// Indices of `batch` sorted by `|y/sigma|`, ties by index.
pub(crate) fn z_order(batch: &DataBatch) -> Vec<usize> {
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_unstable_by(|&a, &b| batch.z(a).total_cmp(&batch.z(b)).then(a.cmp(&b)));
    order
}

/// Coordinates bucketed into the cells cut by a breakpoint grid.
pub(crate) struct Layout {
    order: Vec<usize>,
    /// Per-rank copies of the cell, `z` and `sigma^2` of `order[r]`.
    ranked_cell: Vec<usize>,
    ranked_z: Vec<f64>,
    ranked_var: Vec<f64>,
    /// Ranks falling in each cell, ascending.
    cell_ranks: Vec<Vec<usize>>,
    /// `prefix[c]` = number of coordinates in cells `< c`.
    prefix: Vec<usize>,
    grid: Vec<f64>,
}

impl Layout {
    pub(crate) fn new(batch: &DataBatch, basis: &[f64], grid: Vec<f64>) -> Self {
        let order = z_order(batch);
        let cell: Vec<usize> = basis
            .iter()
            .map(|&v| crate::kernel::group_of(v, &grid))
            .collect();
        let mut counts = vec![0usize; grid.len() + 1];
        for &c in &cell {
            counts[c] += 1;
        }
        let ranked_cell: Vec<usize> = order.iter().map(|&i| cell[i]).collect();
        let ranked_z = order.iter().map(|&i| batch.z(i)).collect();
        let ranked_var = order
            .iter()
            .map(|&i| batch.sigma()[i] * batch.sigma()[i])
            .collect();
        let mut cell_ranks = vec![Vec::new(); grid.len() + 1];
        for (r, &c) in ranked_cell.iter().enumerate() {
            cell_ranks[c].push(r);
        }
        let mut prefix = vec![0usize; grid.len() + 2];
        for c in 0..counts.len() {
            prefix[c + 1] = prefix[c] + counts[c];
        }
        Self {
            order,
            ranked_cell,
            ranked_z,
            ranked_var,
            cell_ranks,
            prefix,
            grid,
        }
    }

    pub(crate) fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Number of cells, `grid.len() + 1`.
    pub(crate) fn cells(&self) -> usize {
        self.grid.len() + 1
    }

    pub(crate) fn segment_size(&self, a: usize, b: usize) -> usize {
        self.prefix[b] - self.prefix[a]
    }

    /// Ranks of the members of cells `a..b`, ascending.
    pub(crate) fn segment_ranks(&self, a: usize, b: usize, out: &mut Vec<usize>) {
        out.clear();
        out.extend(
            self.ranked_cell
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c >= a && c < b)
                .map(|(r, _)| r),
        );
    }
}

/// Best split found by [`Searcher::best`]: grid indices (1-based, so `j`
/// means `tau = grid[j - 1]`) and one fit per group.
#[derive(Debug, Clone)]
pub(crate) struct Split {
    pub breaks: Vec<usize>,
    pub fits: Vec<GroupFit>,
    pub sizes: Vec<usize>,
}

impl Split {
    pub(crate) fn tau(&self, grid: &[f64]) -> Vec<f64> {
        self.breaks.iter().map(|&j| grid[j - 1]).collect()
    }

    pub(crate) fn thresholds(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.t).collect()
    }
}

/// Exact search over sorted breakpoint subsets with memoized per-segment
/// fits.
pub(crate) struct Searcher<'a> {
    layout: &'a Layout,
    objective: Objective<'a>,
    exclude_empty: bool,
    /// Fit of segment `(a, b)` at `a * (cells + 1) + b` once computed.
    memo: Vec<Option<Option<GroupFit>>>,
    scratch: Vec<usize>,
}

impl<'a> Searcher<'a> {
    pub(crate) fn new(layout: &'a Layout, objective: Objective<'a>, exclude_empty: bool) -> Self {
        let side = layout.cells() + 1;
        Self {
            layout,
            objective,
            exclude_empty,
            memo: vec![None; side * side],
            scratch: Vec::new(),
        }
    }

    fn slot(&self, a: usize, b: usize) -> usize {
        a * (self.layout.cells() + 1) + b
    }

    fn fit_ranks(&self, ranks: &[usize]) -> Option<GroupFit> {
        if ranks.is_empty() {
            (!self.exclude_empty).then_some(GroupFit {
                t: 0.0,
                value: 0.0,
                hybrid_fired: false,
            })
        } else {
            Some(self.objective.fit(self.layout, ranks))
        }
    }

    pub(crate) fn segment(&mut self, a: usize, b: usize) -> Option<GroupFit> {
        let slot = self.slot(a, b);
        if let Some(hit) = self.memo[slot] {
            return hit;
        }
        let mut ranks = core::mem::take(&mut self.scratch);
        self.layout.segment_ranks(a, b, &mut ranks);
        let fit = self.fit_ranks(&ranks);
        self.scratch = ranks;
        self.memo[slot] = Some(fit);
        fit
    }

    /// Fits every segment starting at cell `a`, growing it one cell at a
    /// time so members are merged rather than filtered from scratch.
    fn fill_row(&mut self, a: usize) {
        let (mut ranks, mut merged) = (Vec::new(), Vec::new());
        for b in a + 1..=self.layout.cells() {
            let cell = &self.layout.cell_ranks[b - 1];
            merged.clear();
            let (mut i, mut j) = (0, 0);
            while i < ranks.len() && j < cell.len() {
                if ranks[i] < cell[j] {
                    merged.push(ranks[i]);
                    i += 1;
                } else {
                    merged.push(cell[j]);
                    j += 1;
                }
            }
            merged.extend_from_slice(&ranks[i..]);
            merged.extend_from_slice(&cell[j..]);
            core::mem::swap(&mut ranks, &mut merged);
            let slot = self.slot(a, b);
            if self.memo[slot].is_none() {
                self.memo[slot] = Some(self.fit_ranks(&ranks));
            }
        }
    }

    /// Scores one breakpoint vector; `None` if a group is empty and empty
    /// groups are excluded.
    pub(crate) fn evaluate(&mut self, breaks: &[usize]) -> Option<Split> {
        let end = self.layout.cells();
        let mut fits = Vec::with_capacity(breaks.len() + 1);
        let mut sizes = Vec::with_capacity(breaks.len() + 1);
        let mut start = 0;
        for &stop in breaks.iter().chain(core::iter::once(&end)) {
            let fit = self.segment(start, stop)?;
            fits.push(fit);
            sizes.push(self.layout.segment_size(start, stop));
            start = stop;
        }
        Some(Split {
            breaks: breaks.to_vec(),
            fits,
            sizes,
        })
    }

    /// Exact minimum over every `(k - 1)`-subset of the grid. Objectives are
    /// additive over segments, so a forward recursion over the last
    /// breakpoint visits each segment once instead of each subset. Totals
    /// accumulate left to right, one group at a time,
    /// and ties resolve to the lexicographically smallest breakpoints.
    pub(crate) fn best(&mut self, k: usize) -> Result<Split> {
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "must be at least 1",
            });
        }
        let m = self.layout.grid().len();
        let r = k - 1;
        if r > m {
            return Err(Error::NoFeasibleCandidate { k });
        }
        let end = self.layout.cells();
        if r >= 2 {
            // every segment can appear in some split, so build them row by row
            for a in 0..end {
                self.fill_row(a);
            }
        }
        // layer[j] = best (total, breakpoints) for the groups left of break j
        let mut layer: Vec<Option<(f64, Vec<usize>)>> = vec![None; m + 1];
        for j in 1..=m {
            layer[j] = self.segment(0, j).map(|f| (f.value, vec![j]));
        }
        for g in 1..r {
            let mut next: Vec<Option<(f64, Vec<usize>)>> = vec![None; m + 1];
            for j in g + 1..=m {
                for i in g..j {
                    let Some((head, breaks)) = &layer[i] else {
                        continue;
                    };
                    let Some(fit) = self.segment(i, j) else {
                        continue;
                    };
                    let total = head + fit.value;
                    if next[j]
                        .as_ref()
                        .is_none_or(|(v, b)| improves(total, breaks, *v, b))
                    {
                        let mut path = breaks.clone();
                        path.push(j);
                        next[j] = Some((total, path));
                    }
                }
            }
            layer = next;
        }
        let mut best: Option<(f64, Vec<usize>)> = None;
        if r == 0 {
            best = self.segment(0, end).map(|f| (f.value, Vec::new()));
        } else {
            for i in r..=m {
                let Some((head, breaks)) = &layer[i] else {
                    continue;
                };
                let Some(fit) = self.segment(i, end) else {
                    continue;
                };
                let total = head + fit.value;
                if best
                    .as_ref()
                    .is_none_or(|(v, b)| improves(total, breaks, *v, b))
                {
                    best = Some((total, breaks.clone()));
                }
            }
        }
        let (_, breaks) = best.ok_or(Error::NoFeasibleCandidate { k })?;
        self.evaluate(&breaks)
            .ok_or(Error::NoFeasibleCandidate { k })
    }
}

fn improves(total: f64, breaks: &[usize], incumbent: f64, incumbent_breaks: &[usize]) -> bool {
    total < incumbent || (total == incumbent && breaks < incumbent_breaks)
}

#[cfg(test)]
/// Advances `c` (strictly increasing values in `1..=m`) to the next subset
/// in lexicographic order.
fn next_combination(c: &mut [usize], m: usize) -> bool {
    let r = c.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if c[i] < m - (r - 1 - i) {
            c[i] += 1;
            for j in i + 1..r {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
