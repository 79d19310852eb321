//! `(1 + eps)`-approximate permuted least squares.
//!
//! After reducing `X` to an orthonormal basis `U` of its column space, the
//! solver samples `4k` weighted rows of `U`, enumerates the candidate
//! right-hand sides those rows can see, solves the small least squares
//! problem for each, and searches a grid net around each solution. Every
//! examined weight vector is scored with its exactly optimal permutation.
//!
//! Two prunings keep the search small without touching the guarantee. A
//! first pass finds `best = min_b r_b`; candidates with `r_b > c * best`
//! cannot be the certifying one and are skipped. And the net radius is
//! `min(sqrt(c r_b), sqrt((c - 1) best))`, because the optimum lies within
//! `sqrt((c - 1) opt)` of the certifying candidate's solution.

mod candidates;
mod net;

pub use candidates::{candidate_targets, candidate_targets_with, Assignments, CandidateMode, CandidateTargets};
pub use net::{build_net, Grid};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Instance, Permutation};
use crate::perm1d::{sort_match, SortedTarget};
use crate::rowsample::{approximation_constant, pseudo_inverse, row_sample, RowSampleError, SamplingMatrix};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ApproxError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("search space of {needed} points exceeds the budget of {cap}")]
    Budget { needed: u128, cap: u128 },
    #[error(transparent)]
    RowSample(#[from] RowSampleError),
}

/// A weight vector, the permutation it is scored with, and the cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution<T: Real> {
    pub w: DVector<T>,
    pub perm: Permutation,
    pub cost: T,
}

impl<T: Real> Solution<T> {
    /// Pairs `w` with its optimal permutation.
    pub fn for_weights(inst: &Instance<T>, w: DVector<T>) -> Self {
        let fitted = inst.x() * &w;
        let m = sort_match(fitted.as_slice(), inst.y().as_slice()).expect("instance is non-empty");
        let cost = inst.cost(&w, &m.perm);
        Self { w, perm: m.perm, cost }
    }
}

/// `X = U diag(sigma) V^T` restricted to the numerical rank `k`.
#[derive(Clone, Debug)]
pub struct OrthonormalReduction<T: Real> {
    pub u: DMatrix<T>,
    pub sigma: DVector<T>,
    pub v: DMatrix<T>,
}

impl<T: Real> OrthonormalReduction<T> {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    /// `V diag(sigma)^-1 w`.
    pub fn to_original(&self, w_reduced: &DVector<T>) -> DVector<T> {
        let scaled = w_reduced.component_div(&self.sigma);
        &self.v * scaled
    }

    /// `diag(sigma) V^T w`.
    pub fn to_reduced(&self, w: &DVector<T>) -> DVector<T> {
        (self.v.transpose() * w).component_mul(&self.sigma)
    }
}

/// Thin SVD of `X`, keeping singular values above `rank_tol * sigma_max`.
pub fn orthonormalize<T: Real>(x: &DMatrix<T>) -> OrthonormalReduction<T> {
    let (n, d) = x.shape();
    let empty = || OrthonormalReduction {
        u: DMatrix::zeros(n, 0),
        sigma: DVector::zeros(0),
        v: DMatrix::zeros(d, 0),
    };
    if x.iter().all(|v| *v == T::zero()) {
        return empty();
    }
    let svd = x.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    let smax = s[order[0]];
    let keep: Vec<usize> = order.into_iter().filter(|&i| s[i] > smax * T::rank_tol()).collect();
    OrthonormalReduction {
        u: u.select_columns(&keep),
        sigma: DVector::from_iterator(keep.len(), keep.iter().map(|&i| s[i])),
        v: vt.select_rows(&keep).transpose(),
    }
}

#[derive(Clone, Debug)]
pub struct FptasConfig<T: Real> {
    pub eps: T,
    pub mode: CandidateMode,
    /// Cap on (number of candidates) x (net points per candidate).
    pub budget: u128,
    /// Restrict each net to the Euclidean ball it has to cover.
    pub clip: bool,
    /// Split candidates over the rayon pool.
    pub parallel: bool,
}

impl<T: Real> FptasConfig<T> {
    pub fn new(eps: T) -> Self {
        Self {
            eps,
            mode: CandidateMode::Distinct,
            budget: 2_000_000_000,
            clip: true,
            parallel: false,
        }
    }
}

/// Counters from one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FptasStats {
    pub k: usize,
    pub candidates: u128,
    pub candidates_searched: u128,
    pub net_points: u128,
}

pub fn fptas_solve<T: Real>(inst: &Instance<T>, eps: T) -> Result<Solution<T>, ApproxError> {
    fptas_solve_with(inst, &FptasConfig::new(eps)).map(|(s, _)| s)
}

/// Ordering key of a net point: cost, then candidate index, then position
/// in the grid. The minimum is independent of how work is split.
#[derive(Clone, Debug)]
struct Best<T: Real> {
    cost: T,
    b_idx: u128,
    net_idx: u128,
    w: DVector<T>,
}

impl<T: Real> Best<T> {
    fn better(self, other: Self) -> Self {
        let key = |b: &Self| (b.b_idx, b.net_idx);
        if other.cost < self.cost || (other.cost == self.cost && key(&other) < key(&self)) {
            other
        } else {
            self
        }
    }
}

struct Search<'a, T: Real> {
    u: &'a DMatrix<T>,
    y: &'a [T],
    target: SortedTarget<T>,
    /// Column `j` maps response value at sampled coordinate `j` into `w`.
    lift: DMatrix<T>,
    cands: CandidateTargets<'a, T>,
}

impl<T: Real> Search<'_, T> {
    fn w_tilde(&self, assignment: &[usize]) -> DVector<T> {
        let mut w = DVector::zeros(self.lift.nrows());
        for (j, &i) in assignment.iter().enumerate() {
            w.axpy(self.y[i], &self.lift.column(j), T::one());
        }
        w
    }

    fn cost(&self, w: &DVector<T>, buf: &mut Vec<T>) -> T {
        fill_fitted(self.u, w, buf);
        self.target.cost(buf)
    }
}

fn fill_fitted<T: Real>(u: &DMatrix<T>, w: &DVector<T>, buf: &mut Vec<T>) {
    buf.clear();
    buf.extend((0..u.nrows()).map(|i| u.row(i).iter().zip(w.iter()).fold(T::zero(), |a, (x, y)| a + *x * *y)));
}

/// Runs the approximation scheme and reports search counters.
pub fn fptas_solve_with<T: Real>(
    inst: &Instance<T>,
    cfg: &FptasConfig<T>,
) -> Result<(Solution<T>, FptasStats), ApproxError> {
    let eps = cfg.eps;
    if !(eps > T::zero() && eps < T::one()) {
        return Err(ApproxError::Argument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let n = inst.n();
    let red = orthonormalize(inst.x());
    let k = red.k();
    if k == 0 {
        let sol = Solution::for_weights(inst, DVector::zeros(inst.d()));
        return Ok((sol, FptasStats::default()));
    }
    let s = row_sample(&red.u, 4 * k)?;
    let c: T = approximation_constant(n, k);
    let y = inst.y().as_slice();
    let cands = candidate_targets_with(&s, y, cfg.mode);

    let per_axis = to_f64(c * lit::<T>(k as f64).sqrt() / (lit::<T>(2.0) * eps.sqrt())).ceil() as u128;
    let per_net = (2 * per_axis + 1).saturating_pow(k as u32);
    let needed = cands.len().saturating_mul(per_net);
    if needed > cfg.budget {
        return Err(ApproxError::Budget {
            needed,
            cap: cfg.budget,
        });
    }

    let search = Search {
        u: &red.u,
        y,
        target: SortedTarget::new(y),
        lift: lift_matrix(&s, &red.u),
        cands,
    };
    let total = search.cands.len();

    // Pass 1: smallest r_b.
    let mut buf = Vec::with_capacity(n);
    let mut best_r = None::<T>;
    let mut it = search.cands.assignments();
    while let Some(a) = it.next_ref() {
        let r = search.cost(&search.w_tilde(a), &mut buf);
        if best_r.is_none_or(|b| r < b) {
            best_r = Some(r);
        }
    }
    let best_r = best_r.expect("at least one candidate");

    // Pass 2: nets around the surviving candidates.
    let chunks = if cfg.parallel { rayon::current_num_threads().max(1) as u128 * 4 } else { 1 };
    let chunk_len = total.div_ceil(chunks).max(1);
    let ranges: Vec<(u128, u128)> = (0..chunks)
        .map(|i| (i * chunk_len, ((i + 1) * chunk_len).min(total)))
        .filter(|(lo, hi)| lo < hi)
        .collect();
    let run = |&(lo, hi): &(u128, u128)| search_range(&search, lo, hi, best_r, c, cfg);
    let parts: Vec<(Option<Best<T>>, u128, u128)> = if cfg.parallel {
        ranges.par_iter().map(run).collect()
    } else {
        ranges.iter().map(run).collect()
    };
    let mut best: Option<Best<T>> = None;
    let mut stats = FptasStats {
        k,
        candidates: total,
        ..FptasStats::default()
    };
    for (b, searched, points) in parts {
        stats.candidates_searched += searched;
        stats.net_points += points;
        best = match (best, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => Some(a.better(b)),
        };
    }
    let best = best.expect("the best candidate always survives pruning");
    let w = red.to_original(&best.w);
    Ok((Solution::for_weights(inst, w), stats))
}

/// Columns map the response placed at each sampled coordinate to its
/// contribution to `argmin ||S (U w - b)||^2`.
fn lift_matrix<T: Real>(s: &SamplingMatrix<T>, u: &DMatrix<T>) -> DMatrix<T> {
    let cols = s.nonzero_columns();
    let pinv = pseudo_inverse(&s.apply(u));
    let mut lift = DMatrix::zeros(u.ncols(), cols.len());
    for (row, entry) in s.rows().iter().enumerate() {
        if let Some((c, weight)) = *entry {
            let j = cols.binary_search(&c).expect("column is nonzero");
            let contrib = pinv.column(row) * weight;
            let mut target = lift.column_mut(j);
            target += contrib;
        }
    }
    lift
}

fn search_range<T: Real>(
    search: &Search<'_, T>,
    lo: u128,
    hi: u128,
    best_r: T,
    c: T,
    cfg: &FptasConfig<T>,
) -> (Option<Best<T>>, u128, u128) {
    let mut buf = Vec::with_capacity(search.y.len());
    let mut best: Option<Best<T>> = None;
    let (mut searched, mut points) = (0u128, 0u128);
    let mut it = search.cands.assignments();
    let mut idx = 0u128;
    while let Some(a) = it.next_ref() {
        if idx >= hi {
            break;
        }
        let b_idx = idx;
        idx += 1;
        if b_idx < lo {
            continue;
        }
        let w_tilde = search.w_tilde(a);
        let r_b = search.cost(&w_tilde, &mut buf);
        if r_b > c * best_r {
            continue;
        }
        searched += 1;
        let candidate = Best {
            cost: r_b,
            b_idx,
            net_idx: 0,
            w: w_tilde.clone(),
        };
        best = Some(match best {
            None => candidate,
            Some(b) => b.better(candidate),
        });
        if r_b == T::zero() {
            continue;
        }
        let radius2 = (c * r_b).min((c - T::one()) * best_r);
        let cover = (cfg.eps * r_b / c).sqrt();
        let grid = Grid::covering(w_tilde, radius2.sqrt(), cover, cfg.clip);
        grid.for_each(|net_idx, p| {
            points += 1;
            fill_fitted(search.u, p, &mut buf);
            let bound = best.as_ref().map_or(T::max_value().unwrap(), |b| b.cost);
            if let Some(cost) = search.target.cost_below(&mut buf, bound) {
                let cand = Best {
                    cost,
                    b_idx,
                    net_idx: net_idx + 1,
                    w: p.clone(),
                };
                best = Some(match best.take() {
                    None => cand,
                    Some(b) => b.better(cand),
                });
            }
        });
    }
    (best, searched, points)
}
