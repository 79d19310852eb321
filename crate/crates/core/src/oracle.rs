//! Exhaustive reference solvers for small instances.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::approx::Solution;
use crate::model::{Instance, Permutation};
use crate::rowsample::min_norm_lstsq;
use crate::scalar::Real;

pub const DEFAULT_PERMUTATION_CAP: usize = 8;
pub const SUBSET_SUM_CAP: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("refusing to enumerate: size {size} exceeds the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OlsResult<T: Real> {
    pub w: DVector<T>,
    pub residual_sq: T,
}

/// Minimum-norm least squares of `X w` against `Pi^T y`.
pub fn ols_given_perm<T: Real>(
    x: &DMatrix<T>,
    y: &DVector<T>,
    perm: &Permutation,
) -> Result<OlsResult<T>, OracleError> {
    if x.nrows() != y.len() || perm.len() != y.len() {
        return Err(OracleError::Argument(format!(
            "X has {} rows, y has {}, permutation has {}",
            x.nrows(),
            y.len(),
            perm.len()
        )));
    }
    let aligned = DVector::from_vec(perm.align(y.as_slice()));
    let w = min_norm_lstsq(x, &aligned);
    let residual_sq = (x * &w - aligned).norm_squared();
    Ok(OlsResult { w, residual_sq })
}

/// Exact minimizer over all `n!` permutations, cap 8.
pub fn brute_force<T: Real>(inst: &Instance<T>) -> Result<Solution<T>, OracleError> {
    brute_force_with_cap(inst, DEFAULT_PERMUTATION_CAP)
}

/// Permutations are visited in lexicographic order and only a strictly
/// smaller cost replaces the incumbent.
pub fn brute_force_with_cap<T: Real>(inst: &Instance<T>, cap: usize) -> Result<Solution<T>, OracleError> {
    let n = inst.n();
    if n > cap {
        return Err(OracleError::TooLarge { size: n, cap });
    }
    let mut perm = Permutation::identity(n);
    let mut best: Option<Solution<T>> = None;
    loop {
        let ols = ols_given_perm(inst.x(), inst.y(), &perm)?;
        if best.as_ref().is_none_or(|b| ols.residual_sq < b.cost) {
            best = Some(Solution {
                w: ols.w,
                perm: perm.clone(),
                cost: ols.residual_sq,
            });
        }
        if !perm.next_lexicographic() {
            break;
        }
    }
    Ok(best.expect("at least one permutation"))
}

/// First subset (by increasing bitmask, bit `i` for index `i`) of `c`
/// summing exactly to `t`.
pub fn subset_sum_brute(c: &[BigRational], t: &BigRational) -> Result<Option<Vec<usize>>, OracleError> {
    if c.len() > SUBSET_SUM_CAP {
        return Err(OracleError::TooLarge {
            size: c.len(),
            cap: SUBSET_SUM_CAP,
        });
    }
    for mask in 0u32..(1u32 << c.len()) {
        let sum = (0..c.len())
            .filter(|i| mask >> i & 1 == 1)
            .fold(BigRational::zero(), |acc, i| acc + &c[i]);
        if sum == *t {
            return Ok(Some((0..c.len()).filter(|i| mask >> i & 1 == 1).collect()));
        }
    }
    Ok(None)
}
