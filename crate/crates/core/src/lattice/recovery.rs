//! From noiseless measurements to a permutation and weight vector.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::lll::default_lovasz;
use super::params::{beta_for, beta_sufficient, epsilon_bound_with, w_norm_lower_bound, BetaPolicy};
use super::subset_sum::{lagarias_odlyzko, subset_sum_basis, SubsetSumInstance, SubsetSumOutcome};
use super::LatticeError;
use crate::exact::{dot, ExactMatrix};
use crate::model::{ExactAnchoredInstance, Permutation, Rational};

/// Knobs for [`find_permutation`] and [`recover`].
#[derive(Clone, Debug)]
pub struct RecoveryConfig {
    /// Failure probability the separation bound is computed for.
    pub delta: f64,
    pub beta_policy: BetaPolicy,
    /// Lovasz parameter of the basis reduction.
    pub lovasz: BigRational,
    /// Exponent constant in the `2^(k n^4)` point-count bound.
    pub count_exponent: u32,
    /// Replaces the computed separation bound (required for `d = 1`).
    pub epsilon_override: Option<BigRational>,
    /// Also test reduced vectors after the first for the solution pattern.
    pub scan_all: bool,
    /// Try anchors on the rayon pool rather than one after another.
    pub parallel: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            beta_policy: BetaPolicy::Theorem,
            lovasz: default_lovasz(),
            count_exponent: 1,
            epsilon_override: None,
            scan_all: false,
            parallel: false,
        }
    }
}

/// The `n^2` source numbers `c_(i,j)`, stored row-major at `i * n + j`, and
/// the target `y_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceNumbers {
    pub n: usize,
    pub sources: Vec<Rational>,
    pub target: Rational,
}

impl SourceNumbers {
    pub fn with_beta(&self, beta: BigRational) -> Result<SubsetSumInstance, LatticeError> {
        SubsetSumInstance::new(self.sources.clone(), self.target.clone(), beta)
    }

    pub fn is_degenerate(&self) -> bool {
        self.target.is_zero() && self.sources.iter().all(Zero::is_zero)
    }
}

/// `c_(i,j) = y_i * (X (X^T X)^-1 x0)_j`, target `y0`.
pub fn build_sources(
    x0: &[Rational],
    x: &ExactMatrix<Rational>,
    y: &[Rational],
    y0: &Rational,
) -> Result<SourceNumbers, LatticeError> {
    let (n, d) = (x.nrows(), x.ncols());
    if x0.len() != d || y.len() != n {
        return Err(LatticeError::Argument(format!(
            "shape mismatch: X is {n}x{d}, x0 has {}, y has {}",
            x0.len(),
            y.len()
        )));
    }
    if n < d {
        return Err(LatticeError::Argument(format!("need n >= d, got n={n}, d={d}")));
    }
    let xt = x.transpose();
    let gram_inv = xt.mul(x).inverse().ok_or_else(|| LatticeError::Rank { rank: x.rank(), d })?;
    let g = x.mul_vec(&gram_inv.mul_vec(x0));
    let mut sources = Vec::with_capacity(n * n);
    for yi in y {
        sources.extend(g.iter().map(|gj| yi * gj));
    }
    Ok(SourceNumbers {
        n,
        sources,
        target: y0.clone(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum FindOutcome {
    /// `perm(i) = j` pairs response `i` with covariate row `j` (both 0-based
    /// over the non-anchor measurements).
    Found {
        perm: Permutation,
        vector_index: usize,
    },
    /// The reduction produced no subset, or one that is not a permutation.
    Failure,
}

fn responses_f64(inst: &ExactAnchoredInstance) -> Vec<f64> {
    inst.y.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect()
}

/// The separation bound used for `inst` under `cfg`.
pub fn epsilon_for(inst: &ExactAnchoredInstance, cfg: &RecoveryConfig) -> Result<BigRational, LatticeError> {
    if let Some(e) = &cfg.epsilon_override {
        return Ok(e.clone());
    }
    let lb = w_norm_lower_bound(&responses_f64(inst));
    epsilon_bound_with(inst.n(), inst.d(), cfg.delta, lb, cfg.count_exponent)
}

/// Reads a permutation off a subset of `[n] x [n]`, if it is one.
fn subset_to_permutation(subset: &[usize], n: usize) -> Option<Permutation> {
    if subset.len() != n {
        return None;
    }
    let mut map = vec![usize::MAX; n];
    for &s in subset {
        let (i, j) = (s / n, s % n);
        if map[i] != usize::MAX {
            return None;
        }
        map[i] = j;
    }
    Permutation::new(map).ok()
}

/// One run of the reduction for the anchor already sitting in slot 0.
///
/// The lattice actually reduced has its bottom row scaled by
/// `beta * scale`, so that product is what is checked against
/// `2^(n^2/2) / epsilon`.
pub fn find_permutation(
    inst: &ExactAnchoredInstance,
    beta: &BigRational,
    eps: &BigRational,
    cfg: &RecoveryConfig,
) -> Result<FindOutcome, LatticeError> {
    let sources = build_sources(&inst.x0, &inst.x, &inst.y, &inst.y0)?;
    if sources.is_degenerate() {
        return Err(LatticeError::Degenerate);
    }
    let ssi = sources.with_beta(beta.clone())?;
    let scale = subset_sum_basis(&ssi).scale().clone();
    let effective = beta * BigRational::from_integer(scale);
    if !beta_sufficient(&effective, inst.n(), eps) {
        return Err(LatticeError::Argument(
            "beta is below 2^(n^2/2) / epsilon; the recovery guarantee does not apply".into(),
        ));
    }
    match lagarias_odlyzko(&ssi, &cfg.lovasz, cfg.scan_all)? {
        SubsetSumOutcome::Found {
            subset,
            vector_index,
        } => Ok(match subset_to_permutation(&subset, inst.n()) {
            Some(perm) => FindOutcome::Found { perm, vector_index },
            None => FindOutcome::Failure,
        }),
        SubsetSumOutcome::Failure => Ok(FindOutcome::Failure),
    }
}

/// A fully verified solution on all `n + 1` measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult {
    /// Pairs response `i` with covariate `perm(i)`, indices in `0..=n`.
    pub perm: Permutation,
    pub w: Vec<Rational>,
    /// The covariate that was placed in the anchor slot.
    pub anchor: usize,
    /// Which reduced basis vector carried the solution (0 unless the
    /// fallback scan was needed).
    pub vector_index: usize,
    pub beta: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RecoveryOutcome {
    Recovered(RecoveryResult),
    /// No anchor produced a verified solution. `skipped` lists anchors whose
    /// remaining covariates were rank deficient.
    Failure { skipped: Vec<usize> },
}

impl RecoveryOutcome {
    pub fn result(&self) -> Option<&RecoveryResult> {
        match self {
            Self::Recovered(r) => Some(r),
            Self::Failure { .. } => None,
        }
    }
}

/// Puts covariate `a` in the anchor slot; the others keep their order.
/// Returns the rearranged instance and the original index of each row.
fn with_anchor(full: &ExactAnchoredInstance, a: usize) -> (ExactAnchoredInstance, Vec<usize>) {
    let others: Vec<usize> = (0..=full.n()).filter(|&i| i != a).collect();
    let rows = others.iter().map(|&i| full.covariate(i)).collect();
    let inst = ExactAnchoredInstance {
        x0: full.covariate(a),
        x: ExactMatrix::from_rows(rows),
        y0: full.y0.clone(),
        y: full.y.clone(),
    };
    (inst, others)
}

/// Solves `y_i = w^T x_perm(i)` for all `i` and returns `w` only if every
/// equation holds exactly.
fn solve_verified(full: &ExactAnchoredInstance, perm: &Permutation) -> Option<Vec<Rational>> {
    let m = full.n() + 1;
    let a = ExactMatrix::from_rows((0..m).map(|i| full.covariate(perm.apply(i))).collect());
    let b: Vec<Rational> = (0..m).map(|i| full.response(i).clone()).collect();
    let w = a.solve(&b)?;
    (0..m)
        .all(|i| dot(&full.covariate(perm.apply(i)), &w) == b[i])
        .then_some(w)
}

enum AnchorTry {
    Verified(RecoveryResult),
    Unverified,
    RankDeficient,
}

fn try_anchor(
    full: &ExactAnchoredInstance,
    a: usize,
    eps: &BigRational,
    beta: &BigRational,
    cfg: &RecoveryConfig,
) -> Result<AnchorTry, LatticeError> {
    let (inst, others) = with_anchor(full, a);
    let found = match find_permutation(&inst, beta, eps, cfg) {
        Ok(f) => f,
        Err(LatticeError::Rank { .. }) => return Ok(AnchorTry::RankDeficient),
        Err(e) => return Err(e),
    };
    let FindOutcome::Found { perm, vector_index } = found else {
        return Ok(AnchorTry::Unverified);
    };
    let mut map = Vec::with_capacity(full.n() + 1);
    map.push(a);
    map.extend(perm.as_slice().iter().map(|&j| others[j]));
    let perm = Permutation::new(map).map_err(LatticeError::Model)?;
    Ok(match solve_verified(full, &perm) {
        Some(w) => AnchorTry::Verified(RecoveryResult {
            perm,
            w,
            anchor: a,
            vector_index,
            beta: beta.clone(),
        }),
        None => AnchorTry::Unverified,
    })
}

/// Exact recovery from `n + 1` noiseless measurements whose anchor pairing
/// is unknown: every covariate is tried in the anchor slot, smallest index
/// first, and the first verified solution is returned.
pub fn recover(full: &ExactAnchoredInstance, cfg: &RecoveryConfig) -> Result<RecoveryOutcome, LatticeError> {
    let (n, d) = (full.n(), full.d());
    if n < d {
        return Err(LatticeError::Argument(format!("need n >= d, got n={n}, d={d}")));
    }
    if full.y0.is_zero() && full.y.iter().all(Zero::is_zero) {
        return Err(LatticeError::Degenerate);
    }
    let all = ExactMatrix::from_rows((0..=n).map(|i| full.covariate(i)).collect());
    let rank = all.rank();
    if rank < d {
        return Err(LatticeError::Rank { rank, d });
    }
    if full.y.iter().all(Zero::is_zero) {
        // Full-rank covariates force w = 0, contradicting y0 != 0.
        return Ok(RecoveryOutcome::Failure { skipped: vec![] });
    }
    let eps = epsilon_for(full, cfg)?;
    let beta = beta_for(&cfg.beta_policy, n, &eps)?;
    let attempt = |a: usize| try_anchor(full, a, &eps, &beta, cfg);
    let mut skipped = Vec::new();
    if cfg.parallel {
        let tries: Vec<_> = (0..=n).into_par_iter().map(attempt).collect();
        for (a, t) in tries.into_iter().enumerate() {
            match t? {
                AnchorTry::Verified(r) => return Ok(RecoveryOutcome::Recovered(r)),
                AnchorTry::RankDeficient => skipped.push(a),
                AnchorTry::Unverified => {}
            }
        }
    } else {
        for a in 0..=n {
            match attempt(a)? {
                AnchorTry::Verified(r) => return Ok(RecoveryOutcome::Recovered(r)),
                AnchorTry::RankDeficient => skipped.push(a),
                AnchorTry::Unverified => {}
            }
        }
    }
    Ok(RecoveryOutcome::Failure { skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_noiseless_anchored, noiseless_exact, QuantizationConfig};
    use nalgebra::DVector;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn frac(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn scalar_sources() {
        // n = d = 1: c = y1 * x0 / x1.
        let x = ExactMatrix::from_rows(vec![vec![q(4)]]);
        let (w, x0) = (q(3), q(2));
        let s = build_sources(std::slice::from_ref(&x0), &x, &[&w * q(4)], &(&w * &x0)).unwrap();
        assert_eq!(s.sources, vec![q(6)]);
        assert_eq!(s.target, q(6));
    }

    #[test]
    fn zero_weights_give_degenerate_sources() {
        let x = ExactMatrix::from_rows(vec![vec![q(1), q(2)], vec![q(3), q(5)]]);
        let s = build_sources(&[q(1), q(1)], &x, &[q(0), q(0)], &q(0)).unwrap();
        assert!(s.is_degenerate());
    }

    #[test]
    fn rank_deficient_covariates() {
        let x = ExactMatrix::from_rows(vec![vec![q(1), q(2)], vec![q(2), q(4)]]);
        let err = build_sources(&[q(1), q(1)], &x, &[q(1), q(2)], &q(1)).unwrap_err();
        assert!(matches!(err, LatticeError::Rank { rank: 1, d: 2 }));
    }

    fn quantized(n: usize, d: usize, anchored: bool, seed: u64) -> (ExactAnchoredInstance, Vec<Rational>, Permutation) {
        let w = DVector::from_fn(d, |i, _| [0.6, -0.8, 0.5][i % 3]);
        let (inst, truth) = gen_noiseless_anchored(n, d, &w, anchored, seed).unwrap();
        let (exact, wq) = noiseless_exact(&inst, &truth, QuantizationConfig::new(16).unwrap()).unwrap();
        (exact, wq, truth.pi_bar)
    }

    #[test]
    fn true_pairing_solves_source_sum() {
        let (inst, _, pi) = quantized(4, 2, true, 5);
        let s = build_sources(&inst.x0, &inst.x, &inst.y, &inst.y0).unwrap();
        let n = inst.n();
        let sum = (0..n).fold(Rational::zero(), |acc, i| {
            acc + &s.sources[i * n + (pi.apply(i + 1) - 1)]
        });
        assert_eq!(sum, s.target);
    }

    #[test]
    fn planted_vector_in_lattice() {
        let (inst, _, pi) = quantized(3, 2, true, 8);
        let n = inst.n();
        let s = build_sources(&inst.x0, &inst.x, &inst.y, &inst.y0).unwrap();
        let basis = subset_sum_basis(&s.with_beta(q(1 << 20)).unwrap());
        let mut v = vec![num_bigint::BigInt::zero(); n * n + 2];
        v[0] = 1.into();
        for i in 0..n {
            v[1 + i * n + pi.apply(i + 1) - 1] = 1.into();
        }
        assert!(basis.coordinates_of(&v).is_some());
        let len2: i64 = v.iter().map(|c| c.to_i64().unwrap().pow(2)).sum();
        assert_eq!(len2, n as i64 + 1);
    }

    #[test]
    fn subset_to_permutation_rejects_non_permutations() {
        assert_eq!(subset_to_permutation(&[1, 2], 2), Permutation::new(vec![1, 0]).ok());
        assert!(subset_to_permutation(&[0, 1], 2).is_none());
        assert!(subset_to_permutation(&[0], 2).is_none());
    }

    #[test]
    fn recovers_small_instance_exactly() {
        let (inst, wq, pi) = quantized(3, 2, false, 21);
        let out = recover(&inst, &RecoveryConfig::default()).unwrap();
        let r = out.result().expect("recovery succeeds");
        assert_eq!(r.perm, pi);
        assert_eq!(r.w, wq);
    }

    #[test]
    fn degenerate_and_noisy_inputs() {
        let (mut inst, _, _) = quantized(3, 2, false, 4);
        let zeroed = ExactAnchoredInstance {
            y0: q(0),
            y: vec![q(0); 3],
            ..inst.clone()
        };
        assert!(matches!(recover(&zeroed, &RecoveryConfig::default()), Err(LatticeError::Degenerate)));
        inst.y[1] += frac(1, 1 << 10);
        let out = recover(&inst, &RecoveryConfig::default()).unwrap();
        assert!(out.result().is_none());
    }

    #[test]
    fn d1_needs_epsilon_override() {
        // y0 = 3 * 2 belongs to covariate 1, so only the second anchor works.
        let x = ExactMatrix::from_rows(vec![vec![q(2)]]);
        let inst = ExactAnchoredInstance::new(vec![q(3)], x, q(6), vec![q(9)]).unwrap();
        assert!(matches!(
            recover(&inst, &RecoveryConfig::default()),
            Err(LatticeError::Unsupported(_))
        ));
        let cfg = RecoveryConfig {
            epsilon_override: Some(frac(1, 1 << 10)),
            ..RecoveryConfig::default()
        };
        let r = recover(&inst, &cfg).unwrap();
        let r = r.result().expect("d = 1 recovery with override");
        assert_eq!(r.w, vec![q(3)]);
        assert_eq!(r.perm.as_slice(), &[1, 0]);
        assert_eq!(r.anchor, 1);
    }

    #[test]
    fn insufficient_fixed_beta_rejected() {
        let (inst, _, _) = quantized(3, 2, true, 2);
        let cfg = RecoveryConfig::default();
        let eps = epsilon_for(&inst, &cfg).unwrap();
        let err = find_permutation(&inst, &q(1), &eps, &cfg).unwrap_err();
        assert!(matches!(err, LatticeError::Argument(_)));
    }
}
