//! Parameter formulas for exact recovery: the separation `epsilon`, the
//! lattice scale `beta` and the data-driven lower bound on `||w||`.
//!
//! `epsilon` is astronomically small (around `2^-650` already at `n = 4`),
//! far below the range of `f64`, so it is evaluated in the log2 domain and
//! returned as an exact rational `m * 2^e`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::LatticeError;

/// How `beta` is derived from `epsilon`.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum BetaPolicy {
    /// Smallest power of two `>= 2^(n^2) / epsilon`.
    #[default]
    Theorem,
    /// Smallest power of two `>= 2^(n^2 / 2) / epsilon`.
    ProofExponent,
    /// A fixed value, used as given.
    Fixed(BigRational),
}

/// `sqrt(sum y_i^2 / (2n))`.
pub fn w_norm_lower_bound(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    (y.iter().map(|v| v * v).sum::<f64>() / (2.0 * y.len() as f64)).sqrt()
}

/// `log2` of the separation bound, with the lattice-point count over-approximated
/// by `2^(k n^4)`.
pub fn log2_epsilon(n: usize, d: usize, delta: f64, w_norm_lb: f64, k: u32) -> Result<f64, LatticeError> {
    if d == 1 {
        return Err(LatticeError::Unsupported(
            "the separation bound is undefined for d = 1; supply epsilon explicitly".into(),
        ));
    }
    if d == 0 || n < d {
        return Err(LatticeError::Argument(format!("need n >= d >= 2, got n={n}, d={d}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LatticeError::Argument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(w_norm_lb > 0.0 && w_norm_lb.is_finite()) {
        return Err(LatticeError::Argument(format!(
            "weight norm lower bound must be positive, got {w_norm_lb}"
        )));
    }
    if k == 0 {
        return Err(LatticeError::Argument("the point-count exponent needs k >= 1".into()));
    }
    let (nf, df) = (n as f64, d as f64);
    let log2_count = k as f64 * nf.powi(4);
    let power = 2.0 + 1.0 / (df - 1.0);
    let denom = nf.sqrt() + df.sqrt() + (2.0 * (2.0 / delta).ln()).sqrt();
    Ok((std::f64::consts::PI / 4.0).log2()
        + 0.5 * ((df - 1.0) / nf).log2()
        + power * (delta.log2() - 6f64.log2() - log2_count)
        - 2.0 * denom.log2()
        + w_norm_lb.log2())
}

/// Exact rational lower bound on the separation `epsilon`, with `k = 1`.
pub fn epsilon_bound(n: usize, d: usize, delta: f64, w_norm_lb: f64) -> Result<BigRational, LatticeError> {
    epsilon_bound_with(n, d, delta, w_norm_lb, 1)
}

pub fn epsilon_bound_with(
    n: usize,
    d: usize,
    delta: f64,
    w_norm_lb: f64,
    k: u32,
) -> Result<BigRational, LatticeError> {
    let l = log2_epsilon(n, d, delta, w_norm_lb, k)?;
    // Absorb the rounding error of the log-domain evaluation.
    let l = l - (1e-9 * l.abs() + 1e-6);
    let e = l.floor() as i64 - 52;
    let mantissa = (l - e as f64).exp2().floor();
    let m = BigInt::from(mantissa as u64);
    Ok(pow2(e) * BigRational::from_integer(m))
}

fn pow2(e: i64) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// Smallest integer `k` with `2^k >= q` for positive `q`.
pub(crate) fn ceil_log2(q: &BigRational) -> i64 {
    let guess = q.numer().bits() as i64 - q.denom().bits() as i64;
    let mut k = guess - 1;
    while pow2(k) < *q {
        k += 1;
    }
    k
}

/// Smallest integer `k` with `2^k >= 2^(half_exp / 2) / eps`.
fn ceil_log2_half(half_exp: u64, eps: &BigRational) -> i64 {
    // 2^(2k) >= 2^half_exp / eps^2
    let q = pow2(half_exp as i64) / (eps * eps);
    let k2 = ceil_log2(&q);
    k2.div_euclid(2) + k2.rem_euclid(2)
}

/// `beta` for an `n`-measurement instance under `policy`.
pub fn beta_for(policy: &BetaPolicy, n: usize, eps: &BigRational) -> Result<BigRational, LatticeError> {
    if !eps.is_positive() {
        return Err(LatticeError::Argument("epsilon must be positive".into()));
    }
    let n2 = (n * n) as u64;
    match policy {
        BetaPolicy::Theorem => Ok(pow2(ceil_log2_half(2 * n2, eps))),
        BetaPolicy::ProofExponent => Ok(pow2(ceil_log2_half(n2, eps))),
        BetaPolicy::Fixed(b) if b.is_positive() => Ok(b.clone()),
        BetaPolicy::Fixed(b) => Err(LatticeError::Argument(format!("beta must be positive, got {b}"))),
    }
}

/// Whether `beta >= 2^(n^2 / 2) / eps`.
pub(crate) fn beta_sufficient(beta: &BigRational, n: usize, eps: &BigRational) -> bool {
    if beta.is_zero() {
        return false;
    }
    let lhs = beta * beta * eps * eps;
    lhs >= pow2((n * n) as i64)
}

pub fn approx_log2(q: &BigRational) -> f64 {
    let bits = q.numer().bits() as i64 - q.denom().bits() as i64;
    let shift = bits - 60;
    let scaled = q / pow2(shift);
    scaled.to_f64().unwrap_or(f64::NAN).log2() + shift as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps_log2(n: usize, d: usize, delta: f64, w: f64) -> f64 {
        approx_log2(&epsilon_bound(n, d, delta, w).unwrap())
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(w_norm_lower_bound(&[0.0, 0.0]), 0.0);
        let r = 2f64.sqrt();
        assert!((w_norm_lower_bound(&[r, r]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_usually_below_norm() {
        use crate::model::{gen_gaussian_noisy, random_unit_vector, stream, Stream};
        let mut rng = stream(2024, Stream::Weights);
        let mut below = 0;
        for t in 0..200 {
            let w = random_unit_vector::<f64, _>(3, &mut rng);
            let (inst, _) = gen_gaussian_noisy(50, 3, &w, 0.0, t).unwrap();
            if w_norm_lower_bound(inst.y().as_slice()) <= 1.0 {
                below += 1;
            }
        }
        assert!(below >= 190, "{below} of 200");
    }

    #[test]
    fn epsilon_matches_direct_evaluation() {
        // At tiny n the count term is small enough to evaluate in f64.
        let (n, d, delta, w) = (2usize, 2usize, 0.1f64, 0.7f64);
        let count = 2f64.powi(16);
        let direct = (std::f64::consts::PI / 4.0) * (1.0f64 / 2.0).sqrt()
            * (delta / (6.0 * count)).powi(3)
            / (2f64.sqrt() * 2.0 + (2.0 * (20f64).ln()).sqrt()).powi(2)
            * w;
        let got = epsilon_bound(n, d, delta, w).unwrap().to_f64().unwrap();
        assert!(got <= direct && got > direct * (1.0 - 1e-6), "{got} vs {direct}");
    }

    #[test]
    fn epsilon_is_small_and_monotone() {
        let base = eps_log2(4, 3, 0.1, 1.0);
        assert!(base < 0.0);
        assert!(eps_log2(4, 3, 0.05, 1.0) < base);
        assert!(eps_log2(8, 3, 0.1, 1.0) < base);
        assert!(epsilon_bound(4, 3, 0.1, 1.0).unwrap() < BigRational::one());
    }

    #[test]
    fn epsilon_argument_checks() {
        assert!(matches!(epsilon_bound(3, 1, 0.1, 1.0), Err(LatticeError::Unsupported(_))));
        assert!(epsilon_bound(3, 2, 0.0, 1.0).is_err());
        assert!(epsilon_bound(3, 2, 0.1, 0.0).is_err());
        assert!(epsilon_bound(1, 2, 0.1, 1.0).is_err());
    }

    #[test]
    fn beta_policies() {
        let eps = BigRational::new(3.into(), 1024.into());
        // 2^4 / eps = 5461.33.., next power of two is 2^13.
        let b = beta_for(&BetaPolicy::Theorem, 2, &eps).unwrap();
        assert_eq!(b, pow2(13));
        // 2^2 / eps = 1365.33.., next power of two is 2^11.
        let b = beta_for(&BetaPolicy::ProofExponent, 2, &eps).unwrap();
        assert_eq!(b, pow2(11));
        assert!(beta_sufficient(&b, 2, &eps));
        assert!(!beta_sufficient(&pow2(10), 2, &eps));
        // odd n: 2^(9/2) / eps = 7240.6.., next power of two is 2^13.
        let b = beta_for(&BetaPolicy::ProofExponent, 3, &eps).unwrap();
        assert_eq!(b, pow2(13));
        let fixed = BigRational::from_integer(7.into());
        assert_eq!(beta_for(&BetaPolicy::Fixed(fixed.clone()), 3, &eps).unwrap(), fixed);
    }

    #[test]
    fn ceil_log2_exact_powers() {
        assert_eq!(ceil_log2(&pow2(5)), 5);
        assert_eq!(ceil_log2(&(pow2(5) + pow2(-3))), 6);
        assert_eq!(ceil_log2(&pow2(-7)), -7);
    }
}
