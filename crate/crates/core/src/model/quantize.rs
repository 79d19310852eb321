//! Rounding to multiples of `2^-p`, ties to the even multiple.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{AnchoredInstance, ExactAnchoredInstance, ExactInstance, GroundTruth, Instance};
use super::{ModelError, Rational};
use crate::exact::ExactMatrix;
use crate::scalar::{to_f64, Real};

/// Number of fractional bits kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantizationConfig {
    p: u32,
}

impl QuantizationConfig {
    pub fn new(p: u32) -> Result<Self, ModelError> {
        if p == 0 {
            return Err(ModelError::Argument("quantization needs p >= 1".into()));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    fn denominator(&self) -> BigInt {
        BigInt::one() << self.p
    }
}

/// Nearest multiple of `2^-p` to `q`.
pub fn quantize_rational(q: &BigRational, cfg: QuantizationConfig) -> Rational {
    let den = cfg.denominator();
    let scaled = q * BigRational::from_integer(den.clone());
    BigRational::new(round_half_even(&scaled), den)
}

/// Nearest multiple of `2^-p` to the double `x`, as an exact rational.
/// Non-finite input is rejected.
pub fn quantize_value(x: f64, cfg: QuantizationConfig) -> Result<Rational, ModelError> {
    let q = BigRational::from_float(x)
        .ok_or_else(|| ModelError::Argument(format!("cannot quantize non-finite value {x}")))?;
    Ok(quantize_rational(&q, cfg))
}

fn round_half_even(q: &BigRational) -> BigInt {
    let (num, den) = (q.numer(), q.denom());
    let (floor, rem) = num.div_mod_floor(den);
    let twice: BigInt = rem * 2;
    match twice.cmp(den) {
        std::cmp::Ordering::Less => floor,
        std::cmp::Ordering::Greater => floor + 1,
        std::cmp::Ordering::Equal if floor.is_even() => floor,
        std::cmp::Ordering::Equal => floor + 1,
    }
}

fn quantize_real<T: Real>(x: T, cfg: QuantizationConfig) -> Rational {
    quantize_value(to_f64(x), cfg).expect("instances hold finite values")
}

pub fn quantize_instance<T: Real>(inst: &Instance<T>, cfg: QuantizationConfig) -> ExactInstance {
    ExactInstance {
        x: ExactMatrix::from_fn(inst.n(), inst.d(), |i, j| quantize_real(inst.x()[(i, j)], cfg)),
        y: inst.y().iter().map(|&v| quantize_real(v, cfg)).collect(),
    }
}

/// Rounds every entry, responses included.
pub fn quantize_anchored<T: Real>(
    inst: &AnchoredInstance<T>,
    cfg: QuantizationConfig,
) -> ExactAnchoredInstance {
    ExactAnchoredInstance {
        x0: inst.x0().iter().map(|&v| quantize_real(v, cfg)).collect(),
        x: ExactMatrix::from_fn(inst.n(), inst.d(), |i, j| quantize_real(inst.x()[(i, j)], cfg)),
        y0: quantize_real(inst.y0(), cfg),
        y: inst.y().iter().map(|&v| quantize_real(v, cfg)).collect(),
    }
}

/// Quantizes the covariates and the weight vector, then recomputes every
/// response exactly as `w_q^T x_q[pi(i)]`, so the returned instance satisfies
/// the noiseless model in exact arithmetic. Returns the quantized weights.
pub fn noiseless_exact<T: Real>(
    inst: &AnchoredInstance<T>,
    truth: &GroundTruth<T>,
    cfg: QuantizationConfig,
) -> Result<(ExactAnchoredInstance, Vec<Rational>), ModelError> {
    let n = inst.n();
    if truth.pi_bar.len() != n + 1 || truth.w_bar.len() != inst.d() {
        return Err(ModelError::Argument(
            "ground truth does not match the anchored instance".into(),
        ));
    }
    let w: Vec<Rational> = truth.w_bar.iter().map(|&v| quantize_real(v, cfg)).collect();
    let mut q = quantize_anchored(inst, cfg);
    let resp = |q: &ExactAnchoredInstance, i: usize| {
        q.covariate(truth.pi_bar.apply(i))
            .iter()
            .zip(&w)
            .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
    };
    q.y0 = resp(&q, 0);
    let y: Vec<Rational> = (1..=n).map(|i| resp(&q, i)).collect();
    q.y = y;
    Ok((q, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(p: u32) -> QuantizationConfig {
        QuantizationConfig::new(p).unwrap()
    }

    fn frac(n: i64, d: i64) -> Rational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn nearest_quarter() {
        assert_eq!(quantize_value(0.3, cfg(2)).unwrap(), frac(1, 4));
        assert_eq!(quantize_value(-0.3, cfg(2)).unwrap(), frac(-1, 4));
    }

    #[test]
    fn ties_go_to_even_multiple() {
        assert_eq!(quantize_value(0.375, cfg(2)).unwrap(), frac(1, 2));
        assert_eq!(quantize_value(0.125, cfg(2)).unwrap(), frac(0, 1));
        assert_eq!(quantize_value(-0.375, cfg(2)).unwrap(), frac(-1, 2));
    }

    #[test]
    fn lossless_at_full_precision() {
        assert_eq!(quantize_value(0.5, cfg(53)).unwrap(), frac(1, 2));
        let x = 0.1f64;
        assert_eq!(quantize_value(x, cfg(60)).unwrap(), BigRational::from_float(x).unwrap());
    }

    #[test]
    fn zero_bits_rejected() {
        assert!(QuantizationConfig::new(0).is_err());
        assert!(quantize_value(f64::NAN, cfg(4)).is_err());
    }

    proptest! {
        #[test]
        fn idempotent_and_close(x in -1e6f64..1e6, p in 1u32..40) {
            let c = cfg(p);
            let once = quantize_value(x, c).unwrap();
            prop_assert_eq!(quantize_rational(&once, c), once.clone());
            let err = (once - BigRational::from_float(x).unwrap()) * BigRational::from_integer(BigInt::one() << p);
            prop_assert!(num_traits::Signed::abs(&err) <= frac(1, 2));
        }
    }
}
