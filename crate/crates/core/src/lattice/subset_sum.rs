//! Lagarias-Odlyzko subset-sum solver.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::lll::lll_reduce;
use super::{LatticeBasis, LatticeError};

/// Source numbers `c_i`, target `t` and lattice parameter `beta`, all exact.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetSumInstance {
    sources: Vec<BigRational>,
    target: BigRational,
    beta: BigRational,
}

impl SubsetSumInstance {
    pub fn new(
        sources: Vec<BigRational>,
        target: BigRational,
        beta: BigRational,
    ) -> Result<Self, LatticeError> {
        if !beta.is_positive() {
            return Err(LatticeError::Argument(format!("beta must be positive, got {beta}")));
        }
        Ok(Self {
            sources,
            target,
            beta,
        })
    }

    pub fn sources(&self) -> &[BigRational] {
        &self.sources
    }

    pub fn target(&self) -> &BigRational {
        &self.target
    }

    pub fn beta(&self) -> &BigRational {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubsetSumOutcome {
    /// `subset` sums exactly to the target. `vector_index` is the position of
    /// the reduced basis vector that carried the pattern; anything other than
    /// 0 means the first vector failed and the fallback scan found it.
    Found {
        subset: Vec<usize>,
        vector_index: usize,
    },
    Failure,
}

impl SubsetSumOutcome {
    pub fn subset(&self) -> Option<&[usize]> {
        match self {
            Self::Found { subset, .. } => Some(subset),
            Self::Failure => None,
        }
    }
}

/// The `(m+2) x (m+1)` basis: identity on top, `beta*t, -beta*c_1, ...` as
/// the last row, multiplied through by the common denominator of that row.
pub fn subset_sum_basis(ssi: &SubsetSumInstance) -> LatticeBasis {
    let m = ssi.len();
    let mut bottom: Vec<BigRational> = Vec::with_capacity(m + 1);
    bottom.push(&ssi.beta * &ssi.target);
    bottom.extend(ssi.sources.iter().map(|c| -(&ssi.beta * c)));
    let scale = bottom
        .iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let columns = bottom
        .iter()
        .enumerate()
        .map(|(j, q)| {
            let mut col = vec![BigInt::zero(); m + 2];
            col[j] = BigInt::one();
            col[m + 1] = (q * BigRational::from_integer(scale.clone())).to_integer();
            col
        })
        .collect();
    LatticeBasis::with_scale(columns, scale).expect("subset-sum basis is well formed")
}

/// Runs basis reduction on the subset-sum lattice and tests the reduced
/// vectors for the `z (1, chi, 0)` pattern.
///
/// Only the first reduced vector is tested unless `scan_all` is set, in which
/// case the remaining vectors are tried in order when the first one fails.
pub fn lagarias_odlyzko(
    ssi: &SubsetSumInstance,
    lovasz: &BigRational,
    scan_all: bool,
) -> Result<SubsetSumOutcome, LatticeError> {
    let basis = subset_sum_basis(ssi);
    let reduced = lll_reduce(&basis, lovasz)?;
    let limit = if scan_all { reduced.rank() } else { 1 };
    for (idx, v) in reduced.columns().iter().take(limit).enumerate() {
        if let Some(subset) = read_pattern(v) {
            let sum = subset
                .iter()
                .fold(BigRational::zero(), |acc, &i| acc + &ssi.sources[i]);
            if sum != ssi.target {
                return Err(LatticeError::Internal(format!(
                    "pattern vector {idx} gives a subset that does not hit the target"
                )));
            }
            return Ok(SubsetSumOutcome::Found {
                subset,
                vector_index: idx,
            });
        }
    }
    Ok(SubsetSumOutcome::Failure)
}

/// `v = z (1, chi, 0)` with `z != 0` and `chi` a 0/1 vector.
fn read_pattern(v: &[BigInt]) -> Option<Vec<usize>> {
    let (z, rest) = v.split_first()?;
    let (last, chi) = rest.split_last()?;
    if z.is_zero() || !last.is_zero() {
        return None;
    }
    let mut subset = Vec::new();
    for (i, c) in chi.iter().enumerate() {
        if c == z {
            subset.push(i);
        } else if !c.is_zero() {
            return None;
        }
    }
    Some(subset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::default_lovasz;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn singleton_is_forced() {
        let ssi = SubsetSumInstance::new(vec![q(7)], q(7), q(1 << 10)).unwrap();
        let out = lagarias_odlyzko(&ssi, &default_lovasz(), false).unwrap();
        assert_eq!(out.subset(), Some(&[0][..]));
    }

    #[test]
    fn small_planted_instance() {
        let ssi =
            SubsetSumInstance::new(vec![q(3), q(5), q(9), q(17), q(33)], q(45), q(1 << 16))
                .unwrap();
        let out = lagarias_odlyzko(&ssi, &default_lovasz(), true).unwrap();
        assert_eq!(out.subset(), Some(&[0, 2, 4][..]));
    }

    #[test]
    fn basis_clears_denominators() {
        let c = vec![BigRational::new(1.into(), 3.into())];
        let ssi = SubsetSumInstance::new(c, BigRational::new(1.into(), 3.into()), q(2)).unwrap();
        let b = subset_sum_basis(&ssi);
        assert_eq!(b.scale(), &BigInt::from(3));
        assert_eq!(b.columns()[0], vec![1.into(), 0.into(), 2.into()]);
        assert_eq!(b.columns()[1], vec![0.into(), 1.into(), (-2).into()]);
    }

    #[test]
    fn non_positive_beta_rejected() {
        assert!(SubsetSumInstance::new(vec![q(1)], q(1), q(0)).is_err());
    }

    #[test]
    fn pattern_reader() {
        let v: Vec<BigInt> = [-2, 0, -2, -2, 0].iter().map(|&x| x.into()).collect();
        assert_eq!(read_pattern(&v), Some(vec![1, 2]));
        let w: Vec<BigInt> = [1, 0, 2, 0].iter().map(|&x| x.into()).collect();
        assert_eq!(read_pattern(&w), None);
        let u: Vec<BigInt> = [1, 1, 0, 1].iter().map(|&x| x.into()).collect();
        assert_eq!(read_pattern(&u), None);
    }
}
