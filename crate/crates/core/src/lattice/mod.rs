//! Exact recovery in the noiseless Gaussian model.
//!
//! The pipeline is: build `n^2` subset-sum source numbers from the data
//! ([`build_sources`]), solve that instance with the Lagarias-Odlyzko lattice
//! method ([`lagarias_odlyzko`]) on top of an exact integral LLL
//! ([`lll_reduce`]), read a permutation off the recovered subset
//! ([`find_permutation`]), and wrap all of it in a loop over the `n + 1`
//! possible anchors ([`recover`]).

mod lll;
mod params;
mod recovery;
mod subset_sum;

pub use lll::{default_lovasz, lll_reduce, lll_reduce_with_transform, Reduction};
pub use params::{
    approx_log2, beta_for, epsilon_bound, epsilon_bound_with, log2_epsilon, w_norm_lower_bound,
    BetaPolicy,
};
pub use recovery::{
    build_sources, epsilon_for, find_permutation, recover, FindOutcome, RecoveryConfig, RecoveryOutcome,
    RecoveryResult, SourceNumbers,
};
pub use subset_sum::{lagarias_odlyzko, subset_sum_basis, SubsetSumInstance, SubsetSumOutcome};

use num_bigint::BigInt;
use num_traits::One;
use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("covariates have rank {rank} < {d}; recovery impossible")]
    Rank { rank: usize, d: usize },
    #[error("degenerate instance: all source numbers and the target are zero")]
    Degenerate,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A lattice given by integer column vectors.
///
/// `scale` records the common denominator that was cleared when the columns
/// were built from rational data (1 when the data were integral already).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis {
    columns: Vec<Vec<BigInt>>,
    scale: BigInt,
}

impl LatticeBasis {
    pub fn new(columns: Vec<Vec<BigInt>>) -> Result<Self, LatticeError> {
        Self::with_scale(columns, BigInt::one())
    }

    pub fn with_scale(columns: Vec<Vec<BigInt>>, scale: BigInt) -> Result<Self, LatticeError> {
        let Some(first) = columns.first() else {
            return Err(LatticeError::Argument("empty basis".into()));
        };
        let dim = first.len();
        if columns.iter().any(|c| c.len() != dim) {
            return Err(LatticeError::Argument("basis columns differ in length".into()));
        }
        if columns.len() > dim {
            return Err(LatticeError::Argument(format!(
                "{} columns in dimension {dim} cannot be independent",
                columns.len()
            )));
        }
        Ok(Self { columns, scale })
    }

    pub fn columns(&self) -> &[Vec<BigInt>] {
        &self.columns
    }

    pub fn scale(&self) -> &BigInt {
        &self.scale
    }

    /// Number of basis vectors.
    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.columns[0].len()
    }

    /// Integer coefficients `z` with `B z = v`, if `v` lies in the lattice.
    pub fn coordinates_of(&self, v: &[BigInt]) -> Option<Vec<BigInt>> {
        use crate::exact::ExactMatrix;
        use num_rational::BigRational;
        if v.len() != self.dim() {
            return None;
        }
        let m = ExactMatrix::from_fn(self.dim(), self.rank(), |i, j| {
            BigRational::from_integer(self.columns[j][i].clone())
        });
        let rhs: Vec<BigRational> = v.iter().cloned().map(BigRational::from_integer).collect();
        let z = m.solve(&rhs)?;
        z.into_iter()
            .map(|q| q.is_integer().then(|| q.to_integer()))
            .collect()
    }
}
