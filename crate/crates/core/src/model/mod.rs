//! Instances, ground truth, random generation, quantization and file IO.

mod generate;
mod io;
mod permutation;
mod quantize;

pub use generate::{
    gen_gaussian_noisy, gen_noiseless_anchored, gen_uniform_noisy, gen_with_law, random_unit_vector,
    stream, CovariateLaw, PermutationLaw, Stream,
};
pub use io::{
    read_document, read_instance, write_document, write_instance, AnchorBlock, Document,
    InstanceFile, TruthBlock,
};
pub use permutation::Permutation;
pub use quantize::{
    noiseless_exact, quantize_anchored, quantize_instance, quantize_rational, quantize_value,
    QuantizationConfig,
};

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use thiserror::Error;

use crate::exact::ExactMatrix;
use crate::scalar::{lit, Real};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Covariates `x` (n x d) and responses `y` (length n) whose pairing is
/// unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<T: Real> {
    x: DMatrix<T>,
    y: DVector<T>,
}

impl<T: Real> Instance<T> {
    pub fn new(x: DMatrix<T>, y: DVector<T>) -> Result<Self, ModelError> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(ModelError::Argument("instance needs n >= 1 and d >= 1".into()));
        }
        if x.nrows() != y.len() {
            return Err(ModelError::Schema(format!(
                "x has {} rows but y has length {}",
                x.nrows(),
                y.len()
            )));
        }
        if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
            return Err(ModelError::Argument("instance entries must be finite".into()));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn y(&self) -> &DVector<T> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// `||X w - Pi^T y||^2` for the pairing `y_i <-> x_{perm(i)}`.
    pub fn cost(&self, w: &DVector<T>, perm: &Permutation) -> T {
        let fitted = &self.x * w;
        let aligned = perm.align(self.y.as_slice());
        fitted
            .iter()
            .zip(&aligned)
            .fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b))
    }
}

/// The `n + 1` measurements of the noiseless model: covariates `x_0..x_n`
/// and responses `y_0..y_n`, with index 0 stored separately.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchoredInstance<T: Real> {
    x0: DVector<T>,
    x: DMatrix<T>,
    y0: T,
    y: DVector<T>,
}

impl<T: Real> AnchoredInstance<T> {
    pub fn new(x0: DVector<T>, x: DMatrix<T>, y0: T, y: DVector<T>) -> Result<Self, ModelError> {
        if x0.len() != x.ncols() {
            return Err(ModelError::Schema(format!(
                "x0 has length {} but covariates have dimension {}",
                x0.len(),
                x.ncols()
            )));
        }
        if !y0.is_finite() || !x0.iter().all(|v| v.is_finite()) {
            return Err(ModelError::Argument("instance entries must be finite".into()));
        }
        Instance::new(x.clone(), y.clone())?;
        Ok(Self { x0, x, y0, y })
    }

    pub fn x0(&self) -> &DVector<T> {
        &self.x0
    }

    pub fn x(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn y0(&self) -> T {
        self.y0
    }

    pub fn y(&self) -> &DVector<T> {
        &self.y
    }

    /// Number of non-anchor measurements.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// All `n + 1` measurements as a plain instance, anchor row first.
    pub fn to_instance(&self) -> Instance<T> {
        let n = self.n();
        let x = DMatrix::from_fn(n + 1, self.d(), |i, j| {
            if i == 0 {
                self.x0[j]
            } else {
                self.x[(i - 1, j)]
            }
        });
        let y = DVector::from_fn(n + 1, |i, _| if i == 0 { self.y0 } else { self.y[i - 1] });
        Instance { x, y }
    }
}

/// Hidden parameters of a generated instance.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth<T: Real> {
    pub w_bar: DVector<T>,
    pub pi_bar: Permutation,
    pub sigma: T,
    pub snr: T,
}

impl<T: Real> GroundTruth<T> {
    /// Fills in `snr = ||w||^2 / sigma^2`, or `+inf` when `sigma = 0`.
    pub fn new(w_bar: DVector<T>, pi_bar: Permutation, sigma: T) -> Self {
        let snr = if sigma > T::zero() {
            w_bar.norm_squared() / (sigma * sigma)
        } else {
            lit(f64::INFINITY)
        };
        Self {
            w_bar,
            pi_bar,
            sigma,
            snr,
        }
    }
}

pub type Rational = BigRational;

/// Exact counterpart of [`Instance`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExactInstance {
    pub x: ExactMatrix<Rational>,
    pub y: Vec<Rational>,
}

impl ExactInstance {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn quantize(&self, cfg: QuantizationConfig) -> Self {
        let x = ExactMatrix::from_fn(self.n(), self.d(), |i, j| {
            quantize_rational(&self.x[(i, j)], cfg)
        });
        let y = self.y.iter().map(|v| quantize_rational(v, cfg)).collect();
        Self { x, y }
    }
}

/// Exact counterpart of [`AnchoredInstance`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExactAnchoredInstance {
    pub x0: Vec<Rational>,
    pub x: ExactMatrix<Rational>,
    pub y0: Rational,
    pub y: Vec<Rational>,
}

impl ExactAnchoredInstance {
    pub fn new(
        x0: Vec<Rational>,
        x: ExactMatrix<Rational>,
        y0: Rational,
        y: Vec<Rational>,
    ) -> Result<Self, ModelError> {
        if x.nrows() != y.len() || x0.len() != x.ncols() || x.nrows() == 0 || x.ncols() == 0 {
            return Err(ModelError::Schema(format!(
                "inconsistent exact instance: x is {}x{}, y has {}, x0 has {}",
                x.nrows(),
                x.ncols(),
                y.len(),
                x0.len()
            )));
        }
        Ok(Self { x0, x, y0, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Covariate `i` for `i` in `0..=n`, where 0 is the anchor slot.
    pub fn covariate(&self, i: usize) -> Vec<Rational> {
        if i == 0 {
            self.x0.clone()
        } else {
            self.x.row(i - 1).to_vec()
        }
    }

    /// Response `i` for `i` in `0..=n`.
    pub fn response(&self, i: usize) -> &Rational {
        if i == 0 {
            &self.y0
        } else {
            &self.y[i - 1]
        }
    }

    /// Every entry converted exactly from `f64` (each finite double is a
    /// dyadic rational).
    pub fn from_f64(inst: &AnchoredInstance<f64>) -> Result<Self, ModelError> {
        let conv = |v: f64| {
            Rational::from_float(v)
                .ok_or_else(|| ModelError::Argument(format!("non-finite value {v}")))
        };
        let x0 = inst.x0.iter().map(|&v| conv(v)).collect::<Result<Vec<_>, _>>()?;
        let rows = (0..inst.n())
            .map(|i| (0..inst.d()).map(|j| conv(inst.x[(i, j)])).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        let y = inst.y.iter().map(|&v| conv(v)).collect::<Result<Vec<_>, _>>()?;
        Self::new(x0, ExactMatrix::from_rows(rows), conv(inst.y0)?, y)
    }

    /// Nearest `f64` of every entry.
    pub fn to_f64(&self) -> AnchoredInstance<f64> {
        use num_traits::ToPrimitive;
        let f = |q: &Rational| q.to_f64().unwrap_or(f64::NAN);
        AnchoredInstance {
            x0: DVector::from_iterator(self.d(), self.x0.iter().map(f)),
            x: DMatrix::from_fn(self.n(), self.d(), |i, j| f(&self.x[(i, j)])),
            y0: f(&self.y0),
            y: DVector::from_iterator(self.n(), self.y.iter().map(f)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_shape_checks() {
        let x = DMatrix::<f64>::zeros(3, 2);
        assert!(Instance::new(x.clone(), DVector::zeros(3)).is_ok());
        assert!(matches!(
            Instance::new(x.clone(), DVector::zeros(2)),
            Err(ModelError::Schema(_))
        ));
        let mut bad = DVector::zeros(3);
        bad[1] = f64::NAN;
        assert!(Instance::new(x, bad).is_err());
    }

    #[test]
    fn snr_sentinel() {
        let w = DVector::from_vec(vec![3.0f64, 4.0]);
        let t = GroundTruth::new(w.clone(), Permutation::identity(2), 0.0);
        assert!(t.snr.is_infinite());
        let t = GroundTruth::new(w, Permutation::identity(2), 5.0);
        assert_eq!(t.snr, 1.0);
    }

    #[test]
    fn cost_uses_alignment() {
        // y_0 pairs with x_1 and y_1 with x_0.
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let y = DVector::from_vec(vec![2.0, 1.0]);
        let inst = Instance::new(x, y).unwrap();
        let perm = Permutation::new(vec![1, 0]).unwrap();
        let w = DVector::from_vec(vec![1.0]);
        assert_eq!(inst.cost(&w, &perm), 0.0);
        assert_eq!(inst.cost(&w, &Permutation::identity(2)), 2.0);
    }
}
