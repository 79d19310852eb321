//! Integral LLL reduction.
//!
//! All Gram-Schmidt data is kept as integers: `d[i]` is the Gram determinant
//! of the first `i` basis vectors and `lam[k][j] = d[j+1] * mu[k][j]`. Every
//! division performed is exact, so no rationals are ever materialized. This is
//! the all-integer variant from Cohen, *A Course in Computational Algebraic
//! Number Theory*, Algorithm 2.6.7, with a general rational Lovász parameter.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{LatticeBasis, LatticeError};

/// Result of a reduction: the reduced basis together with the unimodular
/// change of basis `reduced = input * transform` (columns).
#[derive(Clone, Debug)]
pub struct Reduction {
    pub basis: LatticeBasis,
    /// `transform[j]` holds the coefficients of reduced column `j` in terms of
    /// the input columns.
    pub transform: Vec<Vec<BigInt>>,
    pub swaps: usize,
}

/// The classical Lovász parameter, 3/4.
pub fn default_lovasz() -> BigRational {
    BigRational::new(BigInt::from(3), BigInt::from(4))
}

/// LLL-reduces `basis` with Lovász parameter `delta` in (1/4, 1].
pub fn lll_reduce(basis: &LatticeBasis, delta: &BigRational) -> Result<LatticeBasis, LatticeError> {
    lll_reduce_with_transform(basis, delta).map(|r| r.basis)
}

pub fn lll_reduce_with_transform(
    basis: &LatticeBasis,
    delta: &BigRational,
) -> Result<Reduction, LatticeError> {
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    if *delta <= quarter || *delta > BigRational::one() {
        return Err(LatticeError::Argument(format!(
            "Lovász parameter must lie in (1/4, 1], got {delta}"
        )));
    }
    let mut state = State::new(basis.columns().to_vec(), delta)?;
    state.run()?;
    Ok(Reduction {
        basis: LatticeBasis::with_scale(state.b, basis.scale().clone())?,
        transform: state.h,
        swaps: state.swaps,
    })
}

struct State {
    b: Vec<Vec<BigInt>>,
    h: Vec<Vec<BigInt>>,
    // d[0] = 1, d[i] = Gram determinant of b[0..i].
    d: Vec<BigInt>,
    // lam[k][j] for j < k.
    lam: Vec<Vec<BigInt>>,
    delta_num: BigInt,
    delta_den: BigInt,
    swaps: usize,
}

impl State {
    fn new(b: Vec<Vec<BigInt>>, delta: &BigRational) -> Result<Self, LatticeError> {
        let n = b.len();
        let h = (0..n)
            .map(|j| {
                let mut col = vec![BigInt::zero(); n];
                col[j] = BigInt::one();
                col
            })
            .collect();
        let mut st = Self {
            b,
            h,
            d: vec![BigInt::zero(); n + 1],
            lam: (0..n).map(|k| vec![BigInt::zero(); k]).collect(),
            delta_num: delta.numer().clone(),
            delta_den: delta.denom().clone(),
            swaps: 0,
        };
        st.d[0] = BigInt::one();
        // Gram-Schmidt data for the whole input up front; this also detects
        // dependent inputs before any work is done.
        for k in 0..n {
            st.gram_schmidt_row(k)?;
        }
        Ok(st)
    }

    fn gram_schmidt_row(&mut self, k: usize) -> Result<(), LatticeError> {
        for j in 0..=k {
            let mut u = inner(&self.b[k], &self.b[j]);
            for i in 0..j {
                u = (&self.d[i + 1] * &u - &self.lam[k][i] * &self.lam[j][i]) / &self.d[i];
            }
            if j < k {
                self.lam[k][j] = u;
            } else {
                if u.is_zero() {
                    return Err(LatticeError::Argument(
                        "basis columns are linearly dependent".into(),
                    ));
                }
                self.d[k + 1] = u;
            }
        }
        Ok(())
    }

    fn run(&mut self) -> Result<(), LatticeError> {
        let n = self.b.len();
        let mut k = 1;
        while k < n {
            self.size_reduce(k, k - 1);
            // Lovász: d[k+1] d[k-1] >= delta d[k]^2 - lam[k][k-1]^2, in the
            // shifted indexing where d[i+1] belongs to vector i.
            let lhs = &self.delta_den * (&self.d[k + 1] * &self.d[k - 1]);
            let lam = &self.lam[k][k - 1];
            let rhs = &self.delta_num * (&self.d[k] * &self.d[k]) - &self.delta_den * (lam * lam);
            if lhs < rhs {
                self.swap(k);
                if k > 1 {
                    k -= 1;
                }
            } else {
                for l in (0..k.saturating_sub(1)).rev() {
                    self.size_reduce(k, l);
                }
                k += 1;
            }
        }
        Ok(())
    }

    fn size_reduce(&mut self, k: usize, l: usize) {
        let dl = self.d[l + 1].clone();
        let dl = &dl;
        let twice: BigInt = &self.lam[k][l] * 2;
        if twice.abs() <= *dl {
            return;
        }
        // Nearest integer to lam/dl.
        let q = (twice + dl).div_floor(&(dl * 2));
        let (bk, bl) = pair_mut(&mut self.b, k, l);
        axpy_neg(bk, &q, bl);
        let (hk, hl) = pair_mut(&mut self.h, k, l);
        axpy_neg(hk, &q, hl);
        self.lam[k][l] -= &q * dl;
        for i in 0..l {
            let t = &q * &self.lam[l][i];
            self.lam[k][i] -= t;
        }
    }

    fn swap(&mut self, k: usize) {
        self.swaps += 1;
        let n = self.b.len();
        self.b.swap(k, k - 1);
        self.h.swap(k, k - 1);
        for j in 0..k - 1 {
            let t = std::mem::take(&mut self.lam[k][j]);
            self.lam[k][j] = std::mem::replace(&mut self.lam[k - 1][j], t);
        }
        let lam = self.lam[k][k - 1].clone();
        let bb = (&self.d[k - 1] * &self.d[k + 1] + &lam * &lam) / &self.d[k];
        for i in k + 1..n {
            let t = self.lam[i][k].clone();
            let new_ik = (&self.d[k + 1] * &self.lam[i][k - 1] - &lam * &t) / &self.d[k];
            let new_ik1 = (&bb * &t + &lam * &new_ik) / &self.d[k + 1];
            self.lam[i][k] = new_ik;
            self.lam[i][k - 1] = new_ik1;
        }
        self.d[k] = bb;
    }
}

fn inner(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy_neg(dst: &mut [BigInt], q: &BigInt, src: &[BigInt]) {
    for (d, s) in dst.iter_mut().zip(src) {
        if !s.is_zero() {
            *d -= q * s;
        }
    }
}

fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a], &hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[0], &lo[b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(cols: &[&[i64]]) -> LatticeBasis {
        LatticeBasis::new(
            cols.iter()
                .map(|c| c.iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn norm_sq(v: &[BigInt]) -> BigInt {
        inner(v, v)
    }

    #[test]
    fn identity_is_already_reduced() {
        let b = basis(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        let r = lll_reduce(&b, &default_lovasz()).unwrap();
        assert_eq!(r.columns(), b.columns());
    }

    #[test]
    fn two_dimensional_example() {
        let b = basis(&[&[1, 1], &[2, 0]]);
        let r = lll_reduce(&b, &default_lovasz()).unwrap();
        assert!(norm_sq(&r.columns()[0]) <= BigInt::from(2));
    }

    #[test]
    fn dependent_columns_rejected() {
        let b = basis(&[&[1, 2], &[2, 4]]);
        assert!(matches!(
            lll_reduce(&b, &default_lovasz()),
            Err(LatticeError::Argument(_))
        ));
    }

    #[test]
    fn lovasz_parameter_range() {
        let b = basis(&[&[1, 0], &[0, 1]]);
        let quarter = BigRational::new(1.into(), 4.into());
        assert!(lll_reduce(&b, &quarter).is_err());
        let almost = BigRational::new(99.into(), 100.into());
        assert!(lll_reduce(&b, &almost).is_ok());
    }

    #[test]
    fn transform_reproduces_output() {
        let b = basis(&[&[7, 3, -2], &[5, -9, 4], &[1, 8, 8]]);
        let red = lll_reduce_with_transform(&b, &default_lovasz()).unwrap();
        for (j, coeffs) in red.transform.iter().enumerate() {
            let mut v = vec![BigInt::zero(); 3];
            for (c, col) in coeffs.iter().zip(b.columns()) {
                for (vi, ci) in v.iter_mut().zip(col) {
                    *vi += c * ci;
                }
            }
            assert_eq!(&v, &red.basis.columns()[j]);
        }
    }
}
