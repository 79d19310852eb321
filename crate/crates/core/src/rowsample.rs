//! Deterministic dual-barrier row sampling.
//!
//! Given `X` (n x k) with orthonormal columns, picks `r` weighted rows so that
//! least squares on the sampled rows is within a factor
//! `c = 1 + 4 (1 + sqrt(n / r))^2` of least squares on all rows (for
//! `r = 4k`). Every step keeps the spectrum of `A = sum t x x^T` above a
//! moving lower barrier and the accumulated weights `B` below a moving upper
//! barrier.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::scalar::{lit, Real};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RowSampleError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// An `r x n` matrix with at most one nonzero per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingMatrix<T: Real> {
    n: usize,
    rows: Vec<Option<(usize, T)>>,
}

impl<T: Real> SamplingMatrix<T> {
    pub fn new(n: usize, rows: Vec<Option<(usize, T)>>) -> Result<Self, RowSampleError> {
        for (col, w) in rows.iter().flatten() {
            if *col >= n || !(*w > T::zero()) {
                return Err(RowSampleError::Argument(format!(
                    "row entry ({col}, {w}) invalid for n = {n}"
                )));
            }
        }
        Ok(Self { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Option<(usize, T)>] {
        &self.rows
    }

    /// Distinct columns holding a nonzero, ascending.
    pub fn nonzero_columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self.rows.iter().flatten().map(|&(c, _)| c).collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut s = DMatrix::zeros(self.r(), self.n);
        for (i, (c, w)) in self.rows.iter().enumerate().filter_map(|(i, e)| e.map(|e| (i, e))) {
            s[(i, c)] = w;
        }
        s
    }

    /// `S M` for an `n`-row matrix `M`.
    pub fn apply(&self, m: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.r(), m.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            if let Some((c, w)) = *row {
                out.set_row(i, &(m.row(c) * w));
            }
        }
        out
    }

    pub fn apply_vec(&self, v: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(
            self.r(),
            self.rows.iter().map(|row| row.map_or(T::zero(), |(c, w)| v[c] * w)),
        )
    }
}

/// Running state of the barrier method.
#[derive(Clone, Debug)]
pub struct BarrierState<T: Real> {
    pub a: DMatrix<T>,
    pub b_diag: Vec<T>,
    pub tau: usize,
    pub ell: T,
    pub u: T,
}

/// `x^T (A - l'I)^-2 x / (phi(l') - phi(l)) - x^T (A - l'I)^-1 x` with
/// `l' = ell + delta_l` and `phi(l) = sum 1 / (lambda_i(A) - l)`.
pub fn lower_barrier_l<T: Real>(
    x: &DVector<T>,
    delta_l: T,
    a: &DMatrix<T>,
    ell: T,
) -> Result<T, RowSampleError> {
    let eig = SymmetricEigen::new(a.clone());
    lower_barrier_from_eigen(x, delta_l, &eig, ell)
}

fn lower_barrier_from_eigen<T: Real>(
    x: &DVector<T>,
    delta_l: T,
    eig: &SymmetricEigen<T, nalgebra::Dyn>,
    ell: T,
) -> Result<T, RowSampleError> {
    let shifted = ell + delta_l;
    let proj = eig.eigenvectors.transpose() * x;
    let (mut quad2, mut quad1, mut phi_s, mut phi) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        let gap = lam - shifted;
        if gap == T::zero() || lam == ell {
            return Err(RowSampleError::Numeric(format!(
                "lower barrier shift coincides with eigenvalue {lam}"
            )));
        }
        let p2 = proj[i] * proj[i];
        quad2 += p2 / (gap * gap);
        quad1 += p2 / gap;
        phi_s += T::one() / gap;
        phi += T::one() / (lam - ell);
    }
    let denom = phi_s - phi;
    if denom.abs() < lit(1e-14) {
        return Err(RowSampleError::Numeric("lower barrier potentials coincide".into()));
    }
    Ok(quad2 / denom - quad1)
}

/// `phi'(u) = sum_i 1 / (u - B_ii)` over all `n` diagonal entries.
fn upper_potential<T: Real>(b_diag: &[T], u: T) -> T {
    b_diag.iter().fold(T::zero(), |acc, &b| acc + T::one() / (u - b))
}

/// The upper barrier quantity for a general probe `x` against the diagonal
/// matrix `B`.
pub fn upper_barrier_u<T: Real>(
    x: &DVector<T>,
    delta: T,
    b_diag: &[T],
    u: T,
) -> Result<T, RowSampleError> {
    if x.len() != b_diag.len() {
        return Err(RowSampleError::Argument("probe and diagonal differ in length".into()));
    }
    let up = u + delta;
    let denom = upper_potential(b_diag, u) - upper_potential(b_diag, up);
    if denom.abs() < lit(1e-14) {
        return Err(RowSampleError::Numeric("upper barrier potentials coincide".into()));
    }
    let (mut quad2, mut quad1) = (T::zero(), T::zero());
    for (&xi, &b) in x.iter().zip(b_diag) {
        let gap = b - up;
        if gap == T::zero() {
            return Err(RowSampleError::Numeric(format!("upper barrier hits diagonal entry {b}")));
        }
        quad2 += xi * xi / (gap * gap);
        quad1 += xi * xi / gap;
    }
    Ok(quad2 / denom - quad1)
}

/// The same quantity for the probe `e_i`, given the precomputed potential
/// difference.
fn upper_barrier_e<T: Real>(b_i: T, up: T, denom: T) -> T {
    let gap = b_i - up;
    T::one() / (gap * gap) / denom - T::one() / gap
}

/// `1 + 4 (1 + sqrt(n / (4k)))^2`.
pub fn approximation_constant<T: Real>(n: usize, k: usize) -> T {
    let s = T::one() + (lit::<T>(n as f64) / lit::<T>(4.0 * k as f64)).sqrt();
    T::one() + lit::<T>(4.0) * s * s
}

fn check_orthonormal<T: Real>(x: &DMatrix<T>) -> Result<(), RowSampleError> {
    let k = x.ncols();
    let gram = x.transpose() * x;
    let err = (gram - DMatrix::identity(k, k)).amax();
    if err > T::orthonormal_tol() {
        return Err(RowSampleError::Argument(format!(
            "columns are not orthonormal (max deviation {err})"
        )));
    }
    Ok(())
}

/// Runs the barrier method for `r` steps.
pub fn row_sample<T: Real>(x: &DMatrix<T>, r: usize) -> Result<SamplingMatrix<T>, RowSampleError> {
    let (n, k) = (x.nrows(), x.ncols());
    if k == 0 || n < k {
        return Err(RowSampleError::Argument(format!("need n >= k >= 1, got n={n}, k={k}")));
    }
    if r <= k {
        return Err(RowSampleError::Argument(format!("need r > k, got r={r}, k={k}")));
    }
    check_orthonormal(x)?;
    let (nf, kf, rf) = (lit::<T>(n as f64), lit::<T>(k as f64), lit::<T>(r as f64));
    let shrink = T::one() - (kf / rf).sqrt();
    let delta = (T::one() + nf / rf) / shrink;
    let delta_l = T::one();
    let scale = (shrink / rf).sqrt();
    let rows_x: Vec<DVector<T>> = (0..n).map(|i| x.row(i).transpose()).collect();

    let mut st = BarrierState {
        a: DMatrix::zeros(k, k),
        b_diag: vec![T::zero(); n],
        tau: 0,
        ell: -(rf * kf).sqrt(),
        u: delta * (nf * rf).sqrt(),
    };
    let mut rows = Vec::with_capacity(r);
    for tau in 0..r {
        let tf = lit::<T>(tau as f64);
        st.tau = tau;
        st.ell = tf - (rf * kf).sqrt();
        st.u = delta * (tf + (nf * rf).sqrt());
        let eig = SymmetricEigen::new(st.a.clone());
        let up = st.u + delta;
        let denom = upper_potential(&st.b_diag, st.u) - upper_potential(&st.b_diag, up);
        if denom.abs() < lit(1e-14) {
            return Err(RowSampleError::Numeric("upper barrier potentials coincide".into()));
        }
        let mut pick = None;
        for (i, xi) in rows_x.iter().enumerate() {
            let u_hat = upper_barrier_e(st.b_diag[i], up, denom);
            let l = lower_barrier_from_eigen(xi, delta_l, &eig, st.ell)?;
            if u_hat.is_finite() && l.is_finite() && u_hat <= l && u_hat > T::zero() {
                pick = Some((i, lit::<T>(2.0) / (u_hat + l)));
                break;
            }
        }
        let Some((i, t)) = pick else {
            return Err(RowSampleError::Internal(format!(
                "no admissible row at step {tau}"
            )));
        };
        st.a += &rows_x[i] * rows_x[i].transpose() * t;
        st.b_diag[i] += t;
        rows.push(Some((i, scale / t.sqrt())));

        // Barrier soundness for the next step.
        let next_ell = tf + T::one() - (rf * kf).sqrt();
        let next_u = delta * (tf + T::one() + (nf * rf).sqrt());
        let lam_min = SymmetricEigen::new(st.a.clone()).eigenvalues.min();
        let b_max = st.b_diag.iter().copied().fold(T::zero(), |m, v| if v > m { v } else { m });
        if !(lam_min > next_ell) || !(b_max < next_u) {
            return Err(RowSampleError::Internal(format!(
                "barrier crossed after step {tau}: lambda_min {lam_min} vs {next_ell}, max B {b_max} vs {next_u}"
            )));
        }
    }
    SamplingMatrix::new(n, rows)
}

/// Minimum-norm minimizer of `||S (X w - b)||^2`.
pub fn solve_weighted_ls<T: Real>(
    s: &SamplingMatrix<T>,
    x: &DMatrix<T>,
    b: &DVector<T>,
) -> Result<DVector<T>, RowSampleError> {
    if x.nrows() != s.n() || b.len() != s.n() {
        return Err(RowSampleError::Argument("shapes of S, X and b disagree".into()));
    }
    let sx = s.apply(x);
    let sb = s.apply_vec(b);
    Ok(min_norm_lstsq(&sx, &sb))
}

/// Minimum-norm least squares via the SVD, dropping singular values below
/// `rank_tol * sigma_max`.
pub(crate) fn min_norm_lstsq<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> DVector<T> {
    pseudo_inverse(a) * b
}

pub(crate) fn pseudo_inverse<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    if a.is_empty() {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == T::zero() {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let tol = smax * T::rank_tol();
    svd.pseudo_inverse(tol).expect("both factors were computed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{stream, Stream};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_orthonormal(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = stream(seed, Stream::Covariates);
        let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        g.qr().q()
    }

    #[test]
    fn lower_barrier_scalar_example() {
        let a = DMatrix::from_element(1, 1, 2.0f64);
        let x = DVector::from_element(1, 1.0);
        assert!((lower_barrier_l(&x, 1.0, &a, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let z = DVector::zeros(1);
        assert_eq!(lower_barrier_l(&z, 1.0, &a, 0.0).unwrap(), 0.0);
        let x2 = DVector::from_element(1, 2.0);
        assert!((lower_barrier_l(&x2, 1.0, &a, 0.0).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn lower_barrier_scales_quadratically() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0f64, 0.5, 0.5, 2.0]);
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let l1 = lower_barrier_l(&x, 1.0, &a, -0.5).unwrap();
        let l2 = lower_barrier_l(&(&x * 2.0), 1.0, &a, -0.5).unwrap();
        assert!((l2 - 4.0 * l1).abs() < 1e-12 * l1.abs().max(1.0));
    }

    #[test]
    fn lower_barrier_singular_shift() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let x = DVector::from_element(1, 1.0);
        assert!(matches!(lower_barrier_l(&x, 1.0, &a, 0.0), Err(RowSampleError::Numeric(_))));
    }

    #[test]
    fn upper_barrier_scalar_example() {
        let e = DVector::from_element(1, 1.0f64);
        assert!((upper_barrier_u(&e, 1.0, &[0.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(upper_barrier_u(&DVector::zeros(1), 1.0, &[0.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn diagonal_shortcut_matches_general_formula() {
        let b = [0.0f64, 0.4, 1.3, 0.2];
        let (u, delta) = (3.0f64, 1.5f64);
        let denom = upper_potential(&b, u) - upper_potential(&b, u + delta);
        for i in 0..b.len() {
            let mut e = DVector::zeros(4);
            e[i] = 1.0;
            let general = upper_barrier_u(&e, delta, &b, u).unwrap();
            let short = upper_barrier_e(b[i], u + delta, denom);
            assert!((general - short).abs() < 1e-14);
        }
    }

    #[test]
    fn single_row() {
        let x = DMatrix::from_element(1, 1, 1.0);
        let s = row_sample(&x, 4).unwrap();
        assert_eq!(s.r(), 4);
        assert!(s.rows().iter().all(|r| matches!(r, Some((0, w)) if *w > 0.0)));
        let sx = s.apply(&x);
        assert!((sx.transpose() * sx)[(0, 0)] > 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let x = DMatrix::from_element(3, 1, 1.0);
        assert!(matches!(row_sample(&x, 4), Err(RowSampleError::Argument(_))));
        let q = random_orthonormal(5, 2, 1);
        assert!(row_sample(&q, 2).is_err());
    }

    #[test]
    fn structure_rank_and_guarantee() {
        for (case, &(n, k)) in [(8, 2), (16, 3), (32, 1), (64, 4), (8, 4)].iter().enumerate() {
            let x = random_orthonormal(n, k, case as u64);
            let s = row_sample(&x, 4 * k).unwrap();
            assert_eq!(s.r(), 4 * k);
            let cols = s.nonzero_columns();
            assert!(cols.len() >= k && cols.len() <= 4 * k);
            let sx = s.apply(&x);
            let sv = sx.clone().svd(false, false).singular_values;
            assert!(sv.min() > 1e-8, "rank of SX dropped: {sv}");
            let c: f64 = approximation_constant(n, k);
            let mut rng = stream(100 + case as u64, Stream::Noise);
            for _ in 0..10 {
                let b = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let w = solve_weighted_ls(&s, &x, &b).unwrap();
                let opt = (&b - &x * (x.transpose() * &b)).norm_squared();
                let got = (&x * w - &b).norm_squared();
                assert!(got <= c * opt + 1e-9, "{got} > {c} * {opt}");
            }
        }
    }

    #[test]
    fn weighted_ls_examples() {
        let x = random_orthonormal(6, 2, 9);
        let s = row_sample(&x, 8).unwrap();
        let w0 = DVector::from_vec(vec![1.5, -0.25]);
        let w = solve_weighted_ls(&s, &x, &(&x * &w0)).unwrap();
        assert!((w - w0).norm() < 1e-10);

        let empty = SamplingMatrix::<f64>::new(6, vec![None; 8]).unwrap();
        let w = solve_weighted_ls(&empty, &x, &DVector::from_element(6, 1.0)).unwrap();
        assert_eq!(w, DVector::zeros(2));
    }

    #[test]
    fn weighted_ls_orthogonal_rhs() {
        // k = 1, X = e_1; b lives on the other coordinates, S picks row 0 only.
        let mut x = DMatrix::zeros(3, 1);
        x[(0, 0)] = 1.0;
        let s = SamplingMatrix::new(3, vec![Some((0, 2.0)), None]).unwrap();
        let b = DVector::from_vec(vec![0.0, 1.0, -2.0]);
        let w = solve_weighted_ls(&s, &x, &b).unwrap();
        assert_eq!(w[0], 0.0);
        let resid = (s.apply(&x) * &w - s.apply_vec(&b)).norm_squared();
        assert_eq!(resid, s.apply_vec(&b).norm_squared());
    }

    #[test]
    fn f32_sampling() {
        let x = random_orthonormal(8, 2, 3).map(|v| v as f32);
        let s = row_sample(&x, 8).unwrap();
        assert_eq!(s.r(), 8);
    }
}
