//! Dense linear algebra over an exact field.
//!
//! Everything here is plain Gauss-Jordan elimination. No pivoting strategy is
//! needed for stability since the arithmetic is exact; the first nonzero pivot
//! in each column is taken.

use crate::scalar::Field;

/// Row-major dense matrix over an exact field.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMatrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Field> ExactMatrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    /// Builds a matrix from a list of rows. Panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = F::zero();
            for l in 0..self.cols {
                acc = acc + self[(i, l)].clone() * other[(l, j)].clone();
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len(), "shape mismatch in product");
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    /// Selects a subset of columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])].clone())
    }

    /// Reduced row echelon form and the pivot column of each nonzero row.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = F::one() / m[(r, c)].clone();
            for j in c..m.cols {
                let v = m[(r, j)].clone() * inv.clone();
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in c..m.cols {
                    let v = m[(i, j)].clone() - f.clone() * m[(r, j)].clone();
                    m[(i, j)] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn determinant(&self) -> F {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let mut m = self.clone();
        let n = m.rows;
        let mut det = F::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return F::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let pivot = m[(c, c)].clone();
            det = det * pivot.clone();
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone() / pivot.clone();
                for j in c..n {
                    let v = m[(i, j)].clone() - f.clone() * m[(c, j)].clone();
                    m[(i, j)] = v;
                }
            }
        }
        det
    }

    /// Inverse of a square matrix, or `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let aug = Self::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else if j - n == i {
                F::one()
            } else {
                F::zero()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        Some(Self::from_fn(n, n, |i, j| r[(i, n + j)].clone()))
    }

    /// Some solution of `A x = b` (free variables set to zero), or `None` when
    /// the system is inconsistent.
    pub fn solve(&self, b: &[F]) -> Option<Vec<F>> {
        assert_eq!(self.rows, b.len(), "shape mismatch in solve");
        let aug = Self::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                b[i].clone()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![F::zero(); self.cols];
        for (row, &c) in pivots.iter().enumerate() {
            x[c] = r[(row, self.cols)].clone();
        }
        Some(x)
    }

    /// Least squares: a minimizer `x` of `||A x - b||^2` supported on a maximal
    /// set of independent columns, with the exact minimum.
    pub fn lstsq(&self, b: &[F]) -> (Vec<F>, F) {
        let (_, pivots) = self.rref();
        let mut x = vec![F::zero(); self.cols];
        if !pivots.is_empty() {
            let aj = self.select_columns(&pivots);
            let ajt = aj.transpose();
            let gram = ajt.mul(&aj);
            let rhs = ajt.mul_vec(b);
            let xj = gram
                .solve(&rhs)
                .expect("normal equations on independent columns are consistent");
            for (k, &c) in pivots.iter().enumerate() {
                x[c] = xj[k].clone();
            }
        }
        let ax = self.mul_vec(&x);
        let res = ax
            .iter()
            .zip(b)
            .fold(F::zero(), |acc, (u, v)| {
                let e = u.clone() - v.clone();
                acc + e.clone() * e
            });
        (x, res)
    }

    /// Basis of `{ v : v^T A = 0 }`.
    pub fn left_null_space(&self) -> Vec<Vec<F>> {
        self.transpose().null_space()
    }

    /// Basis of `{ x : A x = 0 }`.
    pub fn null_space(&self) -> Vec<Vec<F>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![F::zero(); self.cols];
                v[f] = F::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl<F> std::ops::Index<(usize, usize)> for ExactMatrix<F> {
    type Output = F;

    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.cols + j]
    }
}

impl<F> std::ops::IndexMut<(usize, usize)> for ExactMatrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<F: Field>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::FromPrimitive;

    fn q(v: i64) -> BigRational {
        BigRational::from_i64(v).unwrap()
    }

    fn mat(rows: &[&[i64]]) -> ExactMatrix<BigRational> {
        ExactMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect())
    }

    #[test]
    fn determinant_and_inverse() {
        let a = mat(&[&[2, 1], &[7, 4]]);
        assert_eq!(a.determinant(), q(1));
        let inv = a.inverse().unwrap();
        assert_eq!(inv, mat(&[&[4, -1], &[-7, 2]]));
        assert_eq!(a.mul(&inv), ExactMatrix::identity(2));
    }

    #[test]
    fn singular_has_no_inverse() {
        let a = mat(&[&[1, 2], &[2, 4]]);
        assert_eq!(a.determinant(), q(0));
        assert!(a.inverse().is_none());
        assert_eq!(a.rank(), 1);
    }

    #[test]
    fn determinant_tracks_row_swaps() {
        let a = mat(&[&[0, 1], &[1, 0]]);
        assert_eq!(a.determinant(), q(-1));
    }

    #[test]
    fn lstsq_projects_onto_column_space() {
        // Column e1 in R^3: residual is the energy off the first coordinate.
        let a = mat(&[&[1], &[0], &[0]]);
        let (x, res) = a.lstsq(&[q(3), q(4), q(5)]);
        assert_eq!(x, vec![q(3)]);
        assert_eq!(res, q(41));
    }

    #[test]
    fn lstsq_handles_dependent_columns() {
        let a = mat(&[&[1, 2], &[1, 2], &[0, 0]]);
        let (x, res) = a.lstsq(&[q(1), q(3), q(0)]);
        assert_eq!(res, q(2));
        assert_eq!(a.mul_vec(&x), vec![q(2), q(2), q(0)]);
    }

    #[test]
    fn null_spaces() {
        let a = mat(&[&[1, 1, 0], &[0, 0, 1]]);
        let ns = a.null_space();
        assert_eq!(ns.len(), 1);
        assert_eq!(a.mul_vec(&ns[0]), vec![q(0), q(0)]);
        let b = mat(&[&[1], &[1]]);
        let lns = b.left_null_space();
        assert_eq!(lns.len(), 1);
        assert_eq!(dot(&lns[0], &[q(1), q(1)]), q(0));
    }

    #[test]
    fn solve_detects_inconsistency() {
        let a = mat(&[&[1, 0], &[1, 0]]);
        assert!(a.solve(&[q(1), q(2)]).is_none());
        assert_eq!(a.solve(&[q(2), q(2)]), Some(vec![q(2), q(0)]));
    }
}
