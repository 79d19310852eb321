//! The candidate right-hand sides `b`.
//!
//! Coordinates where the sampling matrix has an all-zero column are fixed to
//! 0; every other coordinate takes one of the response values. A candidate is
//! represented by the response index chosen for each nonzero column, in
//! ascending column order, and candidates are enumerated in lexicographic
//! order of those index tuples.

use nalgebra::DVector;

use crate::rowsample::SamplingMatrix;
use crate::scalar::Real;

/// Which assignments of responses to sampled coordinates are enumerated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CandidateMode {
    /// Every coordinate independently takes any of the `n` responses.
    Full,
    /// Distinct coordinates take distinct responses (by index). The target
    /// that certifies the approximation is a permuted copy of `y`, so it is
    /// always among these.
    #[default]
    Distinct,
}

/// Lazy enumeration of index tuples.
#[derive(Clone, Debug)]
pub struct Assignments {
    n: usize,
    mode: CandidateMode,
    current: Vec<usize>,
    used: Vec<bool>,
    started: bool,
    done: bool,
}

impl Assignments {
    pub fn new(n: usize, m: usize, mode: CandidateMode) -> Self {
        let done = mode == CandidateMode::Distinct && m > n || (m > 0 && n == 0);
        let current = match mode {
            CandidateMode::Full => vec![0; m],
            CandidateMode::Distinct => (0..m).collect(),
        };
        let mut used = vec![false; n];
        if mode == CandidateMode::Distinct && !done {
            current.iter().for_each(|&i| used[i] = true);
        }
        Self {
            n,
            mode,
            current,
            used,
            started: false,
            done,
        }
    }

    /// Number of tuples, saturating at `u128::MAX`.
    pub fn count(n: usize, m: usize, mode: CandidateMode) -> u128 {
        let mut total: u128 = 1;
        for i in 0..m {
            let f = match mode {
                CandidateMode::Full => n as u128,
                CandidateMode::Distinct => (n as u128).saturating_sub(i as u128),
            };
            total = total.saturating_mul(f);
        }
        total
    }

    fn advance(&mut self) -> bool {
        let m = self.current.len();
        match self.mode {
            CandidateMode::Full => {
                for pos in (0..m).rev() {
                    if self.current[pos] + 1 < self.n {
                        self.current[pos] += 1;
                        return true;
                    }
                    self.current[pos] = 0;
                }
                false
            }
            CandidateMode::Distinct => {
                for pos in (0..m).rev() {
                    self.used[self.current[pos]] = false;
                    let next = (self.current[pos] + 1..self.n).find(|&v| !self.used[v]);
                    if let Some(v) = next {
                        self.current[pos] = v;
                        self.used[v] = true;
                        // Refill the tail with the smallest free indices.
                        let mut free = (0..self.n).filter(|&v| !self.used[v]);
                        let tail: Vec<usize> = (pos + 1..m).map(|_| free.next().unwrap()).collect();
                        for (p, v) in (pos + 1..m).zip(tail) {
                            self.current[p] = v;
                            self.used[v] = true;
                        }
                        return true;
                    }
                }
                false
            }
        }
    }

    /// Advances and returns the next tuple without allocating.
    pub fn next_ref(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(&self.current)
    }
}

impl Iterator for Assignments {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        self.next_ref().map(<[usize]>::to_vec)
    }
}

/// The set of candidate targets for a sampling matrix and responses.
#[derive(Clone, Debug)]
pub struct CandidateTargets<'a, T: Real> {
    columns: Vec<usize>,
    y: &'a [T],
    mode: CandidateMode,
}

impl<'a, T: Real> CandidateTargets<'a, T> {
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn mode(&self) -> CandidateMode {
        self.mode
    }

    pub fn len(&self) -> u128 {
        Assignments::count(self.y.len(), self.columns.len(), self.mode)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn assignments(&self) -> Assignments {
        Assignments::new(self.y.len(), self.columns.len(), self.mode)
    }

    /// The target vector for an index tuple.
    pub fn target(&self, assignment: &[usize]) -> DVector<T> {
        let mut b = DVector::zeros(self.y.len());
        for (&c, &i) in self.columns.iter().zip(assignment) {
            b[c] = self.y[i];
        }
        b
    }

    /// All targets as vectors, in enumeration order.
    pub fn iter(&self) -> impl Iterator<Item = DVector<T>> + '_ {
        self.assignments().map(move |a| self.target(&a))
    }
}

/// Candidates in [`CandidateMode::Full`], the set the approximation scheme is
/// stated with.
pub fn candidate_targets<'a, T: Real>(s: &SamplingMatrix<T>, y: &'a [T]) -> CandidateTargets<'a, T> {
    candidate_targets_with(s, y, CandidateMode::Full)
}

pub fn candidate_targets_with<'a, T: Real>(
    s: &SamplingMatrix<T>,
    y: &'a [T],
    mode: CandidateMode,
) -> CandidateTargets<'a, T> {
    assert_eq!(s.n(), y.len(), "sampling matrix and responses differ in length");
    CandidateTargets {
        columns: s.nonzero_columns(),
        y,
        mode,
    }
}
