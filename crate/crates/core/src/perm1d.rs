//! One-dimensional permutation least squares.
//!
//! `min over Pi of ||a - Pi^T b||^2` is attained by pairing the `i`-th
//! smallest entry of `a` with the `i`-th smallest entry of `b`, so a sort of
//! each side solves it. The optimal value divided by `n` is the squared
//! Wasserstein-2 distance between the two empirical measures.

use std::cmp::Ordering;

use num_traits::Num;
use thiserror::Error;

use crate::model::Permutation;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Perm1dError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
}

/// An optimal pairing and its cost.
///
/// `perm` maps an index of `b` to an index of `a`: entry `b_i` is paired with
/// `a_{perm(i)}`. With `a = X w` and `b = y` this is exactly the convention
/// of [`crate::model::Instance::cost`].
#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult<T> {
    pub perm: Permutation,
    pub cost: T,
}

fn total<T: PartialOrd>(x: &T, y: &T) -> Ordering {
    x.partial_cmp(y).unwrap_or(Ordering::Equal)
}

/// Indices of `v` in increasing order of value, ties by index.
pub fn argsort<T: PartialOrd>(v: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| total(&v[i], &v[j]).then(i.cmp(&j)));
    idx
}

fn check<T>(a: &[T], b: &[T]) -> Result<(), Perm1dError> {
    if a.len() != b.len() {
        return Err(Perm1dError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Perm1dError::Empty);
    }
    Ok(())
}

fn sq<T: Num + Clone>(x: T) -> T {
    x.clone() * x
}

/// Optimal pairing of `b` with `a` by sorting.
pub fn sort_match<T>(a: &[T], b: &[T]) -> Result<MatchResult<T>, Perm1dError>
where
    T: Num + PartialOrd + Clone,
{
    check(a, b)?;
    let (ia, ib) = (argsort(a), argsort(b));
    let mut map = vec![0; a.len()];
    let mut cost = T::zero();
    for (&i, &j) in ia.iter().zip(&ib) {
        map[j] = i;
        cost = cost + sq(a[i].clone() - b[j].clone());
    }
    let perm = Permutation::new(map).expect("sorted pairing is a bijection");
    Ok(MatchResult { perm, cost })
}

/// `(1/n) sum_i (a_(i) - b_(i))^2`.
pub fn wasserstein2_sq(a: &[f64], b: &[f64]) -> Result<f64, Perm1dError> {
    let m = sort_match(a, b)?;
    Ok(m.cost / a.len() as f64)
}

/// A right-hand side sorted once and matched against many left-hand sides.
#[derive(Clone, Debug)]
pub struct SortedTarget<T> {
    sorted: Vec<T>,
}

impl<T: Num + PartialOrd + Copy> SortedTarget<T> {
    pub fn new(b: &[T]) -> Self {
        let mut sorted = b.to_vec();
        sorted.sort_by(total);
        Self { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Optimal matching cost against `a`; `a` is sorted in place.
    pub fn cost(&self, a: &mut [T]) -> T {
        a.sort_unstable_by(total);
        a.iter()
            .zip(&self.sorted)
            .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
    }

    /// Like [`cost`](Self::cost), but gives up with `None` as soon as the
    /// partial sum exceeds `bound`. A returned value is bit-identical to the
    /// one `cost` would give.
    pub fn cost_below(&self, a: &mut [T], bound: T) -> Option<T> {
        a.sort_unstable_by(total);
        let mut acc = T::zero();
        for (&x, &y) in a.iter().zip(&self.sorted) {
            acc = acc + (x - y) * (x - y);
            if acc > bound {
                return None;
            }
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    #[test]
    fn exact_permutation_costs_nothing() {
        let m = sort_match(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(m.cost, 0.0);
        assert_eq!(m.perm.as_slice(), &[2, 0, 1]);
    }

    #[test]
    fn two_point_example() {
        let m = sort_match(&[0.0, 1.0], &[10.0, 0.0]).unwrap();
        assert_eq!(m.cost, 81.0);
        assert_eq!(m.perm.as_slice(), &[1, 0]);
        assert_eq!(wasserstein2_sq(&[0.0, 1.0], &[10.0, 0.0]).unwrap(), 40.5);
    }

    #[test]
    fn equal_inputs_identity() {
        let a = [0.3, -1.0, 2.5, 0.3];
        let m = sort_match(&a, &a).unwrap();
        assert_eq!(m.cost, 0.0);
        assert_eq!(m.perm, Permutation::identity(4));
    }

    #[test]
    fn pure_shift() {
        let a = [1.5; 5];
        let b = [4.0; 5];
        assert_eq!(wasserstein2_sq(&a, &b).unwrap(), 6.25);
    }

    #[test]
    fn errors() {
        assert_eq!(sort_match(&[1.0], &[1.0, 2.0]).unwrap_err(), Perm1dError::LengthMismatch(1, 2));
        assert_eq!(sort_match::<f64>(&[], &[]).unwrap_err(), Perm1dError::Empty);
    }

    #[test]
    fn rationals() {
        let q = |n: i64| BigRational::from_integer(n.into());
        let m = sort_match(&[q(0), q(1)], &[q(10), q(0)]).unwrap();
        assert_eq!(m.cost, q(81));
    }

    #[test]
    fn early_exit_agrees() {
        let t = SortedTarget::new(&[3.0, -1.0, 0.5]);
        let mut a = [0.0, 1.0, 2.0];
        let full = t.cost(&mut a.clone());
        assert_eq!(t.cost_below(&mut a, full), Some(full));
        assert_eq!(t.cost_below(&mut a, full * 0.5), None);
    }

    fn vecs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..12).prop_flat_map(|n| {
            (
                proptest::collection::vec(-100.0f64..100.0, n),
                proptest::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn reported_cost_matches_perm((a, b) in vecs()) {
            let m = sort_match(&a, &b).unwrap();
            let direct: f64 = (0..a.len()).map(|i| (a[m.perm.apply(i)] - b[i]).powi(2)).sum();
            prop_assert!((direct - m.cost).abs() <= 1e-9 * (1.0 + m.cost));
        }

        #[test]
        fn invariant_under_relabeling((a, b) in vecs(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(seed);
            let (mut a2, mut b2) = (a.clone(), b.clone());
            a2.shuffle(&mut rng);
            b2.shuffle(&mut rng);
            let (c1, c2) = (sort_match(&a, &b).unwrap().cost, sort_match(&a2, &b2).unwrap().cost);
            prop_assert!((c1 - c2).abs() <= 1e-9 * (1.0 + c1));
        }

        #[test]
        fn monotone_alignment((a, b) in vecs()) {
            let m = sort_match(&a, &b).unwrap();
            for i in 0..b.len() {
                for j in 0..b.len() {
                    if b[i] < b[j] {
                        prop_assert!(a[m.perm.apply(i)] <= a[m.perm.apply(j)]);
                    }
                }
            }
        }

        #[test]
        fn shift_gives_square(a in proptest::collection::vec(-10.0f64..10.0, 1..10), t in -5.0f64..5.0) {
            let b: Vec<f64> = a.iter().map(|v| v + t).collect();
            let w = wasserstein2_sq(&a, &b).unwrap();
            prop_assert!((w - t * t).abs() < 1e-9);
        }
    }
}
