//! 3-Partition to Permuted Linear System reduction, with exhaustive checkers
//! for both sides at small sizes.
//!
//! A PLS instance `(A, b)` asks whether some reordering of `b` lies in the
//! column space of `A`.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::exact::{dot, ExactMatrix};
use crate::model::{Instance, Permutation};

pub const PARTITION_CAP: usize = 4;
pub const PLS_CAP: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HardnessError {
    #[error("invalid 3-partition instance: constraint {constraint} violated ({detail})")]
    Constraint { constraint: &'static str, detail: String },
    #[error("refusing to enumerate: size {size} exceeds the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreePartitionInstance {
    z: Vec<i64>,
    k: usize,
    c: i64,
}

impl ThreePartitionInstance {
    pub fn new(z: Vec<i64>, k: usize, c: i64) -> Result<Self, HardnessError> {
        if k == 0 {
            return Err(HardnessError::Constraint {
                constraint: "k >= 1",
                detail: "k = 0".into(),
            });
        }
        if z.len() != 3 * k {
            return Err(HardnessError::Constraint {
                constraint: "len(z) = 3k",
                detail: format!("len(z) = {}, k = {k}", z.len()),
            });
        }
        let sum: i128 = z.iter().map(|&v| v as i128).sum();
        if sum != c as i128 * k as i128 {
            return Err(HardnessError::Constraint {
                constraint: "sum(z) = C k",
                detail: format!("sum(z) = {sum}, C k = {}", c as i128 * k as i128),
            });
        }
        // C/4 < z_i < C/2  <=>  C < 4 z_i  and  2 z_i < C
        if let Some((i, &v)) = z
            .iter()
            .enumerate()
            .find(|&(_, &v)| !((c as i128) < 4 * v as i128 && 2 * (v as i128) < c as i128))
        {
            return Err(HardnessError::Constraint {
                constraint: "C/4 < z_i < C/2",
                detail: format!("z_{} = {v}, C = {c}", i + 1),
            });
        }
        Ok(Self { z, k, c })
    }

    /// Infers `k = len(z) / 3` and `C = sum(z) / k`.
    pub fn from_values(z: Vec<i64>) -> Result<Self, HardnessError> {
        if z.is_empty() || !z.len().is_multiple_of(3) {
            return Err(HardnessError::Constraint {
                constraint: "len(z) = 3k",
                detail: format!("len(z) = {}", z.len()),
            });
        }
        let k = z.len() / 3;
        let sum: i64 = z.iter().sum();
        if sum % k as i64 != 0 {
            return Err(HardnessError::Constraint {
                constraint: "sum(z) = C k",
                detail: format!("sum(z) = {sum} is not divisible by k = {k}"),
            });
        }
        Self::new(z, k, sum / k as i64)
    }

    pub fn z(&self) -> &[i64] {
        &self.z
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn c(&self) -> i64 {
        self.c
    }
}

/// `A x = b_pi` with integer data; `n = 4k`, `d = 3k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlsInstance {
    a: Vec<Vec<i64>>,
    b: Vec<i64>,
}

impl PlsInstance {
    pub fn new(a: Vec<Vec<i64>>, b: Vec<i64>) -> Result<Self, HardnessError> {
        if a.len() != b.len() || a.is_empty() {
            return Err(HardnessError::Argument(format!("A has {} rows, b has {}", a.len(), b.len())));
        }
        let d = a[0].len();
        if a.iter().any(|r| r.len() != d) {
            return Err(HardnessError::Argument("ragged matrix".into()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &[Vec<i64>] {
        &self.a
    }

    pub fn b(&self) -> &[i64] {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn d(&self) -> usize {
        self.a[0].len()
    }

    pub fn to_instance(&self) -> Instance<f64> {
        let (n, d) = (self.n(), self.d());
        let x = DMatrix::from_fn(n, d, |i, j| self.a[i][j] as f64);
        let y = DVector::from_iterator(n, self.b.iter().map(|&v| v as f64));
        Instance::new(x, y).expect("shapes checked at construction")
    }

    fn exact_a(&self) -> ExactMatrix<BigRational> {
        ExactMatrix::from_fn(self.n(), self.d(), |i, j| BigRational::from_integer(self.a[i][j].into()))
    }
}

pub fn reduce_3partition(tp: &ThreePartitionInstance) -> PlsInstance {
    let (k, d) = (tp.k, 3 * tp.k);
    let mut a = Vec::with_capacity(4 * k);
    for i in 0..d {
        let mut row = vec![0; d];
        row[i] = 1;
        a.push(row);
    }
    for j in 0..k {
        let mut row = vec![0; d];
        row[3 * j..3 * j + 3].fill(1);
        a.push(row);
    }
    let mut b = tp.z.clone();
    b.extend(std::iter::repeat_n(tp.c, k));
    PlsInstance { a, b }
}

/// Whether `z` splits into `k` triples each summing to `C`.
pub fn check_3partition_brute(tp: &ThreePartitionInstance) -> Result<bool, HardnessError> {
    if tp.k > PARTITION_CAP {
        return Err(HardnessError::TooLarge {
            size: tp.k,
            cap: PARTITION_CAP,
        });
    }
    let mut used = vec![false; tp.z.len()];
    Ok(split(&tp.z, tp.c, &mut used))
}

fn split(z: &[i64], c: i64, used: &mut [bool]) -> bool {
    // The smallest unused index must belong to some triple.
    let Some(i) = used.iter().position(|u| !u) else {
        return true;
    };
    used[i] = true;
    for j in i + 1..z.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        for l in j + 1..z.len() {
            if !used[l] && z[i] + z[j] + z[l] == c {
                used[l] = true;
                if split(z, c, used) {
                    return true;
                }
                used[l] = false;
            }
        }
        used[j] = false;
    }
    used[i] = false;
    false
}

/// Whether some reordering of `b` lies exactly in the column space of `A`.
pub fn pls_feasible_brute(pls: &PlsInstance) -> Result<bool, HardnessError> {
    Ok(pls_solution_brute(pls)?.is_some())
}

/// A permutation making the system consistent, first in lexicographic order.
pub fn pls_solution_brute(pls: &PlsInstance) -> Result<Option<Permutation>, HardnessError> {
    let n = pls.n();
    if n > PLS_CAP {
        return Err(HardnessError::TooLarge { size: n, cap: PLS_CAP });
    }
    // b' is in col(A) iff it is orthogonal to every left null vector.
    let null = pls.exact_a().left_null_space();
    let b: Vec<BigRational> = pls.b.iter().map(|&v| BigRational::from_integer(v.into())).collect();
    let mut perm = Permutation::identity(n);
    loop {
        let aligned = perm.align(&b);
        if null.iter().all(|v| dot(v, &aligned).is_zero()) {
            return Ok(Some(perm));
        }
        if !perm.next_lexicographic() {
            return Ok(None);
        }
    }
}

/// A random yes-instance: `k` triples each summing to `c`, shuffled.
/// Needs `c >= 12` so that the open interval `(C/4, C/2)` admits a triple.
pub fn plant_yes_instance<R: Rng>(k: usize, c: i64, rng: &mut R) -> Result<ThreePartitionInstance, HardnessError> {
    if k == 0 || c < 12 {
        return Err(HardnessError::Argument(format!("need k >= 1 and C >= 12, got k={k}, C={c}")));
    }
    let lo = c / 4 + 1;
    let hi = (c - 1) / 2;
    let mut z = Vec::with_capacity(3 * k);
    for _ in 0..k {
        loop {
            let a = rng.random_range(lo..=hi);
            let b = rng.random_range(lo..=hi);
            let t = c - a - b;
            if (lo..=hi).contains(&t) {
                z.extend([a, b, t]);
                break;
            }
        }
    }
    z.shuffle(rng);
    ThreePartitionInstance::new(z, k, c)
}
