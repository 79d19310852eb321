//! Random instance generation.
//!
//! Randomness comes from xoshiro256++ seeded with `seed_from_u64(seed)`.
//! Each field has its own stream, obtained by applying `jump()` (2^128 steps)
//! [`Stream`]-index many times, so covariates, the permutation and the noise
//! can each be reproduced independently of the others. Normal variates use
//! the Ziggurat sampler of `rand_distr::StandardNormal`; uniform covariates
//! are `u - 1/2` with `u` the standard 53-bit uniform on `[0, 1)`.
//! Permutations are drawn by Fisher-Yates.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use super::{AnchoredInstance, GroundTruth, Instance, ModelError, Permutation};
use crate::scalar::{lit, Real};

/// Independent random streams derived from one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Covariates = 0,
    Permutation = 1,
    Noise = 2,
    Weights = 3,
    Experiment = 4,
}

pub fn stream(seed: u64, which: Stream) -> Xoshiro256PlusPlus {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..which as usize {
        rng.jump();
    }
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovariateLaw {
    /// i.i.d. N(0, 1) entries.
    Gaussian,
    /// i.i.d. uniform entries on [-1/2, 1/2].
    Uniform,
}

impl CovariateLaw {
    fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian => rng.sample(StandardNormal),
            Self::Uniform => rng.random::<f64>() - 0.5,
        }
    }
}

/// How the hidden permutation is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PermutationLaw {
    Uniform,
    Identity,
    Fixed(Permutation),
}

impl PermutationLaw {
    fn draw<R: Rng>(&self, m: usize, rng: &mut R) -> Result<Permutation, ModelError> {
        match self {
            Self::Uniform => {
                let mut map: Vec<usize> = (0..m).collect();
                map.shuffle(rng);
                Permutation::new(map)
            }
            Self::Identity => Ok(Permutation::identity(m)),
            Self::Fixed(p) if p.len() == m => Ok(p.clone()),
            Self::Fixed(p) => Err(ModelError::Argument(format!(
                "fixed permutation has length {}, expected {m}",
                p.len()
            ))),
        }
    }
}

/// Uniformly random direction on the unit sphere in `R^d`.
pub fn random_unit_vector<T: Real, R: Rng>(d: usize, rng: &mut R) -> DVector<T> {
    loop {
        let v = DVector::from_fn(d, |_, _| lit::<T>(rng.sample(StandardNormal)));
        let norm = v.norm();
        if norm > T::zero() {
            return v / norm;
        }
    }
}

fn check_dims<T: Real>(n: usize, d: usize, w_bar: &DVector<T>, sigma: T) -> Result<(), ModelError> {
    if n == 0 || d == 0 {
        return Err(ModelError::Argument(format!("need n >= 1 and d >= 1, got n={n}, d={d}")));
    }
    if w_bar.len() != d {
        return Err(ModelError::Argument(format!(
            "w_bar has length {}, expected d={d}",
            w_bar.len()
        )));
    }
    if !(sigma >= T::zero()) || !sigma.is_finite() {
        return Err(ModelError::Argument("sigma must be finite and >= 0".into()));
    }
    Ok(())
}

fn sample_covariates<T: Real>(rows: usize, d: usize, law: CovariateLaw, seed: u64) -> DMatrix<T> {
    let mut rng = stream(seed, Stream::Covariates);
    // Row-major draw order, so row i depends only on the first (i+1)*d draws.
    let mut m = DMatrix::zeros(rows, d);
    for i in 0..rows {
        for j in 0..d {
            m[(i, j)] = lit(law.sample(&mut rng));
        }
    }
    m
}

/// `y_i = w^T x_{pi(i)} + eps_i` with covariates from `law` and
/// `eps_i ~ N(0, sigma^2)`.
pub fn gen_with_law<T: Real>(
    n: usize,
    d: usize,
    w_bar: &DVector<T>,
    sigma: T,
    covariates: CovariateLaw,
    perm_law: &PermutationLaw,
    seed: u64,
) -> Result<(Instance<T>, GroundTruth<T>), ModelError> {
    check_dims(n, d, w_bar, sigma)?;
    let x: DMatrix<T> = sample_covariates(n, d, covariates, seed);
    let pi_bar = perm_law.draw(n, &mut stream(seed, Stream::Permutation))?;
    let mut noise = stream(seed, Stream::Noise);
    let y = DVector::from_fn(n, |i, _| {
        let clean = x.row(pi_bar.apply(i)).transpose().dot(w_bar);
        let eps: f64 = noise.sample(StandardNormal);
        if sigma > T::zero() {
            clean + sigma * lit::<T>(eps)
        } else {
            clean
        }
    });
    let inst = Instance::new(x, y)?;
    Ok((inst, GroundTruth::new(w_bar.clone(), pi_bar, sigma)))
}

/// Gaussian covariates, uniformly random permutation, Gaussian noise.
pub fn gen_gaussian_noisy<T: Real>(
    n: usize,
    d: usize,
    w_bar: &DVector<T>,
    sigma: T,
    seed: u64,
) -> Result<(Instance<T>, GroundTruth<T>), ModelError> {
    gen_with_law(n, d, w_bar, sigma, CovariateLaw::Gaussian, &PermutationLaw::Uniform, seed)
}

/// Uniform covariates on `[-1/2, 1/2]^d`, uniformly random permutation,
/// Gaussian noise.
pub fn gen_uniform_noisy<T: Real>(
    n: usize,
    d: usize,
    w_bar: &DVector<T>,
    sigma: T,
    seed: u64,
) -> Result<(Instance<T>, GroundTruth<T>), ModelError> {
    gen_with_law(n, d, w_bar, sigma, CovariateLaw::Uniform, &PermutationLaw::Uniform, seed)
}

/// Noiseless model with `n + 1` Gaussian measurements.
///
/// The returned permutation acts on `{0..n}`. With `anchored` it fixes 0 and
/// is uniform on the rest; otherwise it is uniform on all of `{0..n}` and
/// `pi_bar(0)` tells which covariate the anchor response was measured on.
pub fn gen_noiseless_anchored<T: Real>(
    n: usize,
    d: usize,
    w_bar: &DVector<T>,
    anchored: bool,
    seed: u64,
) -> Result<(AnchoredInstance<T>, GroundTruth<T>), ModelError> {
    check_dims(n, d, w_bar, T::zero())?;
    if n < d {
        return Err(ModelError::Argument(format!("noiseless model needs n >= d, got n={n}, d={d}")));
    }
    let cov: DMatrix<T> = sample_covariates(n + 1, d, CovariateLaw::Gaussian, seed);
    let mut rng = stream(seed, Stream::Permutation);
    let pi_bar = if anchored {
        let mut rest: Vec<usize> = (1..=n).collect();
        rest.shuffle(&mut rng);
        let mut map = vec![0];
        map.extend(rest);
        Permutation::new(map)?
    } else {
        PermutationLaw::Uniform.draw(n + 1, &mut rng)?
    };
    let resp = |i: usize| cov.row(pi_bar.apply(i)).transpose().dot(w_bar);
    let x0 = cov.row(0).transpose();
    let x = cov.rows(1, n).into_owned();
    let y = DVector::from_fn(n, |i, _| resp(i + 1));
    let inst = AnchoredInstance::new(x0, x, resp(0), y)?;
    Ok((inst, GroundTruth::new(w_bar.clone(), pi_bar, T::zero())))
}
