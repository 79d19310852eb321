//! Monte-Carlo harness: SNR sweeps, the uniform order-statistic identity and
//! the sorted-projection distance scaling.

use std::time::Instant;

use nalgebra::DVector;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use thiserror::Error;

use crate::approx::{fptas_solve_with, ApproxError, FptasConfig};
use crate::lattice::{recover, LatticeError, RecoveryConfig};
use crate::model::{
    gen_noiseless_anchored, gen_with_law, noiseless_exact, random_unit_vector, stream, CovariateLaw, GroundTruth,
    Instance, ModelError, PermutationLaw, QuantizationConfig, Stream,
};
use crate::oracle::{brute_force, ols_given_perm, OracleError};
use crate::perm1d::SortedTarget;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cell {cell}: {detail}")]
    Cap { cell: String, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Gaussian,
    Uniform,
    /// Gaussian covariates, `n + 1` noiseless measurements.
    Noiseless,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Fptas,
    Brute,
    Lattice,
    /// Least squares with the true permutation.
    KnownPerm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub n: usize,
    pub d: usize,
    pub snr_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverKind,
    pub eps: f64,
    pub delta: f64,
    pub p: u32,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(model: ModelKind, solver: SolverKind, n: usize, d: usize, snr_grid: Vec<f64>) -> Self {
        Self {
            model,
            n,
            d,
            snr_grid,
            trials: 20,
            seed: 0,
            solver,
            eps: 0.5,
            delta: 0.1,
            p: 16,
            jobs: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.n == 0 || self.d == 0 {
            return bad(format!("need n, d >= 1, got n={}, d={}", self.n, self.d));
        }
        if self.snr_grid.is_empty() {
            return bad("the snr grid is empty".into());
        }
        if let Some(s) = self.snr_grid.iter().find(|s| !(**s > 0.0)) {
            return bad(format!("snr values must be > 0, got {s}"));
        }
        if self.solver == SolverKind::Lattice && self.model != ModelKind::Noiseless {
            return bad("the lattice solver requires the noiseless model".into());
        }
        if self.model == ModelKind::Noiseless && self.n < self.d {
            return bad(format!("the noiseless model needs n >= d, got n={}, d={}", self.n, self.d));
        }
        if self.solver == SolverKind::Fptas && !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.p == 0 {
            return bad("p must be >= 1".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be >= 1".into());
        }
        Ok(())
    }

    fn rows(&self) -> usize {
        match self.model {
            ModelKind::Noiseless => self.n + 1,
            _ => self.n,
        }
    }

    fn check_caps(&self) -> Result<(), ExperimentError> {
        if self.solver == SolverKind::Brute && self.rows() > crate::oracle::DEFAULT_PERMUTATION_CAP {
            let cells: Vec<String> = self.snr_grid.iter().map(|s| self.cell(*s)).collect();
            return Err(ExperimentError::Cap {
                cell: cells.join(", "),
                detail: format!(
                    "{} measurements exceed the brute-force cap of {}",
                    self.rows(),
                    crate::oracle::DEFAULT_PERMUTATION_CAP
                ),
            });
        }
        Ok(())
    }

    fn cell(&self, snr: f64) -> String {
        format!("(snr={snr}, n={}, d={})", self.n, self.d)
    }
}

/// Aggregate over the trials of one grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub snr: f64,
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    /// Mean of `||w_hat - w_bar||_2`.
    pub mean_error: f64,
    /// Sample standard deviation of the same.
    pub std_error: f64,
    /// Fraction of trials whose permutation equals the true one.
    pub success_rate: f64,
    /// Mean error of least squares under the true permutation.
    pub baseline_error: f64,
    pub wall_time: Option<f64>,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of grid cell `cell`.
pub fn trial_seed(seed: u64, cell: u64, trial: u64) -> u64 {
    mix(mix(mix(seed) ^ cell) ^ trial)
}

struct Trial {
    error: f64,
    success: bool,
    baseline: f64,
}

fn distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm()
}

fn baseline(inst: &Instance<f64>, truth: &GroundTruth<f64>) -> Result<f64, ExperimentError> {
    let ols = ols_given_perm(inst.x(), inst.y(), &truth.pi_bar)?;
    Ok(distance(&ols.w, &truth.w_bar))
}

fn run_trial(cfg: &ExperimentConfig, snr: f64, seed: u64) -> Result<Trial, ExperimentError> {
    let w_bar: DVector<f64> = random_unit_vector(cfg.d, &mut stream(seed, Stream::Weights));
    if cfg.model == ModelKind::Noiseless {
        let (anchored, truth) = gen_noiseless_anchored(cfg.n, cfg.d, &w_bar, false, seed)?;
        let inst = anchored.to_instance();
        if cfg.solver == SolverKind::Lattice {
            let qcfg = QuantizationConfig::new(cfg.p)?;
            let (exact, w_q) = noiseless_exact(&anchored, &truth, qcfg)?;
            let rcfg = RecoveryConfig {
                delta: cfg.delta,
                ..RecoveryConfig::default()
            };
            let out = recover(&exact, &rcfg)?;
            // A declared failure estimates w = 0.
            let (w_hat, success) = match out.result() {
                Some(r) => {
                    let w = DVector::from_iterator(cfg.d, r.w.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)));
                    (w, r.perm == truth.pi_bar && r.w == w_q)
                }
                None => (DVector::zeros(cfg.d), false),
            };
            return Ok(Trial {
                error: distance(&w_hat, &w_bar),
                success,
                baseline: baseline(&inst, &truth)?,
            });
        }
        return solve_plain(cfg, &inst, &truth);
    }
    let sigma = 1.0 / snr.sqrt();
    let law = match cfg.model {
        ModelKind::Uniform => CovariateLaw::Uniform,
        _ => CovariateLaw::Gaussian,
    };
    let (inst, truth) = gen_with_law(cfg.n, cfg.d, &w_bar, sigma, law, &PermutationLaw::Uniform, seed)?;
    solve_plain(cfg, &inst, &truth)
}

fn solve_plain(cfg: &ExperimentConfig, inst: &Instance<f64>, truth: &GroundTruth<f64>) -> Result<Trial, ExperimentError> {
    let base = baseline(inst, truth)?;
    let (w, perm) = match cfg.solver {
        SolverKind::Brute => {
            let s = brute_force(inst)?;
            (s.w, s.perm)
        }
        SolverKind::Fptas => {
            let (s, _) = fptas_solve_with(inst, &FptasConfig::new(cfg.eps))?;
            (s.w, s.perm)
        }
        SolverKind::KnownPerm => {
            return Ok(Trial {
                error: base,
                success: true,
                baseline: base,
            })
        }
        SolverKind::Lattice => unreachable!("rejected by validation"),
    };
    Ok(Trial {
        error: distance(&w, &truth.w_bar),
        success: perm == truth.pi_bar,
        baseline: base,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn with_pool<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, ExperimentError> {
    match jobs {
        None => Ok(f()),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| ExperimentError::Config(format!("thread pool: {e}"))),
    }
}

/// One row per grid value, in grid order. Deterministic given the seed,
/// independent of the thread count.
pub fn sweep_snr(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    cfg.validate()?;
    cfg.check_caps()?;
    with_pool(cfg.jobs, || {
        cfg.snr_grid
            .iter()
            .enumerate()
            .map(|(ci, &snr)| {
                let start = Instant::now();
                let trials: Vec<Trial> = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| run_trial(cfg, snr, trial_seed(cfg.seed, ci as u64, t as u64)))
                    .collect::<Result<_, _>>()
                    .map_err(|e| match e {
                        ExperimentError::Approx(a @ ApproxError::Budget { .. }) => ExperimentError::Cap {
                            cell: cfg.cell(snr),
                            detail: a.to_string(),
                        },
                        e => e,
                    })?;
                let errors: Vec<f64> = trials.iter().map(|t| t.error).collect();
                let (mean_error, std_error) = mean_std(&errors);
                let base: Vec<f64> = trials.iter().map(|t| t.baseline).collect();
                Ok(SweepRow {
                    snr,
                    n: cfg.n,
                    d: cfg.d,
                    trials: cfg.trials,
                    mean_error,
                    std_error,
                    success_rate: trials.iter().filter(|t| t.success).count() as f64 / cfg.trials as f64,
                    baseline_error: mean_std(&base).0,
                    wall_time: cfg.timing.then(|| start.elapsed().as_secs_f64()),
                })
            })
            .collect()
    })?
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderStatsReport {
    pub n: usize,
    pub trials: usize,
    /// Empirical mean of `sum_i (U_(i) + U_(n+1-i))^2`.
    pub mean_sum: f64,
    pub closed_form: f64,
    pub relative_error: f64,
    /// Empirical `E[U_(r)]`, `r = 1..n`.
    pub order_means: Vec<f64>,
    /// `r / (n + 1) - 1/2`.
    pub order_expected: Vec<f64>,
}

/// `E sum_i (U_(i) + U_(n+1-i))^2` for `n` uniforms on `[-1/2, 1/2]`.
pub fn order_stats_closed_form(n: usize) -> f64 {
    let nf = n as f64;
    if n.is_multiple_of(2) {
        0.5 * (1.0 - 1.0 / (nf + 1.0))
    } else {
        0.5 * (1.0 - 1.0 / (nf + 2.0))
    }
}

pub fn check_order_stats(n: usize, trials: usize, seed: u64) -> Result<OrderStatsReport, ExperimentError> {
    use rand::Rng;
    if n < 2 || trials == 0 {
        return Err(ExperimentError::Config(format!("need n >= 2 and trials >= 1, got n={n}, trials={trials}")));
    }
    let mut rng = stream(seed, Stream::Experiment);
    let mut u = vec![0.0f64; n];
    let mut sum = 0.0;
    let mut order = vec![0.0; n];
    for _ in 0..trials {
        for v in u.iter_mut() {
            *v = rng.random::<f64>() - 0.5;
        }
        u.sort_unstable_by(f64::total_cmp);
        sum += (0..n).map(|i| (u[i] + u[n - 1 - i]).powi(2)).sum::<f64>();
        for (o, v) in order.iter_mut().zip(&u) {
            *o += v;
        }
    }
    let mean_sum = sum / trials as f64;
    let closed_form = order_stats_closed_form(n);
    Ok(OrderStatsReport {
        n,
        trials,
        mean_sum,
        closed_form,
        relative_error: (mean_sum - closed_form).abs() / closed_form,
        order_means: order.iter().map(|o| o / trials as f64).collect(),
        order_expected: (1..=n).map(|r| r as f64 / (n as f64 + 1.0) - 0.5).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct W2Row {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    /// Mean of `||sort(X u) - sort(X u')||^2`.
    pub mean: f64,
    pub mean_over_n: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct W2Report {
    pub rows: Vec<W2Row>,
    /// `mean / n` is non-increasing along the grid.
    pub monotone: bool,
    /// First over last `mean / n`.
    pub shrink: f64,
}

/// Sorted-projection distance between two random unit directions of one
/// Gaussian design, averaged over trials.
pub fn check_w2(ns: &[usize], d: usize, trials: usize, seed: u64, jobs: Option<usize>) -> Result<W2Report, ExperimentError> {
    if ns.is_empty() || trials == 0 || d == 0 {
        return Err(ExperimentError::Config("need a non-empty n grid, d >= 1 and trials >= 1".into()));
    }
    if let Some(n) = ns.iter().find(|&&n| n < 3) {
        return Err(ExperimentError::Config(format!("each n must be >= 3, got {n}")));
    }
    let rows = with_pool(jobs, || {
        ns.iter()
            .enumerate()
            .map(|(ci, &n)| {
                let vals: Vec<f64> = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let s = trial_seed(seed, ci as u64, t as u64);
                        let mut rng = stream(s, Stream::Weights);
                        let u: DVector<f64> = random_unit_vector(d, &mut rng);
                        let v: DVector<f64> = random_unit_vector(d, &mut rng);
                        let (inst, _) =
                            gen_with_law(n, d, &u, 0.0, CovariateLaw::Gaussian, &PermutationLaw::Identity, s)?;
                        let xv = inst.x() * v;
                        let target = SortedTarget::new(inst.y().as_slice());
                        Ok(target.cost(&mut xv.as_slice().to_vec()))
                    })
                    .collect::<Result<_, ExperimentError>>()?;
                let mean = vals.iter().sum::<f64>() / trials as f64;
                Ok(W2Row {
                    n,
                    d,
                    trials,
                    mean,
                    mean_over_n: mean / n as f64,
                })
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })??;
    let monotone = rows.windows(2).all(|w| w[1].mean_over_n <= w[0].mean_over_n);
    let shrink = rows[0].mean_over_n / rows[rows.len() - 1].mean_over_n;
    Ok(W2Report { rows, monotone, shrink })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Via order-statistic covariances of n uniforms:
    /// `Cov(U_(r), U_(s)) = r (n + 1 - s) / ((n + 1)^2 (n + 2))`, `r <= s`.
    fn covariance_form(n: usize) -> f64 {
        let m = (n + 1) as f64;
        let cov = |r: usize, s: usize| {
            let (r, s) = (r.min(s) as f64, r.max(s) as f64);
            r * (m - s) / (m * m * (m + 1.0))
        };
        (1..=n)
            .map(|i| {
                let j = n + 1 - i;
                cov(i, i) + cov(j, j) + 2.0 * cov(i, j)
            })
            .sum()
    }

    #[test]
    fn closed_form_matches_covariances() {
        for n in 2..30 {
            assert!((order_stats_closed_form(n) - covariance_form(n)).abs() < 1e-14, "n={n}");
        }
        assert!((order_stats_closed_form(10) - 5.0 / 11.0).abs() < 1e-15);
        assert!((order_stats_closed_form(3) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn order_stats_small_run() {
        let r = check_order_stats(2, 100_000, 3).unwrap();
        assert!((r.order_means[0] + 1.0 / 6.0).abs() < 0.005, "{:?}", r.order_means);
        assert!(r.relative_error < 0.03);
        assert!(check_order_stats(1, 10, 0).is_err());
    }

    #[test]
    fn trial_seeds_distinct() {
        let mut s: Vec<u64> = (0..4).flat_map(|c| (0..50).map(move |t| trial_seed(7, c, t))).collect();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 200);
        assert_ne!(trial_seed(1, 0, 0), trial_seed(2, 0, 0));
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::new(ModelKind::Gaussian, SolverKind::Lattice, 3, 2, vec![1.0]);
        assert!(c.validate().is_err());
        c.solver = SolverKind::Brute;
        c.snr_grid = vec![0.0];
        assert!(c.validate().is_err());
        c.snr_grid = vec![1.0];
        c.trials = 0;
        assert!(c.validate().is_err());
        c.trials = 1;
        c.n = 9;
        assert!(matches!(sweep_snr(&c), Err(ExperimentError::Cap { .. })));
    }

    #[test]
    fn sweep_deterministic_across_jobs() {
        let mut c = ExperimentConfig::new(ModelKind::Gaussian, SolverKind::Fptas, 5, 1, vec![1.0, 10.0]);
        c.trials = 6;
        c.seed = 11;
        let a = sweep_snr(&c).unwrap();
        c.jobs = Some(1);
        let b = sweep_snr(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|r| (0.0..=1.0).contains(&r.success_rate) && r.mean_error >= 0.0));
        assert!(a[0].wall_time.is_none());
    }

    #[test]
    fn noiseless_brute_is_exact() {
        let mut c = ExperimentConfig::new(ModelKind::Noiseless, SolverKind::Brute, 4, 2, vec![f64::INFINITY]);
        c.trials = 5;
        let r = &sweep_snr(&c).unwrap()[0];
        assert!(r.mean_error < 1e-8);
        assert_eq!(r.success_rate, 1.0);
    }

    #[test]
    fn lattice_sweep_small() {
        let mut c = ExperimentConfig::new(ModelKind::Noiseless, SolverKind::Lattice, 2, 2, vec![f64::INFINITY]);
        c.trials = 4;
        let r = &sweep_snr(&c).unwrap()[0];
        assert!(r.success_rate >= 0.75, "{r:?}");
    }

    #[test]
    fn w2_identical_directions_vanish() {
        // d = 1: u and u' are both +-1, so the distance is 0 or the
        // reflection sum; it is never negative and the report is well formed.
        let r = check_w2(&[10, 40], 1, 20, 1, None).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row.mean >= 0.0));
        assert!(check_w2(&[2], 3, 1, 0, None).is_err());
    }
}
