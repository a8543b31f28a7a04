//! The discrete walk: free walk `S_n` on `Z^d`, reflected walk `R_n` on
//! `{0,..,m}^d`, and the deadlock time `T^(m)`, the first time the total
//! allocation `sum_l R_n` reaches the resource budget `lambda * m`.
//!
//! Per step, the environment transition and the jump are sampled in the
//! order `xi_{n+1}` then `J_{n+1}`, with the jump drawn from
//! `p(xi_n, S_n/m, ·)` — the pre-transition environment state, matching the
//! product form of the joint transition kernel.

use rayon::prelude::*;

use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::kernel::{sample_direction_from, KernelSpec};
use crate::rng::{domains, replica_rng};
use crate::stats;
use rand::Rng;

/// Horizon default multiplier: `50 * m^2` steps.
pub const DEFAULT_HORIZON_FACTOR: usize = 50;
/// Bins of the deadlock-time histogram.
pub const HISTOGRAM_BINS: usize = 30;
/// Quantile levels reported in summaries.
pub const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone)]
pub struct WalkConfig {
    /// Box size; the reflected walk lives in `{0,..,m}^d`.
    pub m: usize,
    pub d: usize,
    /// Resource budget parameter, `1 <= lambda < d`.
    pub lambda: f64,
    /// Deadlock-search horizon in steps; `0` means `50 m^2`.
    pub horizon_steps: usize,
    /// Rescaled times `t` at which the free walk records `S_{floor(m^2 t)}/m`.
    pub sample_times: Vec<f64>,
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidSpec(format!("m = {} must be >= 2", self.m)));
        }
        if self.d == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        if !(1.0 <= self.lambda && self.lambda < self.d as f64) {
            return Err(Error::InvalidSpec(format!(
                "lambda = {} must lie in [1, d) with d = {}",
                self.lambda, self.d
            )));
        }
        if self.sample_times.iter().any(|&t| t < 0.0 || !t.is_finite()) {
            return Err(Error::InvalidSpec("sample times must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        if self.horizon_steps > 0 {
            self.horizon_steps
        } else {
            DEFAULT_HORIZON_FACTOR * self.m * self.m
        }
    }
}

/// Recorded trajectory of a free-walk run.
#[derive(Debug, Clone)]
pub struct WalkPath {
    /// `S_0, .., S_n`.
    pub positions: Vec<Vec<i64>>,
    /// `xi_0, .., xi_n`, aligned with `positions` (state used to draw the
    /// next jump).
    pub env_states: Vec<usize>,
    /// `(t, S_{floor(m^2 t)} / m)` for each requested sample time.
    pub rescaled_samples: Vec<(f64, Vec<f64>)>,
}

/// Outcome of one deadlock simulation.
#[derive(Debug, Clone)]
pub struct DeadlockResult {
    /// `T^(m)` in steps (the horizon if censored).
    pub t_raw: usize,
    /// `T^(m) / m^2`.
    pub t_rescaled: f64,
    /// `R_{T^(m)} / m`.
    pub exit_point: Vec<f64>,
    /// Horizon reached before the deadlock set.
    pub censored: bool,
}

/// Aggregate of independent deadlock replicas.
#[derive(Debug, Clone)]
pub struct DeadlockSummary {
    pub n_trials: usize,
    /// Mean and standard error of `t_rescaled` over uncensored replicas.
    pub mean: f64,
    pub se: f64,
    /// `(level, value)` quantiles of the uncensored sample.
    pub quantiles: Vec<(f64, f64)>,
    /// `(bin left edge, count)` histogram of the uncensored sample.
    pub histogram: Vec<(f64, usize)>,
    /// Rescaled exit points of uncensored replicas.
    pub exit_points: Vec<Vec<f64>>,
    pub censored_fraction: f64,
    /// Uncensored `t_rescaled` samples, in replica order.
    pub samples: Vec<f64>,
}

/// One step of the free walk: draw `u` from `p(env_state, position/m, ·)`
/// and move. The environment transition is sampled separately (see
/// [`step_joint_free`]).
pub fn step_free(
    kernel: &KernelSpec,
    env_state: usize,
    position: &mut [i64],
    m: usize,
    rng: &mut impl Rng,
) {
    let d = kernel.d();
    let mut y = vec![0.0; d];
    let mut probs = vec![0.0; 2 * d];
    step_free_with_buffers(kernel, env_state, position, m, rng, &mut y, &mut probs);
}

fn step_free_with_buffers(
    kernel: &KernelSpec,
    env_state: usize,
    position: &mut [i64],
    m: usize,
    rng: &mut impl Rng,
    y: &mut [f64],
    probs: &mut [f64],
) {
    for (slot, &p) in y.iter_mut().zip(position.iter()) {
        *slot = p as f64 / m as f64;
    }
    kernel.eval_p_into(env_state, y, probs);
    let dir = sample_direction_from(probs, rng.gen());
    apply_direction(position, dir);
}

/// One step of the reflected walk: draw from the folded kernel
/// `q(env_state, position/m, ·)`; the result stays in `{0,..,m}^d`.
pub fn step_reflected(
    kernel: &KernelSpec,
    env_state: usize,
    position: &mut [i64],
    m: usize,
    rng: &mut impl Rng,
) {
    let d = kernel.d();
    let mut y = vec![0.0; d];
    let mut probs = vec![0.0; 2 * d];
    step_reflected_with_buffers(kernel, env_state, position, m, rng, &mut y, &mut probs);
}

fn step_reflected_with_buffers(
    kernel: &KernelSpec,
    env_state: usize,
    position: &mut [i64],
    m: usize,
    rng: &mut impl Rng,
    y: &mut [f64],
    probs: &mut [f64],
) {
    for (slot, &p) in y.iter_mut().zip(position.iter()) {
        *slot = p as f64 / m as f64;
    }
    kernel.reflected_p_into(env_state, y, probs);
    let dir = sample_direction_from(probs, rng.gen());
    apply_direction(position, dir);
    debug_assert!(
        position.iter().all(|&p| 0 <= p && p <= m as i64),
        "reflected walk left the box: {position:?}"
    );
}

fn apply_direction(position: &mut [i64], dir: usize) {
    let axis = dir / 2;
    position[axis] += if dir % 2 == 0 { 1 } else { -1 };
}

/// Run the free walk for `ceil(m^2 * max(sample_times))` steps from
/// `S_0 = 0` with the environment co-evolving, recording rescaled samples.
pub fn simulate_free(
    env: &EnvSpec,
    kernel: &KernelSpec,
    config: &WalkConfig,
    xi0: usize,
    rng: &mut impl Rng,
) -> Result<WalkPath> {
    config.validate()?;
    let m = config.m;
    let t_max = config.sample_times.iter().cloned().fold(0.0, f64::max);
    let n_steps = (t_max * (m * m) as f64).ceil() as usize;
    let mut sample_at: Vec<(usize, f64)> = config
        .sample_times
        .iter()
        .map(|&t| ((t * (m * m) as f64).floor() as usize, t))
        .collect();
    sample_at.sort_by_key(|&(n, _)| n);

    let d = config.d;
    let mut positions = Vec::with_capacity(n_steps + 1);
    let mut env_states = Vec::with_capacity(n_steps + 1);
    let mut rescaled = Vec::with_capacity(sample_at.len());
    let mut pos = vec![0i64; d];
    let mut state = xi0;
    let mut y = vec![0.0; d];
    let mut probs = vec![0.0; 2 * d];
    positions.push(pos.clone());
    env_states.push(state);
    let mut cursor = 0usize;
    for n in 0..=n_steps {
        while cursor < sample_at.len() && sample_at[cursor].0 == n {
            let scaled: Vec<f64> = pos.iter().map(|&p| p as f64 / m as f64).collect();
            rescaled.push((sample_at[cursor].1, scaled));
            cursor += 1;
        }
        if n == n_steps {
            break;
        }
        let next_state = if env.n_states() > 1 { env.step(state, rng) } else { state };
        step_free_with_buffers(kernel, state, &mut pos, m, rng, &mut y, &mut probs);
        state = next_state;
        positions.push(pos.clone());
        env_states.push(state);
    }
    Ok(WalkPath { positions, env_states, rescaled_samples: rescaled })
}

/// Total-allocation deadlock predicate `sum_l R_l >= lambda * m`.
pub fn deadlock_predicate(position: &[i64], lambda: f64, m: usize) -> bool {
    let total: i64 = position.iter().sum();
    total as f64 >= lambda * m as f64
}

/// Membership of `R/m` in the absorption set
/// `F_0 = { y : sum_l |y_l - 1| <= d - lambda }` (equivalent form of the
/// deadlock predicate inside the box, up to float rounding in the division).
pub fn f0_membership(position: &[i64], lambda: f64, m: usize) -> bool {
    let d = position.len() as f64;
    let dist: f64 = position.iter().map(|&p| (p as f64 / m as f64 - 1.0).abs()).sum();
    dist <= d - lambda + 1e-12
}

/// Reflected walk from `R_0 = 0` until deadlock or horizon.
pub fn simulate_deadlock(
    env: &EnvSpec,
    kernel: &KernelSpec,
    config: &WalkConfig,
    xi0: usize,
    rng: &mut impl Rng,
) -> Result<DeadlockResult> {
    config.validate()?;
    let m = config.m;
    let d = config.d;
    let horizon = config.horizon();
    let mut pos = vec![0i64; d];
    let mut state = xi0;
    let mut y = vec![0.0; d];
    let mut probs = vec![0.0; 2 * d];
    let m2 = (m * m) as f64;
    for n in 0..=horizon {
        let hit = deadlock_predicate(&pos, config.lambda, m);
        debug_assert_eq!(
            hit,
            f0_membership(&pos, config.lambda, m),
            "deadlock and F0 predicates disagree at {pos:?}"
        );
        if hit {
            return Ok(DeadlockResult {
                t_raw: n,
                t_rescaled: n as f64 / m2,
                exit_point: pos.iter().map(|&p| p as f64 / m as f64).collect(),
                censored: false,
            });
        }
        if n == horizon {
            break;
        }
        let next_state = if env.n_states() > 1 { env.step(state, rng) } else { state };
        step_reflected_with_buffers(kernel, state, &mut pos, m, rng, &mut y, &mut probs);
        state = next_state;
    }
    Ok(DeadlockResult {
        t_raw: horizon,
        t_rescaled: horizon as f64 / m2,
        exit_point: pos.iter().map(|&p| p as f64 / m as f64).collect(),
        censored: true,
    })
}

/// Independent deadlock replicas on per-replica derived streams, in replica
/// order (worker count does not affect the output).
pub fn deadlock_results(
    env: &EnvSpec,
    kernel: &KernelSpec,
    config: &WalkConfig,
    xi0: usize,
    n_trials: usize,
    master_seed: u64,
) -> Result<Vec<DeadlockResult>> {
    config.validate()?;
    if n_trials == 0 {
        return Err(Error::InvalidSpec("n_trials must be >= 1".into()));
    }
    Ok((0..n_trials)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(master_seed, domains::WALK_DEADLOCK, replica as u64);
            simulate_deadlock(env, kernel, config, xi0, &mut rng)
                .expect("config validated above")
        })
        .collect())
}

/// Independent deadlock replicas with per-replica derived streams; censored
/// runs are counted, never dropped silently.
pub fn monte_carlo_deadlock(
    env: &EnvSpec,
    kernel: &KernelSpec,
    config: &WalkConfig,
    xi0: usize,
    n_trials: usize,
    master_seed: u64,
) -> Result<DeadlockSummary> {
    let results = deadlock_results(env, kernel, config, xi0, n_trials, master_seed)?;
    Ok(summarize_deadlocks(&results))
}

pub fn summarize_deadlocks(results: &[DeadlockResult]) -> DeadlockSummary {
    let n_trials = results.len();
    let censored = results.iter().filter(|r| r.censored).count();
    let samples: Vec<f64> =
        results.iter().filter(|r| !r.censored).map(|r| r.t_rescaled).collect();
    let exit_points: Vec<Vec<f64>> =
        results.iter().filter(|r| !r.censored).map(|r| r.exit_point.clone()).collect();
    let (mean, se) =
        if samples.is_empty() { (f64::NAN, f64::NAN) } else { stats::mean_se(&samples) };
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let quantiles = if sorted.is_empty() {
        Vec::new()
    } else {
        QUANTILES.iter().map(|&q| (q, stats::quantile_sorted(&sorted, q))).collect()
    };
    let histogram = if sorted.is_empty() {
        Vec::new()
    } else {
        let hi = sorted[sorted.len() - 1].max(f64::MIN_POSITIVE);
        stats::histogram(&sorted, 0.0, hi, HISTOGRAM_BINS)
    };
    DeadlockSummary {
        n_trials,
        mean,
        se,
        quantiles,
        histogram,
        exit_points,
        censored_fraction: censored as f64 / n_trials as f64,
        samples,
    }
}

/// Rescaled free-walk endpoints `S_{floor(m^2 t)} / m` over independent
/// replicas (the empirical-covariance input of the invariance-principle
/// checks).
pub fn free_walk_endpoints(
    env: &EnvSpec,
    kernel: &KernelSpec,
    config: &WalkConfig,
    t: f64,
    xi0: usize,
    n_replicas: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let m = config.m;
    let n_steps = (t * (m * m) as f64).floor() as usize;
    let d = config.d;
    let out: Vec<Vec<f64>> = (0..n_replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(master_seed, domains::WALK_FREE, replica as u64);
            let mut pos = vec![0i64; d];
            let mut state = xi0;
            let mut y = vec![0.0; d];
            let mut probs = vec![0.0; 2 * d];
            for _ in 0..n_steps {
                let next_state = if env.n_states() > 1 { env.step(state, &mut rng) } else { state };
                step_free_with_buffers(kernel, state, &mut pos, m, &mut rng, &mut y, &mut probs);
                state = next_state;
            }
            pos.iter().map(|&p| p as f64 / m as f64).collect()
        })
        .collect();
    Ok(out)
}
