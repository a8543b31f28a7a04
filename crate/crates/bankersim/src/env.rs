//! Finite-state environment Markov chain: validation, invariant measure,
//! quantitative ergodicity certificate, and path sampling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Row-sum tolerance for a stochastic matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Tolerance on the invariant-measure residual `||mu^T P - mu^T||_inf`.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Additive float slack on the certificate inequality: powers of `c` underflow
/// below the rounding noise of repeated matrix products at large `n`.
pub const CERT_FLOAT_SLACK: f64 = 1e-12;

/// Finite-state environment chain with transition matrix `P`.
///
/// Construction enforces the structural invariants (square, nonnegative
/// entries, rows summing to one within [`ROW_SUM_TOL`]). Irreducibility and
/// aperiodicity are *not* construction requirements; use [`EnvSpec::validate`]
/// to check them.
#[derive(Debug, Clone)]
pub struct EnvSpec {
    p: DMatrix<f64>,
}

/// Invariant probability measure of an irreducible chain.
#[derive(Debug, Clone)]
pub struct StationaryDist {
    pub mu: DVector<f64>,
}

/// Quantitative ergodicity certificate: `P^m_doeblin` has all entries
/// `>= eta`, and `sum_j |P^n(i,j) - mu(j)| <= gamma * c^n` for all `i, n`.
#[derive(Debug, Clone, Copy)]
pub struct ErgodicityCert {
    pub m_doeblin: usize,
    pub eta: f64,
    pub gamma: f64,
    pub c: f64,
}

/// A violated environment condition, reported as data.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowSum { row: usize, sum: f64 },
    NegativeEntry { row: usize, col: usize, value: f64 },
    NotIrreducible { unreached_from_zero: Vec<usize> },
    Periodic { period: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::RowSum { row, sum } => {
                write!(f, "row {row} sums to {sum:.15} (expected 1)")
            }
            Violation::NegativeEntry { row, col, value } => {
                write!(f, "entry ({row},{col}) = {value:.3e} is negative")
            }
            Violation::NotIrreducible { unreached_from_zero } => {
                write!(f, "not irreducible: states {unreached_from_zero:?} not in the communicating class of 0")
            }
            Violation::Periodic { period } => write!(f, "periodic (period {period})"),
        }
    }
}

impl EnvSpec {
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        if p.nrows() == 0 || p.nrows() != p.ncols() {
            return Err(Error::InvalidSpec(format!(
                "transition matrix must be square and nonempty, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        let structural: Vec<Violation> = structural_violations(&p);
        if !structural.is_empty() {
            let msgs: Vec<String> = structural.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidSpec(msgs.join("; ")));
        }
        Ok(Self { p })
    }

    /// Uniform helper used all over the tests: every row `= 1/N`.
    pub fn uniform(n_states: usize) -> Self {
        let p = DMatrix::from_element(n_states, n_states, 1.0 / n_states as f64);
        Self { p }
    }

    /// Single absorbing state.
    pub fn single_state() -> Self {
        Self { p: DMatrix::from_element(1, 1, 1.0) }
    }

    pub fn n_states(&self) -> usize {
        self.p.nrows()
    }

    pub fn transition_matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Every violated row-sum / nonnegativity / irreducibility / aperiodicity
    /// condition, with indices. Empty means the chain satisfies the standing
    /// assumptions (irreducible and aperiodic).
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = structural_violations(&self.p);
        let support = support_graph(&self.p);
        match strongly_connected(&support) {
            Some(unreached) => out.push(Violation::NotIrreducible { unreached_from_zero: unreached }),
            None => {
                let period = graph_period(&support);
                if period != 1 {
                    out.push(Violation::Periodic { period });
                }
            }
        }
        out
    }

    /// One transition of the chain from `state`, inverse-CDF over the row.
    pub fn step(&self, state: usize, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        sample_row(&self.p, state, u)
    }
}

fn structural_violations(p: &DMatrix<f64>) -> Vec<Violation> {
    let mut out = Vec::new();
    for i in 0..p.nrows() {
        let mut sum = 0.0;
        for j in 0..p.ncols() {
            let v = p[(i, j)];
            if v < 0.0 {
                out.push(Violation::NegativeEntry { row: i, col: j, value: v });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            out.push(Violation::RowSum { row: i, sum });
        }
    }
    out
}

fn support_graph(p: &DMatrix<f64>) -> Vec<Vec<usize>> {
    (0..p.nrows())
        .map(|i| (0..p.ncols()).filter(|&j| p[(i, j)] > 0.0).collect())
        .collect()
}

/// `None` if strongly connected, otherwise the states unreachable from 0
/// (forward or backward).
fn strongly_connected(adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let reach = |edges: &dyn Fn(usize) -> Vec<usize>| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in edges(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    };
    let fwd = reach(&|u| adj[u].clone());
    let rev_adj: Vec<Vec<usize>> = {
        let mut r = vec![Vec::new(); n];
        for (u, vs) in adj.iter().enumerate() {
            for &v in vs {
                r[v].push(u);
            }
        }
        r
    };
    let bwd = reach(&|u| rev_adj[u].clone());
    let missing: Vec<usize> = (0..n).filter(|&i| !fwd[i] || !bwd[i]).collect();
    if missing.is_empty() { None } else { Some(missing) }
}

/// Period of a strongly connected digraph: gcd over edges (u,v) of
/// `depth(u) + 1 - depth(v)` for a BFS depth labelling.
fn graph_period(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut depth = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    depth[0] = 0;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g: u64 = 0;
    for (u, vs) in adj.iter().enumerate() {
        for &v in vs {
            let diff = (depth[u] as i64 + 1 - depth[v] as i64).unsigned_abs();
            g = gcd(g, diff);
        }
    }
    g.max(1) as usize
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

pub(crate) fn sample_row(p: &DMatrix<f64>, state: usize, u: f64) -> usize {
    let n = p.ncols();
    let mut acc = 0.0;
    for j in 0..n {
        acc += p[(state, j)];
        if u < acc {
            return j;
        }
    }
    // Rounding left the cumulative sum just under 1: last positive bucket.
    (0..n).rev().find(|&j| p[(state, j)] > 0.0).unwrap_or(n - 1)
}

/// The unique invariant probability `mu` with `mu^T P = mu^T`, `sum mu = 1`.
///
/// Solved as a dense direct system: the last balance equation (linearly
/// dependent for a stochastic matrix) is replaced by the normalization row.
pub fn stationary_distribution(spec: &EnvSpec) -> Result<StationaryDist> {
    let n = spec.n_states();
    let p = &spec.p;
    // A = P^T - I with the last row replaced by ones; rhs = e_last.
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = a.lu();
    let mu = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("invariant-measure system".into()))?;
    let dist = StationaryDist { mu };
    // Rank deficiency beyond one (reducible chain) shows up as a residual.
    let resid = stationary_residual(spec, &dist);
    if resid > STATIONARY_TOL || dist.mu.iter().any(|&x| x < -STATIONARY_TOL) {
        return Err(Error::SingularSystem(format!(
            "invariant measure residual {resid:.3e}; chain not irreducible?"
        )));
    }
    Ok(dist)
}

/// `||mu^T P - mu^T||_inf`.
pub fn stationary_residual(spec: &EnvSpec, dist: &StationaryDist) -> f64 {
    let lhs = spec.p.transpose() * &dist.mu;
    (lhs - &dist.mu).amax()
}

/// Doeblin power and geometric-contraction constants.
///
/// Finds the smallest `m <= N^2` with `min_{k,l} P^m(k,l) = eta > 0`, then
/// sets the rate from the Dobrushin coefficient `kappa` of `P^m`:
/// `c = kappa^(1/m)` (clamped to `>= 1e-6`) and `gamma = 2 / c^m`.
pub fn ergodicity_certificate(spec: &EnvSpec) -> Result<ErgodicityCert> {
    let n = spec.n_states();
    let bound = n * n;
    let mut power = spec.p.clone();
    for m in 1..=bound {
        let min_entry = power.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_entry > 0.0 {
            let kappa = dobrushin_coefficient(&power);
            let c = kappa.powf(1.0 / m as f64).max(1e-6);
            let gamma = 2.0 / c.powi(m as i32);
            return Ok(ErgodicityCert { m_doeblin: m, eta: min_entry, gamma, c });
        }
        power *= &spec.p;
    }
    Err(Error::NoDoeblinPower { searched: bound })
}

/// Dobrushin coefficient: max over row pairs of the total-variation distance.
pub fn dobrushin_coefficient(p: &DMatrix<f64>) -> f64 {
    let n = p.nrows();
    let mut kappa: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let tv: f64 =
                (0..p.ncols()).map(|k| (p[(i, k)] - p[(j, k)]).abs()).sum::<f64>() / 2.0;
            kappa = kappa.max(tv);
        }
    }
    kappa
}

impl ErgodicityCert {
    /// Check `max_i sum_j |P^n(i,j) - mu(j)| <= gamma c^n` for `n` in
    /// `1..=n_max` (with [`CERT_FLOAT_SLACK`] absorbing rounding/underflow).
    pub fn verify(&self, spec: &EnvSpec, dist: &StationaryDist, n_max: usize) -> bool {
        let mut power = spec.p.clone();
        let mut bound = self.gamma;
        for _ in 1..=n_max {
            bound *= self.c;
            let worst = total_variation_to_mu(&power, &dist.mu);
            if worst > bound + CERT_FLOAT_SLACK {
                return false;
            }
            power *= &spec.p;
        }
        true
    }

    /// Smallest truncation `n*` with `gamma * c^(n*) <= tol`; used to cut the
    /// Neumann series of the corrector.
    pub fn neumann_truncation(&self, tol: f64) -> usize {
        if self.gamma <= tol {
            return 0;
        }
        let n = ((tol / self.gamma).ln() / self.c.ln()).ceil();
        n.max(0.0) as usize
    }
}

/// `max_i sum_j |P^n(i,j) - mu(j)|` for an explicit power `P^n`.
pub fn total_variation_to_mu(power: &DMatrix<f64>, mu: &DVector<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..power.nrows() {
        let row_dev: f64 = (0..power.ncols()).map(|j| (power[(i, j)] - mu[j]).abs()).sum();
        worst = worst.max(row_dev);
    }
    worst
}

/// Sample a path of length `n_steps + 1` starting at `xi0`.
pub fn sample_env_path(
    spec: &EnvSpec,
    xi0: usize,
    n_steps: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    assert!(xi0 < spec.n_states(), "initial state out of range");
    let mut path = Vec::with_capacity(n_steps + 1);
    path.push(xi0);
    let mut state = xi0;
    for _ in 0..n_steps {
        state = spec.step(state, rng);
        path.push(state);
    }
    path
}
