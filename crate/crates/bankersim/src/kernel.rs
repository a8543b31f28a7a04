//! Environment- and space-dependent step distributions `p(i, y, ·)` on the
//! `2d` lattice directions, their reflected counterparts `q`, and the derived
//! fields `g` (mean step), `alpha` (second moment), `h` (reflected mean step)
//! with analytic `y`-derivatives.
//!
//! The concrete family is `p(i,y,u) = base(i,u) + sum_t A_t(i,u) cos(2 pi
//! <f_t, y> + phi_t)`: trigonometric polynomials give exact derivatives and
//! make the centering constraint (the invariant-measure average of `g` must
//! vanish) enforceable by an exact projection of the coefficient table.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::env::{stationary_distribution, EnvSpec};
use crate::error::{Error, Result};

/// Points per axis of the construction-time validation grid on `[0, 2]^d`.
pub const GRID_POINTS_PER_AXIS: usize = 101;
/// Minimum admissible uniform positivity floor for a constructed kernel.
pub const P_MIN_FLOOR: f64 = 1e-3;
/// Probability row-sum tolerance.
pub const SUM_TOL: f64 = 1e-12;
/// Tolerance on the centering residual `max_y |sum_i mu(i) g(i,y)|`.
pub const CENTERING_TOL: f64 = 1e-8;
/// Step for the finite-difference fallback derivatives.
pub const FD_STEP: f64 = 1e-5;

/// The ordered direction set `(e_1, -e_1, ..., e_d, -e_d)`.
///
/// Index `2k` is `+e_{k+1}`, index `2k + 1` is `-e_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionSet {
    pub d: usize,
}

impl DirectionSet {
    pub fn new(d: usize) -> Self {
        Self { d }
    }

    pub fn count(&self) -> usize {
        2 * self.d
    }

    pub fn axis(&self, index: usize) -> usize {
        index / 2
    }

    /// `+1` for `+e_axis`, `-1` for `-e_axis`.
    pub fn sign(&self, index: usize) -> i64 {
        if index % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn plus(&self, axis: usize) -> usize {
        2 * axis
    }

    pub fn minus(&self, axis: usize) -> usize {
        2 * axis + 1
    }

    pub fn vector(&self, index: usize) -> Vec<i64> {
        let mut v = vec![0i64; self.d];
        v[self.axis(index)] = self.sign(index);
        v
    }
}

/// One declared trigonometric perturbation record.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrigTerm {
    pub state: usize,
    pub direction: usize,
    pub frequency: Vec<f64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Declared kernel table before validation/projection.
#[derive(Debug, Clone)]
pub struct KernelParams {
    pub d: usize,
    /// `N x 2d` baseline probabilities, rows summing to one.
    pub base: DMatrix<f64>,
    pub terms: Vec<TrigTerm>,
    /// Global scale applied to every term amplitude.
    pub amplitude_budget: f64,
}

/// A compiled group of same-(frequency, phase) terms: per-state, per-direction
/// amplitudes with the global budget folded in.
#[derive(Debug, Clone)]
struct TermGroup {
    frequency: Vec<f64>,
    phase: f64,
    /// `N x 2d`.
    amps: DMatrix<f64>,
}

type KernelFn = Arc<dyn Fn(usize, &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Backend {
    Trig { base: DMatrix<f64>, groups: Vec<TermGroup> },
    /// Escape hatch: arbitrary user-supplied `(state, y) -> probabilities`.
    /// Derivatives fall back to central finite differences.
    Custom(KernelFn),
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Trig { base, groups } => f
                .debug_struct("Trig")
                .field("base", base)
                .field("groups", &groups.len())
                .finish(),
            Backend::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Validated step-distribution family.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    d: usize,
    n_states: usize,
    backend: Backend,
    /// Uniform lower bound on every probability (analytic for trig kernels,
    /// grid minimum for custom ones).
    pub p_min: f64,
    /// Sup-norm bound on the `y`-gradient of `p` (Lipschitz constant).
    pub lipschitz_bound: f64,
    /// Sup-norm bound on second `y`-derivatives of `p`.
    pub second_derivative_bound: f64,
    /// `min` over the validation grid and states of the smallest eigenvalue
    /// of `alpha - g g^t`.
    pub ellipticity_floor: f64,
    /// `max_y |sum_i mu(i) g(i, y)|_inf` on the grid, when an environment was
    /// supplied at construction (exactly zero up to rounding after projection).
    pub centering_residual: Option<f64>,
}

/// Kernel fields at one `(i, y)`: mean step, second moment, mean-step
/// Jacobian, and the reflected mean step (`y` in the closed unit cube).
#[derive(Debug, Clone)]
pub struct FieldValue {
    pub g: Vec<f64>,
    pub alpha: DMatrix<f64>,
    /// Entry `(k, j)` is `d g_k / d y_j`.
    pub grad_g: DMatrix<f64>,
    pub h: Vec<f64>,
}

impl KernelSpec {
    /// Uniform kernel: every direction has probability `1/(2d)` everywhere.
    pub fn uniform(d: usize, n_states: usize) -> Self {
        let base = DMatrix::from_element(n_states, 2 * d, 1.0 / (2.0 * d as f64));
        let params = KernelParams { d, base, terms: Vec::new(), amplitude_budget: 0.0 };
        Self::build(params).expect("uniform kernel is always valid")
    }

    /// Build without a centering constraint (no environment involved).
    pub fn build(params: KernelParams) -> Result<Self> {
        Self::assemble(params, None, false)
    }

    /// Build and *project* the coefficient table so that the mean step `g`
    /// is exactly centered against the invariant measure of `env`: for each
    /// frequency, the mu-weighted state average of the induced
    /// `g`-contribution is split evenly off the `+e/-e` amplitude pair.
    pub fn build_centered(params: KernelParams, env: &EnvSpec) -> Result<Self> {
        Self::assemble(params, Some(env), true)
    }

    /// Build and *check* centering against `env`, rejecting tables whose
    /// residual exceeds [`CENTERING_TOL`].
    pub fn build_checked(params: KernelParams, env: &EnvSpec) -> Result<Self> {
        Self::assemble(params, Some(env), false)
    }

    /// Escape hatch: arbitrary kernel function `(state, y) -> probability
    /// vector over the `2d` directions`. Derivatives use central finite
    /// differences; centering is checked (never enforced) when `env` is given.
    pub fn from_fn(
        d: usize,
        n_states: usize,
        f: KernelFn,
        env: Option<&EnvSpec>,
    ) -> Result<Self> {
        let mut spec = KernelSpec {
            d,
            n_states,
            backend: Backend::Custom(f),
            p_min: 0.0,
            lipschitz_bound: 0.0,
            second_derivative_bound: 0.0,
            ellipticity_floor: 0.0,
            centering_residual: None,
        };
        spec.validate_on_grid(env)?;
        spec.estimate_custom_bounds();
        Ok(spec)
    }

    fn assemble(params: KernelParams, env: Option<&EnvSpec>, project: bool) -> Result<Self> {
        let KernelParams { d, base, terms, amplitude_budget } = params;
        let n_states = base.nrows();
        if d == 0 || n_states == 0 || base.ncols() != 2 * d {
            return Err(Error::InvalidSpec(format!(
                "base must be N x 2d, got {}x{} for d = {d}",
                base.nrows(),
                base.ncols()
            )));
        }
        if amplitude_budget < 0.0 {
            return Err(Error::InvalidSpec("amplitude budget must be >= 0".into()));
        }
        for i in 0..n_states {
            let sum: f64 = base.row(i).iter().sum();
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidSpec(format!("base row {i} sums to {sum:.15}")));
            }
        }
        let mut base = base;
        let mut groups = compile_groups(d, n_states, &terms, amplitude_budget)?;

        if project {
            let env = env.expect("projection requires an environment");
            let mu = stationary_distribution(env)?.mu;
            if mu.len() != n_states {
                return Err(Error::InvalidSpec(format!(
                    "kernel has {n_states} states but environment has {}",
                    mu.len()
                )));
            }
            for axis in 0..d {
                let (pi, mi) = (2 * axis, 2 * axis + 1);
                // Zero-frequency component lives in the base table.
                let m: f64 =
                    (0..n_states).map(|i| mu[i] * (base[(i, pi)] - base[(i, mi)])).sum();
                for i in 0..n_states {
                    base[(i, pi)] -= m / 2.0;
                    base[(i, mi)] += m / 2.0;
                }
                for group in &mut groups {
                    let m: f64 = (0..n_states)
                        .map(|i| mu[i] * (group.amps[(i, pi)] - group.amps[(i, mi)]))
                        .sum();
                    for i in 0..n_states {
                        group.amps[(i, pi)] -= m / 2.0;
                        group.amps[(i, mi)] += m / 2.0;
                    }
                }
            }
        }

        // Analytic positivity floor: smallest base entry minus the total
        // perturbation amplitude it can see.
        let mut p_min = f64::INFINITY;
        let mut lip: f64 = 0.0;
        let mut second: f64 = 0.0;
        for i in 0..n_states {
            for u in 0..2 * d {
                let total: f64 = groups.iter().map(|gr| gr.amps[(i, u)].abs()).sum();
                p_min = p_min.min(base[(i, u)] - total);
                let l: f64 = groups
                    .iter()
                    .map(|gr| gr.amps[(i, u)].abs() * 2.0 * std::f64::consts::PI * norm(&gr.frequency))
                    .sum();
                lip = lip.max(l);
                let s: f64 = groups
                    .iter()
                    .map(|gr| {
                        let w = 2.0 * std::f64::consts::PI * norm(&gr.frequency);
                        gr.amps[(i, u)].abs() * w * w
                    })
                    .sum();
                second = second.max(s);
            }
        }
        if p_min < P_MIN_FLOOR {
            return Err(Error::InvalidSpec(format!(
                "positivity floor {p_min:.3e} below {P_MIN_FLOOR:.0e}: shrink the perturbation amplitudes"
            )));
        }

        let mut spec = KernelSpec {
            d,
            n_states,
            backend: Backend::Trig { base, groups },
            p_min,
            lipschitz_bound: lip,
            second_derivative_bound: second,
            ellipticity_floor: 0.0,
            centering_residual: None,
        };
        spec.validate_on_grid(env)?;
        Ok(spec)
    }

    /// Grid sweep over `[0, 2]^d`: probability sums, positivity, ellipticity
    /// floor, and (given an environment) the centering residual.
    fn validate_on_grid(&mut self, env: Option<&EnvSpec>) -> Result<()> {
        let mu = match env {
            Some(e) => Some(stationary_distribution(e)?.mu),
            None => None,
        };
        let mut grid_min = f64::INFINITY;
        let mut floor = f64::INFINITY;
        let mut worst_center: f64 = 0.0;
        let mut probs = vec![0.0; 2 * self.d];
        let mut failure: Option<String> = None;
        for_each_grid_point(self.d, GRID_POINTS_PER_AXIS, 0.0, 2.0, |y| {
            if failure.is_some() {
                return;
            }
            let mut mean_g = vec![0.0; self.d];
            for i in 0..self.n_states {
                self.eval_p_into(i, y, &mut probs);
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > SUM_TOL {
                    failure = Some(format!(
                        "probabilities at state {i}, y = {y:?} sum to {sum:.15}"
                    ));
                    return;
                }
                for &p in probs.iter() {
                    grid_min = grid_min.min(p);
                }
                let g = g_from_probs(self.d, &probs);
                floor = floor.min(min_eig_alpha_minus_ggt(self.d, &probs, &g));
                if let Some(mu) = &mu {
                    for k in 0..self.d {
                        mean_g[k] += mu[i] * g[k];
                    }
                }
            }
            if mu.is_some() {
                for k in 0..self.d {
                    worst_center = worst_center.max(mean_g[k].abs());
                }
            }
        });
        if let Some(msg) = failure {
            return Err(Error::InvalidSpec(msg));
        }
        if grid_min <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "probability {grid_min:.3e} on the validation grid is not positive"
            )));
        }
        if matches!(self.backend, Backend::Custom(_)) {
            self.p_min = grid_min;
        }
        self.ellipticity_floor = floor;
        if mu.is_some() {
            self.centering_residual = Some(worst_center);
            if worst_center > CENTERING_TOL {
                return Err(Error::NotCentered {
                    residual: worst_center,
                    tolerance: CENTERING_TOL,
                });
            }
        }
        Ok(())
    }

    fn estimate_custom_bounds(&mut self) {
        let mut lip: f64 = 0.0;
        let mut second: f64 = 0.0;
        let h = FD_STEP;
        for_each_grid_point(self.d, 11, 0.0, 2.0, |y| {
            let mut yp = y.to_vec();
            let mut ym = y.to_vec();
            for i in 0..self.n_states {
                let p0 = self.eval_p(i, y);
                for j in 0..self.d {
                    yp[j] = y[j] + h;
                    ym[j] = y[j] - h;
                    let pp = self.eval_p(i, &yp);
                    let pm = self.eval_p(i, &ym);
                    for u in 0..2 * self.d {
                        lip = lip.max(((pp[u] - pm[u]) / (2.0 * h)).abs());
                        second = second.max(((pp[u] - 2.0 * p0[u] + pm[u]) / (h * h)).abs());
                    }
                    yp[j] = y[j];
                    ym[j] = y[j];
                }
            }
        });
        self.lipschitz_bound = lip;
        self.second_derivative_bound = second;
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn directions(&self) -> DirectionSet {
        DirectionSet::new(self.d)
    }

    /// `p(i, y, ·)` as a probability vector over the `2d` directions.
    pub fn eval_p(&self, i: usize, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.d];
        self.eval_p_into(i, y, &mut out);
        out
    }

    pub fn eval_p_into(&self, i: usize, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.d);
        match &self.backend {
            Backend::Trig { base, groups } => {
                for (u, slot) in out.iter_mut().enumerate() {
                    *slot = base[(i, u)];
                }
                for group in groups {
                    let mut arg = group.phase;
                    for (f, yy) in group.frequency.iter().zip(y) {
                        arg += 2.0 * std::f64::consts::PI * f * yy;
                    }
                    let c = arg.cos();
                    for (u, slot) in out.iter_mut().enumerate() {
                        *slot += group.amps[(i, u)] * c;
                    }
                }
            }
            Backend::Custom(f) => {
                let v = f(i, y);
                out.copy_from_slice(&v);
            }
        }
    }

    /// Mean step `g(i, y) = sum_u p(i, y, u) u`.
    pub fn eval_g(&self, i: usize, y: &[f64]) -> Vec<f64> {
        g_from_probs(self.d, &self.eval_p(i, y))
    }

    /// Second-moment matrix `alpha(i, y) = sum_u u u^t p(i, y, u)`; diagonal
    /// for nearest-neighbour steps.
    pub fn eval_alpha(&self, i: usize, y: &[f64]) -> DMatrix<f64> {
        let p = self.eval_p(i, y);
        let mut alpha = DMatrix::zeros(self.d, self.d);
        for k in 0..self.d {
            alpha[(k, k)] = p[2 * k] + p[2 * k + 1];
        }
        alpha
    }

    /// Jacobian of the mean step: entry `(k, j)` is `d g_k / d y_j`.
    /// Analytic for trig kernels, central differences for custom ones.
    pub fn grad_g(&self, i: usize, y: &[f64]) -> DMatrix<f64> {
        match &self.backend {
            Backend::Trig { groups, .. } => {
                let mut out = DMatrix::zeros(self.d, self.d);
                for group in groups {
                    let mut arg = group.phase;
                    for (f, yy) in group.frequency.iter().zip(y) {
                        arg += 2.0 * std::f64::consts::PI * f * yy;
                    }
                    let s = arg.sin();
                    for k in 0..self.d {
                        let coeff = group.amps[(i, 2 * k)] - group.amps[(i, 2 * k + 1)];
                        for j in 0..self.d {
                            out[(k, j)] -=
                                coeff * 2.0 * std::f64::consts::PI * group.frequency[j] * s;
                        }
                    }
                }
                out
            }
            Backend::Custom(_) => {
                let mut out = DMatrix::zeros(self.d, self.d);
                let mut yp = y.to_vec();
                let mut ym = y.to_vec();
                for j in 0..self.d {
                    yp[j] = y[j] + FD_STEP;
                    ym[j] = y[j] - FD_STEP;
                    let gp = self.eval_g(i, &yp);
                    let gm = self.eval_g(i, &ym);
                    for k in 0..self.d {
                        out[(k, j)] = (gp[k] - gm[k]) / (2.0 * FD_STEP);
                    }
                    yp[j] = y[j];
                    ym[j] = y[j];
                }
                out
            }
        }
    }

    /// Reflected mean step on the closed unit cube: agrees with `g` strictly
    /// inside, pushes inward with the full axis mass on the faces.
    pub fn eval_h(&self, i: usize, y: &[f64]) -> Result<Vec<f64>> {
        check_unit_cube(y)?;
        let p = self.eval_p(i, y);
        let mut h = vec![0.0; self.d];
        for k in 0..self.d {
            let axis_mass = p[2 * k] + p[2 * k + 1];
            h[k] = if y[k] == 0.0 {
                axis_mass
            } else if y[k] == 1.0 {
                -axis_mass
            } else {
                p[2 * k] - p[2 * k + 1]
            };
        }
        Ok(h)
    }

    /// Reflected kernel `q(i, y, ·)`: equals `p` strictly inside; on the face
    /// `y_k = 0` the mass of `-e_k` is folded onto `+e_k` (and symmetrically
    /// at `y_k = 1`). Corners fold every touching axis.
    pub fn reflected_step_kernel(&self, i: usize, y: &[f64]) -> Result<Vec<f64>> {
        check_unit_cube(y)?;
        let mut q = self.eval_p(i, y);
        fold_probs_in_place(self.d, y, &mut q);
        Ok(q)
    }

    /// As [`Self::reflected_step_kernel`] without the domain re-check or
    /// allocation; used by the walk's hot loop.
    pub(crate) fn reflected_p_into(&self, i: usize, y: &[f64], out: &mut [f64]) {
        self.eval_p_into(i, y, out);
        fold_probs_in_place(self.d, y, out);
    }

    /// All derived fields at one point of the closed unit cube.
    pub fn fields(&self, i: usize, y: &[f64]) -> Result<FieldValue> {
        Ok(FieldValue {
            g: self.eval_g(i, y),
            alpha: self.eval_alpha(i, y),
            grad_g: self.grad_g(i, y),
            h: self.eval_h(i, y)?,
        })
    }

    /// Draw a direction index from `p(i, y, ·)`.
    pub fn sample_direction(&self, i: usize, y: &[f64], rng: &mut impl Rng) -> usize {
        let mut probs = vec![0.0; 2 * self.d];
        self.eval_p_into(i, y, &mut probs);
        sample_direction_from(&probs, rng.gen())
    }

    /// True when no perturbation term actually depends on `y` (the effective
    /// coefficients are then constant and the drift vanishes).
    pub fn is_y_independent(&self) -> bool {
        match &self.backend {
            Backend::Trig { groups, .. } => groups
                .iter()
                .all(|g| g.frequency.iter().all(|&f| f == 0.0) || g.amps.iter().all(|&a| a == 0.0)),
            Backend::Custom(_) => false,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn g_from_probs(d: usize, probs: &[f64]) -> Vec<f64> {
    (0..d).map(|k| probs[2 * k] - probs[2 * k + 1]).collect()
}

fn fold_probs_in_place(d: usize, y: &[f64], q: &mut [f64]) {
    for k in 0..d {
        if y[k] == 0.0 {
            q[2 * k] += q[2 * k + 1];
            q[2 * k + 1] = 0.0;
        } else if y[k] == 1.0 {
            q[2 * k + 1] += q[2 * k];
            q[2 * k] = 0.0;
        }
    }
}

pub(crate) fn sample_direction_from(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (idx, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return idx;
        }
    }
    // Rounding pushed the cumulative sum just below 1: last positive bucket.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn check_unit_cube(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::OutOfDomain(format!("y = {y:?} outside [0,1]^d")));
    }
    Ok(())
}

/// Smallest eigenvalue of `alpha - g g^t` assembled from a probability row.
fn min_eig_alpha_minus_ggt(d: usize, probs: &[f64], g: &[f64]) -> f64 {
    match d {
        1 => probs[0] + probs[1] - g[0] * g[0],
        2 => {
            let a = probs[0] + probs[1] - g[0] * g[0];
            let c = probs[2] + probs[3] - g[1] * g[1];
            let b = -g[0] * g[1];
            0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt()
        }
        _ => {
            let mut m = DMatrix::zeros(d, d);
            for k in 0..d {
                m[(k, k)] = probs[2 * k] + probs[2 * k + 1];
            }
            for k in 0..d {
                for j in 0..d {
                    m[(k, j)] -= g[k] * g[j];
                }
            }
            m.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
        }
    }
}

fn compile_groups(
    d: usize,
    n_states: usize,
    terms: &[TrigTerm],
    budget: f64,
) -> Result<Vec<TermGroup>> {
    let mut groups: Vec<TermGroup> = Vec::new();
    for term in terms {
        if term.state >= n_states {
            return Err(Error::InvalidSpec(format!("term state {} out of range", term.state)));
        }
        if term.direction >= 2 * d {
            return Err(Error::InvalidSpec(format!(
                "term direction {} out of range",
                term.direction
            )));
        }
        if term.frequency.len() != d {
            return Err(Error::InvalidSpec(format!(
                "term frequency {:?} must have length {d}",
                term.frequency
            )));
        }
        let slot = groups
            .iter()
            .position(|g| g.frequency == term.frequency && g.phase == term.phase);
        let group = match slot {
            Some(k) => &mut groups[k],
            None => {
                groups.push(TermGroup {
                    frequency: term.frequency.clone(),
                    phase: term.phase,
                    amps: DMatrix::zeros(n_states, 2 * d),
                });
                groups.last_mut().unwrap()
            }
        };
        group.amps[(term.state, term.direction)] += budget * term.amplitude;
    }
    // Probabilities must sum to one for every y, so each group's amplitudes
    // must cancel across directions, state by state.
    for group in &groups {
        for i in 0..n_states {
            let s: f64 = group.amps.row(i).iter().sum();
            if s.abs() > SUM_TOL {
                return Err(Error::InvalidSpec(format!(
                    "perturbation at frequency {:?} breaks row {i} normalization by {s:.3e}: \
                     balance the direction amplitudes",
                    group.frequency
                )));
            }
        }
    }
    Ok(groups)
}

/// Visit the regular grid with `n` points per axis covering `[lo, hi]^d`.
pub fn for_each_grid_point(d: usize, n: usize, lo: f64, hi: f64, mut f: impl FnMut(&[f64])) {
    let step = (hi - lo) / (n - 1) as f64;
    let mut idx = vec![0usize; d];
    let mut y = vec![lo; d];
    loop {
        f(&y);
        let mut axis = 0;
        loop {
            if axis == d {
                return;
            }
            idx[axis] += 1;
            if idx[axis] < n {
                y[axis] = lo + idx[axis] as f64 * step;
                break;
            }
            idx[axis] = 0;
            y[axis] = lo;
            axis += 1;
        }
    }
}

/// Ready-made kernels used by the examples, the demo configs, and the tests.
pub mod presets {
    use super::*;

    /// `d = 1`, one state, `p(y) = (1/2 + delta cos(2 pi y), 1/2 - delta cos(2 pi y))`.
    pub fn cosine_1d(delta: f64) -> KernelSpec {
        let params = KernelParams {
            d: 1,
            base: DMatrix::from_row_slice(1, 2, &[0.5, 0.5]),
            terms: vec![
                TrigTerm {
                    state: 0,
                    direction: 0,
                    frequency: vec![1.0],
                    amplitude: delta,
                    phase: 0.0,
                },
                TrigTerm {
                    state: 0,
                    direction: 1,
                    frequency: vec![1.0],
                    amplitude: -delta,
                    phase: 0.0,
                },
            ],
            amplitude_budget: 1.0,
        };
        KernelSpec::build(params).expect("cosine kernel is valid")
    }

    /// `d = 2`, two states, constant in `y`, exactly centered against the
    /// stationary measure `(2/3, 1/3)` of the standard two-state chain:
    /// `g(0) = (0.1, 0)`, `g(1) = (-0.2, 0)`.
    pub fn two_state_constant() -> KernelParams {
        KernelParams {
            d: 2,
            base: DMatrix::from_row_slice(
                2,
                4,
                &[
                    0.30, 0.20, 0.25, 0.25, //
                    0.15, 0.35, 0.25, 0.25,
                ],
            ),
            terms: Vec::new(),
            amplitude_budget: 1.0,
        }
    }

    /// `d = 2`, `n_states`-state, `y`-dependent table meant to be passed
    /// through [`KernelSpec::build_centered`]: state-staggered cosine
    /// perturbations on both axes plus a mixed-frequency term.
    pub fn perturbed_2d(n_states: usize, delta: f64) -> KernelParams {
        let base = DMatrix::from_fn(n_states, 4, |i, u| {
            let tilt = 0.04 * (i as f64 - (n_states as f64 - 1.0) / 2.0);
            match u {
                0 => 0.25 + tilt,
                1 => 0.25 - tilt,
                _ => 0.25,
            }
        });
        let mut terms = Vec::new();
        for state in 0..n_states {
            let sgn = if state % 2 == 0 { 1.0 } else { -1.0 };
            terms.push(TrigTerm {
                state,
                direction: 0,
                frequency: vec![1.0, 0.0],
                amplitude: sgn * delta,
                phase: 0.0,
            });
            terms.push(TrigTerm {
                state,
                direction: 1,
                frequency: vec![1.0, 0.0],
                amplitude: -sgn * delta,
                phase: 0.0,
            });
            terms.push(TrigTerm {
                state,
                direction: 2,
                frequency: vec![1.0, 1.0],
                amplitude: sgn * 0.6 * delta,
                phase: 0.3,
            });
            terms.push(TrigTerm {
                state,
                direction: 3,
                frequency: vec![1.0, 1.0],
                amplitude: -sgn * 0.6 * delta,
                phase: 0.3,
            });
        }
        KernelParams { d: 2, base, terms, amplitude_budget: 1.0 }
    }
}
