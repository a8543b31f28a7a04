//! Corrector equation and homogenized coefficients.
//!
//! For each `y`, the corrector `v(·, y)` is the unique mu-centered solution
//! of the Poisson system `(I - P) v = g(·, y)` over the environment states.
//! It turns the walk plus a bounded correction into a martingale, and the
//! effective diffusion coefficients of the rescaled limit are
//!
//! ```text
//! a_bar(y) = sum_i mu(i) [alpha + g v^t + v g^t - 2 g g^t](i, y)
//! b_bar(y) = sum_i mu(i) [(grad v - grad g) g](i, y)
//! ```
//!
//! with `sigma_bar` the symmetric PSD square root of `a_bar`. The module
//! also exposes the discrete drift `b^(m)`, its reflected variant `c^(m)`,
//! and the bracket increment `a^(m)` together with its `m -> infinity` limit
//! `a(i, y)`, so convergence towards the homogenized quantities is directly
//! testable.

use nalgebra::{DMatrix, DVector, LU};

use crate::env::{ergodicity_certificate, stationary_distribution, EnvSpec, ErgodicityCert};
use crate::error::{Error, Result};
use crate::kernel::{for_each_grid_point, KernelSpec, CENTERING_TOL};

/// Residual / centering tolerance for the corrector solve.
pub const POISSON_TOL: f64 = 1e-10;
/// Centering tolerance on the Poisson right-hand side.
pub const RHS_CENTER_TOL: f64 = 1e-9;
/// Eigenvalue clamp allowed when taking the matrix square root.
pub const SQRT_CLAMP_TOL: f64 = 1e-10;

/// Corrector data at one query point `y`.
#[derive(Debug, Clone)]
pub struct Corrector {
    /// `N x d`: row `i` is `v(i, y)`.
    pub v: DMatrix<f64>,
    /// Per state `i`, the `d x d` Jacobian with entry `(k, j) = dv_k/dy_j`.
    pub grad_v: Vec<DMatrix<f64>>,
}

/// Effective coefficients of the homogenized diffusion, evaluated pointwise
/// in `y` on demand (callers cache).
pub struct EffectiveCoeffs {
    env: EnvSpec,
    kernel: KernelSpec,
    mu: DVector<f64>,
    cert: ErgodicityCert,
    /// LU of `I - P + 1 mu^t`; solving against it yields the centered
    /// Poisson solution directly.
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    ellipticity_floor: f64,
}

impl std::fmt::Debug for EffectiveCoeffs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EffectiveCoeffs")
            .field("n_states", &self.env.n_states())
            .field("d", &self.kernel.d())
            .field("ellipticity_floor", &self.ellipticity_floor)
            .finish()
    }
}

/// The unique mu-centered solution of `(I - P) v = g_column`.
///
/// Direct dense solve of the augmented system: the rank-one update
/// `I - P + 1 mu^t` is nonsingular exactly when the chain is irreducible, and
/// its solution satisfies both `(I - P) v = g` and `mu . v = 0`.
pub fn solve_poisson(env: &EnvSpec, g_column: &DVector<f64>) -> Result<DVector<f64>> {
    let mu = stationary_distribution(env)?.mu;
    let centered = mu.dot(g_column).abs();
    if centered > RHS_CENTER_TOL {
        return Err(Error::NotCentered { residual: centered, tolerance: RHS_CENTER_TOL });
    }
    let lu = augmented_lu(env, &mu);
    lu.solve(g_column)
        .ok_or_else(|| Error::SingularSystem("Poisson system".into()))
}

fn augmented_lu(env: &EnvSpec, mu: &DVector<f64>) -> LU<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let n = env.n_states();
    let p = env.transition_matrix();
    let mut m = DMatrix::<f64>::identity(n, n) - p;
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += mu[j];
        }
    }
    m.lu()
}

/// Truncated Neumann series `sum_{n <= n*} (P^n - 1 mu^t) g` with `n*` chosen
/// from the ergodicity certificate so that `gamma c^(n*) <= tol`.
///
/// Independent route to the corrector; kept as a cross-check oracle.
pub fn neumann_poisson(
    env: &EnvSpec,
    cert: &ErgodicityCert,
    mu: &DVector<f64>,
    g_column: &DVector<f64>,
    tol: f64,
) -> DVector<f64> {
    let n_star = cert.neumann_truncation(tol);
    let p = env.transition_matrix();
    let shift = mu.dot(g_column);
    let ones = DVector::from_element(env.n_states(), 1.0);
    let mut cur = g_column.clone();
    let mut acc = &cur - &ones * shift;
    for _ in 0..n_star {
        cur = p * cur;
        acc += &cur - &ones * shift;
    }
    acc
}

impl EffectiveCoeffs {
    /// Requires the kernel to be centered against the invariant measure of
    /// `env` (assumption A.4); rejects otherwise.
    pub fn new(env: &EnvSpec, kernel: &KernelSpec) -> Result<Self> {
        if env.n_states() != kernel.n_states() {
            return Err(Error::InvalidSpec(format!(
                "environment has {} states, kernel {}",
                env.n_states(),
                kernel.n_states()
            )));
        }
        let mu = stationary_distribution(env)?.mu;
        let cert = ergodicity_certificate(env)?;
        let residual = centering_residual(env, kernel, &mu);
        if residual > CENTERING_TOL {
            return Err(Error::NotCentered { residual, tolerance: CENTERING_TOL });
        }
        let lu = augmented_lu(env, &mu);
        let d = kernel.d();
        // Floor from the final claim of the homogenization theorem: the
        // lowest eigenvalue of a_bar(y) dominates the lowest eigenvalue of
        // the mu-average of alpha - g g^t at the same y.
        let mut floor = f64::INFINITY;
        for_each_grid_point(d, crate::kernel::GRID_POINTS_PER_AXIS, 0.0, 2.0, |y| {
            let m = average_alpha_minus_ggt(env, kernel, &mu, y);
            floor = floor.min(min_symmetric_eigenvalue(&m));
        });
        Ok(Self { env: env.clone(), kernel: kernel.clone(), mu, cert, lu, ellipticity_floor: floor })
    }

    pub fn env(&self) -> &EnvSpec {
        &self.env
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn cert(&self) -> &ErgodicityCert {
        &self.cert
    }

    /// Lower bound for the smallest eigenvalue of `a_bar` over the grid.
    pub fn ellipticity_floor(&self) -> f64 {
        self.ellipticity_floor
    }

    /// `N x d` corrector matrix `v(·, y)` (row per state).
    pub fn v_matrix(&self, y: &[f64]) -> DMatrix<f64> {
        let g = self.g_matrix(y);
        self.lu.solve(&g).expect("factorization is nonsingular by construction")
    }

    fn g_matrix(&self, y: &[f64]) -> DMatrix<f64> {
        let (n, d) = (self.env.n_states(), self.kernel.d());
        DMatrix::from_fn(n, d, |i, k| self.kernel.eval_g(i, y)[k])
    }

    /// Corrector and its `y`-Jacobian at `y`. The Jacobian is obtained by
    /// solving the Poisson system with right-hand side `dg/dy_j`
    /// (differentiating the system in `y`), exact to solver precision.
    pub fn corrector(&self, y: &[f64]) -> Corrector {
        let (n, d) = (self.env.n_states(), self.kernel.d());
        let v = self.v_matrix(y);
        let grads: Vec<DMatrix<f64>> = (0..n).map(|i| self.kernel.grad_g(i, y)).collect();
        let mut grad_v = vec![DMatrix::zeros(d, d); n];
        for j in 0..d {
            let rhs = DMatrix::from_fn(n, d, |i, k| grads[i][(k, j)]);
            let x = self.lu.solve(&rhs).expect("factorization is nonsingular");
            for i in 0..n {
                for k in 0..d {
                    grad_v[i][(k, j)] = x[(i, k)];
                }
            }
        }
        Corrector { v, grad_v }
    }

    /// Max over coordinates of the Poisson residual and the centering defect
    /// of a corrector at `y`; both must stay below [`POISSON_TOL`].
    pub fn corrector_residuals(&self, y: &[f64], corr: &Corrector) -> (f64, f64) {
        let p = self.env.transition_matrix();
        let g = self.g_matrix(y);
        let lhs = &corr.v - p * &corr.v;
        let resid = (lhs - g).amax();
        let centering = (corr.v.transpose() * &self.mu).amax();
        (resid, centering)
    }

    /// Homogenized covariance `a_bar(y)`.
    pub fn a_bar(&self, y: &[f64]) -> DMatrix<f64> {
        let d = self.kernel.d();
        let v = self.v_matrix(y);
        let mut out = DMatrix::zeros(d, d);
        for i in 0..self.env.n_states() {
            let w = self.mu[i];
            let alpha = self.kernel.eval_alpha(i, y);
            let g = self.kernel.eval_g(i, y);
            for k in 0..d {
                for l in 0..d {
                    let cross = g[k] * v[(i, l)] + v[(i, k)] * g[l] - 2.0 * g[k] * g[l];
                    out[(k, l)] += w * (alpha[(k, l)] + cross);
                }
            }
        }
        out
    }

    /// Homogenized drift `b_bar(y)`, coordinate `k` given by
    /// `sum_i mu(i) sum_j [d(v_k - g_k)/dy_j] g_j (i, y)`.
    pub fn b_bar(&self, y: &[f64]) -> Vec<f64> {
        let d = self.kernel.d();
        let corr = self.corrector(y);
        let mut out = vec![0.0; d];
        for i in 0..self.env.n_states() {
            let w = self.mu[i];
            let g = self.kernel.eval_g(i, y);
            let grad_g = self.kernel.grad_g(i, y);
            for k in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += (corr.grad_v[i][(k, j)] - grad_g[(k, j)]) * g[j];
                }
                out[k] += w * acc;
            }
        }
        out
    }

    /// Symmetric PSD square root of `a_bar(y)` via spectral decomposition.
    /// Fails if an eigenvalue has to be clamped by more than
    /// [`SQRT_CLAMP_TOL`] (ellipticity should prevent it).
    pub fn sigma_bar(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        matrix_sqrt(&self.a_bar(y))
    }

    /// Discrete drift increment
    /// `b^(m)(i,y) = sum_u p(i,y,u) [(v - g)(i, y + u/m) - (v - g)(i, y)]`.
    pub fn discrete_drift_bm(&self, i: usize, y: &[f64], m: usize) -> Vec<f64> {
        let p = self.kernel.eval_p(i, y);
        self.drift_increment(i, y, m, &p)
    }

    /// Same sum with the reflected weights `q(i,y,·)`; `y` must lie in the
    /// closed unit cube.
    pub fn discrete_drift_cm(&self, i: usize, y: &[f64], m: usize) -> Result<Vec<f64>> {
        let q = self.kernel.reflected_step_kernel(i, y)?;
        Ok(self.drift_increment(i, y, m, &q))
    }

    fn drift_increment(&self, i: usize, y: &[f64], m: usize, weights: &[f64]) -> Vec<f64> {
        assert!(m >= 1);
        let d = self.kernel.d();
        let dirs = self.kernel.directions();
        let v0 = self.v_matrix(y);
        let g0 = self.kernel.eval_g(i, y);
        let mut out = vec![0.0; d];
        let mut shifted = y.to_vec();
        for u in 0..2 * d {
            if weights[u] == 0.0 {
                continue;
            }
            let axis = dirs.axis(u);
            shifted[axis] = y[axis] + dirs.sign(u) as f64 / m as f64;
            let vu = self.v_matrix(&shifted);
            let gu = self.kernel.eval_g(i, &shifted);
            for k in 0..d {
                out[k] += weights[u] * ((vu[(i, k)] - gu[k]) - (v0[(i, k)] - g0[k]));
            }
            shifted[axis] = y[axis];
        }
        out
    }

    /// Pointwise limit of `m b^(m)`: `(grad v - grad g) g` at `(i, y)`.
    pub fn drift_limit(&self, i: usize, y: &[f64]) -> Vec<f64> {
        let d = self.kernel.d();
        let corr = self.corrector(y);
        let g = self.kernel.eval_g(i, y);
        let grad_g = self.kernel.grad_g(i, y);
        (0..d)
            .map(|k| (0..d).map(|j| (corr.grad_v[i][(k, j)] - grad_g[(k, j)]) * g[j]).sum())
            .collect()
    }

    /// Explicit constant for the `|b^(m)| <= C/m` (and `|c^(m)| <= C/m`)
    /// bounds: twice the Lipschitz budget of `v - g` times the number of
    /// directions.
    pub fn drift_bound_constant(&self) -> f64 {
        let grad_g_bound = 2.0 * self.kernel.lipschitz_bound;
        let geometric = self.cert.gamma / (1.0 - self.cert.c);
        let grad_v_minus_g_bound = (1.0 + geometric) * grad_g_bound;
        2.0 * grad_v_minus_g_bound * (2 * self.kernel.d()) as f64
    }

    /// Conditional-variance bracket increment of the corrected walk:
    ///
    /// ```text
    /// a^(m)(i,y) = [alpha - (v + b^(m))(v + b^(m))^t](i,y)
    ///            + sum_u p(i,y,u) [P(vv^t) + u (Pv)^t + (Pv) u^t](i, y + u/m)
    /// ```
    pub fn discrete_bracket_am(&self, i: usize, y: &[f64], m: usize) -> DMatrix<f64> {
        assert!(m >= 1);
        let d = self.kernel.d();
        let n = self.env.n_states();
        let p_mat = self.env.transition_matrix();
        let dirs = self.kernel.directions();
        let probs = self.kernel.eval_p(i, y);
        let bm = self.discrete_drift_bm(i, y, m);
        let v0 = self.v_matrix(y);

        let mut out = self.kernel.eval_alpha(i, y);
        for k in 0..d {
            for l in 0..d {
                out[(k, l)] -= (v0[(i, k)] + bm[k]) * (v0[(i, l)] + bm[l]);
            }
        }

        let mut shifted = y.to_vec();
        for u in 0..2 * d {
            if probs[u] == 0.0 {
                continue;
            }
            let axis = dirs.axis(u);
            let sign = dirs.sign(u) as f64;
            shifted[axis] = y[axis] + sign / m as f64;
            let vu = self.v_matrix(&shifted);
            // (Pv)(i, ·) and P(vv^t)(i, ·) at the shifted point.
            let mut pv = vec![0.0; d];
            let mut pvvt = DMatrix::<f64>::zeros(d, d);
            for j in 0..n {
                let w = p_mat[(i, j)];
                for k in 0..d {
                    pv[k] += w * vu[(j, k)];
                    for l in 0..d {
                        pvvt[(k, l)] += w * vu[(j, k)] * vu[(j, l)];
                    }
                }
            }
            for k in 0..d {
                for l in 0..d {
                    let mut term: f64 = pvvt[(k, l)];
                    if k == axis {
                        term += sign * pv[l];
                    }
                    if l == axis {
                        term += pv[k] * sign;
                    }
                    out[(k, l)] += probs[u] * term;
                }
            }
            shifted[axis] = y[axis];
        }
        out
    }

    /// Uniform limit of `a^(m)`:
    /// `a(i,y) = alpha + [g v^t + v g^t - 2 g g^t + P(vv^t) - v v^t](i,y)`.
    pub fn limit_a(&self, i: usize, y: &[f64]) -> DMatrix<f64> {
        let d = self.kernel.d();
        let n = self.env.n_states();
        let p_mat = self.env.transition_matrix();
        let v = self.v_matrix(y);
        let g = self.kernel.eval_g(i, y);
        let mut out = self.kernel.eval_alpha(i, y);
        for k in 0..d {
            for l in 0..d {
                out[(k, l)] += g[k] * v[(i, l)] + v[(i, k)] * g[l]
                    - 2.0 * g[k] * g[l]
                    - v[(i, k)] * v[(i, l)];
                for j in 0..n {
                    out[(k, l)] += p_mat[(i, j)] * v[(j, k)] * v[(j, l)];
                }
            }
        }
        out
    }

    /// Entrywise residual of the algebraic identity
    /// `int (v g^t + g v^t - g g^t) dmu = int (v v^t - (Pv)(Pv)^t) dmu` at `y`.
    pub fn identity_residual(&self, y: &[f64]) -> f64 {
        let d = self.kernel.d();
        let n = self.env.n_states();
        let p_mat = self.env.transition_matrix();
        let v = self.v_matrix(y);
        let mut lhs = DMatrix::<f64>::zeros(d, d);
        let mut rhs = DMatrix::<f64>::zeros(d, d);
        for i in 0..n {
            let w = self.mu[i];
            let g = self.kernel.eval_g(i, y);
            let mut pv = vec![0.0; d];
            for j in 0..n {
                for k in 0..d {
                    pv[k] += p_mat[(i, j)] * v[(j, k)];
                }
            }
            for k in 0..d {
                for l in 0..d {
                    lhs[(k, l)] +=
                        w * (v[(i, k)] * g[l] + g[k] * v[(i, l)] - g[k] * g[l]);
                    rhs[(k, l)] += w * (v[(i, k)] * v[(i, l)] - pv[k] * pv[l]);
                }
            }
        }
        (lhs - rhs).amax()
    }

    /// Smallest eigenvalue of `int (v v^t - (Pv)(Pv)^t) dmu` at `y`; the
    /// Schwarz inequality makes it nonnegative (up to rounding).
    pub fn schwarz_min_eigenvalue(&self, y: &[f64]) -> f64 {
        let d = self.kernel.d();
        let n = self.env.n_states();
        let p_mat = self.env.transition_matrix();
        let v = self.v_matrix(y);
        let mut m = DMatrix::<f64>::zeros(d, d);
        for i in 0..n {
            let w = self.mu[i];
            let mut pv = vec![0.0; d];
            for j in 0..n {
                for k in 0..d {
                    pv[k] += p_mat[(i, j)] * v[(j, k)];
                }
            }
            for k in 0..d {
                for l in 0..d {
                    m[(k, l)] += w * (v[(i, k)] * v[(i, l)] - pv[k] * pv[l]);
                }
            }
        }
        min_symmetric_eigenvalue(&m)
    }

    /// `mu`-average of `alpha - g g^t` at `y` (the ellipticity reference).
    pub fn alpha_minus_ggt_average(&self, y: &[f64]) -> DMatrix<f64> {
        average_alpha_minus_ggt(&self.env, &self.kernel, &self.mu, y)
    }
}

fn centering_residual(env: &EnvSpec, kernel: &KernelSpec, mu: &DVector<f64>) -> f64 {
    if let Some(r) = kernel.centering_residual {
        return r;
    }
    let mut worst: f64 = 0.0;
    for_each_grid_point(kernel.d(), crate::kernel::GRID_POINTS_PER_AXIS, 0.0, 2.0, |y| {
        let mut mean = vec![0.0; kernel.d()];
        for i in 0..env.n_states() {
            let g = kernel.eval_g(i, y);
            for k in 0..kernel.d() {
                mean[k] += mu[i] * g[k];
            }
        }
        for k in 0..kernel.d() {
            worst = worst.max(mean[k].abs());
        }
    });
    worst
}

fn average_alpha_minus_ggt(
    env: &EnvSpec,
    kernel: &KernelSpec,
    mu: &DVector<f64>,
    y: &[f64],
) -> DMatrix<f64> {
    let d = kernel.d();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 0..env.n_states() {
        let alpha = kernel.eval_alpha(i, y);
        let g = kernel.eval_g(i, y);
        for k in 0..d {
            for l in 0..d {
                m[(k, l)] += mu[i] * (alpha[(k, l)] - g[k] * g[l]);
            }
        }
    }
    m
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => {
            let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
            0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt()
        }
        _ => m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min),
    }
}

/// Symmetric PSD square root via spectral decomposition, clamping
/// eigenvalues at zero; clamps beyond [`SQRT_CLAMP_TOL`] are an error.
pub fn matrix_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = a.clone().symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < 0.0 {
            if -*v > SQRT_CLAMP_TOL {
                return Err(Error::InvalidSpec(format!(
                    "matrix square root clamped a negative eigenvalue {v:.3e}"
                )));
            }
            *v = 0.0;
        }
    }
    let d = a.nrows();
    let mut out = DMatrix::zeros(d, d);
    for r in 0..d {
        let lambda_sqrt = vals[r].sqrt();
        let col = eig.eigenvectors.column(r);
        for k in 0..d {
            for l in 0..d {
                out[(k, l)] += lambda_sqrt * col[k] * col[l];
            }
        }
    }
    Ok(out)
}
