//! Two-dimensional deadlock-time regimes as the budget `lambda` approaches 2.
//!
//! The constant covariance at the corner is written as
//! `[[rho1^2, s rho1 rho2], [s rho1 rho2, rho2^2]]` with `|s| < 1`. The sign
//! of `s` separates three asymptotic regimes for `E(T_lambda)`:
//!
//! * `s > 0` (Positive): the main eigenvector points into the corner and the
//!   expected deadlock time stays bounded as `lambda -> 2`;
//! * `s < 0` (Negative): the main eigenvector runs along the anti-diagonal,
//!   the boundary traps the diffusion, and `E(T_lambda)` grows polynomially
//!   in `1/(2 - lambda)` with exponent between `beta_- = -s` and
//!   `beta_+ = s(s-3)/(1+s)`;
//! * `s = 0` (Null): logarithmic growth, `E(T_lambda) ~ -ln(2 - lambda)`.
//!
//! The module estimates the regime from Monte Carlo means over a
//! `lambda`-grid and exposes the radial diagnostics (`Q`, `A`, `Theta`) used
//! by the Bessel-comparison analysis of the absorption problem.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{domains, replica_rng};
use crate::rsde::{hit_time_with_threshold, DiffusionSpec};
use crate::stats::{self, LinearFit};

/// A grid point with censoring above this fraction is flagged unusable.
pub const CENSORING_FLAG_FRACTION: f64 = 0.2;
/// `|s|` below this maps to the Null regime.
pub const NULL_DEAD_ZONE: f64 = 1e-12;

/// Parameters of the corner covariance `[[r1^2, s r1 r2], [s r1 r2, r2^2]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceParams {
    pub rho1: f64,
    pub rho2: f64,
    pub s: f64,
}

impl CovarianceParams {
    pub fn new(rho1: f64, rho2: f64, s: f64) -> Result<Self> {
        if rho1 <= 0.0 || rho2 <= 0.0 {
            return Err(Error::InvalidSpec("rho1, rho2 must be positive".into()));
        }
        if s.abs() >= 1.0 {
            return Err(Error::InvalidSpec(format!("s = {s} must lie in (-1, 1)")));
        }
        Ok(Self { rho1, rho2, s })
    }

    /// The covariance matrix itself (positive definite for `|s| < 1`).
    pub fn matrix(&self) -> DMatrix<f64> {
        let off = self.s * self.rho1 * self.rho2;
        DMatrix::from_row_slice(
            2,
            2,
            &[self.rho1 * self.rho1, off, off, self.rho2 * self.rho2],
        )
    }

    /// Extract `(rho1, rho2, s)` from a 2x2 covariance matrix.
    pub fn from_matrix(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != 2 || a.ncols() != 2 {
            return Err(Error::InvalidSpec("covariance must be 2x2".into()));
        }
        let rho1 = a[(0, 0)].sqrt();
        let rho2 = a[(1, 1)].sqrt();
        if !(rho1 > 0.0 && rho2 > 0.0) {
            return Err(Error::InvalidSpec("diagonal must be positive".into()));
        }
        Self::new(rho1, rho2, a[(0, 1)] / (rho1 * rho2))
    }

    /// Constant-coefficient reflected diffusion with this covariance, zero
    /// drift, and threshold `lambda`.
    pub fn diffusion(&self, lambda: f64) -> Result<DiffusionSpec> {
        let sigma = crate::homogenize::matrix_sqrt(&self.matrix())?;
        DiffusionSpec::constant(vec![0.0, 0.0], sigma, lambda)
    }
}

/// Eigenstructure of the corner covariance.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub delta: f64,
    pub e1: [f64; 2],
    pub e2: [f64; 2],
}

/// Closed-form eigenvalues
/// `lambda_{1,2} = (rho1^2 + rho2^2 +- delta) / 2` with
/// `delta = sqrt(rho1^4 + rho2^4 - 2 (1 - 2 s^2) rho1^2 rho2^2)`, and the
/// associated eigenvectors (canonical basis when `s = 0`).
pub fn spectrum(params: &CovarianceParams) -> Spectrum {
    let (r1, r2, s) = (params.rho1, params.rho2, params.s);
    let (q1, q2) = (r1 * r1, r2 * r2);
    let delta = (q1 * q1 + q2 * q2 - 2.0 * (1.0 - 2.0 * s * s) * q1 * q2).sqrt();
    let lambda1 = 0.5 * (q1 + q2 + delta);
    let lambda2 = 0.5 * (q1 + q2 - delta);
    let (e1, e2) = if s.abs() <= NULL_DEAD_ZONE {
        if q1 >= q2 {
            ([1.0, 0.0], [0.0, 1.0])
        } else {
            ([0.0, 1.0], [1.0, 0.0])
        }
    } else {
        let w = (delta + q2 - q1) / (2.0 * s * r1 * r2);
        ([1.0, w], [-w, 1.0])
    };
    Spectrum { lambda1, lambda2, delta, e1, e2 }
}

/// Regime classification by the sign of `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Positive,
    Negative,
    Null,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Positive => f.write_str("Positive"),
            Regime::Negative => f.write_str("Negative"),
            Regime::Null => f.write_str("Null"),
        }
    }
}

pub fn classify(s: f64) -> Regime {
    if s.abs() <= NULL_DEAD_ZONE {
        Regime::Null
    } else if s > 0.0 {
        Regime::Positive
    } else {
        Regime::Negative
    }
}

/// Exponent window of the Negative regime: growth of `E(T_lambda)` in
/// `(2 - lambda)^-1` lies between `beta_- = -s` and
/// `beta_+ = s(s - 3)/(1 + s)`.
pub fn beta_bounds(s: f64) -> (f64, f64) {
    (-s, s * (s - 3.0) / (1.0 + s))
}

/// Fit verdict per regime.
#[derive(Debug, Clone)]
pub enum FitReport {
    /// `E(T)` against `-ln(2 - lambda)`.
    Null(LinearFit),
    /// `ln E(T)` against `-ln(2 - lambda)`; the slope estimates the exponent.
    Negative(LinearFit),
    /// Boundedness surrogate: largest mean over the grid relative to the
    /// mean at the first grid point.
    Positive { max_mean: f64, reference_mean: f64, ratio: f64 },
}

impl std::fmt::Display for FitReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitReport::Null(fit) => write!(
                f,
                "Null: E(T) ~ {:.4} * (-ln(2-lambda)) + {:.4}, R^2 = {:.4}",
                fit.slope, fit.intercept, fit.r_squared
            ),
            FitReport::Negative(fit) => write!(
                f,
                "Negative: slope beta_hat = {:.4}, R^2 = {:.4}",
                fit.slope, fit.r_squared
            ),
            FitReport::Positive { ratio, .. } => {
                write!(f, "Positive: bounded (ratio = {ratio:.4})")
            }
        }
    }
}

/// Deadlock-time statistics over a `lambda`-grid with regime classification.
#[derive(Debug, Clone)]
pub struct RegimeEstimate {
    pub lambda_grid: Vec<f64>,
    pub means: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub censored_fractions: Vec<f64>,
    /// Grid points whose censoring exceeds [`CENSORING_FLAG_FRACTION`].
    pub flagged: Vec<bool>,
    pub classification: Regime,
    pub fit: FitReport,
    /// `(beta_-, beta_+)` when the regime is Negative.
    pub beta_bounds: Option<(f64, f64)>,
}

impl RegimeEstimate {
    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|&f| f)
    }
}

/// Monte Carlo means of the deadlock time of `spec` from the origin across
/// `lambda_grid`, classified by the off-diagonal sign of the covariance at
/// the corner `(1, 1)`.
pub fn estimate_mean_deadlock(
    spec: &DiffusionSpec,
    lambda_grid: &[f64],
    trials: usize,
    dt: f64,
    t_cap: f64,
    master_seed: u64,
) -> Result<RegimeEstimate> {
    if spec.d != 2 {
        return Err(Error::InvalidSpec("regime estimation is two-dimensional".into()));
    }
    if lambda_grid.is_empty() || trials == 0 {
        return Err(Error::InvalidSpec("need a nonempty grid and trials >= 1".into()));
    }
    let sigma_corner = spec.dispersion_at(&[1.0, 1.0]);
    let a_corner = &sigma_corner * &sigma_corner;
    let params = CovarianceParams::from_matrix(&a_corner)?;
    let classification = classify(params.s);

    let x0 = [0.0, 0.0];
    let mut means = Vec::with_capacity(lambda_grid.len());
    let mut ses = Vec::with_capacity(lambda_grid.len());
    let mut censored_fractions = Vec::with_capacity(lambda_grid.len());
    let mut flagged = Vec::with_capacity(lambda_grid.len());
    for (gi, &lambda) in lambda_grid.iter().enumerate() {
        let results: Vec<Option<f64>> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let replica = (gi * trials + trial) as u64;
                let mut rng = replica_rng(master_seed, domains::REGIMES, replica);
                hit_time_with_threshold(spec, &x0, lambda, dt, t_cap, &mut rng)
                    .expect("origin start is valid")
                    .t_hit
            })
            .collect();
        let samples: Vec<f64> = results.iter().filter_map(|&t| t).collect();
        let censored = trials - samples.len();
        let frac = censored as f64 / trials as f64;
        let (mean, se) =
            if samples.is_empty() { (f64::NAN, f64::NAN) } else { stats::mean_se(&samples) };
        means.push(mean);
        ses.push(se);
        censored_fractions.push(frac);
        flagged.push(frac > CENSORING_FLAG_FRACTION);
    }

    // Fits use the unflagged grid points only.
    let usable: Vec<usize> = (0..lambda_grid.len()).filter(|&i| !flagged[i]).collect();
    if usable.len() < 2 {
        return Err(Error::InvalidSpec(
            "fewer than two usable grid points (censoring too high)".into(),
        ));
    }
    let xs: Vec<f64> = usable.iter().map(|&i| -(2.0 - lambda_grid[i]).ln()).collect();
    let fit = match classification {
        Regime::Null => {
            let ys: Vec<f64> = usable.iter().map(|&i| means[i]).collect();
            FitReport::Null(stats::linear_fit(&xs, &ys))
        }
        Regime::Negative => {
            let ys: Vec<f64> = usable.iter().map(|&i| means[i].ln()).collect();
            FitReport::Negative(stats::linear_fit(&xs, &ys))
        }
        Regime::Positive => {
            let reference_mean = means[usable[0]];
            let max_mean = usable.iter().map(|&i| means[i]).fold(f64::NEG_INFINITY, f64::max);
            FitReport::Positive { max_mean, reference_mean, ratio: max_mean / reference_mean }
        }
    };
    let bounds = match classification {
        Regime::Negative => Some(beta_bounds(params.s)),
        _ => None,
    };
    Ok(RegimeEstimate {
        lambda_grid: lambda_grid.to_vec(),
        means,
        standard_errors: ses,
        censored_fractions,
        flagged,
        classification,
        fit,
        beta_bounds: bounds,
    })
}

/// Radial diagnostics at a point `x` of the unit square, built from the
/// corner covariance recentered at the origin:
/// `Q = <x, a^{-1} x>`, the correction `Z`, the corrected radius
/// `A = sqrt(Q) + Z`, and the reflection weights `kappa1`, `kappa2`.
#[derive(Debug, Clone, Copy)]
pub struct QDiagnostic {
    pub q: f64,
    pub q_sqrt: f64,
    pub z: f64,
    pub a: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

pub fn q_diagnostic(params: &CovarianceParams, x: &[f64]) -> QDiagnostic {
    debug_assert!(x.len() == 2);
    let (r1, r2, s) = (params.rho1, params.rho2, params.s);
    let one_minus_s2 = 1.0 - s * s;
    let (u, v) = (x[0] / r1, x[1] / r2);
    let q = (u * u + v * v - 2.0 * s * u * v) / one_minus_s2;
    let q_sqrt = q.sqrt();
    let z = s / one_minus_s2.sqrt() * (u + v);
    let kappa1 = (1.0 / (r1 * r1) - s / (r1 * r2) * x[1]) / one_minus_s2;
    let kappa2 = (1.0 / (r2 * r2) - s / (r1 * r2) * x[0]) / one_minus_s2;
    QDiagnostic { q, q_sqrt, z, a: q_sqrt + z, kappa1, kappa2 }
}

/// `Q` through the bilinear form with a numerically inverted matrix; the
/// expanded formula above must agree to machine precision.
pub fn q_bilinear(params: &CovarianceParams, x: &[f64]) -> f64 {
    let inv = params.matrix().try_inverse().expect("positive definite");
    let xv = nalgebra::DVector::from_row_slice(x);
    (xv.transpose() * inv * xv)[(0, 0)]
}

/// Drift factor of the Bessel-comparison process `A^beta`:
/// `Theta(beta, s) = (beta - 1)(1 + 2 s gamma + 2 s^2 (1 - s)^{-1}) + 1 + s gamma`.
///
/// `gamma` is the caller-supplied ratio `Z / (s sqrt(Q))`, which stays in
/// `[1 - eps, sqrt(2) + eps]` for `s` near zero.
pub fn theta(params: &CovarianceParams, beta: f64, gamma_t: f64) -> f64 {
    let s = params.s;
    (beta - 1.0) * (1.0 + 2.0 * s * gamma_t + 2.0 * s * s / (1.0 - s)) + 1.0 + s * gamma_t
}

/// Empirical equivalence constants between `A` and `sqrt(Q)` along a path:
/// min and max of `A / sqrt(Q)` over points with `Q >= 1e-12`.
#[derive(Debug, Clone, Copy)]
pub struct EquivalenceBounds {
    pub c_lower: f64,
    pub c_upper: f64,
    pub n_points: usize,
}

pub fn equivalence_check(
    params: &CovarianceParams,
    path: &crate::rsde::RsdePath,
) -> EquivalenceBounds {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut n = 0usize;
    for x in &path.x {
        let diag = q_diagnostic(params, x);
        if diag.q < 1e-12 {
            continue;
        }
        let ratio = diag.a / diag.q_sqrt;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        n += 1;
    }
    EquivalenceBounds { c_lower: lo, c_upper: hi, n_points: n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spectrum_strong_positive_correlation() {
        let p = CovarianceParams::new(1.0, 1.0, 0.9).unwrap();
        let spec = spectrum(&p);
        assert_abs_diff_eq!(spec.delta, 1.8, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.lambda1, 1.9, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.lambda2, 0.1, epsilon = 1e-12);
        // E1 proportional to (1, 1).
        assert_abs_diff_eq!(spec.e1[1] / spec.e1[0], 1.0, epsilon = 1e-12);
        assert!(spec.e1[0] * spec.e1[1] > 0.0);
    }

    #[test]
    fn spectrum_strong_negative_correlation() {
        let p = CovarianceParams::new(1.0, 1.0, -0.9).unwrap();
        let spec = spectrum(&p);
        // E1 proportional to (1, -1).
        assert_abs_diff_eq!(spec.e1[1] / spec.e1[0], -1.0, epsilon = 1e-12);
        assert!(spec.e1[0] * spec.e1[1] < 0.0);
    }

    #[test]
    fn spectrum_diagonal_case() {
        let p = CovarianceParams::new(1.5, 0.5, 0.0).unwrap();
        let spec = spectrum(&p);
        assert_abs_diff_eq!(spec.lambda1, 2.25, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.lambda2, 0.25, epsilon = 1e-12);
        assert_eq!(spec.e1, [1.0, 0.0]);
        assert_eq!(spec.e2, [0.0, 1.0]);
    }

    #[test]
    fn spectrum_reconstructs_matrix() {
        for &(r1, r2, s) in
            &[(1.0, 1.0, 0.9), (1.3, 0.7, -0.4), (0.8, 1.1, 0.05), (1.0, 2.0, 0.0)]
        {
            let p = CovarianceParams::new(r1, r2, s).unwrap();
            let spec = spectrum(&p);
            // Orthogonality.
            let dot = spec.e1[0] * spec.e2[0] + spec.e1[1] * spec.e2[1];
            assert!(dot.abs() <= 1e-10, "eigenvectors not orthogonal: {dot}");
            // lambda1 lambda2 = det, lambda1 + lambda2 = trace.
            let a = p.matrix();
            let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            assert_abs_diff_eq!(spec.lambda1 * spec.lambda2, det, epsilon = 1e-10);
            assert_abs_diff_eq!(
                spec.lambda1 + spec.lambda2,
                a[(0, 0)] + a[(1, 1)],
                epsilon = 1e-10
            );
            // Projection reconstruction.
            let mut rec = DMatrix::<f64>::zeros(2, 2);
            for (lambda, e) in [(spec.lambda1, spec.e1), (spec.lambda2, spec.e2)] {
                let norm2 = e[0] * e[0] + e[1] * e[1];
                for k in 0..2 {
                    for l in 0..2 {
                        rec[(k, l)] += lambda * e[k] * e[l] / norm2;
                    }
                }
            }
            assert!((rec - a).amax() <= 1e-10);
        }
    }

    #[test]
    fn classification_cases() {
        assert_eq!(classify(0.9), Regime::Positive);
        assert_eq!(classify(-0.9), Regime::Negative);
        assert_eq!(classify(0.0), Regime::Null);
        assert_eq!(classify(1e-13), Regime::Null);
    }

    #[test]
    fn beta_bounds_ordering_on_sweep() {
        let mut s = -0.95;
        while s < 0.0 {
            let (lo, hi) = beta_bounds(s);
            assert!(lo > 0.0 && hi > 0.0, "bounds must be positive at s = {s}");
            assert!(lo < hi, "beta_- < beta_+ violated at s = {s}");
            s += 0.05;
        }
        let (lo, hi) = beta_bounds(-0.5);
        assert_abs_diff_eq!(lo, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 3.5, epsilon = 1e-15);
    }

    #[test]
    fn q_diagnostic_at_origin_and_corner() {
        let s = 0.3;
        let p = CovarianceParams::new(1.0, 1.0, s).unwrap();
        let d0 = q_diagnostic(&p, &[0.0, 0.0]);
        assert_eq!(d0.q, 0.0);
        assert_eq!(d0.z, 0.0);
        assert_eq!(d0.a, 0.0);
        assert_abs_diff_eq!(d0.kappa1, 1.0 / (1.0 - s * s), epsilon = 1e-15);
        assert_abs_diff_eq!(d0.kappa2, 1.0 / (1.0 - s * s), epsilon = 1e-15);
        let d11 = q_diagnostic(&p, &[1.0, 1.0]);
        assert_abs_diff_eq!(d11.q, 2.0 / (1.0 + s), epsilon = 1e-14);
        assert_abs_diff_eq!(d11.kappa1, 1.0 / (1.0 + s), epsilon = 1e-14);
        assert_abs_diff_eq!(d11.kappa2, 1.0 / (1.0 + s), epsilon = 1e-14);
    }

    #[test]
    fn q_expanded_equals_bilinear() {
        let p = CovarianceParams::new(1.3, 0.8, -0.45).unwrap();
        let mut rng = crate::rng::replica_rng(1, crate::rng::domains::REGIMES, 0);
        use rand::Rng;
        for _ in 0..200 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let expanded = q_diagnostic(&p, &x).q;
            let bilinear = q_bilinear(&p, &x);
            assert_abs_diff_eq!(expanded, bilinear, epsilon = 1e-12);
        }
    }

    #[test]
    fn a_equals_q_sqrt_when_s_vanishes() {
        let p = CovarianceParams::new(1.0, 1.0, 0.0).unwrap();
        let d = q_diagnostic(&p, &[0.3, 0.8]);
        assert_eq!(d.z, 0.0);
        assert_eq!(d.a, d.q_sqrt);
    }

    #[test]
    fn theta_examples() {
        let p1 = CovarianceParams::new(1.0, 1.0, 0.37).unwrap();
        // beta = 1 collapses the first bracket.
        assert_abs_diff_eq!(theta(&p1, 1.0, 0.8), 1.0 + 0.37 * 0.8, epsilon = 1e-15);
        // s = 0 gives Theta = beta.
        let p0 = CovarianceParams::new(1.0, 1.0, 0.0).unwrap();
        for beta in [-1.0, 0.0, 0.5, 2.0] {
            assert_abs_diff_eq!(theta(&p0, beta, 1.1), beta, epsilon = 1e-15);
        }
        // Arithmetic substitution at s = 0.1, gamma = 1, beta = 0:
        // -(1 + 0.2 + 0.02/0.9) + 1.1 = -0.12222..; negative, backing the
        // claim that Theta <= 0 for small beta > 0 when s > 0.
        let ps = CovarianceParams::new(1.0, 1.0, 0.1).unwrap();
        let value = theta(&ps, 0.0, 1.0);
        assert_abs_diff_eq!(value, -(1.0 + 0.2 + 0.02 / 0.9) + 1.1, epsilon = 1e-15);
        assert!(value < 0.0);
    }

    #[test]
    fn equivalence_constants_s_zero() {
        let p = CovarianceParams::new(1.0, 1.0, 0.0).unwrap();
        let spec = p.diffusion(1.9).unwrap();
        let path = crate::rsde::simulate_rsde(&spec, &[0.5, 0.5], 5.0, 1e-3, 2).unwrap();
        let eq = equivalence_check(&p, &path);
        assert_abs_diff_eq!(eq.c_lower, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eq.c_upper, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn equivalence_band_for_moderate_s() {
        let s = 0.3;
        let p = CovarianceParams::new(1.0, 1.0, s).unwrap();
        let spec = p.diffusion(1.9).unwrap();
        let path = crate::rsde::simulate_rsde(&spec, &[0.5, 0.5], 10.0, 1e-3, 3).unwrap();
        let eq = equivalence_check(&p, &path);
        assert!(eq.n_points > 0);
        assert!(eq.c_lower > 0.0 && eq.c_upper.is_finite());
        // Ratio = 1 + s gamma with gamma in [1 - eps, sqrt(2) + eps]: at
        // s = 0.3 the admissible window is eps = 0.3.
        let eps = 0.3;
        assert!(eq.c_lower >= 1.0 + s * (1.0 - eps) - 1e-9, "lower {}", eq.c_lower);
        assert!(
            eq.c_upper <= 1.0 + s * (2.0f64.sqrt() + eps) + 1e-9,
            "upper {}",
            eq.c_upper
        );
    }

    #[test]
    fn equivalence_stays_positive_for_negative_s() {
        let p = CovarianceParams::new(1.0, 1.0, -0.6).unwrap();
        let spec = p.diffusion(1.9).unwrap();
        let path = crate::rsde::simulate_rsde(&spec, &[0.5, 0.5], 10.0, 1e-3, 4).unwrap();
        let eq = equivalence_check(&p, &path);
        assert!(eq.c_lower > 0.0, "lower bound {} must stay positive", eq.c_lower);
    }

    #[test]
    fn small_budget_null_sweep_is_monotone_and_loglike() {
        let p = CovarianceParams::new(1.0, 1.0, 0.0).unwrap();
        let spec = p.diffusion(1.5).unwrap();
        let grid = [1.5, 1.75, 1.875];
        let est = estimate_mean_deadlock(&spec, &grid, 400, 1e-3, 500.0, 5).unwrap();
        assert_eq!(est.classification, Regime::Null);
        assert!(!est.any_flagged());
        // Monotone within two combined standard errors.
        for i in 1..grid.len() {
            let slack = 2.0 * (est.standard_errors[i] + est.standard_errors[i - 1]);
            assert!(
                est.means[i] + slack >= est.means[i - 1],
                "means not monotone: {:?}",
                est.means
            );
        }
        match est.fit {
            FitReport::Null(fit) => assert!(fit.slope > 0.0),
            ref other => panic!("expected Null fit, got {other:?}"),
        }
        assert!(est.beta_bounds.is_none());
    }

    #[test]
    fn covariance_params_validation() {
        assert!(CovarianceParams::new(1.0, 1.0, 0.99).is_ok());
        assert!(CovarianceParams::new(1.0, 1.0, 1.0).is_err());
        assert!(CovarianceParams::new(0.0, 1.0, 0.5).is_err());
        let p = CovarianceParams::new(1.2, 0.9, -0.3).unwrap();
        let back = CovarianceParams::from_matrix(&p.matrix()).unwrap();
        assert_abs_diff_eq!(back.rho1, 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(back.rho2, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(back.s, -0.3, epsilon = 1e-12);
    }
}
