//! The limiting reflected SDE on the unit hypercube,
//!
//! ```text
//! dX = b(X) dt + dH - dK + sigma(X) dB,
//! ```
//!
//! integrated with the projection (clamp) Euler scheme: the proposal is
//! clamped back into `[0,1]^d` componentwise and the clipped mass is credited
//! to the local-time accumulators `H` (lower faces) and `K` (upper faces).
//! The clamp makes the least-action complementarity exact at every step:
//! `dH_l > 0` only where the post-projection coordinate is exactly `0`, and
//! `dK_l > 0` only where it is exactly `1`.
//!
//! [`simulate_unfolded`] provides the independent oracle: an *unreflected*
//! diffusion with period-2 symmetrized coefficients whose image under the
//! fold map has the same law as the reflected process.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::homogenize::{matrix_sqrt, min_symmetric_eigenvalue, EffectiveCoeffs};
use crate::rng::{domains, replica_rng};

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum Coeffs {
    Constant { drift: Vec<f64>, dispersion: DMatrix<f64> },
    Varying { drift: VecFn, dispersion: MatFn },
}

/// Drift `b`, dispersion `sigma` (symmetric PSD), and the absorption
/// threshold `lambda` of the reflected diffusion.
#[derive(Clone)]
pub struct DiffusionSpec {
    pub d: usize,
    pub lambda: f64,
    coeffs: Coeffs,
}

impl std::fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.coeffs {
            Coeffs::Constant { .. } => "constant",
            Coeffs::Varying { .. } => "varying",
        };
        f.debug_struct("DiffusionSpec")
            .field("d", &self.d)
            .field("lambda", &self.lambda)
            .field("coeffs", &kind)
            .finish()
    }
}

/// Trajectory with local-time accumulators; `h` and `k` are cumulative and
/// componentwise nondecreasing from zero.
#[derive(Debug, Clone)]
pub struct RsdePath {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
}

/// First grid time with `sum_l X_l >= lambda`, or censored at the cap.
#[derive(Debug, Clone)]
pub struct HitResult {
    /// `None` when censored at `t_cap`.
    pub t_hit: Option<f64>,
    pub x_hit: Vec<f64>,
    pub n_steps: usize,
}

impl HitResult {
    pub fn censored(&self) -> bool {
        self.t_hit.is_none()
    }
}

/// Unreflected path of the periodized diffusion plus its folded image.
#[derive(Debug, Clone)]
pub struct UnfoldedPath {
    pub times: Vec<f64>,
    pub raw: Vec<Vec<f64>>,
    pub folded: Vec<Vec<f64>>,
}

impl DiffusionSpec {
    /// Constant coefficients; `dispersion` must be symmetric PSD.
    pub fn constant(drift: Vec<f64>, dispersion: DMatrix<f64>, lambda: f64) -> Result<Self> {
        let d = drift.len();
        if dispersion.nrows() != d || dispersion.ncols() != d {
            return Err(Error::InvalidSpec("dispersion shape mismatch".into()));
        }
        check_dispersion(&dispersion)?;
        Ok(Self { d, lambda, coeffs: Coeffs::Constant { drift, dispersion } })
    }

    /// Coefficients as functions of position, validated on a grid of the
    /// unit cube at construction.
    pub fn varying(d: usize, drift: VecFn, dispersion: MatFn, lambda: f64) -> Result<Self> {
        crate::kernel::for_each_grid_point(d, 11, 0.0, 1.0, |y| {
            // Sampled validation: panics surface at construction, not mid-run.
            let b = drift(y);
            assert_eq!(b.len(), d, "drift dimension mismatch");
        });
        let mut bad: Option<String> = None;
        crate::kernel::for_each_grid_point(d, 11, 0.0, 1.0, |y| {
            if bad.is_some() {
                return;
            }
            let s = dispersion(y);
            if let Err(e) = check_dispersion(&s) {
                bad = Some(format!("at y = {y:?}: {e}"));
            }
        });
        if let Some(msg) = bad {
            return Err(Error::InvalidSpec(msg));
        }
        Ok(Self { d, lambda, coeffs: Coeffs::Varying { drift, dispersion } })
    }

    /// Build from homogenized coefficients. When the kernel does not depend
    /// on `y` the coefficients are evaluated once and frozen; otherwise each
    /// step solves the corrector system at the current point.
    pub fn from_effective(eff: EffectiveCoeffs, lambda: f64) -> Result<Self> {
        let d = eff.kernel().d();
        if eff.kernel().is_y_independent() {
            let y0 = vec![0.5; d];
            let drift = eff.b_bar(&y0);
            let dispersion = eff.sigma_bar(&y0)?;
            Self::constant(drift, dispersion, lambda)
        } else {
            let eff = Arc::new(eff);
            let e1 = Arc::clone(&eff);
            let e2 = Arc::clone(&eff);
            let drift: VecFn = Arc::new(move |y| e1.b_bar(y));
            let dispersion: MatFn =
                Arc::new(move |y| e2.sigma_bar(y).expect("a_bar PSD by ellipticity"));
            Self::varying(d, drift, dispersion, lambda)
        }
    }

    pub fn drift_at(&self, y: &[f64]) -> Vec<f64> {
        match &self.coeffs {
            Coeffs::Constant { drift, .. } => drift.clone(),
            Coeffs::Varying { drift, .. } => drift(y),
        }
    }

    pub fn dispersion_at(&self, y: &[f64]) -> DMatrix<f64> {
        match &self.coeffs {
            Coeffs::Constant { dispersion, .. } => dispersion.clone(),
            Coeffs::Varying { dispersion, .. } => dispersion(y),
        }
    }
}

fn check_dispersion(s: &DMatrix<f64>) -> Result<()> {
    if (s - s.transpose()).amax() > 1e-10 {
        return Err(Error::InvalidSpec("dispersion must be symmetric".into()));
    }
    let min_eig = min_symmetric_eigenvalue(s);
    if min_eig < -1e-10 {
        return Err(Error::InvalidSpec(format!(
            "dispersion must be PSD (min eigenvalue {min_eig:.3e})"
        )));
    }
    Ok(())
}

/// One projection step. `gaussian_increment` is the Brownian increment
/// `Delta B ~ N(0, dt I)` (callers scale unit normals by `sqrt(dt)`).
///
/// Returns `(x_new, dh, dk)` with `x_new` the clamped proposal and `dh`,
/// `dk` the clipped masses on the lower/upper faces.
pub fn euler_project_step(
    spec: &DiffusionSpec,
    x: &[f64],
    dt: f64,
    gaussian_increment: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    assert!(dt > 0.0);
    let drift = spec.drift_at(x);
    let disp = spec.dispersion_at(x);
    let d = spec.d;
    let mut x_new = vec![0.0; d];
    let mut dh = vec![0.0; d];
    let mut dk = vec![0.0; d];
    for k in 0..d {
        let mut proposal = x[k] + drift[k] * dt;
        for j in 0..d {
            proposal += disp[(k, j)] * gaussian_increment[j];
        }
        let (xk, dhk, dkk) = clamp_unit(proposal);
        x_new[k] = xk;
        dh[k] = dhk;
        dk[k] = dkk;
    }
    (x_new, dh, dk)
}

#[inline]
fn clamp_unit(proposal: f64) -> (f64, f64, f64) {
    if proposal < 0.0 {
        (0.0, -proposal, 0.0)
    } else if proposal > 1.0 {
        (1.0, 0.0, proposal - 1.0)
    } else {
        (proposal, 0.0, 0.0)
    }
}

/// Allocation-free stepper for the hot Monte Carlo loops.
struct Stepper<'a> {
    spec: &'a DiffusionSpec,
    dt: f64,
    sqrt_dt: f64,
    /// Frozen `drift * dt` and `sigma * sqrt(dt)` for constant coefficients.
    frozen: Option<(Vec<f64>, DMatrix<f64>)>,
    z: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(spec: &'a DiffusionSpec, dt: f64) -> Self {
        let frozen = match &spec.coeffs {
            Coeffs::Constant { drift, dispersion } => {
                let bdt: Vec<f64> = drift.iter().map(|b| b * dt).collect();
                Some((bdt, dispersion * dt.sqrt()))
            }
            Coeffs::Varying { .. } => None,
        };
        Self { spec, dt, sqrt_dt: dt.sqrt(), frozen, z: vec![0.0; spec.d] }
    }

    /// Advance `x` one step; writes the per-axis local-time increments.
    fn step(&mut self, x: &mut [f64], dh: &mut [f64], dk: &mut [f64], rng: &mut impl Rng) {
        let d = self.spec.d;
        for z in self.z.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        match &self.frozen {
            Some((bdt, disp_sq)) => {
                for k in 0..d {
                    let mut proposal = x[k] + bdt[k];
                    for j in 0..d {
                        proposal += disp_sq[(k, j)] * self.z[j];
                    }
                    let (xk, dhk, dkk) = clamp_unit(proposal);
                    x[k] = xk;
                    dh[k] = dhk;
                    dk[k] = dkk;
                }
            }
            None => {
                let drift = self.spec.drift_at(x);
                let disp = self.spec.dispersion_at(x);
                for k in 0..d {
                    let mut proposal = x[k] + drift[k] * self.dt;
                    for j in 0..d {
                        proposal += disp[(k, j)] * self.sqrt_dt * self.z[j];
                    }
                    let (xk, dhk, dkk) = clamp_unit(proposal);
                    x[k] = xk;
                    dh[k] = dhk;
                    dk[k] = dkk;
                }
            }
        }
    }
}

/// Integrate on `[0, t_max]` recording every grid point.
pub fn simulate_rsde(
    spec: &DiffusionSpec,
    x0: &[f64],
    t_max: f64,
    dt: f64,
    seed: u64,
) -> Result<RsdePath> {
    let mut rng = replica_rng(seed, domains::RSDE, 0);
    simulate_rsde_with_rng(spec, x0, t_max, dt, &mut rng)
}

pub fn simulate_rsde_with_rng(
    spec: &DiffusionSpec,
    x0: &[f64],
    t_max: f64,
    dt: f64,
    rng: &mut impl Rng,
) -> Result<RsdePath> {
    check_start(spec, x0)?;
    let n_steps = (t_max / dt).ceil() as usize;
    let d = spec.d;
    let mut stepper = Stepper::new(spec, dt);
    let mut x = x0.to_vec();
    let mut h_acc = vec![0.0; d];
    let mut k_acc = vec![0.0; d];
    let mut dh = vec![0.0; d];
    let mut dk = vec![0.0; d];
    let mut path = RsdePath {
        times: Vec::with_capacity(n_steps + 1),
        x: Vec::with_capacity(n_steps + 1),
        h: Vec::with_capacity(n_steps + 1),
        k: Vec::with_capacity(n_steps + 1),
    };
    path.times.push(0.0);
    path.x.push(x.clone());
    path.h.push(h_acc.clone());
    path.k.push(k_acc.clone());
    for n in 1..=n_steps {
        stepper.step(&mut x, &mut dh, &mut dk, rng);
        for k in 0..d {
            h_acc[k] += dh[k];
            k_acc[k] += dk[k];
        }
        path.times.push(n as f64 * dt);
        path.x.push(x.clone());
        path.h.push(h_acc.clone());
        path.k.push(k_acc.clone());
    }
    Ok(path)
}

fn check_start(spec: &DiffusionSpec, x0: &[f64]) -> Result<()> {
    if x0.len() != spec.d {
        return Err(Error::InvalidSpec("x0 dimension mismatch".into()));
    }
    if x0.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::OutOfDomain(format!("x0 = {x0:?} outside the unit cube")));
    }
    Ok(())
}

/// First grid time with `sum_l X_l >= lambda`, using the threshold stored
/// in the diffusion parameters; censored at `t_cap`.
pub fn hit_time(
    spec: &DiffusionSpec,
    x0: &[f64],
    dt: f64,
    t_cap: f64,
    seed: u64,
) -> Result<HitResult> {
    let mut rng = replica_rng(seed, domains::RSDE, 0);
    hit_time_with_threshold(spec, x0, spec.lambda, dt, t_cap, &mut rng)
}

pub fn hit_time_with_rng(
    spec: &DiffusionSpec,
    x0: &[f64],
    dt: f64,
    t_cap: f64,
    rng: &mut impl Rng,
) -> Result<HitResult> {
    hit_time_with_threshold(spec, x0, spec.lambda, dt, t_cap, rng)
}

pub fn hit_time_with_threshold(
    spec: &DiffusionSpec,
    x0: &[f64],
    lambda: f64,
    dt: f64,
    t_cap: f64,
    rng: &mut impl Rng,
) -> Result<HitResult> {
    check_start(spec, x0)?;
    let n_cap = (t_cap / dt).ceil() as usize;
    let d = spec.d;
    let mut stepper = Stepper::new(spec, dt);
    let mut x = x0.to_vec();
    let mut dh = vec![0.0; d];
    let mut dk = vec![0.0; d];
    for n in 0..=n_cap {
        if x.iter().sum::<f64>() >= lambda {
            return Ok(HitResult { t_hit: Some(n as f64 * dt), x_hit: x, n_steps: n });
        }
        if n == n_cap {
            break;
        }
        stepper.step(&mut x, &mut dh, &mut dk, rng);
    }
    Ok(HitResult { t_hit: None, x_hit: x, n_steps: n_cap })
}

/// Monte Carlo hit times over independent replicas (uncensored samples plus
/// the censored count).
pub fn hit_time_samples(
    spec: &DiffusionSpec,
    x0: &[f64],
    dt: f64,
    t_cap: f64,
    n_trials: usize,
    master_seed: u64,
) -> Result<(Vec<f64>, usize)> {
    use rayon::prelude::*;
    check_start(spec, x0)?;
    let results: Vec<HitResult> = (0..n_trials)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(master_seed, domains::RSDE, replica as u64);
            hit_time_with_rng(spec, x0, dt, t_cap, &mut rng).expect("start validated")
        })
        .collect();
    let censored = results.iter().filter(|r| r.censored()).count();
    let samples = results.iter().filter_map(|r| r.t_hit).collect();
    Ok((samples, censored))
}

/// Componentwise fold: reduce mod 2 into `[0, 2)`, then reflect `z -> 2 - z`
/// above one. Maps all of `R^d` onto the unit cube and is the identity there.
pub fn fold_map(y: &[f64]) -> Vec<f64> {
    y.iter().map(|&v| fold_coord(v)).collect()
}

fn fold_coord(v: f64) -> f64 {
    let z = v.rem_euclid(2.0);
    if z <= 1.0 {
        z
    } else {
        2.0 - z
    }
}

/// Sign of `1 - (y mod 2)`: the direction flip of the periodized drift
/// across each fold plane.
fn fold_sign(v: f64) -> f64 {
    let z = v.rem_euclid(2.0);
    if z < 1.0 {
        1.0
    } else if z > 1.0 {
        -1.0
    } else {
        0.0
    }
}

/// Periodized coefficients of the unfolded diffusion at a point of `R^d`:
/// drift `N(y) b(fold(y))` and dispersion `N(y) sigma(fold(y))` with
/// `N = diag(sign(1 - y mod 2))`.
///
/// The row sign flip on the dispersion conjugates the diffusion matrix,
/// `a_hat = N a N`: folding flips the sign of each component's increments
/// across its fold planes, so the folded image recovers the off-diagonal
/// covariations of the reflected process, not just the diagonal ones. For
/// diagonal `a` this reduces to plain `sigma(fold(y))`.
pub fn unfolded_coeffs_at(spec: &DiffusionSpec, y: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let folded = fold_map(y);
    let mut drift = spec.drift_at(&folded);
    let mut disp = spec.dispersion_at(&folded);
    for (k, (b, &v)) in drift.iter_mut().zip(y).enumerate() {
        let sign = fold_sign(v);
        *b *= sign;
        for j in 0..spec.d {
            disp[(k, j)] *= sign;
        }
    }
    (drift, disp)
}

/// Plain (unreflected) Euler scheme for the periodized diffusion, returning
/// both the raw path and its folded image.
pub fn simulate_unfolded(
    spec: &DiffusionSpec,
    x0: &[f64],
    t_max: f64,
    dt: f64,
    seed: u64,
) -> Result<UnfoldedPath> {
    check_start(spec, x0)?;
    let mut rng = replica_rng(seed, domains::RSDE_UNFOLDED, 0);
    let n_steps = (t_max / dt).ceil() as usize;
    let d = spec.d;
    let sqrt_dt = dt.sqrt();
    let mut x = x0.to_vec();
    let mut out = UnfoldedPath {
        times: Vec::with_capacity(n_steps + 1),
        raw: Vec::with_capacity(n_steps + 1),
        folded: Vec::with_capacity(n_steps + 1),
    };
    out.times.push(0.0);
    out.raw.push(x.clone());
    out.folded.push(fold_map(&x));
    let mut z = vec![0.0; d];
    for n in 1..=n_steps {
        let (drift, disp) = unfolded_coeffs_at(spec, &x);
        for zz in z.iter_mut() {
            *zz = rng.sample(StandardNormal);
        }
        for k in 0..d {
            let mut dx = drift[k] * dt;
            for j in 0..d {
                dx += disp[(k, j)] * sqrt_dt * z[j];
            }
            x[k] += dx;
        }
        out.times.push(n as f64 * dt);
        out.raw.push(x.clone());
        out.folded.push(fold_map(&x));
    }
    Ok(out)
}

/// Hit time of the *folded* image of the unfolded diffusion: the oracle for
/// the reflected hitting law.
pub fn unfolded_hit_time_with_rng(
    spec: &DiffusionSpec,
    x0: &[f64],
    dt: f64,
    t_cap: f64,
    rng: &mut impl Rng,
) -> Result<HitResult> {
    check_start(spec, x0)?;
    let n_cap = (t_cap / dt).ceil() as usize;
    let d = spec.d;
    let sqrt_dt = dt.sqrt();
    let mut x = x0.to_vec();
    let mut z = vec![0.0; d];
    for n in 0..=n_cap {
        let folded = fold_map(&x);
        if folded.iter().sum::<f64>() >= spec.lambda {
            return Ok(HitResult { t_hit: Some(n as f64 * dt), x_hit: folded, n_steps: n });
        }
        if n == n_cap {
            break;
        }
        let (drift, disp) = unfolded_coeffs_at(spec, &x);
        for zz in z.iter_mut() {
            *zz = rng.sample(StandardNormal);
        }
        for k in 0..d {
            let mut dx = drift[k] * dt;
            for j in 0..d {
                dx += disp[(k, j)] * sqrt_dt * z[j];
            }
            x[k] += dx;
        }
    }
    Ok(HitResult { t_hit: None, x_hit: fold_map(&x), n_steps: n_cap })
}

/// Monte Carlo hit times of the folded oracle.
pub fn unfolded_hit_time_samples(
    spec: &DiffusionSpec,
    x0: &[f64],
    dt: f64,
    t_cap: f64,
    n_trials: usize,
    master_seed: u64,
) -> Result<(Vec<f64>, usize)> {
    use rayon::prelude::*;
    check_start(spec, x0)?;
    let results: Vec<HitResult> = (0..n_trials)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(master_seed, domains::RSDE_UNFOLDED, replica as u64);
            unfolded_hit_time_with_rng(spec, x0, dt, t_cap, &mut rng).expect("start validated")
        })
        .collect();
    let censored = results.iter().filter(|r| r.censored()).count();
    let samples = results.iter().filter_map(|r| r.t_hit).collect();
    Ok((samples, censored))
}

/// Identity square root helper for callers building constant specs.
pub fn dispersion_from_covariance(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    matrix_sqrt(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use approx::assert_abs_diff_eq;

    fn bm_spec(scale: f64, lambda: f64) -> DiffusionSpec {
        DiffusionSpec::constant(
            vec![0.0, 0.0],
            DMatrix::identity(2, 2) * scale,
            lambda,
        )
        .unwrap()
    }

    #[test]
    fn projection_step_cases() {
        // Interior proposal passes through.
        let spec = bm_spec(0.0, 1.5);
        let (x, dh, dk) = euler_project_step(&spec, &[0.5, 0.5], 0.1, &[0.0, 0.0]);
        assert_eq!(x, vec![0.5, 0.5]);
        assert_eq!(dh, vec![0.0, 0.0]);
        assert_eq!(dk, vec![0.0, 0.0]);

        // One-dimensional clamp arithmetic: x = 0.1, proposal -0.05.
        let spec1 =
            DiffusionSpec::constant(vec![-1.5], DMatrix::identity(1, 1) * 0.0, 0.9).unwrap();
        let (x, dh, dk) = euler_project_step(&spec1, &[0.1], 0.1, &[0.0]);
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(dh[0], 0.05, epsilon = 1e-15);
        assert_eq!(dk[0], 0.0);

        // Componentwise clamp of the proposal (1.02, -0.01).
        let spec2 = DiffusionSpec::constant(
            vec![0.0, 0.0],
            DMatrix::identity(2, 2),
            1.5,
        )
        .unwrap();
        let (x, dh, dk) = euler_project_step(&spec2, &[0.5, 0.5], 1e-9, &[0.52, -0.51]);
        assert_eq!(x, vec![1.0, 0.0]);
        assert!((dk[0] - 0.02).abs() < 1e-9 && dk[1] == 0.0);
        assert!(dh[0] == 0.0 && (dh[1] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn zero_coefficients_freeze_the_path() {
        let spec =
            DiffusionSpec::constant(vec![0.0, 0.0], DMatrix::zeros(2, 2), 1.5).unwrap();
        let path = simulate_rsde(&spec, &[0.3, 0.4], 1.0, 1e-2, 1).unwrap();
        assert!(path.x.iter().all(|x| x == &vec![0.3, 0.4]));
        assert!(path.h.last().unwrap().iter().all(|&v| v == 0.0));
        assert!(path.k.last().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_ramp_saturates_and_accumulates_k() {
        // dX = dt upward in coordinate 1: ramps to 1 by t = 1, then K grows
        // at unit rate.
        let spec = DiffusionSpec::constant(
            vec![1.0, 0.0],
            DMatrix::zeros(2, 2),
            1.9,
        )
        .unwrap();
        let dt = 1e-3;
        let path = simulate_rsde(&spec, &[0.0, 0.0], 2.0, dt, 2).unwrap();
        let n = path.times.len() - 1;
        assert_abs_diff_eq!(path.x[n][0], 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(path.k[n][0], 1.0, epsilon = dt + 1e-9);
        // Hit of the level 1 happens within one step of t = 1.
        let t_hit = path
            .times
            .iter()
            .zip(&path.x)
            .find(|(_, x)| x[0] >= 1.0)
            .map(|(t, _)| *t)
            .unwrap();
        assert!((t_hit - 1.0).abs() <= dt + 1e-12);
        // H never moves, K_2 never moves.
        assert!(path.h[n].iter().all(|&v| v == 0.0));
        assert_eq!(path.k[n][1], 0.0);
    }

    #[test]
    fn straight_line_hit_time() {
        let c = 0.7;
        let spec = DiffusionSpec::constant(
            vec![c, c],
            DMatrix::zeros(2, 2),
            1.5,
        )
        .unwrap();
        let dt = 1e-4;
        let res = hit_time(&spec, &[0.1, 0.2], dt, 10.0, 3).unwrap();
        let expected = (1.5 - 0.3) / (2.0 * c);
        assert!(!res.censored());
        assert!((res.t_hit.unwrap() - expected).abs() <= dt + 1e-12);
        let total: f64 = res.x_hit.iter().sum();
        assert!(total >= 1.5 - 2.0 * c * dt);
    }

    #[test]
    fn immediate_hit_when_threshold_already_met() {
        let spec = bm_spec(1.0, 1.0);
        let res = hit_time(&spec, &[0.6, 0.6], 1e-3, 1.0, 4).unwrap();
        assert_eq!(res.t_hit, Some(0.0));
        assert_eq!(res.n_steps, 0);
    }

    #[test]
    fn censoring_at_cap() {
        // Zero noise, zero drift: never hits.
        let spec =
            DiffusionSpec::constant(vec![0.0, 0.0], DMatrix::zeros(2, 2), 1.5).unwrap();
        let res = hit_time(&spec, &[0.0, 0.0], 1e-2, 0.5, 5).unwrap();
        assert!(res.censored());
        assert_eq!(res.n_steps, 50);
    }

    #[test]
    fn reflected_bm_time_average_is_centered() {
        // Reflected Brownian motion on the square has the uniform stationary
        // law; long-run time averages of each coordinate approach 1/2.
        let spec = bm_spec(1.0, 1.99);
        let path = simulate_rsde(&spec, &[0.5, 0.5], 2000.0, 1e-3, 6).unwrap();
        for k in 0..2 {
            let xs: Vec<f64> = path.x.iter().map(|x| x[k]).collect();
            let (mean, se) = stats::batch_means(&xs, 20);
            assert!(
                (mean - 0.5).abs() <= 3.0 * se,
                "coordinate {k}: mean {mean}, se {se}"
            );
        }
    }

    #[test]
    fn invariants_inside_cube_and_complementarity() {
        let spec = bm_spec(1.0, 1.9);
        let mut rng = replica_rng(7, domains::RSDE, 0);
        let mut stepper = Stepper::new(&spec, 1e-3);
        let mut x = vec![0.2, 0.8];
        let mut dh = vec![0.0; 2];
        let mut dk = vec![0.0; 2];
        for _ in 0..200_000 {
            stepper.step(&mut x, &mut dh, &mut dk, &mut rng);
            for k in 0..2 {
                assert!((0.0..=1.0).contains(&x[k]));
                assert_eq!(dh[k] * x[k], 0.0, "dH complementarity");
                assert_eq!(dk[k] * (1.0 - x[k]), 0.0, "dK complementarity");
            }
        }
    }

    #[test]
    fn local_times_nondecreasing() {
        let spec = bm_spec(1.0, 1.9);
        let path = simulate_rsde(&spec, &[0.0, 0.0], 5.0, 1e-3, 8).unwrap();
        for w in path.h.windows(2) {
            for k in 0..2 {
                assert!(w[1][k] >= w[0][k]);
            }
        }
        for w in path.k.windows(2) {
            for k in 0..2 {
                assert!(w[1][k] >= w[0][k]);
            }
        }
        // A reflected BM run long enough touches both kinds of face.
        assert!(path.h.last().unwrap().iter().sum::<f64>() > 0.0);
        assert!(path.k.last().unwrap().iter().sum::<f64>() > 0.0);
    }

    #[test]
    fn fold_map_examples() {
        let f = fold_map(&[0.3, 1.7]);
        assert_abs_diff_eq!(f[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], 0.3, epsilon = 1e-15);
        let f = fold_map(&[-0.4, 2.6]);
        assert_abs_diff_eq!(f[0], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn fold_map_is_idempotent() {
        let mut rng = replica_rng(9, domains::RSDE, 0);
        for _ in 0..1000 {
            let y = [rng.gen::<f64>() * 20.0 - 10.0, rng.gen::<f64>() * 20.0 - 10.0];
            let once = fold_map(&y);
            let twice = fold_map(&once);
            for k in 0..2 {
                assert!((0.0..=1.0).contains(&once[k]));
                assert_abs_diff_eq!(once[k], twice[k], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn periodized_drift_flips_sign_across_fold_planes() {
        let spec = DiffusionSpec::constant(
            vec![1.0, 0.0],
            DMatrix::identity(2, 2),
            1.5,
        )
        .unwrap();
        let (b, _) = unfolded_coeffs_at(&spec, &[1.5, 0.5]);
        assert_eq!(b, vec![-1.0, 0.0]);
        let (b, _) = unfolded_coeffs_at(&spec, &[0.5, 0.5]);
        assert_eq!(b, vec![1.0, 0.0]);
        let (b, _) = unfolded_coeffs_at(&spec, &[-0.5, 0.5]);
        // -0.5 mod 2 = 1.5: reflected branch.
        assert_eq!(b, vec![-1.0, 0.0]);
    }

    #[test]
    fn unfolded_path_folds_into_cube() {
        let spec = bm_spec(1.0, 1.5);
        let path = simulate_unfolded(&spec, &[0.5, 0.5], 5.0, 1e-3, 10).unwrap();
        assert!(path
            .folded
            .iter()
            .all(|x| x.iter().all(|&v| (0.0..=1.0).contains(&v))));
        // The raw path actually leaves the cube over 5 time units.
        assert!(path
            .raw
            .iter()
            .any(|x| x.iter().any(|&v| !(0.0..=1.0).contains(&v))));
    }

    #[test]
    fn folded_and_reflected_hit_laws_agree_at_desk_scale() {
        let spec = bm_spec(1.0, 1.5);
        let n = 2000;
        let (direct, c1) = hit_time_samples(&spec, &[0.0, 0.0], 1e-3, 200.0, n, 11).unwrap();
        let (folded, c2) =
            unfolded_hit_time_samples(&spec, &[0.0, 0.0], 1e-3, 200.0, n, 12).unwrap();
        assert_eq!(c1 + c2, 0);
        let ks = stats::two_sample_ks(&direct, &folded);
        assert!(ks < 0.08, "KS = {ks}");
    }

    #[test]
    fn folded_oracle_matches_reflection_with_correlated_noise() {
        // Off-diagonal covariance is where the sign conjugation of the
        // periodized dispersion matters; a plain sigma(fold(y)) would flip
        // the correlation sign cell by cell and wreck the hitting law.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        let sigma = crate::homogenize::matrix_sqrt(&a).unwrap();
        let spec = DiffusionSpec::constant(vec![0.0, 0.0], sigma, 1.5).unwrap();
        let n = 2000;
        let (direct, c1) = hit_time_samples(&spec, &[0.0, 0.0], 1e-3, 200.0, n, 21).unwrap();
        let (folded, c2) =
            unfolded_hit_time_samples(&spec, &[0.0, 0.0], 1e-3, 200.0, n, 22).unwrap();
        assert_eq!(c1 + c2, 0);
        let ks = stats::two_sample_ks(&direct, &folded);
        assert!(ks < 0.08, "KS = {ks}");
    }

    #[test]
    fn same_seed_same_path() {
        let spec = bm_spec(1.0, 1.9);
        let a = simulate_rsde(&spec, &[0.1, 0.9], 1.0, 1e-3, 13).unwrap();
        let b = simulate_rsde(&spec, &[0.1, 0.9], 1.0, 1e-3, 13).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.h, b.h);
        assert_eq!(a.k, b.k);
    }

    #[test]
    fn varying_spec_validates_dispersion() {
        let drift: VecFn = Arc::new(|_| vec![0.0, 0.0]);
        let bad: MatFn = Arc::new(|_| DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(DiffusionSpec::varying(2, drift.clone(), bad, 1.5).is_err());
        let good: MatFn = Arc::new(|_| DMatrix::identity(2, 2));
        assert!(DiffusionSpec::varying(2, drift, good, 1.5).is_ok());
    }
}
