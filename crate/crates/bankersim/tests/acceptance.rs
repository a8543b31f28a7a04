//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantity and its threshold.
//!
//! Budgets are chosen so the whole suite runs in minutes; the statistical
//! criteria use per-replica derived streams, so every number here is
//! reproducible bit for bit.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bankersim::env::{ergodicity_certificate, stationary_distribution, EnvSpec};
use bankersim::homogenize::{
    min_symmetric_eigenvalue, neumann_poisson, solve_poisson, EffectiveCoeffs,
};
use bankersim::kernel::{presets, KernelSpec};
use bankersim::regimes::{estimate_mean_deadlock, CovarianceParams, FitReport, Regime};
use bankersim::rsde::{
    euler_project_step, hit_time_samples, unfolded_hit_time_samples, DiffusionSpec,
};
use bankersim::stats;
use bankersim::walk::{free_walk_endpoints, monte_carlo_deadlock, WalkConfig};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("[{}] {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn two_state_env() -> EnvSpec {
    EnvSpec::new(DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.6, 0.4])).unwrap()
}

fn three_state_env() -> EnvSpec {
    EnvSpec::new(DMatrix::from_row_slice(
        3,
        3,
        &[0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.25, 0.25, 0.5],
    ))
    .unwrap()
}

#[test]
fn criterion_01_poisson_solver() {
    let started = std::time::Instant::now();
    let env = two_state_env();
    let g = DVector::from_row_slice(&[0.3, -0.6]);
    let v = solve_poisson(&env, &g).unwrap();
    let exact_err = (v[0] - 1.0 / 3.0).abs().max((v[1] + 2.0 / 3.0).abs());
    let residual = (&v - env.transition_matrix() * &v - &g).amax();
    let mu = stationary_distribution(&env).unwrap().mu;
    let centering = mu.dot(&v).abs();

    let cert = ergodicity_certificate(&env).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_gap: f64 = 0.0;
    for _ in 0..50 {
        let mut g = DVector::from_fn(2, |_, _| rng.gen::<f64>() - 0.5);
        let shift = mu.dot(&g);
        for i in 0..2 {
            g[i] -= shift;
        }
        let direct = solve_poisson(&env, &g).unwrap();
        let series = neumann_poisson(&env, &cert, &mu, &g, 1e-12);
        worst_gap = worst_gap.max((direct - series).amax());
    }
    let pass = exact_err <= 1e-12
        && residual <= 1e-12
        && centering <= 1e-12
        && worst_gap <= 1e-9
        && started.elapsed().as_secs_f64() < 1.0;
    report(
        "criterion 1 (Poisson solver)",
        pass,
        &format!(
            "|v - exact| = {exact_err:.2e} (tol 1e-12), residual = {residual:.2e} (tol 1e-12), \
             |mu.v| = {centering:.2e} (tol 1e-12), direct-vs-series gap = {worst_gap:.2e} \
             (tol 1e-9), elapsed {:.2}s (< 1s)",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_identity_16bis() {
    let started = std::time::Instant::now();
    let env = three_state_env();
    let kernel = KernelSpec::build_centered(presets::perturbed_2d(3, 0.05), &env).unwrap();
    let eff = EffectiveCoeffs::new(&env, &kernel).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let y = [rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 2.0];
        worst = worst.max(eff.identity_residual(&y));
    }
    let pass = worst <= 1e-10 && started.elapsed().as_secs_f64() < 1.0;
    report(
        "criterion 2 (quadratic-form identity)",
        pass,
        &format!(
            "max entrywise residual over 20 random y = {worst:.2e} (tol 1e-10), elapsed {:.2}s (< 1s)",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_ellipticity_floor() {
    let started = std::time::Instant::now();
    let env = two_state_env();
    let kernel = KernelSpec::build_centered(presets::perturbed_2d(2, 0.05), &env).unwrap();
    let eff = EffectiveCoeffs::new(&env, &kernel).unwrap();
    let mut worst_defect = f64::NEG_INFINITY;
    bankersim::kernel::for_each_grid_point(2, 21, 0.0, 2.0, |y| {
        let lhs = min_symmetric_eigenvalue(&eff.a_bar(y));
        let rhs = min_symmetric_eigenvalue(&eff.alpha_minus_ggt_average(y));
        worst_defect = worst_defect.max(rhs - lhs);
    });
    let pass = worst_defect <= 1e-8 && started.elapsed().as_secs_f64() < 10.0;
    report(
        "criterion 3 (ellipticity of a_bar)",
        pass,
        &format!(
            "max over 21^2 grid of (min-eig reference - min-eig a_bar) = {worst_defect:.2e} \
             (tol 1e-8), elapsed {:.2}s (< 10s)",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_discrete_drift_convergence() {
    let started = std::time::Instant::now();
    let env = two_state_env();
    let kernel = KernelSpec::build_centered(presets::perturbed_2d(2, 0.05), &env).unwrap();
    let eff = EffectiveCoeffs::new(&env, &kernel).unwrap();
    let c_bound = eff.drift_bound_constant();

    let grid: Vec<[f64; 2]> = (0..5)
        .flat_map(|a| (0..5).map(move |b| [a as f64 / 4.0, b as f64 / 4.0]))
        .collect();
    let sup_err = |m: usize| -> f64 {
        let mut worst: f64 = 0.0;
        for y in &grid {
            for i in 0..2 {
                let b = eff.discrete_drift_bm(i, y, m);
                let limit = eff.drift_limit(i, y);
                for k in 0..2 {
                    worst = worst.max((m as f64 * b[k] - limit[k]).abs());
                }
            }
        }
        worst
    };
    let (e100, e1000) = (sup_err(100), sup_err(1000));
    let decay_ok = e1000 <= e100 / 5.0;

    let mut bound_ok = true;
    for &m in &[10usize, 100, 1000] {
        for y in &grid {
            for i in 0..2 {
                let b = eff.discrete_drift_bm(i, y, m);
                let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                bound_ok &= norm <= c_bound / m as f64;
            }
        }
    }
    let pass = decay_ok && bound_ok && started.elapsed().as_secs_f64() < 10.0;
    report(
        "criterion 4 (discrete drift to continuum)",
        pass,
        &format!(
            "sup |m b^(m) - limit|: {e100:.3e} at m=100 -> {e1000:.3e} at m=1000 \
             (factor {:.1} >= 5), |b^(m)| <= C/m with C = {c_bound:.3e}: {bound_ok}, \
             elapsed {:.2}s (< 10s)",
            e100 / e1000,
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_bracket_convergence() {
    let started = std::time::Instant::now();
    let env = two_state_env();
    let kernel = KernelSpec::build_centered(presets::perturbed_2d(2, 0.05), &env).unwrap();
    let eff = EffectiveCoeffs::new(&env, &kernel).unwrap();

    let grid: Vec<[f64; 2]> = (0..5)
        .flat_map(|a| (0..5).map(move |b| [0.1 + a as f64 / 5.0, 0.1 + b as f64 / 5.0]))
        .collect();
    let sup_err = |m: usize| -> f64 {
        let mut worst: f64 = 0.0;
        for y in &grid {
            for i in 0..2 {
                let gap = (eff.discrete_bracket_am(i, y, m) - eff.limit_a(i, y)).amax();
                worst = worst.max(gap);
            }
        }
        worst
    };
    let (e1, e2, e3) = (sup_err(10), sup_err(100), sup_err(1000));
    let monotone = e2 < e1 && e3 < e2;

    let mut avg_gap: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..10 {
        let y = [rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 2.0];
        let mut avg = DMatrix::<f64>::zeros(2, 2);
        for i in 0..2 {
            avg += eff.limit_a(i, &y) * eff.mu()[i];
        }
        avg_gap = avg_gap.max((avg - eff.a_bar(&y)).amax());
    }
    let pass = monotone && avg_gap <= 1e-10 && started.elapsed().as_secs_f64() < 10.0;
    report(
        "criterion 5 (bracket convergence)",
        pass,
        &format!(
            "sup |a^(m) - a| = {e1:.3e} (m=10) -> {e2:.3e} (m=100) -> {e3:.3e} (m=1000), \
             monotone: {monotone}; |mu-avg a - a_bar| = {avg_gap:.2e} (tol 1e-10), \
             elapsed {:.2}s (< 10s)",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_walk_clt_covariance() {
    let started = std::time::Instant::now();
    let env = two_state_env();
    let kernel = KernelSpec::build_checked(presets::two_state_constant(), &env).unwrap();
    let eff = EffectiveCoeffs::new(&env, &kernel).unwrap();
    let a_bar = eff.a_bar(&[0.0, 0.0]);

    let cfg = WalkConfig { m: 50, d: 2, lambda: 1.5, horizon_steps: 0, sample_times: vec![1.0] };
    let points = free_walk_endpoints(&env, &kernel, &cfg, 1.0, 0, 20_000, 106).unwrap();
    let (cov, se) = stats::covariance_with_se(&points);
    let mut pass = true;
    let mut detail = String::new();
    for k in 0..2 {
        for l in 0..2 {
            let dev = (cov[(k, l)] - a_bar[(k, l)]).abs();
            let ok = dev <= 3.0 * se[(k, l)];
            pass &= ok;
            detail.push_str(&format!(
                "cov({},{}) = {:.4} vs {:.4} ({:+.2} se); ",
                k + 1,
                l + 1,
                cov[(k, l)],
                a_bar[(k, l)],
                (cov[(k, l)] - a_bar[(k, l)]) / se[(k, l)]
            ));
        }
    }
    report(
        "criterion 6 (invariance-principle covariance)",
        pass,
        &format!("{detail}elapsed {:.1}s", started.elapsed().as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn criterion_07_deadlock_convergence() {
    let started = std::time::Instant::now();
    let env = EnvSpec::single_state();
    let kernel = KernelSpec::uniform(2, 1);
    let eff = EffectiveCoeffs::new(&env, &kernel).unwrap();
    let spec = DiffusionSpec::from_effective(eff, 1.5).unwrap();

    let n = 10_000;
    let (sde_samples, sde_censored) =
        hit_time_samples(&spec, &[0.0, 0.0], 1e-4, 500.0, n, 107).unwrap();
    assert_eq!(sde_censored, 0, "RSDE runs should not censor at this cap");

    let mut ks_by_m = Vec::new();
    for &m in &[20usize, 40, 80] {
        let cfg =
            WalkConfig { m, d: 2, lambda: 1.5, horizon_steps: 0, sample_times: vec![1.0] };
        let summary = monte_carlo_deadlock(&env, &kernel, &cfg, 0, n, 107).unwrap();
        assert!(summary.censored_fraction == 0.0, "walk censored at m = {m}");
        ks_by_m.push((m, stats::two_sample_ks(&summary.samples, &sde_samples)));
    }
    let noise = stats::ks_noise_scale(n, n);
    let inversions =
        ks_by_m.windows(2).filter(|w| w[1].1 > w[0].1 + noise).count();
    let final_ks = ks_by_m.last().unwrap().1;
    let pass = final_ks < 0.1 && inversions <= 1;
    report(
        "criterion 7 (deadlock-time convergence)",
        pass,
        &format!(
            "KS(m) = {:?} (final < 0.1), inversions beyond noise {noise:.3}: {inversions} (<= 1), \
             elapsed {:.1}s",
            ks_by_m,
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

fn regime_sweep(s: f64, seed: u64) -> bankersim::regimes::RegimeEstimate {
    let params = CovarianceParams::new(1.0, 1.0, s).unwrap();
    let spec = params.diffusion(1.5).unwrap();
    let grid = [1.5, 1.75, 1.875, 1.9375, 1.96875];
    estimate_mean_deadlock(&spec, &grid, 2000, 1e-4, 1e3, seed).unwrap()
}

#[test]
fn criterion_08a_null_regime_log_fit() {
    let started = std::time::Instant::now();
    let est = regime_sweep(0.0, 108);
    assert_eq!(est.classification, Regime::Null);
    let (r2, slope) = match est.fit {
        FitReport::Null(fit) => (fit.r_squared, fit.slope),
        ref other => panic!("expected Null fit, got {other:?}"),
    };
    let pass = r2 >= 0.95 && slope > 0.0 && !est.any_flagged();
    report(
        "criterion 8a (null regime, logarithmic growth)",
        pass,
        &format!(
            "E(T) vs -ln(2-lambda): R^2 = {r2:.4} (>= 0.95), slope = {slope:.4} (> 0), \
             means = {:?}, elapsed {:.1}s",
            est.means,
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08b_negative_regime_exponent_window() {
    let started = std::time::Instant::now();
    let est = regime_sweep(-0.5, 108);
    assert_eq!(est.classification, Regime::Negative);
    let slope = match est.fit {
        FitReport::Negative(fit) => fit.slope,
        ref other => panic!("expected Negative fit, got {other:?}"),
    };
    let (beta_minus, beta_plus) = est.beta_bounds.unwrap();
    let (lo, hi) = (beta_minus / 2.0, beta_plus);
    let pass = (lo..=hi).contains(&slope) && !est.any_flagged();
    report(
        "criterion 8b (negative regime, polynomial growth)",
        pass,
        &format!(
            "slope of ln E(T) vs -ln(2-lambda) = {slope:.4} in [{lo}, {hi}] \
             (beta_- = {beta_minus}, beta_+ = {beta_plus}), means = {:?}, elapsed {:.1}s",
            est.means,
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08c_positive_regime_boundedness() {
    let started = std::time::Instant::now();
    let est = regime_sweep(0.9, 108);
    assert_eq!(est.classification, Regime::Positive);
    let ratio = match est.fit {
        FitReport::Positive { ratio, .. } => ratio,
        ref other => panic!("expected Positive fit, got {other:?}"),
    };
    let pass = ratio <= 2.0 && !est.any_flagged();
    report(
        "criterion 8c (positive regime, bounded means)",
        pass,
        &format!(
            "max E(T) / E(T at lambda=1.5) = {ratio:.4} (<= 2), means = {:?}, elapsed {:.1}s",
            est.means,
            started.elapsed().as_secs_f64()
        ),
    );
    // Known near-miss: the population value of this ratio is 2.06 +/- 0.01
    // (200k trials/point, extrapolated dt -> 0, cross-validated by the
    // independent periodic-unfolding scheme), so the factor-2 surrogate is
    // ~3% too tight for this grid even though the means visibly saturate
    // (boundedness itself holds). At the stated budget the estimate
    // scatters across seeds in roughly [1.97, 2.14]. Kept as stated rather
    // than loosened.
    assert!(
        pass,
        "ratio {ratio:.4} > 2: the bounded-means surrogate misses by ~3 percent at \
         these parameters (population ratio 2.06 +/- 0.01); boundedness itself holds"
    );
}

#[test]
fn criterion_09_reflection_invariants() {
    let started = std::time::Instant::now();
    let spec = CovarianceParams::new(1.0, 1.0, 0.0).unwrap().diffusion(1.9).unwrap();
    let mut rng = bankersim::rng::replica_rng(109, bankersim::rng::domains::RSDE, 0);
    let mut x = vec![0.3, 0.7];
    let dt: f64 = 1e-3;
    let sqrt_dt = dt.sqrt();
    let mut ok = true;
    for _ in 0..1_000_000u32 {
        let db = [
            sqrt_dt * rng.sample::<f64, _>(rand_distr::StandardNormal),
            sqrt_dt * rng.sample::<f64, _>(rand_distr::StandardNormal),
        ];
        let (x_new, dh, dk) = euler_project_step(&spec, &x, dt, &db);
        for k in 0..2 {
            ok &= (0.0..=1.0).contains(&x_new[k]);
            ok &= dh[k] * x_new[k] == 0.0;
            ok &= dk[k] * (1.0 - x_new[k]) == 0.0;
        }
        if !ok {
            break;
        }
        x = x_new;
    }
    let pass = ok && started.elapsed().as_secs_f64() < 60.0;
    report(
        "criterion 9 (projection-scheme invariants)",
        pass,
        &format!(
            "10^6 steps: in-cube and exact complementarity hold: {ok}, elapsed {:.1}s (< 60s)",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_unfolding_oracle() {
    let started = std::time::Instant::now();
    let spec = DiffusionSpec::constant(
        vec![0.0, 0.0],
        DMatrix::identity(2, 2),
        1.5,
    )
    .unwrap();
    let n = 10_000;
    let dt = 1e-4;
    let (direct, c1) = hit_time_samples(&spec, &[0.0, 0.0], dt, 500.0, n, 110).unwrap();
    let (folded, c2) = unfolded_hit_time_samples(&spec, &[0.0, 0.0], dt, 500.0, n, 111).unwrap();
    let ks = stats::two_sample_ks(&direct, &folded);
    let pass = ks < 0.05 && c1 == 0 && c2 == 0;
    report(
        "criterion 10 (periodic-unfolding oracle)",
        pass,
        &format!(
            "two-sample KS(reflected, folded) = {ks:.4} (< 0.05) over {n} paths each, \
             censored {c1}/{c2}, elapsed {:.1}s",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_11_reproducibility_across_workers() {
    let started = std::time::Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("experiment.toml");
    std::fs::write(
        &config_path,
        r#"
seed = 424242
[env]
p = [[0.7, 0.3], [0.6, 0.4]]
[kernel]
d = 2
base = [[0.3, 0.2, 0.25, 0.25], [0.15, 0.35, 0.25, 0.25]]
[walk]
m = 10
lambda = 1.5
trials = 500
m_list = [5, 10]
[sde]
dt = 1e-3
t_cap = 200.0
trials = 500
[regimes]
rho1 = 1.0
rho2 = 1.0
s = -0.5
grid = [1.5, 1.75]
trials = 100
"#,
    )
    .unwrap();

    let mut pass = true;
    let mut detail = String::new();
    for sub in
        ["validate", "coefficients", "simulate-walk", "simulate-sde", "deadlock", "convergence", "regimes"]
    {
        let out_a = dir.path().join(format!("{sub}_a"));
        let out_b = dir.path().join(format!("{sub}_b"));
        let opts_a = bankersim::cli::RunOptions {
            workers: 1,
            out: Some(out_a.clone()),
            ..Default::default()
        };
        let opts_b = bankersim::cli::RunOptions {
            workers: 4,
            out: Some(out_b.clone()),
            ..Default::default()
        };
        bankersim::cli::run_subcommand(sub, &config_path, &opts_a).unwrap();
        bankersim::cli::run_subcommand(sub, &config_path, &opts_b).unwrap();
        let mut names: Vec<String> = std::fs::read_dir(&out_a)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.ends_with(".csv") || n.ends_with(".txt"))
            .collect();
        names.sort();
        assert!(!names.is_empty(), "{sub} produced no CSV output");
        for name in names {
            let a = std::fs::read(out_a.join(&name)).unwrap();
            let b = std::fs::read(out_b.join(&name)).unwrap();
            let same = a == b;
            pass &= same;
            if !same {
                detail.push_str(&format!("{sub}/{name} differs; "));
            }
        }
    }
    if pass {
        detail.push_str("all CSV bodies byte-identical across 1 vs 4 workers and reruns");
    }
    report(
        "criterion 11 (reproducibility)",
        pass,
        &format!("{detail}, elapsed {:.1}s", started.elapsed().as_secs_f64()),
    );
    assert!(pass);
}
