//! Config-driven experiment runners behind the `bankersim` binary.
//!
//! Every subcommand reads one TOML config, fans replicas out over a worker
//! pool, and writes CSV files plus a `run_manifest.json` listing them. CSV
//! bodies are byte-reproducible given `(config, seed)` and independent of
//! the worker count: replicas draw from index-derived streams and are
//! aggregated in index order. Floats are rendered with 17 significant
//! digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, SdeSource};
use crate::env::{ergodicity_certificate, stationary_distribution};
use crate::error::{Error, Result};
use crate::homogenize::{min_symmetric_eigenvalue, EffectiveCoeffs};
use crate::regimes::{estimate_mean_deadlock, CovarianceParams};
use crate::rng::{domains, replica_rng};
use crate::rsde::{
    hit_time_samples, hit_time_with_rng, simulate_rsde_with_rng, DiffusionSpec,
};
use crate::stats;
use crate::walk::{deadlock_results, free_walk_endpoints, simulate_free, summarize_deadlocks};

/// Points per axis of the coefficient dump grid on `[0,1]^d`.
const COEFF_GRID: usize = 21;
/// Censoring fraction above which a convergence/deadlock run is flagged.
const CENSOR_FLAG: f64 = 0.2;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// `0` means the default global pool.
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub dt: Option<f64>,
    pub t_cap: Option<f64>,
    pub trials: Option<usize>,
    pub lambda: Option<f64>,
}

/// What a subcommand produced: pass/fail plus human-readable lines.
#[derive(Debug)]
pub struct CmdOutcome {
    pub ok: bool,
    pub messages: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub subcommand: String,
    pub config_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub outputs: Vec<String>,
    pub runtime_seconds: f64,
    pub censoring: Vec<CensoringNote>,
    pub flags: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct CensoringNote {
    pub context: String,
    pub fraction: f64,
}

/// Collects output files under one directory.
struct OutputSink {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputSink {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// 17-significant-digit decimal rendering; stable across runs.
pub fn fnum(x: f64) -> String {
    format!("{x:.16e}")
}

/// Dispatch a subcommand. Returns the outcome; the caller maps it onto the
/// process exit status.
pub fn run_subcommand(name: &str, config_path: &Path, opts: &RunOptions) -> Result<CmdOutcome> {
    let (config, hash) = ExperimentConfig::load(config_path)?;
    let seed = opts.seed.unwrap_or(config.seed);
    let out_dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&config.output_dir));
    let started = Instant::now();

    let mut sink = OutputSink::new(&out_dir)?;
    let mut censoring = Vec::new();
    let mut flags = Vec::new();
    let mut run = || -> Result<CmdOutcome> {
        match name {
            "validate" => cmd_validate(&config, seed, &mut sink),
            "coefficients" => cmd_coefficients(&config, &mut sink),
            "simulate-walk" => cmd_simulate_walk(&config, seed, &mut sink),
            "simulate-sde" => cmd_simulate_sde(&config, seed, opts, &mut sink, &mut censoring),
            "deadlock" => cmd_deadlock(&config, seed, opts, &mut sink, &mut censoring, &mut flags),
            "convergence" => {
                cmd_convergence(&config, seed, opts, &mut sink, &mut censoring, &mut flags)
            }
            "regimes" => cmd_regimes(&config, seed, opts, &mut sink, &mut censoring, &mut flags),
            other => Err(Error::Config(format!("unknown subcommand {other}"))),
        }
    };
    let outcome = if opts.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(run)?
    } else {
        run()?
    };

    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: name.to_string(),
        config_sha256: hash,
        seed,
        workers: opts.workers,
        outputs: sink.files.clone(),
        runtime_seconds: started.elapsed().as_secs_f64(),
        censoring,
        flags,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest: {e}")))?;
    std::fs::write(out_dir.join("run_manifest.json"), manifest_json)?;
    Ok(outcome)
}

struct CheckTable {
    rows: String,
    all_pass: bool,
    messages: Vec<String>,
}

impl CheckTable {
    fn new() -> Self {
        Self { rows: String::from("check,status,value,detail\n"), all_pass: true, messages: Vec::new() }
    }

    fn push(&mut self, check: &str, pass: bool, value: f64, detail: &str) {
        let status = if pass { "pass" } else { "fail" };
        let _ = writeln!(self.rows, "{check},{status},{},{detail}", fnum(value));
        if !pass {
            self.all_pass = false;
            self.messages.push(format!("FAIL {check}: {detail}"));
        }
    }
}

fn cmd_validate(config: &ExperimentConfig, seed: u64, sink: &mut OutputSink) -> Result<CmdOutcome> {
    let mut table = CheckTable::new();

    let env = match config.build_env() {
        Ok(env) => env,
        Err(e) => {
            table.push("env.structure", false, f64::NAN, &e.to_string().replace(',', ";"));
            sink.write("validate.csv", &table.rows)?;
            return Ok(CmdOutcome { ok: false, messages: table.messages });
        }
    };
    let violations = env.validate();
    table.push(
        "env.irreducible_aperiodic",
        violations.is_empty(),
        violations.len() as f64,
        &violations
            .iter()
            .map(|v| v.to_string().replace(',', ";"))
            .collect::<Vec<_>>()
            .join(" | "),
    );

    match stationary_distribution(&env) {
        Ok(dist) => {
            let resid = crate::env::stationary_residual(&env, &dist);
            table.push("env.stationary_residual", resid <= 1e-10, resid, "||mu P - mu||_inf");
        }
        Err(e) => table.push("env.stationary_residual", false, f64::NAN, &e.to_string()),
    }
    match ergodicity_certificate(&env) {
        Ok(cert) => {
            table.push("env.doeblin_power", true, cert.m_doeblin as f64, "smallest strictly positive power");
            table.push("env.doeblin_floor", cert.eta > 0.0, cert.eta, "min entry of P^m");
            let verified = stationary_distribution(&env)
                .map(|dist| cert.verify(&env, &dist, 200))
                .unwrap_or(false);
            table.push(
                "env.geometric_ergodicity",
                verified,
                cert.c,
                "total-variation decay bound gamma c^n checked for n in 1..200",
            );
        }
        Err(e) => table.push(
            "env.doeblin_power",
            false,
            f64::NAN,
            &format!("no Doeblin power (aperiodicity fails): {e}").replace(',', ";"),
        ),
    }

    match config.build_kernel(&env) {
        Ok(kernel) => {
            table.push("kernel.positivity_floor", kernel.p_min >= 1e-3, kernel.p_min, "uniform floor of p");
            let residual = kernel.centering_residual.unwrap_or(f64::NAN);
            table.push(
                "kernel.centering",
                residual <= crate::kernel::CENTERING_TOL,
                residual,
                "max |mu . g| over the grid",
            );
            table.push(
                "kernel.ellipticity_floor",
                kernel.ellipticity_floor > 0.0,
                kernel.ellipticity_floor,
                "min eigenvalue of alpha - g g^t",
            );
            table.push(
                "kernel.derivative_bound",
                kernel.lipschitz_bound.is_finite(),
                kernel.lipschitz_bound,
                "sup |grad_y p|",
            );
            table.push(
                "kernel.second_derivative_bound",
                kernel.second_derivative_bound.is_finite(),
                kernel.second_derivative_bound,
                "sup |second y-derivatives of p|",
            );
            // Smoothness spot check on random pairs.
            let mut rng = replica_rng(seed, domains::ENV_PATH, u64::MAX);
            let d = kernel.d();
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let i = rng.gen_range(0..kernel.n_states());
                let y1: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.0).collect();
                let y2: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.0).collect();
                let p1 = kernel.eval_p(i, &y1);
                let p2 = kernel.eval_p(i, &y2);
                let dist =
                    y1.iter().zip(&y2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                for u in 0..2 * d {
                    let lhs = (p1[u] - p2[u]).abs();
                    worst = worst.max(lhs - kernel.lipschitz_bound * dist);
                }
            }
            table.push(
                "kernel.lipschitz_spot_check",
                worst <= 1e-12,
                worst,
                "max violation of |p(y)-p(y')| <= K |y-y'| on 100 random pairs",
            );
        }
        Err(e) => {
            table.push("kernel.build", false, f64::NAN, &e.to_string().replace(',', ";"));
        }
    }

    sink.write("validate.csv", &table.rows)?;
    let mut messages = table.messages;
    if table.all_pass {
        messages.push("all checks passed".into());
    }
    Ok(CmdOutcome { ok: table.all_pass, messages })
}

fn cmd_coefficients(config: &ExperimentConfig, sink: &mut OutputSink) -> Result<CmdOutcome> {
    let env = config.build_env()?;
    let kernel = config.build_kernel(&env)?;
    let d = kernel.d();
    let eff = EffectiveCoeffs::new(&env, &kernel)?;

    let mut body = String::new();
    for k in 0..d {
        let _ = write!(body, "y_{},", k + 1);
    }
    for k in 0..d {
        for l in 0..d {
            let _ = write!(body, "a_{}{},", k + 1, l + 1);
        }
    }
    for k in 0..d {
        let _ = write!(body, "b_{},", k + 1);
    }
    for k in 0..d {
        for l in 0..d {
            let _ = write!(body, "sigma_{}{},", k + 1, l + 1);
        }
    }
    body.push_str("min_eig_a,min_eig_reference,identity_residual\n");

    let mut failure: Option<String> = None;
    crate::kernel::for_each_grid_point(d, COEFF_GRID, 0.0, 1.0, |y| {
        if failure.is_some() {
            return;
        }
        let a = eff.a_bar(y);
        let b = eff.b_bar(y);
        let sigma = match eff.sigma_bar(y) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(e.to_string());
                return;
            }
        };
        let min_a = min_symmetric_eigenvalue(&a);
        let min_ref = min_symmetric_eigenvalue(&eff.alpha_minus_ggt_average(y));
        let ident = eff.identity_residual(y);
        for v in y {
            let _ = write!(body, "{},", fnum(*v));
        }
        for k in 0..d {
            for l in 0..d {
                let _ = write!(body, "{},", fnum(a[(k, l)]));
            }
        }
        for v in &b {
            let _ = write!(body, "{},", fnum(*v));
        }
        for k in 0..d {
            for l in 0..d {
                let _ = write!(body, "{},", fnum(sigma[(k, l)]));
            }
        }
        let _ = writeln!(body, "{},{},{}", fnum(min_a), fnum(min_ref), fnum(ident));
    });
    if let Some(msg) = failure {
        return Err(Error::InvalidSpec(msg));
    }
    sink.write("coefficients.csv", &body)?;
    Ok(CmdOutcome {
        ok: true,
        messages: vec![format!("ellipticity floor {}", fnum(eff.ellipticity_floor()))],
    })
}

fn cmd_simulate_walk(
    config: &ExperimentConfig,
    seed: u64,
    sink: &mut OutputSink,
) -> Result<CmdOutcome> {
    let env = config.build_env()?;
    let kernel = config.build_kernel(&env)?;
    let walk_cfg = config.walk_config()?;
    let xi0 = config.walk_block()?.xi0;
    let mut rng = replica_rng(seed, domains::WALK_FREE, 0);
    let path = simulate_free(&env, &kernel, &walk_cfg, xi0, &mut rng)?;

    let d = walk_cfg.d;
    let m2 = (walk_cfg.m * walk_cfg.m) as f64;
    let mut body = String::from("t,");
    for k in 0..d {
        let _ = write!(body, "x_{},", k + 1);
    }
    body.push_str("env_state\n");
    for (n, (pos, state)) in path.positions.iter().zip(&path.env_states).enumerate() {
        let _ = write!(body, "{},", fnum(n as f64 / m2));
        for &p in pos {
            let _ = write!(body, "{},", fnum(p as f64 / walk_cfg.m as f64));
        }
        let _ = writeln!(body, "{state}");
    }
    sink.write("walk_path.csv", &body)?;
    Ok(CmdOutcome {
        ok: true,
        messages: vec![format!("wrote {} steps", path.positions.len() - 1)],
    })
}

/// Diffusion built from the configured coefficient source.
fn build_diffusion(config: &ExperimentConfig, lambda: f64) -> Result<DiffusionSpec> {
    match config.sde_source() {
        SdeSource::Covariance => {
            let block = config.regimes_block()?;
            CovarianceParams::new(block.rho1, block.rho2, block.s)?.diffusion(lambda)
        }
        SdeSource::Effective => {
            let env = config.build_env()?;
            let kernel = config.build_kernel(&env)?;
            DiffusionSpec::from_effective(EffectiveCoeffs::new(&env, &kernel)?, lambda)
        }
    }
}

fn cmd_simulate_sde(
    config: &ExperimentConfig,
    seed: u64,
    opts: &RunOptions,
    sink: &mut OutputSink,
    censoring: &mut Vec<CensoringNote>,
) -> Result<CmdOutcome> {
    let dt = opts.dt.unwrap_or(config.sde.dt);
    let t_cap = opts.t_cap.unwrap_or(config.sde.t_cap);
    let trials = opts.trials.unwrap_or(config.sde.trials);
    let lambda = match opts.lambda {
        Some(l) => l,
        None => config.sde_lambda()?,
    };
    let spec = build_diffusion(config, lambda)?;
    let d = spec.d;
    let x0 = vec![0.0; d];

    if trials == 0 {
        // Path mode.
        let mut rng = replica_rng(seed, domains::RSDE, 0);
        let path = simulate_rsde_with_rng(&spec, &x0, config.sde.t_max, dt, &mut rng)?;
        let mut body = String::from("t,");
        for k in 0..d {
            let _ = write!(body, "x_{},", k + 1);
        }
        for k in 0..d {
            let _ = write!(body, "h_{},", k + 1);
        }
        for k in 0..d {
            let _ = write!(body, "k_{}{}", k + 1, if k + 1 == d { "" } else { "," });
        }
        body.push('\n');
        for i in 0..path.times.len() {
            let _ = write!(body, "{},", fnum(path.times[i]));
            for &v in &path.x[i] {
                let _ = write!(body, "{},", fnum(v));
            }
            for &v in &path.h[i] {
                let _ = write!(body, "{},", fnum(v));
            }
            let row: Vec<String> = path.k[i].iter().map(|&v| fnum(v)).collect();
            let _ = writeln!(body, "{}", row.join(","));
        }
        sink.write("sde_path.csv", &body)?;
        return Ok(CmdOutcome {
            ok: true,
            messages: vec![format!("wrote path with {} points", path.times.len())],
        });
    }

    let results: Vec<crate::rsde::HitResult> = (0..trials)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(seed, domains::RSDE, replica as u64);
            hit_time_with_rng(&spec, &x0, dt, t_cap, &mut rng).expect("origin start valid")
        })
        .collect();
    let censored = results.iter().filter(|r| r.censored()).count();
    let frac = censored as f64 / trials as f64;
    censoring.push(CensoringNote { context: "sde_hits".into(), fraction: frac });

    let mut body = String::from("replica,t_hit,censored,");
    for k in 0..d {
        let _ = write!(body, "x_{}{}", k + 1, if k + 1 == d { "" } else { "," });
    }
    body.push_str(",n_steps\n");
    for (replica, res) in results.iter().enumerate() {
        let t = res.t_hit.map(fnum).unwrap_or_default();
        let _ = write!(body, "{replica},{t},{},", u8::from(res.censored()));
        for &v in &res.x_hit {
            let _ = write!(body, "{},", fnum(v));
        }
        let _ = writeln!(body, "{}", res.n_steps);
    }
    sink.write("sde_hits.csv", &body)?;
    let samples: Vec<f64> = results.iter().filter_map(|r| r.t_hit).collect();
    let mut messages = vec![format!("censored fraction {}", fnum(frac))];
    if !samples.is_empty() {
        let (mean, se) = stats::mean_se(&samples);
        messages.push(format!("mean hit time {} (se {})", fnum(mean), fnum(se)));
    }
    Ok(CmdOutcome { ok: true, messages })
}

fn cmd_deadlock(
    config: &ExperimentConfig,
    seed: u64,
    opts: &RunOptions,
    sink: &mut OutputSink,
    censoring: &mut Vec<CensoringNote>,
    flags: &mut Vec<String>,
) -> Result<CmdOutcome> {
    let env = config.build_env()?;
    let kernel = config.build_kernel(&env)?;
    let walk_cfg = config.walk_config()?;
    let block = config.walk_block()?;
    let trials = opts.trials.unwrap_or(block.trials);
    let results = deadlock_results(&env, &kernel, &walk_cfg, block.xi0, trials, seed)?;
    let summary = summarize_deadlocks(&results);
    censoring.push(CensoringNote {
        context: "deadlock".into(),
        fraction: summary.censored_fraction,
    });
    if summary.censored_fraction > CENSOR_FLAG {
        flags.push(format!(
            "deadlock censoring {} exceeds {CENSOR_FLAG}",
            fnum(summary.censored_fraction)
        ));
    }

    let d = walk_cfg.d;
    let mut body = String::from("replica,t_raw,t_rescaled,censored");
    for k in 0..d {
        let _ = write!(body, ",exit_{}", k + 1);
    }
    body.push('\n');
    for (replica, res) in results.iter().enumerate() {
        let _ = write!(
            body,
            "{replica},{},{},{}",
            res.t_raw,
            fnum(res.t_rescaled),
            u8::from(res.censored)
        );
        for &v in &res.exit_point {
            let _ = write!(body, ",{}", fnum(v));
        }
        body.push('\n');
    }
    sink.write("deadlock_samples.csv", &body)?;

    let mut summary_body = String::from("n_trials,mean,se,censored_fraction");
    for (q, _) in &summary.quantiles {
        let _ = write!(summary_body, ",q{}", (q * 100.0).round() as u32);
    }
    summary_body.push('\n');
    let _ = write!(
        summary_body,
        "{},{},{},{}",
        summary.n_trials,
        fnum(summary.mean),
        fnum(summary.se),
        fnum(summary.censored_fraction)
    );
    for (_, v) in &summary.quantiles {
        let _ = write!(summary_body, ",{}", fnum(*v));
    }
    summary_body.push('\n');
    sink.write("deadlock_summary.csv", &summary_body)?;

    let mut hist = String::from("bin_left,count\n");
    for (left, count) in &summary.histogram {
        let _ = writeln!(hist, "{},{count}", fnum(*left));
    }
    sink.write("deadlock_histogram.csv", &hist)?;

    Ok(CmdOutcome {
        ok: flags.is_empty(),
        messages: vec![format!(
            "mean rescaled deadlock {} (se {}), censored {}",
            fnum(summary.mean),
            fnum(summary.se),
            fnum(summary.censored_fraction)
        )],
    })
}

fn cmd_convergence(
    config: &ExperimentConfig,
    seed: u64,
    opts: &RunOptions,
    sink: &mut OutputSink,
    censoring: &mut Vec<CensoringNote>,
    flags: &mut Vec<String>,
) -> Result<CmdOutcome> {
    let env = config.build_env()?;
    let kernel = config.build_kernel(&env)?;
    let block = config.walk_block()?;
    let trials = opts.trials.unwrap_or(block.trials);
    let d = kernel.d();
    let eff = EffectiveCoeffs::new(&env, &kernel)?;
    let t = block.t;
    // Covariance target t * a_bar, evaluated at the walk's starting point.
    let y0 = vec![0.0; d];
    let a_target = eff.a_bar(&y0) * t;

    let lambda = config.sde_lambda()?;
    let dt = opts.dt.unwrap_or(config.sde.dt);
    let t_cap = opts.t_cap.unwrap_or(config.sde.t_cap);
    let spec = build_diffusion(config, lambda)?;
    let (sde_samples, sde_censored) =
        hit_time_samples(&spec, &vec![0.0; d], dt, t_cap, config.sde.trials, seed)?;
    censoring.push(CensoringNote {
        context: "convergence.sde".into(),
        fraction: sde_censored as f64 / config.sde.trials as f64,
    });

    let mut body = String::from("m,ks_deadlock,censored_walk_fraction");
    for k in 0..d {
        for l in 0..d {
            let _ = write!(body, ",cov_{}{},target_{}{},se_{}{}", k + 1, l + 1, k + 1, l + 1, k + 1, l + 1);
        }
    }
    body.push('\n');

    let mut ks_values = Vec::new();
    for &m in &block.m_list {
        let walk_cfg = crate::walk::WalkConfig {
            m,
            d,
            lambda: block.lambda,
            horizon_steps: block.horizon_steps,
            sample_times: vec![t],
        };
        walk_cfg.validate()?;
        let endpoints =
            free_walk_endpoints(&env, &kernel, &walk_cfg, t, block.xi0, trials, seed)?;
        let (cov, se) = stats::covariance_with_se(&endpoints);
        let results = deadlock_results(&env, &kernel, &walk_cfg, block.xi0, trials, seed)?;
        let summary = summarize_deadlocks(&results);
        censoring.push(CensoringNote {
            context: format!("convergence.walk.m{m}"),
            fraction: summary.censored_fraction,
        });
        if summary.censored_fraction > CENSOR_FLAG {
            flags.push(format!("m = {m}: walk censoring {}", fnum(summary.censored_fraction)));
        }
        let ks = stats::two_sample_ks(&summary.samples, &sde_samples);
        ks_values.push((m, ks));
        let _ = write!(body, "{m},{},{}", fnum(ks), fnum(summary.censored_fraction));
        for k in 0..d {
            for l in 0..d {
                let _ = write!(
                    body,
                    ",{},{},{}",
                    fnum(cov[(k, l)]),
                    fnum(a_target[(k, l)]),
                    fnum(se[(k, l)])
                );
            }
        }
        body.push('\n');
    }
    sink.write("convergence.csv", &body)?;

    let mut messages: Vec<String> = ks_values
        .iter()
        .map(|(m, ks)| format!("m = {m}: KS(walk deadlock, sde hit) = {}", fnum(*ks)))
        .collect();
    // Qualitative trend note: allow one noise-level inversion.
    let noise = stats::ks_noise_scale(trials, config.sde.trials);
    let inversions = ks_values
        .windows(2)
        .filter(|w| w[1].1 > w[0].1 + noise)
        .count();
    messages.push(format!("KS inversions beyond noise ({}): {inversions}", fnum(noise)));
    Ok(CmdOutcome { ok: flags.is_empty(), messages })
}

fn cmd_regimes(
    config: &ExperimentConfig,
    seed: u64,
    opts: &RunOptions,
    sink: &mut OutputSink,
    censoring: &mut Vec<CensoringNote>,
    flags: &mut Vec<String>,
) -> Result<CmdOutcome> {
    let block = config.regimes_block()?;
    let params = CovarianceParams::new(block.rho1, block.rho2, block.s)?;
    // The sweep overrides the threshold per grid point; the lambda stored
    // here is only a placeholder.
    let spec = params.diffusion(block.grid[0])?;
    let dt = opts.dt.unwrap_or(config.sde.dt);
    let t_cap = opts.t_cap.unwrap_or(config.sde.t_cap);
    let trials = opts.trials.unwrap_or(block.trials);
    let estimate = estimate_mean_deadlock(&spec, &block.grid, trials, dt, t_cap, seed)?;

    let mut body = String::from("lambda,mean,se,censored_frac\n");
    for i in 0..estimate.lambda_grid.len() {
        let _ = writeln!(
            body,
            "{},{},{},{}",
            fnum(estimate.lambda_grid[i]),
            fnum(estimate.means[i]),
            fnum(estimate.standard_errors[i]),
            fnum(estimate.censored_fractions[i])
        );
        censoring.push(CensoringNote {
            context: format!("regimes.lambda{}", estimate.lambda_grid[i]),
            fraction: estimate.censored_fractions[i],
        });
        if estimate.flagged[i] {
            flags.push(format!(
                "lambda = {}: censoring {}",
                estimate.lambda_grid[i],
                fnum(estimate.censored_fractions[i])
            ));
        }
    }
    sink.write("regimes.csv", &body)?;

    let mut verdict = format!("{}", estimate.fit);
    if let Some((lo, hi)) = estimate.beta_bounds {
        let _ = write!(verdict, " [beta bounds {:.4}, {:.4}]", lo, hi);
    }
    sink.write("fit_summary.txt", &format!("{verdict}\n"))?;
    Ok(CmdOutcome { ok: flags.is_empty(), messages: vec![verdict] })
}
