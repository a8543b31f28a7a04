//! Validate an environment chain and print its ergodicity certificate.
//!
//! ```bash
//! cargo run --release --example validate_environment
//! ```

use bankersim::env::{
    ergodicity_certificate, sample_env_path, stationary_distribution, EnvSpec,
};
use bankersim::rng::{domains, replica_rng};
use nalgebra::DMatrix;

fn main() {
    let env = EnvSpec::new(DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.6, 0.4])).unwrap();

    let violations = env.validate();
    println!("violations: {violations:?}");

    let dist = stationary_distribution(&env).unwrap();
    println!("stationary measure: {:?}", dist.mu.as_slice());

    let cert = ergodicity_certificate(&env).unwrap();
    println!(
        "Doeblin power m = {}, floor eta = {}, decay bound {} * {}^n",
        cert.m_doeblin, cert.eta, cert.gamma, cert.c
    );
    println!("certificate verified on n in 1..200: {}", cert.verify(&env, &dist, 200));

    // Long-run occupation agrees with the stationary measure.
    let mut rng = replica_rng(7, domains::ENV_PATH, 0);
    let path = sample_env_path(&env, 0, 1_000_000, &mut rng);
    let occ0 = path.iter().filter(|&&s| s == 0).count() as f64 / path.len() as f64;
    println!("empirical occupation of state 0 over 10^6 steps: {occ0:.4} (mu_0 = {:.4})", dist.mu[0]);

    // A periodic chain has no certificate.
    let periodic = EnvSpec::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
    println!("two-cycle violations: {:?}", periodic.validate());
    println!("two-cycle certificate: {:?}", ergodicity_certificate(&periodic).err());
}
