//! Integrate the reflected SDE on the unit square and track the boundary
//! local times.
//!
//! ```bash
//! cargo run --release --example reflected_sde_path
//! ```

use bankersim::regimes::CovarianceParams;
use bankersim::rsde::{hit_time, simulate_rsde};

fn main() {
    // Strongly positively correlated noise pushes towards the corner.
    let params = CovarianceParams::new(1.0, 1.0, 0.9).unwrap();
    let spec = params.diffusion(1.5).unwrap();

    let path = simulate_rsde(&spec, &[0.0, 0.0], 10.0, 1e-3, 42).unwrap();
    let n = path.times.len() - 1;
    println!("integrated {} steps to t = {}", n, path.times[n]);
    println!(
        "final X = [{:.4}, {:.4}], accumulated H = [{:.4}, {:.4}], K = [{:.4}, {:.4}]",
        path.x[n][0],
        path.x[n][1],
        path.h[n][0],
        path.h[n][1],
        path.k[n][0],
        path.k[n][1]
    );

    let inside = path.x.iter().all(|x| x.iter().all(|&v| (0.0..=1.0).contains(&v)));
    println!("path stayed in the unit square: {inside}");

    let res = hit_time(&spec, &[0.0, 0.0], 1e-3, 100.0, 43).unwrap();
    match res.t_hit {
        Some(t) => println!(
            "deadlock (X1 + X2 >= {}) first reached at t = {t:.4}, X = [{:.4}, {:.4}]",
            spec.lambda, res.x_hit[0], res.x_hit[1]
        ),
        None => println!("censored at the cap"),
    }
}
