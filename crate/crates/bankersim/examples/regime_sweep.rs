//! Sweep the resource budget lambda towards 2 for the three deadlock-time
//! regimes (positive / null / negative correlation at the corner).
//!
//! ```bash
//! cargo run --release --example regime_sweep
//! ```

use bankersim::regimes::{classify, estimate_mean_deadlock, spectrum, CovarianceParams};

fn main() {
    let grid = [1.5, 1.75, 1.875, 1.9375];
    let trials = 600;
    for s in [0.9, 0.0, -0.5] {
        let params = CovarianceParams::new(1.0, 1.0, s).unwrap();
        let spec = spectrum(&params);
        println!(
            "s = {s}: regime {:?}, eigenvalues ({:.3}, {:.3}), main axis [{:+.3}, {:+.3}]",
            classify(s),
            spec.lambda1,
            spec.lambda2,
            spec.e1[0],
            spec.e1[1]
        );
        let diffusion = params.diffusion(grid[0]).unwrap();
        let est = estimate_mean_deadlock(&diffusion, &grid, trials, 5e-4, 1e3, 3).unwrap();
        for i in 0..grid.len() {
            println!(
                "  lambda = {:<7} E(T) = {:>8.4} (se {:.4}, censored {:.3})",
                grid[i], est.means[i], est.standard_errors[i], est.censored_fractions[i]
            );
        }
        println!("  verdict: {}\n", est.fit);
    }
}
