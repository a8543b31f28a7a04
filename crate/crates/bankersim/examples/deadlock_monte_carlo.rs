//! Monte Carlo deadlock times of the reflected walk in the broken-corner
//! box, for a few box sizes.
//!
//! ```bash
//! cargo run --release --example deadlock_monte_carlo
//! ```

use bankersim::env::EnvSpec;
use bankersim::kernel::KernelSpec;
use bankersim::walk::{monte_carlo_deadlock, WalkConfig};

fn main() {
    let env = EnvSpec::single_state();
    let kernel = KernelSpec::uniform(2, 1);
    let trials = 4000;
    println!("uniform kernel, lambda = 1.5, {trials} replicas per box size\n");
    println!("{:>5} {:>12} {:>12} {:>12} {:>10}", "m", "mean", "se", "median", "censored");
    for m in [10usize, 20, 40, 80] {
        let cfg =
            WalkConfig { m, d: 2, lambda: 1.5, horizon_steps: 0, sample_times: vec![1.0] };
        let summary = monte_carlo_deadlock(&env, &kernel, &cfg, 0, trials, 99).unwrap();
        let median = summary.quantiles.iter().find(|(q, _)| *q == 0.5).unwrap().1;
        println!(
            "{m:>5} {:>12.5} {:>12.5} {:>12.5} {:>10.4}",
            summary.mean, summary.se, median, summary.censored_fraction
        );
    }
    println!("\nrescaled times T/m^2 stabilize as m grows: the diffusion limit.");
}
