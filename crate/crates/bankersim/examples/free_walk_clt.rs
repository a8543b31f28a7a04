//! Empirical covariance of the rescaled free walk against the homogenized
//! covariance `t * a_bar`.
//!
//! ```bash
//! cargo run --release --example free_walk_clt
//! ```

use bankersim::env::EnvSpec;
use bankersim::homogenize::EffectiveCoeffs;
use bankersim::kernel::{presets, KernelSpec};
use bankersim::stats;
use bankersim::walk::{free_walk_endpoints, WalkConfig};
use nalgebra::DMatrix;

fn main() {
    let env = EnvSpec::new(DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.6, 0.4])).unwrap();
    let kernel = KernelSpec::build_checked(presets::two_state_constant(), &env).unwrap();
    let eff = EffectiveCoeffs::new(&env, &kernel).unwrap();
    let a_bar = eff.a_bar(&[0.0, 0.0]);
    println!(
        "a_bar = [[{:.5}, {:.5}], [{:.5}, {:.5}]]",
        a_bar[(0, 0)],
        a_bar[(0, 1)],
        a_bar[(1, 0)],
        a_bar[(1, 1)]
    );

    let cfg = WalkConfig { m: 50, d: 2, lambda: 1.5, horizon_steps: 0, sample_times: vec![1.0] };
    let n = 5000;
    let points = free_walk_endpoints(&env, &kernel, &cfg, 1.0, 0, n, 2024).unwrap();
    let (cov, se) = stats::covariance_with_se(&points);
    println!("empirical covariance of S_(m^2)/m over {n} replicas (m = 50, t = 1):");
    for k in 0..2 {
        for l in 0..2 {
            println!(
                "  cov({},{}) = {:+.5}  target {:+.5}  deviation {:+.2} se",
                k + 1,
                l + 1,
                cov[(k, l)],
                a_bar[(k, l)],
                (cov[(k, l)] - a_bar[(k, l)]) / se[(k, l)]
            );
        }
    }
}
