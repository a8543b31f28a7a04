//! Solve the corrector system and assemble the homogenized coefficients of
//! a two-state, space-dependent kernel.
//!
//! ```bash
//! cargo run --release --example effective_coefficients
//! ```

use bankersim::env::EnvSpec;
use bankersim::homogenize::EffectiveCoeffs;
use bankersim::kernel::{presets, KernelSpec};
use nalgebra::DMatrix;

fn main() {
    let env = EnvSpec::new(DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.6, 0.4])).unwrap();
    let kernel = KernelSpec::build_centered(presets::perturbed_2d(2, 0.05), &env).unwrap();
    println!(
        "kernel: p_min = {:.4}, Lipschitz bound = {:.4}, ellipticity floor = {:.6}",
        kernel.p_min, kernel.lipschitz_bound, kernel.ellipticity_floor
    );

    let eff = EffectiveCoeffs::new(&env, &kernel).unwrap();
    println!("effective ellipticity floor: {:.6}", eff.ellipticity_floor());

    for y in [[0.0, 0.0], [0.25, 0.5], [0.5, 0.5], [0.75, 0.25]] {
        let corr = eff.corrector(&y);
        let (resid, centering) = eff.corrector_residuals(&y, &corr);
        let a = eff.a_bar(&y);
        let b = eff.b_bar(&y);
        println!("\ny = {y:?}");
        println!("  corrector residual {resid:.2e}, centering {centering:.2e}");
        println!(
            "  a_bar = [[{:.5}, {:.5}], [{:.5}, {:.5}]]",
            a[(0, 0)],
            a[(0, 1)],
            a[(1, 0)],
            a[(1, 1)]
        );
        println!("  b_bar = [{:.6}, {:.6}]", b[0], b[1]);
        println!("  identity residual = {:.2e}", eff.identity_residual(&y));
        // Discrete drift against its continuum limit.
        let m = 1000;
        let bm = eff.discrete_drift_bm(0, &y, m);
        let limit = eff.drift_limit(0, &y);
        println!(
            "  m b^(m) at m=1000: [{:.6}, {:.6}] vs limit [{:.6}, {:.6}]",
            m as f64 * bm[0],
            m as f64 * bm[1],
            limit[0],
            limit[1]
        );
    }
}
