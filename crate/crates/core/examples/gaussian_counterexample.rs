//! With a Gaussian confounder the causal effect is not identifiable from
//! the observational distribution: this constructs a second model with a
//! different beta but the exact same (Z, D, Y) covariance, and verifies
//! the match analytically.

use crossmoment::cross_moment::get_beta_population;
use crossmoment::gaussian_twin::{construct_twin, verify_twin, GaussianScm};
use crossmoment::moments::ObservedVar;

fn main() -> crossmoment::Result<()> {
    let m1 = GaussianScm {
        alpha_z: 1.0,
        alpha_d: 1.0,
        beta: 1.0,
        gamma: 1.0,
        var_u: 1.0,
        var_z: 1.0,
        var_d: 1.0,
        var_y: 1.0,
    };
    let twin = construct_twin(&m1, None)?;
    let report = verify_twin(&twin, 1e-9);

    println!("delta = {:.6}, k = {:.6}", twin.delta, twin.k);
    println!("beta(M1) = {:.6}, beta(M2) = {:.6}", twin.m1.beta, twin.m2.beta);
    println!();
    println!("{:<12} {:>12} {:>12} {:>10}", "moment", "M1", "M2", "|diff|");
    for c in &report.comparisons {
        println!("{:<12} {:>12.6} {:>12.6} {:>10.2e}", c.name, c.m1, c.m2, c.abs_diff);
    }
    println!();
    println!(
        "moments match: {}; beta gap {:.4}",
        if report.passed { "yes" } else { "NO" },
        report.beta_gap
    );

    // the cross-moment estimator refuses Gaussian data instead of
    // returning one of the two betas
    let err = get_beta_population(&twin.m1.to_scm_params(), ObservedVar::Z, 1e-10, 8)
        .unwrap_err();
    println!("cross-moment on Gaussian population moments: {err}");
    Ok(())
}
