//! Relative estimation error versus sample size for cross-moment, DiD and
//! OLS, over randomly drawn admissible parameter sets. Emits the benchmark
//! CSV on stdout; pipe it somewhere to plot it.

use crossmoment::baselines::BootstrapConfig;
use crossmoment::cross_moment::{DEFAULT_N_MAX, DEFAULT_TOL};
use crossmoment::experiments::{run_bench, BenchGrid};
use crossmoment::scm::NoiseFamily;
use crossmoment::Method;

fn main() -> crossmoment::Result<()> {
    let grid = BenchGrid {
        sample_sizes: vec![1_000, 10_000, 100_000],
        replications: 10,
        noise_family: NoiseFamily::Exponential,
        methods: vec![Method::CrossMoment, Method::DidClosedForm, Method::Ols],
        variance_ratio_grid: None,
        seed: 20_240_501,
        bootstrap: BootstrapConfig {
            resamples: 100,
            resample_fraction: 1.0,
            seed: 20_240_501,
        },
        tol: DEFAULT_TOL,
        n_max: DEFAULT_N_MAX,
    };
    let result = run_bench(&grid)?;
    print!("{}", result.to_csv());
    Ok(())
}
