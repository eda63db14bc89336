//! Synthetic benchmark pipelines: relative error versus sample size and
//! versus the Var(eps_w)/Var(eps_u) ratio, with per-replication parameter
//! redraws and deterministic per-cell RNG streams.

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{
    cross_moment_wz, did_closed_form, ols_naive, two_proxy, BootstrapConfig,
};
use crate::cross_moment::{get_beta, Method};
use crate::error::{Error, Result};
use crate::scm::{derive_seed, rng_from_seed, sample_params_with_rng, simulate, NoiseFamily};

/// |(beta_true - beta_hat) / beta_true|.
pub fn relative_error(beta_true: f64, beta_hat: f64) -> Result<f64> {
    if beta_true == 0.0 {
        return Err(Error::InvalidInput("beta_true must be nonzero".into()));
    }
    Ok(((beta_true - beta_hat) / beta_true).abs())
}

/// Benchmark grid.
#[derive(Debug, Clone)]
pub struct BenchGrid {
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub noise_family: NoiseFamily,
    pub methods: Vec<Method>,
    /// Var(eps_w)/Var(eps_u) values for the ratio sweep.
    pub variance_ratio_grid: Option<Vec<f64>>,
    pub seed: u64,
    pub bootstrap: BootstrapConfig,
    pub tol: f64,
    pub n_max: u32,
}

impl BenchGrid {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::InvalidParams("replications must be >= 1".into()));
        }
        if self.sample_sizes.is_empty()
            || self.sample_sizes.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidParams(
                "sample sizes must be non-empty and strictly increasing".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParams("at least one method required".into()));
        }
        Ok(())
    }

    fn needs_w(&self) -> bool {
        self.methods.iter().any(|m| {
            matches!(
                m,
                Method::TwoProxy | Method::CombinedWz | Method::CrossMomentW
            )
        })
    }
}

/// Per-replication raw outcome.
#[derive(Debug, Clone, Serialize)]
pub struct RawRow {
    pub method: Method,
    pub x_axis: &'static str,
    pub x_value: f64,
    pub replication: usize,
    pub seed: u64,
    pub beta_true: f64,
    pub beta_hat: Option<f64>,
    pub err: Option<f64>,
}

/// Aggregated benchmark cell.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub method: Method,
    pub x_axis: &'static str,
    pub x_value: f64,
    pub mean_err: f64,
    pub std_err: f64,
    pub failures: usize,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub raw: Vec<RawRow>,
}

impl BenchResult {
    /// CSV schema `method,x_axis,x_value,mean_err,std_err,failures,replications,seed`.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("method,x_axis,x_value,mean_err,std_err,failures,replications,seed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.method, r.x_axis, r.x_value, r.mean_err, r.std_err, r.failures,
                r.replications, r.seed
            ));
        }
        out
    }

    /// Per-replication rows: `method,x_axis,x_value,replication,seed,beta_true,beta_hat,err`.
    pub fn raw_to_csv(&self) -> String {
        let mut out =
            String::from("method,x_axis,x_value,replication,seed,beta_true,beta_hat,err\n");
        for r in &self.raw {
            let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.method,
                r.x_axis,
                r.x_value,
                r.replication,
                r.seed,
                r.beta_true,
                fmt_opt(r.beta_hat),
                fmt_opt(r.err),
            ));
        }
        out
    }

    /// Median error per (method, x_value) over successful replications.
    pub fn median_err(&self, method: Method, x_value: f64) -> Option<f64> {
        let mut errs: Vec<f64> = self
            .raw
            .iter()
            .filter(|r| r.method == method && r.x_value == x_value)
            .filter_map(|r| r.err)
            .collect();
        if errs.is_empty() {
            return None;
        }
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = errs.len() / 2;
        Some(if errs.len() % 2 == 0 {
            (errs[mid - 1] + errs[mid]) / 2.0
        } else {
            errs[mid]
        })
    }
}

/// Benchmark versus sample size.
pub fn run_bench(grid: &BenchGrid) -> Result<BenchResult> {
    grid.validate()?;
    let cells: Vec<(usize, f64, Option<f64>)> = grid
        .sample_sizes
        .iter()
        .map(|&n| (n, n as f64, None))
        .collect();
    run_cells(grid, &cells, "sample_size")
}

/// Sweep Var(eps_w)/Var(eps_u) at a fixed sample size.
pub fn run_ratio_sweep(grid: &BenchGrid, sample_size: usize) -> Result<BenchResult> {
    grid.validate()?;
    let ratios = grid
        .variance_ratio_grid
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("variance_ratio_grid required".into()))?;
    let cells: Vec<(usize, f64, Option<f64>)> = ratios
        .iter()
        .map(|&r| (sample_size, r, Some(r)))
        .collect();
    run_cells(grid, &cells, "variance_ratio")
}

fn run_cells(
    grid: &BenchGrid,
    cells: &[(usize, f64, Option<f64>)],
    x_axis: &'static str,
) -> Result<BenchResult> {
    let needs_w = grid.needs_w() || cells.iter().any(|c| c.2.is_some());
    let mut raw: Vec<RawRow> = Vec::new();

    // replications within a cell run in parallel; results are merged by
    // replication index so the output is schedule-independent
    for (cell_idx, &(n, x_value, w_ratio)) in cells.iter().enumerate() {
        let cell_rows: Vec<Vec<RawRow>> = (0..grid.replications)
            .into_par_iter()
            .map(|rep| {
                let rep_seed =
                    derive_seed(grid.seed, (cell_idx as u64) << 32 | rep as u64);
                run_replication(grid, n, x_value, x_axis, rep, rep_seed, w_ratio, needs_w)
            })
            .collect();
        for rows in cell_rows {
            raw.extend(rows);
        }
    }

    // aggregate per (method, x_value) in grid order
    let mut rows = Vec::new();
    for &(_, x_value, _) in cells {
        for &method in &grid.methods {
            let cell: Vec<&RawRow> = raw
                .iter()
                .filter(|r| r.method == method && r.x_value == x_value)
                .collect();
            let errs: Vec<f64> = cell.iter().filter_map(|r| r.err).collect();
            let failures = cell.len() - errs.len();
            let (mean, std) = if errs.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let mean = errs.iter().sum::<f64>() / errs.len() as f64;
                let var = if errs.len() > 1 {
                    errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
                        / (errs.len() as f64 - 1.0)
                } else {
                    0.0
                };
                (mean, var.sqrt())
            };
            rows.push(BenchRow {
                method,
                x_axis,
                x_value,
                mean_err: mean,
                std_err: std,
                failures,
                replications: grid.replications,
                seed: grid.seed,
            });
        }
    }
    Ok(BenchResult { rows, raw })
}

#[allow(clippy::too_many_arguments)]
fn run_replication(
    grid: &BenchGrid,
    n: usize,
    x_value: f64,
    x_axis: &'static str,
    rep: usize,
    rep_seed: u64,
    w_ratio: Option<f64>,
    needs_w: bool,
) -> Vec<RawRow> {
    let mut rng = rng_from_seed(rep_seed);
    let mut params = sample_params_with_rng(&mut rng, grid.noise_family, needs_w);
    if let (Some(ratio), Some(noise_w)) = (w_ratio, params.noise_w.as_mut()) {
        noise_w.variance = ratio * params.noise_u.variance;
    }
    let data_seed = derive_seed(rep_seed, 1);
    let ds = simulate(&params, n, data_seed)
        .expect("sampled params are valid")
        .centered()
        .expect("simulated data is non-empty");
    let w = ds.w.as_deref();

    grid.methods
        .iter()
        .map(|&method| {
            let estimate = match method {
                Method::CrossMoment => {
                    get_beta(&ds.d, &ds.z, &ds.y, grid.tol, grid.n_max).map(|r| r.beta_hat)
                }
                Method::CrossMomentW => get_beta(
                    &ds.d,
                    w.expect("W present when CrossMomentW requested"),
                    &ds.y,
                    grid.tol,
                    grid.n_max,
                )
                .map(|r| r.beta_hat),
                Method::CombinedWz => {
                    let cfg = BootstrapConfig {
                        seed: derive_seed(rep_seed, 2),
                        ..grid.bootstrap
                    };
                    cross_moment_wz(
                        &ds.d,
                        &ds.z,
                        w.expect("W present when CombinedWz requested"),
                        &ds.y,
                        &cfg,
                        grid.tol,
                        grid.n_max,
                    )
                    .map(|r| r.beta_hat)
                }
                Method::DidClosedForm => {
                    did_closed_form(&ds.d, &ds.z, &ds.y).map(|r| r.beta_hat)
                }
                Method::TwfeRegression => {
                    crate::baselines::TwfeDesign::new(&ds.d, &ds.z, &ds.y)
                        .and_then(|design| crate::baselines::twfe_regression(&design))
                        .map(|r| r.beta_hat)
                }
                Method::Ols => ols_naive(&ds.d, &ds.z, &ds.y).map(|r| r.beta_hat),
                Method::TwoProxy => two_proxy(
                    &ds.d,
                    &ds.z,
                    w.expect("W present when TwoProxy requested"),
                    &ds.y,
                    grid.tol,
                )
                .map(|r| r.beta_hat),
            };
            let beta_hat = estimate.ok();
            let err = beta_hat.map(|b| relative_error(params.beta, b).unwrap());
            RawRow {
                method,
                x_axis,
                x_value,
                replication: rep,
                seed: rep_seed,
                beta_true: params.beta,
                beta_hat,
                err,
            }
        })
        .collect()
}
