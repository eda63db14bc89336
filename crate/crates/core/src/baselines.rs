//! Reference estimators: DiD in closed form and as a stacked TWFE
//! regression, naive OLS on (Z, D), the two-proxy linear estimator, and
//! the bootstrap combination of the two single-proxy cross-moment
//! estimates with inverse-variance weights.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross_moment::{beta_from_moments, get_beta, EstimateReport, Method, RatioResult};
use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::{cross_moment, population_moment, sd, ObservedVar};
use crate::scm::{derive_seed, rng_from_seed, ScmParams};

/// Closed-form DiD on centered series:
/// `beta_hat = (E[YD] - E[ZD]) / E[D^2]`.
pub fn did_closed_form(d: &[f64], z: &[f64], y: &[f64]) -> Result<EstimateReport> {
    let e_yd = cross_moment(y, d, 1, 1)?;
    let e_zd = cross_moment(z, d, 1, 1)?;
    let e_d2 = cross_moment(d, d, 1, 1)?;
    if e_d2 <= f64::MIN_POSITIVE {
        return Err(Error::DegenerateDenominator("E[D^2] is zero".into()));
    }
    let beta = (e_yd - e_zd) / e_d2;
    Ok(EstimateReport::new(beta, Method::DidClosedForm)
        .with_diag("beta1", 0.0)
        .with_diag("beta2", e_zd / e_d2))
}

/// Population-level bias of the DiD estimator:
/// `alpha_d (gamma - alpha_z) Var(eps_u) / (alpha_d^2 Var(eps_u) + Var(eps_d))`.
pub fn did_bias_predicted(params: &ScmParams) -> f64 {
    let var_u = params.noise_u.variance;
    let e_d2 = params.alpha_d.powi(2) * var_u + params.noise_d.variance;
    params.alpha_d * (params.gamma - params.alpha_z) * var_u / e_d2
}

/// Stacked two-phase design: pre-phase outcomes (Z) followed by
/// post-phase outcomes (Y), with phase indicator T, treatment D, the
/// interaction D*T, and optional covariates repeated across phases.
#[derive(Debug, Clone)]
pub struct TwfeDesign {
    outcome: Vec<f64>,
    phase: Vec<f64>,
    treat: Vec<f64>,
    interaction: Vec<f64>,
    covariates: Vec<(String, Vec<f64>)>,
}

impl TwfeDesign {
    pub fn new(d: &[f64], z: &[f64], y: &[f64]) -> Result<Self> {
        Self::with_covariates(d, z, y, &[])
    }

    pub fn with_covariates(
        d: &[f64],
        z: &[f64],
        y: &[f64],
        x: &[(String, Vec<f64>)],
    ) -> Result<Self> {
        let n = d.len();
        if n == 0 || z.len() != n || y.len() != n {
            return Err(Error::InvalidInput(
                "d, z, y must be non-empty and of equal length".into(),
            ));
        }
        for (name, col) in x {
            if col.len() != n {
                return Err(Error::InvalidInput(format!(
                    "covariate {name} has length {} but units are {n}",
                    col.len()
                )));
            }
        }
        let mut outcome = Vec::with_capacity(2 * n);
        outcome.extend_from_slice(z);
        outcome.extend_from_slice(y);
        let mut phase = vec![0.0; n];
        phase.extend(std::iter::repeat(1.0).take(n));
        let mut treat = Vec::with_capacity(2 * n);
        treat.extend_from_slice(d);
        treat.extend_from_slice(d);
        let mut interaction = vec![0.0; n];
        interaction.extend_from_slice(d);
        let covariates = x
            .iter()
            .map(|(name, col)| {
                let mut stacked = Vec::with_capacity(2 * n);
                stacked.extend_from_slice(col);
                stacked.extend_from_slice(col);
                (name.clone(), stacked)
            })
            .collect();
        Ok(Self {
            outcome,
            phase,
            treat,
            interaction,
            covariates,
        })
    }

    pub fn n_units(&self) -> usize {
        self.outcome.len() / 2
    }
}

/// OLS on the stacked design; the DiD estimate is the coefficient on D*T.
pub fn twfe_regression(design: &TwfeDesign) -> Result<EstimateReport> {
    let mut columns: Vec<&[f64]> = vec![&design.phase, &design.treat, &design.interaction];
    for (_, col) in &design.covariates {
        columns.push(col);
    }
    let coef = linalg::ols(&columns, &design.outcome)?;
    let mut report = EstimateReport::new(coef[2], Method::TwfeRegression)
        .with_diag("beta1", coef[0])
        .with_diag("beta2", coef[1]);
    for (i, (name, _)) in design.covariates.iter().enumerate() {
        report = report.with_diag(&format!("alpha_{name}"), coef[3 + i]);
    }
    Ok(report)
}

/// Naive OLS `Y ~ alpha Z + beta D` on centered series.
pub fn ols_naive(d: &[f64], z: &[f64], y: &[f64]) -> Result<EstimateReport> {
    let e_z2 = cross_moment(z, z, 1, 1)?;
    let e_zd = cross_moment(z, d, 1, 1)?;
    let e_d2 = cross_moment(d, d, 1, 1)?;
    let e_zy = cross_moment(z, y, 1, 1)?;
    let e_dy = cross_moment(d, y, 1, 1)?;
    let det = e_z2 * e_d2 - e_zd * e_zd;
    let trace = e_z2 + e_d2;
    if det.abs() <= 1e-12 * trace * trace {
        return Err(Error::SingularDesign(format!(
            "normal-equation determinant {det:.3e}"
        )));
    }
    let alpha = (e_zy * e_d2 - e_dy * e_zd) / det;
    let beta = (e_z2 * e_dy - e_zd * e_zy) / det;
    // condition number of the symmetric 2x2 normal matrix
    let disc = (trace * trace - 4.0 * det).max(0.0).sqrt();
    let (lo, hi) = ((trace - disc) / 2.0, (trace + disc) / 2.0);
    let cond = if lo.abs() > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(EstimateReport::new(beta, Method::Ols)
        .with_diag("alpha", alpha)
        .with_diag("condition_number", cond))
}

/// Two-proxy linear estimator: the ratio alpha_d/alpha_z equals
/// E[DW]/E[ZW], then beta follows from the single-proxy formula with Z.
pub fn two_proxy(d: &[f64], z: &[f64], w: &[f64], y: &[f64], tol: f64) -> Result<EstimateReport> {
    let e_dw = cross_moment(d, w, 1, 1)?;
    let e_zw = cross_moment(z, w, 1, 1)?;
    if e_zw.abs() <= tol * sd(z)? * sd(w)? {
        return Err(Error::DegenerateDenominator(format!(
            "E[ZW] = {e_zw:.3e}; proxy paths alpha_w alpha_z vanish"
        )));
    }
    let ratio = e_dw / e_zw;
    let e_dy = cross_moment(d, y, 1, 1)?;
    let e_yz = cross_moment(y, z, 1, 1)?;
    let e_d2 = cross_moment(d, d, 1, 1)?;
    let e_dz = cross_moment(d, z, 1, 1)?;
    let beta = beta_from_moments(ratio, e_dy, e_yz, e_d2, e_dz, tol)?;
    let mut report = EstimateReport::new(beta, Method::TwoProxy)
        .with_diag("e_dw", e_dw)
        .with_diag("e_zw", e_zw);
    report.ratio = Some(RatioResult {
        ratio,
        order_n: 3,
        num: e_dw,
        den: e_zw,
        sign_basis: e_dz,
    });
    Ok(report)
}

/// Two-proxy estimator evaluated on exact population moments.
pub fn two_proxy_population(params: &ScmParams, tol: f64) -> Result<EstimateReport> {
    let m = |a, b| population_moment(params, a, b, 1, 1).unwrap();
    let e_dw = m(ObservedVar::D, ObservedVar::W);
    let e_zw = m(ObservedVar::Z, ObservedVar::W);
    let sd_z = m(ObservedVar::Z, ObservedVar::Z).sqrt();
    let sd_w = m(ObservedVar::W, ObservedVar::W).sqrt();
    if e_zw.abs() <= tol * sd_z * sd_w {
        return Err(Error::DegenerateDenominator(format!("E[ZW] = {e_zw:.3e}")));
    }
    let ratio = e_dw / e_zw;
    let beta = beta_from_moments(
        ratio,
        m(ObservedVar::D, ObservedVar::Y),
        m(ObservedVar::Y, ObservedVar::Z),
        m(ObservedVar::D, ObservedVar::D),
        m(ObservedVar::D, ObservedVar::Z),
        tol,
    )?;
    Ok(EstimateReport::new(beta, Method::TwoProxy).with_diag("ratio", ratio))
}

/// Bootstrap configuration for the W-Z combiner.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub resample_fraction: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples < 2 {
            return Err(Error::InvalidParams(
                "at least 2 resamples are needed to estimate variances".into(),
            ));
        }
        if !(self.resample_fraction > 0.0 && self.resample_fraction <= 1.0) {
            return Err(Error::InvalidParams(
                "resample fraction must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Combine the single-proxy cross-moment estimates through Z and W:
/// bootstrap both, weight the resample means by inverse variance.
///
/// Resamples that fail the ratio condition are skipped; a proxy with more
/// than half of its resamples failing is dropped and the other proxy
/// carries the full weight (recorded in the diagnostics).
pub fn cross_moment_wz(
    d: &[f64],
    z: &[f64],
    w: &[f64],
    y: &[f64],
    cfg: &BootstrapConfig,
    tol: f64,
    n_max: u32,
) -> Result<EstimateReport> {
    cfg.validate()?;
    let n = d.len();
    if n == 0 || z.len() != n || w.len() != n || y.len() != n {
        return Err(Error::InvalidInput(
            "d, z, w, y must be non-empty and of equal length".into(),
        ));
    }
    let m = (cfg.resample_fraction * n as f64).ceil() as usize;
    let t = cfg.resamples;

    let estimates: Vec<(Option<f64>, Option<f64>)> = (0..t)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, i as u64));
            let mut rd = Vec::with_capacity(m);
            let mut rz = Vec::with_capacity(m);
            let mut rw = Vec::with_capacity(m);
            let mut ry = Vec::with_capacity(m);
            for _ in 0..m {
                let idx = rng.gen_range(0..n);
                rd.push(d[idx]);
                rz.push(z[idx]);
                rw.push(w[idx]);
                ry.push(y[idx]);
            }
            // re-center the resample so the moment formulas stay exact
            let rd = crate::moments::center(&rd).unwrap();
            let rz = crate::moments::center(&rz).unwrap();
            let rw = crate::moments::center(&rw).unwrap();
            let ry = crate::moments::center(&ry).unwrap();
            let via_z = get_beta(&rd, &rz, &ry, tol, n_max).ok().map(|r| r.beta_hat);
            let via_w = get_beta(&rd, &rw, &ry, tol, n_max).ok().map(|r| r.beta_hat);
            (via_z, via_w)
        })
        .collect();

    let beta_z: Vec<f64> = estimates.iter().filter_map(|(z, _)| *z).collect();
    let beta_w: Vec<f64> = estimates.iter().filter_map(|(_, w)| *w).collect();
    let z_usable = beta_z.len() * 2 > t;
    let w_usable = beta_w.len() * 2 > t;
    if !z_usable && !w_usable {
        return Err(Error::ProxyUnusable {
            proxy: "both Z and W".into(),
            failed: t - beta_z.len().max(beta_w.len()),
            total: t,
        });
    }

    let stats = |vals: &[f64]| {
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (vals.len() as f64 - 1.0).max(1.0);
        (mean, var)
    };
    let (mean_z, var_z) = if z_usable { stats(&beta_z) } else { (f64::NAN, f64::NAN) };
    let (mean_w, var_w) = if w_usable { stats(&beta_w) } else { (f64::NAN, f64::NAN) };

    let (weight_z, weight_w) = match (z_usable, w_usable) {
        (true, false) => (1.0, 0.0),
        (false, true) => (0.0, 1.0),
        (true, true) => {
            if var_z == 0.0 && var_w == 0.0 {
                (0.5, 0.5)
            } else if var_z == 0.0 {
                (1.0, 0.0)
            } else if var_w == 0.0 {
                (0.0, 1.0)
            } else {
                // inverse-variance weights: sigma_w^2 / (sigma_z^2 + sigma_w^2) on Z
                (var_w / (var_z + var_w), var_z / (var_z + var_w))
            }
        }
        (false, false) => unreachable!(),
    };
    let beta = match (z_usable, w_usable) {
        (true, true) => weight_z * mean_z + weight_w * mean_w,
        (true, false) => mean_z,
        (false, true) => mean_w,
        (false, false) => unreachable!(),
    };

    Ok(EstimateReport::new(beta, Method::CombinedWz)
        .with_diag("mean_beta_z", mean_z)
        .with_diag("mean_beta_w", mean_w)
        .with_diag("var_beta_z", var_z)
        .with_diag("var_beta_w", var_w)
        .with_diag("weight_z", weight_z)
        .with_diag("weight_w", weight_w)
        .with_diag("failed_z", (t - beta_z.len()) as f64)
        .with_diag("failed_w", (t - beta_w.len()) as f64)
        .with_diag("resamples", t as f64))
}
