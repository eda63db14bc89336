//! Cross-moment identification of the causal effect through a single proxy.
//!
//! The ratio alpha_d/alpha_z is recovered from the first moment order n >= 3
//! at which `den_n = E[Z^{n-1}D] - (n-1)E[Z^{n-2}]E[DZ]` clears a
//! scale-normalized tolerance; the causal effect then follows from
//! `beta = (E[DY] - ratio E[YZ]) / (E[D^2] - ratio E[DZ])`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{ObservedVar, PairMoments, PopulationPair, SamplePair};
use crate::scm::ScmParams;

/// Default tolerance for the denominator test on finite samples.
pub const DEFAULT_TOL: f64 = 1e-3;
/// Tolerance appropriate for exact population-moment inputs.
pub const POPULATION_TOL: f64 = 1e-10;
/// Default cap on the moment order; higher moments on finite samples are
/// noise-dominated, and the supported noise families trigger at n = 3 or 4.
pub const DEFAULT_N_MAX: u32 = 8;

/// Outcome of the ratio recursion.
#[derive(Debug, Clone, Serialize)]
pub struct RatioResult {
    /// Estimate of alpha_d / alpha_z.
    pub ratio: f64,
    /// First admissible moment order (>= 3).
    pub order_n: u32,
    pub num: f64,
    pub den: f64,
    /// Sample E[DZ]; carries the sign of the ratio.
    pub sign_basis: f64,
}

/// Which estimator produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CrossMoment,
    /// Cross-moment through the second proxy W (benchmark label).
    CrossMomentW,
    DidClosedForm,
    TwfeRegression,
    Ols,
    TwoProxy,
    CombinedWz,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::CrossMoment => "cross_moment",
            Self::CrossMomentW => "cross_moment_w",
            Self::DidClosedForm => "did_closed_form",
            Self::TwfeRegression => "twfe_regression",
            Self::Ols => "ols",
            Self::TwoProxy => "two_proxy",
            Self::CombinedWz => "combined_wz",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross_moment" => Ok(Self::CrossMoment),
            "cross_moment_w" => Ok(Self::CrossMomentW),
            "did" | "did_closed_form" => Ok(Self::DidClosedForm),
            "twfe" | "twfe_regression" => Ok(Self::TwfeRegression),
            "ols" => Ok(Self::Ols),
            "two_proxy" => Ok(Self::TwoProxy),
            "combined_wz" | "cross_moment_wz" => Ok(Self::CombinedWz),
            other => Err(Error::Unsupported(format!("method '{other}'"))),
        }
    }
}

/// Estimator output: point estimate plus diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub beta_hat: f64,
    pub method: Method,
    pub ratio: Option<RatioResult>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl EstimateReport {
    pub fn new(beta_hat: f64, method: Method) -> Self {
        Self {
            beta_hat,
            method,
            ratio: None,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

/// Ratio recursion on an arbitrary moment source for the pair (D, Z).
pub fn get_ratio_from_moments<M: PairMoments>(m: &M, tol: f64, n_max: u32) -> Result<RatioResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    if n_max < 3 {
        return Err(Error::InvalidInput("n_max must be at least 3".into()));
    }
    let sd_d = m.sd_a();
    let sd_z = m.sd_b();
    let e_dz = m.moment(1, 1);
    if e_dz.abs() <= tol * sd_d * sd_z {
        return Err(Error::SignUndetermined { value: e_dz });
    }
    for n in 3..=n_max {
        // num_n = E[D^{n-1}Z] - (n-1)E[D^{n-2}]E[DZ]
        let num = m.moment(n - 1, 1) - (n - 1) as f64 * m.moment(n - 2, 0) * e_dz;
        // den_n = E[Z^{n-1}D] - (n-1)E[Z^{n-2}]E[DZ]
        let den = m.moment(1, n - 1) - (n - 1) as f64 * m.moment(0, n - 2) * e_dz;
        let scale = sd_z.powi(n as i32 - 1) * sd_d;
        if den.abs() > tol * scale {
            // absolute value before the (n-2)-th root, sign from E[DZ]
            let magnitude = (num / den).abs().powf(1.0 / (n as f64 - 2.0));
            let ratio = e_dz.signum() * magnitude;
            return Ok(RatioResult {
                ratio,
                order_n: n,
                num,
                den,
                sign_basis: e_dz,
            });
        }
    }
    Err(Error::ConditionNotDetected { n_max, tol })
}

/// Ratio recursion on centered sample series.
pub fn get_ratio(d: &[f64], z: &[f64], tol: f64, n_max: u32) -> Result<RatioResult> {
    let pair = SamplePair::new(d, z)?;
    get_ratio_from_moments(&pair, tol, n_max)
}

/// Ratio recursion on exact population moments of (D, proxy).
pub fn get_ratio_population(
    params: &ScmParams,
    proxy: ObservedVar,
    tol: f64,
    n_max: u32,
) -> Result<RatioResult> {
    let pair = PopulationPair::new(params, ObservedVar::D, proxy);
    get_ratio_from_moments(&pair, tol, n_max)
}

/// beta from a known ratio and the four second moments of (D, Z, Y).
pub(crate) fn beta_from_moments(
    ratio: f64,
    e_dy: f64,
    e_yz: f64,
    e_d2: f64,
    e_dz: f64,
    tol: f64,
) -> Result<f64> {
    let den = e_d2 - ratio * e_dz;
    if den.abs() <= tol * e_d2.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateDenominator(format!(
            "E[D^2] - ratio E[DZ] = {den:.3e}"
        )));
    }
    Ok((e_dy - ratio * e_yz) / den)
}

/// Full cross-moment estimate on centered sample series.
pub fn get_beta(d: &[f64], z: &[f64], y: &[f64], tol: f64, n_max: u32) -> Result<EstimateReport> {
    let ratio = get_ratio(d, z, tol, n_max)?;
    let e_dy = crate::moments::cross_moment(d, y, 1, 1)?;
    let e_yz = crate::moments::cross_moment(y, z, 1, 1)?;
    let e_d2 = crate::moments::cross_moment(d, d, 1, 1)?;
    let e_dz = ratio.sign_basis;
    finish_beta(ratio, e_dy, e_yz, e_d2, e_dz, tol)
}

/// Cross-moment estimate with an externally supplied ratio.
pub fn get_beta_with_ratio(d: &[f64], z: &[f64], y: &[f64], ratio: f64) -> Result<EstimateReport> {
    let e_dy = crate::moments::cross_moment(d, y, 1, 1)?;
    let e_yz = crate::moments::cross_moment(y, z, 1, 1)?;
    let e_d2 = crate::moments::cross_moment(d, d, 1, 1)?;
    let e_dz = crate::moments::cross_moment(d, z, 1, 1)?;
    let beta = beta_from_moments(ratio, e_dy, e_yz, e_d2, e_dz, DEFAULT_TOL)?;
    Ok(EstimateReport::new(beta, Method::CrossMoment)
        .with_diag("ratio_supplied", ratio)
        .with_diag("e_dz", e_dz))
}

/// Cross-moment estimate on exact population moments.
pub fn get_beta_population(
    params: &ScmParams,
    proxy: ObservedVar,
    tol: f64,
    n_max: u32,
) -> Result<EstimateReport> {
    let ratio = get_ratio_population(params, proxy, tol, n_max)?;
    let m = |a, b| crate::moments::population_moment(params, a, b, 1, 1).unwrap();
    let e_dy = m(ObservedVar::D, ObservedVar::Y);
    let e_yz = m(ObservedVar::Y, proxy);
    let e_d2 = m(ObservedVar::D, ObservedVar::D);
    let e_dz = m(ObservedVar::D, proxy);
    finish_beta(ratio, e_dy, e_yz, e_d2, e_dz, tol)
}

fn finish_beta(
    ratio: RatioResult,
    e_dy: f64,
    e_yz: f64,
    e_d2: f64,
    e_dz: f64,
    tol: f64,
) -> Result<EstimateReport> {
    let beta = beta_from_moments(ratio.ratio, e_dy, e_yz, e_d2, e_dz, tol)?;
    let mut report = EstimateReport::new(beta, Method::CrossMoment)
        .with_diag("num", ratio.num)
        .with_diag("den", ratio.den)
        .with_diag("order_n", ratio.order_n as f64)
        .with_diag("e_dz", e_dz);
    report.ratio = Some(ratio);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::center;
    use crate::scm::{simulate, NoiseFamily, NoiseSpec};
    use crate::test_support::params_a;

    #[test]
    fn ratio_population_params_a() {
        let p = params_a();
        let r = get_ratio_population(&p, ObservedVar::Z, POPULATION_TOL, 8).unwrap();
        assert_eq!(r.order_n, 3);
        assert!((r.num - 8.0).abs() < 1e-10);
        assert!((r.den - 4.0).abs() < 1e-10);
        assert!((r.sign_basis - 2.0).abs() < 1e-12);
        assert!((r.ratio - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ratio_symmetric_inputs() {
        let d = center(&[1.0, 4.0, 2.0, 8.0, 5.0, 7.0, 1.0, 3.0]).unwrap();
        let r = get_ratio(&d, &d, 1e-6, 8).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_latent_is_not_detected() {
        let mut p = params_a();
        p.noise_u = NoiseSpec::new(NoiseFamily::Gaussian, 1.0);
        let err = get_ratio_population(&p, ObservedVar::Z, POPULATION_TOL, 8).unwrap_err();
        assert!(matches!(err, Error::ConditionNotDetected { .. }));
    }

    #[test]
    fn sign_undetermined_when_dz_vanishes() {
        let mut p = params_a();
        p.alpha_d = 0.0;
        let err = get_ratio_population(&p, ObservedVar::Z, POPULATION_TOL, 8).unwrap_err();
        assert!(matches!(err, Error::SignUndetermined { .. }));
    }

    #[test]
    fn beta_population_params_a() {
        let p = params_a();
        let rep = get_beta_population(&p, ObservedVar::Z, POPULATION_TOL, 8).unwrap();
        assert!((rep.beta_hat - 1.0).abs() < 1e-10);
        assert_eq!(rep.ratio.as_ref().unwrap().order_n, 3);
    }

    #[test]
    fn beta_with_supplied_ratio() {
        let p = params_a();
        // plug-in arithmetic on the population moments of params A
        let (e_dy, e_yz, e_d2, e_dz) = (6.0, 2.5, 5.0, 2.0);
        let b = beta_from_moments(2.0, e_dy, e_yz, e_d2, e_dz, 1e-10).unwrap();
        assert!((b - 1.0).abs() < 1e-12);
        // wrong sign demonstrates sign sensitivity
        let b = beta_from_moments(-2.0, e_dy, e_yz, e_d2, e_dz, 1e-10).unwrap();
        assert!((b - 11.0 / 9.0).abs() < 1e-12);
        let _ = p;
    }

    #[test]
    fn ratio_zero_reduces_to_simple_regression() {
        let mut p = params_a();
        p.gamma = 0.0;
        p.alpha_d = 0.5;
        let ds = simulate(&p, 50_000, 3).unwrap().centered().unwrap();
        let rep = get_beta_with_ratio(&ds.d, &ds.z, &ds.y, 0.0).unwrap();
        let e_dy = crate::moments::cross_moment(&ds.d, &ds.y, 1, 1).unwrap();
        let e_d2 = crate::moments::cross_moment(&ds.d, &ds.d, 1, 1).unwrap();
        assert!((rep.beta_hat - e_dy / e_d2).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_relative_error() {
        let p = params_a();
        let mut errs = Vec::new();
        for seed in 0..10 {
            let ds = simulate(&p, 100_000, seed).unwrap().centered().unwrap();
            let rep = get_beta(&ds.d, &ds.z, &ds.y, DEFAULT_TOL, 8).unwrap();
            errs.push((rep.beta_hat - p.beta).abs() / p.beta.abs());
        }
        let mean_err = errs.iter().sum::<f64>() / errs.len() as f64;
        assert!(mean_err < 0.1, "mean relative error {mean_err}");
    }

    /// Scale equivariance: replacing Z by cZ divides the ratio by c and
    /// leaves beta unchanged.
    #[test]
    fn scale_equivariance() {
        let p = params_a();
        let ds = simulate(&p, 20_000, 17).unwrap().centered().unwrap();
        let base_ratio = get_ratio(&ds.d, &ds.z, DEFAULT_TOL, 8).unwrap();
        let base_beta = get_beta(&ds.d, &ds.z, &ds.y, DEFAULT_TOL, 8).unwrap();
        for c in [0.5, 2.0, -3.0] {
            let scaled: Vec<f64> = ds.z.iter().map(|v| c * v).collect();
            let r = get_ratio(&ds.d, &scaled, DEFAULT_TOL, 8).unwrap();
            assert!(
                (r.ratio - base_ratio.ratio / c).abs() < 1e-10 * base_ratio.ratio.abs(),
                "c = {c}"
            );
            let b = get_beta(&ds.d, &scaled, &ds.y, DEFAULT_TOL, 8).unwrap();
            assert!((b.beta_hat - base_beta.beta_hat).abs() < 1e-10 * base_beta.beta_hat.abs());
        }
    }

    /// Median relative error non-increasing in N.
    #[test]
    fn consistency_in_sample_size() {
        let p = params_a();
        let mut medians = Vec::new();
        for &n in &[1_000usize, 10_000, 100_000] {
            let mut errs: Vec<f64> = (0..10)
                .map(|seed| {
                    let ds = simulate(&p, n, 100 + seed).unwrap().centered().unwrap();
                    let rep = get_beta(&ds.d, &ds.z, &ds.y, DEFAULT_TOL, 8).unwrap();
                    (rep.beta_hat - p.beta).abs() / p.beta.abs()
                })
                .collect();
            errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push((errs[4] + errs[5]) / 2.0);
        }
        assert!(
            medians.windows(2).all(|w| w[1] <= w[0] * 1.0 + 1e-15),
            "medians not non-increasing: {medians:?}"
        );
    }
}
