//! Centered sample cross-moments E[A^p B^q] and their exact population
//! counterparts for linear SCMs with analytically known noise families.
//!
//! Every estimator in this crate is a rational function of a handful of
//! these moments, so the sums are accumulated with compensated summation
//! to keep high powers on large samples from drifting.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scm::{NoiseFamily, ScmParams};

/// Compensated (Neumaier) summation.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    Ok(compensated_sum(values.iter().copied()) / values.len() as f64)
}

/// Subtract the sample mean.
pub fn center(values: &[f64]) -> Result<Vec<f64>> {
    let m = mean(values)?;
    Ok(values.iter().map(|v| v - m).collect())
}

/// (1/n) sum a_i^p b_i^q on already-centered series.
///
/// Returns 1 for p = q = 0 (empty product) and exact 0 is not forced for
/// (1,0)/(0,1); centering makes those vanish up to rounding.
pub fn cross_moment(a: &[f64], b: &[f64], p: u32, q: u32) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if p + q == 0 {
        return Ok(1.0);
    }
    let n = a.len() as f64;
    let sum = compensated_sum(
        a.iter()
            .zip(b)
            .map(|(&x, &y)| x.powi(p as i32) * y.powi(q as i32)),
    );
    Ok(sum / n)
}

/// Standard deviation of a centered series, sqrt(E[X^2]).
pub fn sd(values: &[f64]) -> Result<f64> {
    Ok(cross_moment(values, values, 2, 0)?.sqrt())
}

/// Table of centered cross-moments of two series up to a maximum total order.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    pub mean_a: f64,
    pub mean_b: f64,
    pub cross: BTreeMap<(u32, u32), f64>,
}

impl MomentAccumulator {
    pub fn from_series(a: &[f64], b: &[f64], max_order: u32) -> Result<Self> {
        let mean_a = mean(a)?;
        let mean_b = mean(b)?;
        let ca = center(a)?;
        let cb = center(b)?;
        let mut cross = BTreeMap::new();
        for p in 0..=max_order {
            for q in 0..=(max_order - p) {
                cross.insert((p, q), cross_moment(&ca, &cb, p, q)?);
            }
        }
        Ok(Self { mean_a, mean_b, cross })
    }

    pub fn get(&self, p: u32, q: u32) -> Option<f64> {
        self.cross.get(&(p, q)).copied()
    }
}

/// Abstraction over "moments of the pair (A, B)" so the estimators run
/// unchanged on finite samples and on exact population moments.
pub trait PairMoments {
    /// E[A^p B^q], centered.
    fn moment(&self, p: u32, q: u32) -> f64;

    fn sd_a(&self) -> f64 {
        self.moment(2, 0).sqrt()
    }

    fn sd_b(&self) -> f64 {
        self.moment(0, 2).sqrt()
    }
}

/// Sample moments of a pair of centered series.
pub struct SamplePair<'a> {
    a: &'a [f64],
    b: &'a [f64],
}

impl<'a> SamplePair<'a> {
    /// Series must be centered and of equal length.
    pub fn new(a: &'a [f64], b: &'a [f64]) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidInput(
                "pair series must be non-empty and of equal length".into(),
            ));
        }
        Ok(Self { a, b })
    }
}

impl PairMoments for SamplePair<'_> {
    fn moment(&self, p: u32, q: u32) -> f64 {
        cross_moment(self.a, self.b, p, q).expect("lengths checked at construction")
    }
}

/// Observed variables of the linear SCM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservedVar {
    Z,
    D,
    Y,
    W,
}

/// Exact population moments of a pair of observed variables, computed by
/// multinomial expansion over the independent exogenous noises.
pub struct PopulationPair<'a> {
    params: &'a ScmParams,
    a: ObservedVar,
    b: ObservedVar,
}

impl<'a> PopulationPair<'a> {
    pub fn new(params: &'a ScmParams, a: ObservedVar, b: ObservedVar) -> Self {
        Self { params, a, b }
    }
}

impl PairMoments for PopulationPair<'_> {
    fn moment(&self, p: u32, q: u32) -> f64 {
        population_moment(self.params, self.a, self.b, p, q)
            .expect("population moment of valid params")
    }
}

/// n-th central moment of a zero-mean noise with the given family and variance.
pub fn noise_central_moment(family: NoiseFamily, variance: f64, n: u32) -> f64 {
    match family {
        NoiseFamily::Gaussian => {
            if n % 2 == 1 {
                0.0
            } else {
                double_factorial(n.saturating_sub(1)) * variance.powf(n as f64 / 2.0)
            }
        }
        // centered Exp: E[(X - mu)^n] = !n * sigma^n, with !n the derangement number
        NoiseFamily::Exponential => derangement(n) * variance.powf(n as f64 / 2.0),
        NoiseFamily::Uniform => {
            if n % 2 == 1 {
                0.0
            } else {
                let a = (3.0 * variance).sqrt();
                a.powi(n as i32) / (n as f64 + 1.0)
            }
        }
    }
}

fn double_factorial(n: u32) -> f64 {
    let mut out = 1.0;
    let mut k = n;
    while k > 1 {
        out *= k as f64;
        k -= 2;
    }
    out
}

fn derangement(n: u32) -> f64 {
    // !n = n * !(n-1) + (-1)^n
    let mut d = 1.0;
    for k in 1..=n {
        d = k as f64 * d + if k % 2 == 0 { 1.0 } else { -1.0 };
    }
    d
}

/// Coefficients of an observed variable over the noise basis
/// (eps_u, eps_z, eps_d, eps_y, eps_w).
fn coefficients(params: &ScmParams, var: ObservedVar) -> Result<[f64; 5]> {
    Ok(match var {
        ObservedVar::Z => [params.alpha_z, 1.0, 0.0, 0.0, 0.0],
        ObservedVar::D => [params.alpha_d, 0.0, 1.0, 0.0, 0.0],
        ObservedVar::Y => [
            params.alpha_d * params.beta + params.gamma,
            0.0,
            params.beta,
            1.0,
            0.0,
        ],
        ObservedVar::W => {
            let alpha_w = params.alpha_w.ok_or_else(|| {
                Error::InvalidParams("W requested but alpha_w is not set".into())
            })?;
            [alpha_w, 0.0, 0.0, 0.0, 1.0]
        }
    })
}

/// Exact E[A^p B^q] for observed variables of the linear SCM, by expanding
/// both powers multinomially and factorizing the expectation over the
/// independent exogenous noises.
pub fn population_moment(
    params: &ScmParams,
    a: ObservedVar,
    b: ObservedVar,
    p: u32,
    q: u32,
) -> Result<f64> {
    let ca = coefficients(params, a)?;
    let cb = coefficients(params, b)?;
    let noise_w = match (a, b) {
        (ObservedVar::W, _) | (_, ObservedVar::W) => Some(
            params
                .noise_w
                .as_ref()
                .ok_or_else(|| Error::InvalidParams("W requested but noise_w is not set".into()))?,
        ),
        _ => None,
    };
    let noises: [(NoiseFamily, f64); 5] = [
        (params.noise_u.family, params.noise_u.variance),
        (params.noise_z.family, params.noise_z.variance),
        (params.noise_d.family, params.noise_d.variance),
        (params.noise_y.family, params.noise_y.variance),
        noise_w
            .map(|n| (n.family, n.variance))
            .unwrap_or((NoiseFamily::Gaussian, 0.0)),
    ];

    let comps_a = compositions(p, 5);
    let comps_b = compositions(q, 5);
    let mut terms = Vec::with_capacity(comps_a.len() * comps_b.len());
    for ka in &comps_a {
        let ma = multinomial(p, ka);
        let coeff_a: f64 = (0..5).map(|j| ca[j].powi(ka[j] as i32)).product();
        if coeff_a == 0.0 {
            continue;
        }
        for kb in &comps_b {
            let coeff_b: f64 = (0..5).map(|j| cb[j].powi(kb[j] as i32)).product();
            if coeff_b == 0.0 {
                continue;
            }
            let mb = multinomial(q, kb);
            let mut expectation = 1.0;
            for j in 0..5 {
                let order = ka[j] + kb[j];
                if order == 0 {
                    continue;
                }
                expectation *= noise_central_moment(noises[j].0, noises[j].1, order);
                if expectation == 0.0 {
                    break;
                }
            }
            terms.push(ma * mb * coeff_a * coeff_b * expectation);
        }
    }
    Ok(compensated_sum(terms.into_iter()))
}

fn multinomial(total: u32, parts: &[u32; 5]) -> f64 {
    let mut out = 1.0;
    let mut remaining = total;
    for &k in parts {
        out *= binomial(remaining, k);
        remaining -= k;
    }
    out
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k.min(n));
    let mut out = 1.0;
    for i in 0..k {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// All ways of writing `total` as an ordered sum of `parts` nonnegative ints.
fn compositions(total: u32, parts: usize) -> Vec<[u32; 5]> {
    assert_eq!(parts, 5);
    let mut out = Vec::new();
    let mut current = [0u32; 5];
    fn rec(idx: usize, left: u32, current: &mut [u32; 5], out: &mut Vec<[u32; 5]>) {
        if idx == 4 {
            current[4] = left;
            out.push(*current);
            return;
        }
        for k in 0..=left {
            current[idx] = k;
            rec(idx + 1, left - k, current, out);
        }
        current[idx] = 0;
    }
    rec(0, total, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::NoiseSpec;
    use crate::test_support::params_a;
    use proptest::prelude::*;

    #[test]
    fn center_examples() {
        assert_eq!(center(&[1.0, 2.0, 3.0]).unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(center(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(center(&[0.5, -0.5]).unwrap(), vec![0.5, -0.5]);
        assert!(center(&[]).is_err());
    }

    #[test]
    fn cross_moment_examples() {
        let a = [-1.0, 0.0, 1.0];
        assert!((cross_moment(&a, &a, 1, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let b = [2.0, -1.0, -1.0];
        assert!((cross_moment(&a, &b, 2, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(cross_moment(&a, &b, 0, 0).unwrap(), 1.0);
        assert!(cross_moment(&a, &[1.0], 1, 1).is_err());
    }

    #[test]
    fn accumulator_centering_exactness() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let b = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0];
        let acc = MomentAccumulator::from_series(&a, &b, 4).unwrap();
        assert_eq!(acc.get(0, 0).unwrap(), 1.0);
        let scale = sd(&center(&a).unwrap()).unwrap();
        assert!(acc.get(1, 0).unwrap().abs() < 1e-12 * scale);
        assert!(acc.get(0, 1).unwrap().abs() < 1e-12 * scale);
    }

    #[test]
    fn population_moment_params_a() {
        let p = params_a();
        // E[DZ] = alpha_d alpha_z E[eps_u^2]
        let dz = population_moment(&p, ObservedVar::D, ObservedVar::Z, 1, 1).unwrap();
        assert!((dz - 2.0).abs() < 1e-12);
        // E[D^2 Z] = alpha_d^2 alpha_z E[eps_u^3]; centered Exp(1) has third moment 2
        let d2z = population_moment(&p, ObservedVar::D, ObservedVar::Z, 2, 1).unwrap();
        assert!((d2z - 8.0).abs() < 1e-12);
    }

    #[test]
    fn population_moment_gaussian_recursion() {
        let mut p = params_a();
        p.noise_u = NoiseSpec::new(NoiseFamily::Gaussian, 1.0);
        // E[D^3 Z] - 3 E[D^2] E[DZ] = 0 for Gaussian eps_u
        let d3z = population_moment(&p, ObservedVar::D, ObservedVar::Z, 3, 1).unwrap();
        let d2 = population_moment(&p, ObservedVar::D, ObservedVar::D, 1, 1).unwrap();
        let dz = population_moment(&p, ObservedVar::D, ObservedVar::Z, 1, 1).unwrap();
        assert!((d3z - 3.0 * d2 * dz).abs() < 1e-12);
    }

    #[test]
    fn population_beta_moments() {
        let p = params_a();
        let dy = population_moment(&p, ObservedVar::D, ObservedVar::Y, 1, 1).unwrap();
        let yz = population_moment(&p, ObservedVar::Y, ObservedVar::Z, 1, 1).unwrap();
        let d2 = population_moment(&p, ObservedVar::D, ObservedVar::D, 1, 1).unwrap();
        assert!((dy - 6.0).abs() < 1e-12);
        assert!((yz - 2.5).abs() < 1e-12);
        assert!((d2 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn noise_moments_families() {
        // Exp skewness: third central moment 2 sigma^3
        assert!((noise_central_moment(NoiseFamily::Exponential, 4.0, 3) - 16.0).abs() < 1e-12);
        // Gaussian fourth moment 3 sigma^4
        assert!((noise_central_moment(NoiseFamily::Gaussian, 2.0, 4) - 12.0).abs() < 1e-12);
        // Uniform on [-a,a]: E[X^4] = a^4 / 5
        let v = 3.0; // a = 3
        assert!((noise_central_moment(NoiseFamily::Uniform, v, 4) - 81.0 / 5.0).abs() < 1e-12);
        assert_eq!(noise_central_moment(NoiseFamily::Uniform, v, 5), 0.0);
    }

    proptest! {
        #[test]
        fn symmetry(values in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..50),
                    p in 0u32..4, q in 0u32..4) {
            let (a, b): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
            let ca = center(&a).unwrap();
            let cb = center(&b).unwrap();
            let lhs = cross_moment(&ca, &cb, p, q).unwrap();
            let rhs = cross_moment(&cb, &ca, q, p).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn scaling(values in proptest::collection::vec((-1e2f64..1e2, -1e2f64..1e2), 2..30),
                   c in 0.1f64..4.0, p in 0u32..4, q in 0u32..3) {
            let (a, b): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
            let ca = center(&a).unwrap();
            let cb = center(&b).unwrap();
            let scaled: Vec<f64> = ca.iter().map(|v| c * v).collect();
            let lhs = cross_moment(&scaled, &cb, p, q).unwrap();
            let rhs = c.powi(p as i32) * cross_moment(&ca, &cb, p, q).unwrap();
            let tol = 1e-9 * (lhs.abs() + rhs.abs() + 1.0);
            prop_assert!((lhs - rhs).abs() <= tol);
        }
    }
}
