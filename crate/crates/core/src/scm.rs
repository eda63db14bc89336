//! Linear SCM with a latent confounder: synthetic data generation and the
//! randomized parameter protocol used by the benchmarks.
//!
//! Structural assignments (all noises zero-mean, mutually independent):
//!
//! ```text
//! U := eps_u
//! Z := alpha_z U + eps_z
//! D := alpha_d U + eps_d
//! W := alpha_w U + eps_w        (optional second proxy)
//! Y := beta D + gamma U + eps_y
//! ```

use rand::distributions::Uniform as UniformDist;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments;

/// Name of the RNG algorithm, recorded in run manifests so seeds are portable.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Derive a child seed from a base seed and a stream index (splitmix64 mix).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut x = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Exponential,
    Uniform,
    Gaussian,
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(Self::Exponential),
            "uniform" => Ok(Self::Uniform),
            "gaussian" | "normal" => Ok(Self::Gaussian),
            other => Err(Error::Unsupported(format!("noise family '{other}'"))),
        }
    }
}

impl std::fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::Exponential => "exponential",
            Self::Uniform => "uniform",
            Self::Gaussian => "gaussian",
        };
        f.write_str(name)
    }
}

/// Zero-mean noise with a chosen family and variance.
///
/// The centered exponential with variance v is Exp(rate = 1/sqrt(v)) minus
/// sqrt(v); the centered uniform is U[-sqrt(3v), sqrt(3v)].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub variance: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, variance: f64) -> Self {
        Self { family, variance }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return Err(Error::InvalidParams(format!(
                "noise variance must be positive and finite, got {}",
                self.variance
            )));
        }
        Ok(())
    }

    /// Draw `n` independent realizations.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<f64> {
        let sigma = self.variance.sqrt();
        match self.family {
            NoiseFamily::Gaussian => {
                let dist = Normal::new(0.0, sigma).expect("validated variance");
                (0..n).map(|_| dist.sample(rng)).collect()
            }
            NoiseFamily::Exponential => {
                let dist = Exp::new(1.0 / sigma).expect("validated variance");
                (0..n).map(|_| dist.sample(rng) - sigma).collect()
            }
            NoiseFamily::Uniform => {
                let a = (3.0 * self.variance).sqrt();
                let dist = UniformDist::new_inclusive(-a, a);
                (0..n).map(|_| dist.sample(rng)).collect()
            }
        }
    }
}

/// Coefficients and noise specifications of the linear SCM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmParams {
    pub alpha_z: f64,
    pub alpha_d: f64,
    pub alpha_w: Option<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub noise_u: NoiseSpec,
    pub noise_z: NoiseSpec,
    pub noise_d: NoiseSpec,
    pub noise_y: NoiseSpec,
    pub noise_w: Option<NoiseSpec>,
}

impl ScmParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_z == 0.0 {
            return Err(Error::InvalidParams("alpha_z must be nonzero".into()));
        }
        self.noise_u.validate()?;
        self.noise_z.validate()?;
        self.noise_d.validate()?;
        self.noise_y.validate()?;
        if self.alpha_w.is_some() != self.noise_w.is_some() {
            return Err(Error::InvalidParams(
                "alpha_w and noise_w must be set together".into(),
            ));
        }
        if let Some(w) = &self.noise_w {
            w.validate()?;
        }
        for (name, v) in [
            ("alpha_z", self.alpha_z),
            ("alpha_d", self.alpha_d),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    pub fn has_w(&self) -> bool {
        self.alpha_w.is_some()
    }
}

/// Column-oriented observational sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub z: Vec<f64>,
    pub d: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Option<Vec<f64>>,
    /// Covariates as (name, column) pairs.
    pub x: Vec<(String, Vec<f64>)>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.z.len();
        if n < 3 {
            return Err(Error::InvalidInput(format!(
                "dataset must have at least 3 rows, got {n}"
            )));
        }
        let mut cols: Vec<(&str, &[f64])> = vec![("z", &self.z), ("d", &self.d), ("y", &self.y)];
        if let Some(w) = &self.w {
            cols.push(("w", w));
        }
        for (name, col) in &self.x {
            cols.push((name, col));
        }
        for (name, col) in cols {
            if col.len() != n {
                return Err(Error::InvalidInput(format!(
                    "column {name} has length {} but z has {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "column {name} contains non-finite values"
                )));
            }
        }
        Ok(())
    }

    /// Same dataset with every column mean-centered.
    pub fn centered(&self) -> Result<Dataset> {
        Ok(Dataset {
            z: moments::center(&self.z)?,
            d: moments::center(&self.d)?,
            y: moments::center(&self.y)?,
            w: self.w.as_ref().map(|w| moments::center(w)).transpose()?,
            x: self
                .x
                .iter()
                .map(|(name, col)| Ok((name.clone(), moments::center(col)?)))
                .collect::<Result<_>>()?,
        })
    }

    /// CSV with header row `z,d,y[,w][,x_*]`.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["z".to_string(), "d".to_string(), "y".to_string()];
        if self.w.is_some() {
            header.push("w".to_string());
        }
        for (name, _) in &self.x {
            header.push(name.clone());
        }
        let mut out = header.join(",");
        out.push('\n');
        for i in 0..self.len() {
            let mut row = vec![
                format!("{}", self.z[i]),
                format!("{}", self.d[i]),
                format!("{}", self.y[i]),
            ];
            if let Some(w) = &self.w {
                row.push(format!("{}", w[i]));
            }
            for (_, col) in &self.x {
                row.push(format!("{}", col[i]));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Generate `n` observations from the SCM, deterministic given `seed`.
pub fn simulate(params: &ScmParams, n: usize, seed: u64) -> Result<Dataset> {
    if n < 1 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    // structural order: U first, then proxies and treatment, then outcome
    let eps_u = params.noise_u.sample(n, &mut rng);
    let eps_z = params.noise_z.sample(n, &mut rng);
    let eps_d = params.noise_d.sample(n, &mut rng);
    let eps_w = params.noise_w.as_ref().map(|s| s.sample(n, &mut rng));
    let eps_y = params.noise_y.sample(n, &mut rng);

    let z: Vec<f64> = eps_u
        .iter()
        .zip(&eps_z)
        .map(|(&u, &e)| params.alpha_z * u + e)
        .collect();
    let d: Vec<f64> = eps_u
        .iter()
        .zip(&eps_d)
        .map(|(&u, &e)| params.alpha_d * u + e)
        .collect();
    let w = match (&eps_w, params.alpha_w) {
        (Some(ew), Some(alpha_w)) => Some(
            eps_u
                .iter()
                .zip(ew)
                .map(|(&u, &e)| alpha_w * u + e)
                .collect(),
        ),
        _ => None,
    };
    let y: Vec<f64> = (0..n)
        .map(|i| params.beta * d[i] + params.gamma * eps_u[i] + eps_y[i])
        .collect();

    Ok(Dataset { z, d, y, w, x: Vec::new() })
}

/// Randomized parameter protocol for the synthetic benchmarks:
/// alpha_d uniform on (-2, -0.2) U (0.2, 2); alpha_z, beta, gamma drawn so
/// that |alpha_d / x| lies in (0.2, 2); Var(eps_u) uniform on (1, 10);
/// Var(eps_z) = Var(eps_d) = Var(eps_y) = Var(eps_u) / 10 and, when the
/// second proxy is present, alpha_w = alpha_z and Var(eps_w) = 10 Var(eps_u).
pub fn sample_params(seed: u64, family: NoiseFamily, with_w: bool) -> ScmParams {
    let mut rng = rng_from_seed(seed);
    sample_params_with_rng(&mut rng, family, with_w)
}

pub fn sample_params_with_rng(rng: &mut impl Rng, family: NoiseFamily, with_w: bool) -> ScmParams {
    fn signed_magnitude(rng: &mut impl Rng) -> f64 {
        let m = rng.gen_range(0.2..2.0);
        if rng.gen::<bool>() {
            m
        } else {
            -m
        }
    }

    let alpha_d = signed_magnitude(rng);
    // each of alpha_z, beta, gamma drawn as alpha_d / (signed r), r in (0.2, 2)
    let alpha_z = alpha_d / signed_magnitude(rng);
    let beta = alpha_d / signed_magnitude(rng);
    let gamma = alpha_d / signed_magnitude(rng);

    let var_u = UniformDist::new(1.0, 10.0).sample(rng);
    let small = var_u / 10.0;
    let alpha_w = with_w.then_some(alpha_z);
    let noise_w = with_w.then(|| NoiseSpec::new(family, 10.0 * var_u));

    ScmParams {
        alpha_z,
        alpha_d,
        alpha_w,
        beta,
        gamma,
        noise_u: NoiseSpec::new(family, var_u),
        noise_z: NoiseSpec::new(family, small),
        noise_d: NoiseSpec::new(family, small),
        noise_y: NoiseSpec::new(family, small),
        noise_w,
    }
}
