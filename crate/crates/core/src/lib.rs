//! Causal effect estimation in linear SCMs with a latent confounder and a
//! single proxy variable.
//!
//! The core estimator recovers the confounding ratio alpha_d/alpha_z from
//! higher-order cross moments of the treatment and the proxy, which
//! identifies the causal effect whenever the latent confounder is
//! non-Gaussian. Alongside it live the estimators it is benchmarked
//! against (DiD/TWFE, naive OLS, the two-proxy linear estimator, and an
//! inverse-variance bootstrap combination of two proxies), a constructive
//! counterexample showing that Gaussian confounding is not identifiable,
//! a synthetic-data simulator, benchmark pipelines, and an ingestion
//! pipeline for the Card-Krueger minimum-wage survey.
//!
//! See the `examples/` directory for runnable entry points per
//! capability, or the `crossmoment` binary for the same surface as a CLI.

pub mod baselines;
pub mod cross_moment;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod gaussian_twin;
mod linalg;
pub mod moments;
pub mod scm;

pub use cross_moment::{get_beta, get_beta_with_ratio, get_ratio, EstimateReport, Method, RatioResult};
pub use error::{Error, Result};
pub use scm::{sample_params, simulate, Dataset, NoiseFamily, NoiseSpec, ScmParams};

use serde::Serialize;

/// Reproducibility record emitted with every CLI run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: std::collections::BTreeMap<String, String>,
    pub seed: u64,
    pub rng_algorithm: &'static str,
    pub library_version: &'static str,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            flags: std::collections::BTreeMap::new(),
            seed,
            rng_algorithm: scm::RNG_ALGORITHM,
            library_version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn flag(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.flags.insert(key.to_string(), value.to_string());
        self
    }

    pub fn to_json_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("manifest serializes");
        line.push('\n');
        line
    }
}
