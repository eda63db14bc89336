//! Ingestion of the Card-Krueger minimum-wage survey and the 2x2 table of
//! TWFE and cross-moment estimates, with and without covariates.
//!
//! The employment outcome is computed per wave as part-time employees plus
//! half the full-time employees; a flag switches to the conventional
//! full-time-equivalent weighting (full-time plus half part-time).

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{twfe_regression, TwfeDesign};
use crate::cross_moment::{get_beta, EstimateReport};
use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::center;
use crate::scm::Dataset;

/// Which wave-level employment counts weigh half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeWeighting {
    /// part-time + 0.5 * full-time
    #[default]
    PartPlusHalfFull,
    /// full-time + 0.5 * part-time (conventional FTE)
    FullPlusHalfPart,
}

/// Source-column roles for the two-wave survey file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMapping {
    /// Delimiter: "comma" or "whitespace".
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    /// Token marking a missing value.
    #[serde(default = "default_missing")]
    pub missing: String,
    /// Column names for headerless files, in file order.
    #[serde(default)]
    pub header: Vec<String>,
    pub roles: Roles,
}

fn default_delimiter() -> String {
    "whitespace".into()
}

fn default_missing() -> String {
    ".".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Roles {
    /// Treatment indicator column (1 = treated state).
    pub state: String,
    pub pre_part_time: String,
    pub pre_full_time: String,
    pub post_part_time: String,
    pub post_full_time: String,
    #[serde(default)]
    pub covariates: Vec<String>,
}

impl ColumnMapping {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::SchemaError(format!("mapping file: {e}")))
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    fn mapped_columns(&self) -> Vec<&str> {
        let mut cols = vec![
            self.roles.state.as_str(),
            self.roles.pre_part_time.as_str(),
            self.roles.pre_full_time.as_str(),
            self.roles.post_part_time.as_str(),
            self.roles.post_full_time.as_str(),
        ];
        cols.extend(self.roles.covariates.iter().map(|s| s.as_str()));
        cols
    }
}

/// Load the two-wave survey: rows with a missing value in any mapped
/// column are dropped, the per-wave outcome is computed, the pre-wave
/// outcome becomes Z and the post-wave outcome becomes Y.
pub fn load_card_krueger(
    path: &Path,
    mapping: &ColumnMapping,
    weighting: OutcomeWeighting,
) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    load_card_krueger_str(&text, mapping, weighting)
}

pub fn load_card_krueger_str(
    text: &str,
    mapping: &ColumnMapping,
    weighting: OutcomeWeighting,
) -> Result<Dataset> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let split = |line: &str| -> Vec<String> {
        match mapping.delimiter.as_str() {
            "comma" => line.split(',').map(|s| s.trim().to_string()).collect(),
            _ => line.split_whitespace().map(|s| s.to_string()).collect(),
        }
    };

    let header: Vec<String> = if mapping.header.is_empty() {
        let first = lines
            .next()
            .ok_or_else(|| Error::SchemaError("empty input file".into()))?;
        split(first)
    } else {
        mapping.header.clone()
    };
    let index: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, name)| (name.as_str(), i))
        .collect();
    for col in mapping.mapped_columns() {
        if !index.contains_key(col) {
            return Err(Error::SchemaError(format!("missing mapped column {col}")));
        }
    }
    let col = |name: &str| index[name];

    let mut d = Vec::new();
    let mut z = Vec::new();
    let mut y = Vec::new();
    let mut x: Vec<(String, Vec<f64>)> = mapping
        .roles
        .covariates
        .iter()
        .map(|name| (name.clone(), Vec::new()))
        .collect();

    'rows: for line in lines {
        let fields = split(line);
        let parse = |name: &str| -> Option<f64> {
            let raw = fields.get(col(name))?;
            if raw == &mapping.missing || raw.is_empty() {
                return None;
            }
            raw.parse::<f64>().ok().filter(|v| v.is_finite())
        };
        let mut values = Vec::with_capacity(5 + mapping.roles.covariates.len());
        for name in mapping.mapped_columns() {
            match parse(name) {
                Some(v) => values.push(v),
                None => continue 'rows,
            }
        }
        let outcome = |part: f64, full: f64| match weighting {
            OutcomeWeighting::PartPlusHalfFull => part + 0.5 * full,
            OutcomeWeighting::FullPlusHalfPart => full + 0.5 * part,
        };
        d.push(values[0]);
        z.push(outcome(values[1], values[2]));
        y.push(outcome(values[3], values[4]));
        for (i, (_, colvals)) in x.iter_mut().enumerate() {
            colvals.push(values[5 + i]);
        }
    }
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset { z, d, y, w: None, x })
}

/// OLS residual of `y` on the covariate columns plus an intercept.
pub fn residualize(y: &[f64], x: &[(String, Vec<f64>)]) -> Result<Vec<f64>> {
    let intercept = vec![1.0; y.len()];
    let mut columns: Vec<&[f64]> = vec![&intercept];
    for (_, col) in x {
        columns.push(col);
    }
    let coef = linalg::ols(&columns, y)?;
    Ok((0..y.len())
        .map(|i| {
            let mut fitted = coef[0];
            for (j, (_, col)) in x.iter().enumerate() {
                fitted += coef[1 + j] * col[i];
            }
            y[i] - fitted
        })
        .collect())
}

/// The four estimates of the minimum-wage analysis.
#[derive(Debug, Clone, Serialize)]
pub struct Table1 {
    pub twfe_with_x: EstimateReport,
    pub cross_moment_with_x: EstimateReport,
    pub twfe_without_x: EstimateReport,
    pub cross_moment_without_x: EstimateReport,
}

impl Table1 {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("covariates,twfe,cross_moment\n");
        out.push_str(&format!(
            "with_x,{},{}\n",
            self.twfe_with_x.beta_hat, self.cross_moment_with_x.beta_hat
        ));
        out.push_str(&format!(
            "without_x,{},{}\n",
            self.twfe_without_x.beta_hat, self.cross_moment_without_x.beta_hat
        ));
        out
    }

    pub fn to_text(&self) -> String {
        format!(
            "              TWFE    Cross-Moment\n\
             With X     {:>7.2}         {:>7.2}\n\
             Without X  {:>7.2}         {:>7.2}\n",
            self.twfe_with_x.beta_hat,
            self.cross_moment_with_x.beta_hat,
            self.twfe_without_x.beta_hat,
            self.cross_moment_without_x.beta_hat
        )
    }
}

/// Run all four estimators on a loaded two-wave dataset.
///
/// Without covariates: TWFE on the stacked centered design and the
/// cross-moment estimator on centered (D, Z, Y). With covariates: the
/// covariates enter the stacked TWFE regression directly, while the
/// cross-moment estimator sees the outcome residualized on them
/// (the pre-wave outcome enters raw apart from centering).
pub fn table1(dataset: &Dataset, tol: f64, n_max: u32) -> Result<Table1> {
    if dataset.x.is_empty() {
        return Err(Error::InvalidInput(
            "table1 requires a dataset loaded with covariates".into(),
        ));
    }
    dataset.validate()?;
    let ds = dataset.centered()?;

    let design_plain = TwfeDesign::new(&ds.d, &ds.z, &ds.y)?;
    let twfe_without_x = twfe_regression(&design_plain)?;
    let cross_moment_without_x = get_beta(&ds.d, &ds.z, &ds.y, tol, n_max)?;

    let design_cov = TwfeDesign::with_covariates(&ds.d, &ds.z, &ds.y, &ds.x)?;
    let twfe_with_x = twfe_regression(&design_cov)?;
    let y_resid = center(&residualize(&dataset.y, &dataset.x)?)?;
    let cross_moment_with_x = get_beta(&ds.d, &ds.z, &y_resid, tol, n_max)?;

    Ok(Table1 {
        twfe_with_x,
        cross_moment_with_x,
        twfe_without_x,
        cross_moment_without_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mapping() -> ColumnMapping {
        ColumnMapping::from_toml_str(
            r#"
delimiter = "whitespace"
missing = "."

[roles]
state = "STATE"
pre_part_time = "EMPPT"
pre_full_time = "EMPFT"
post_part_time = "EMPPT2"
post_full_time = "EMPFT2"
covariates = ["HRSOPEN"]
"#,
        )
        .unwrap()
    }

    const SAMPLE: &str = "\
STATE EMPPT EMPFT EMPPT2 EMPFT2 HRSOPEN
1 2 2 5 2 10
0 4 0 6 4 12
1 0 4 1 0 9
";

    #[test]
    fn outcome_arithmetic() {
        let ds = load_card_krueger_str(SAMPLE, &mapping(), OutcomeWeighting::PartPlusHalfFull)
            .unwrap();
        // Y_p = (2,4,0), Y_f = (2,0,4) -> pre outcome (3,4,2)
        assert_eq!(ds.z, vec![3.0, 4.0, 2.0]);
        assert_eq!(ds.y, vec![6.0, 8.0, 1.0]);
        assert_eq!(ds.d, vec![1.0, 0.0, 1.0]);
        assert_eq!(ds.x[0].1, vec![10.0, 12.0, 9.0]);
    }

    #[test]
    fn conventional_weighting_flag() {
        let ds = load_card_krueger_str(SAMPLE, &mapping(), OutcomeWeighting::FullPlusHalfPart)
            .unwrap();
        assert_eq!(ds.z, vec![3.0, 2.0, 4.0]);
    }

    #[test]
    fn missing_rows_dropped_and_clean_rows_kept() {
        let with_missing = "\
STATE EMPPT EMPFT EMPPT2 EMPFT2 HRSOPEN
1 2 2 5 2 10
0 . 0 6 4 12
1 0 4 1 0 9
";
        let ds = load_card_krueger_str(
            with_missing,
            &mapping(),
            OutcomeWeighting::PartPlusHalfFull,
        )
        .unwrap();
        assert_eq!(ds.len(), 2);
        // no missing values: row count unchanged
        let full =
            load_card_krueger_str(SAMPLE, &mapping(), OutcomeWeighting::PartPlusHalfFull)
                .unwrap();
        assert_eq!(full.len(), 3);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let mut m = mapping();
        m.roles.covariates = vec!["NO_SUCH".into()];
        assert!(matches!(
            load_card_krueger_str(SAMPLE, &m, OutcomeWeighting::PartPlusHalfFull),
            Err(Error::SchemaError(_))
        ));
    }

    #[test]
    fn all_rows_missing_is_empty_dataset() {
        let text = "\
STATE EMPPT EMPFT EMPPT2 EMPFT2 HRSOPEN
1 . 2 5 2 10
";
        assert!(matches!(
            load_card_krueger_str(&text, &mapping(), OutcomeWeighting::PartPlusHalfFull),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn residualize_intercept_only_centers() {
        let y = [1.0, 2.0, 6.0];
        let r = residualize(&y, &[]).unwrap();
        let c = center(&y).unwrap();
        for (a, b) in r.iter().zip(&c) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn residualize_exact_fit_and_orthogonality() {
        let x1 = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let x2 = vec![2.0, 1.0, 2.0, 1.0, 2.0];
        let x = vec![("a".to_string(), x1.clone()), ("b".to_string(), x2.clone())];
        // y exactly linear in x -> zero residual
        let y: Vec<f64> = (0..5).map(|i| 3.0 + 2.0 * x1[i] - x2[i]).collect();
        let r = residualize(&y, &x).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-10));
        // generic y: residual orthogonal to every column
        let y = [3.0, -1.0, 4.0, 1.0, -5.0];
        let r = residualize(&y, &x).unwrap();
        for col in [&x1, &x2] {
            let dot: f64 = r.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let scale: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt()
                * r.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(dot.abs() < 1e-8 * scale.max(1.0));
        }
    }

    #[test]
    fn residualize_is_idempotent() {
        let x = vec![("a".to_string(), vec![1.0, 2.0, 3.0, 4.0, 5.0])];
        let y = [3.0, -1.0, 4.0, 1.0, -5.0];
        let once = residualize(&y, &x).unwrap();
        let twice = residualize(&once, &x).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ingestion_is_deterministic() {
        let a = load_card_krueger_str(SAMPLE, &mapping(), OutcomeWeighting::PartPlusHalfFull)
            .unwrap();
        let b = load_card_krueger_str(SAMPLE, &mapping(), OutcomeWeighting::PartPlusHalfFull)
            .unwrap();
        assert_eq!(a, b);
    }
}
