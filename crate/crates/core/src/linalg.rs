//! Small dense solves for the regression baselines. Designs here have at
//! most a dozen columns, so plain Gaussian elimination with partial
//! pivoting is all that is needed.

use crate::error::{Error, Result};

/// Solve A x = b in place for a square system, partial pivoting.
pub(crate) fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-12 * scale_of(&a) {
            return Err(Error::SingularDesign(format!(
                "pivot {:.3e} at column {col}",
                a[pivot][col]
            )));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

fn scale_of(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE)
}

/// Ordinary least squares via normal equations. `columns` are the design
/// columns; returns the coefficient vector.
pub(crate) fn ols(columns: &[&[f64]], outcome: &[f64]) -> Result<Vec<f64>> {
    let k = columns.len();
    let n = outcome.len();
    if k == 0 || columns.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidInput("design/outcome shape mismatch".into()));
    }
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for i in 0..k {
        for j in i..k {
            let dot = crate::moments::compensated_sum(
                columns[i].iter().zip(columns[j]).map(|(&a, &b)| a * b),
            );
            xtx[i][j] = dot;
            xtx[j][i] = dot;
        }
        xty[i] = crate::moments::compensated_sum(
            columns[i].iter().zip(outcome).map(|(&a, &b)| a * b),
        );
    }
    solve(xtx, xty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_known_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(a, vec![5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(
            solve(a, vec![1.0, 2.0]),
            Err(Error::SingularDesign(_))
        ));
    }

    #[test]
    fn ols_exact_fit() {
        let x1 = [1.0, 2.0, 3.0, 4.0];
        let x2 = [1.0, 0.0, 1.0, 0.0];
        let y: Vec<f64> = (0..4).map(|i| 2.0 * x1[i] - 0.5 * x2[i]).collect();
        let coef = ols(&[&x1, &x2], &y).unwrap();
        assert!((coef[0] - 2.0).abs() < 1e-12);
        assert!((coef[1] + 0.5).abs() < 1e-12);
    }
}
