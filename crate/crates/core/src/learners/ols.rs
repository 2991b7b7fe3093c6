//! Ordinary least squares through the normal equations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Added to every diagonal entry of `AᵀA` so the system is always solvable.
pub const RIDGE_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsModel {
    coefficients: Vec<f64>,
    intercept: f64,
}

impl OlsModel {
    /// Solves `(AᵀA + εI) β = Aᵀy` with `A = [X | 1]`.
    pub fn fit(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Arity("cannot fit a regression on zero rows".into()));
        }
        if rows.len() != targets.len() {
            return Err(Error::Arity(format!(
                "{} rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Arity("rows have mixed arity".into()));
        }
        let n = rows.len();
        let design = DMatrix::from_fn(n, p + 1, |i, j| if j < p { rows[i][j] } else { 1.0 });
        let y = DVector::from_column_slice(targets);
        let mut gram = design.transpose() * &design;
        for j in 0..=p {
            gram[(j, j)] += RIDGE_JITTER;
        }
        let rhs = design.transpose() * y;
        let beta = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => gram
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::NumericOverflow {
                    position: 0,
                    detail: "normal equations could not be solved".into(),
                })?,
        };
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NumericOverflow {
                position: 0,
                detail: "least-squares solution is not finite".into(),
            });
        }
        Ok(Self {
            coefficients: beta.as_slice()[..p].to_vec(),
            intercept: beta[p],
        })
    }

    pub fn new(coefficients: Vec<f64>, intercept: f64) -> Self {
        Self {
            coefficients,
            intercept,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            return Err(Error::Arity(format!(
                "input has {} features, model has {} coefficients",
                x.len(),
                self.coefficients.len()
            )));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            + self.intercept)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }
}
