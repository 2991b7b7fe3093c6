//! Online linear model trained one example at a time by plain SGD.
//!
//! Two losses are supported. `Logistic` predicts `σ(w·x + b)` and minimizes
//! log-loss on 0/1 targets; `Squared` predicts `w·x + b` and minimizes half
//! the squared residual. Both add an L2 penalty `α/2 · ‖w‖²` on the weights
//! (never on the bias). Each call to [`LinearModel::partial_fit`] takes
//! exactly one gradient step with a constant learning rate:
//!
//! ```text
//! g = predict(x) - y
//! w <- w - η (g x + α w)
//! b <- b - η g
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
pub const DEFAULT_L2_STRENGTH: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossMode {
    Logistic,
    Squared,
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossMode::Logistic => "logistic",
            LossMode::Squared => "squared",
        })
    }
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(LossMode::Logistic),
            "squared" => Ok(LossMode::Squared),
            other => Err(Error::Config(format!("unknown loss mode `{other}`"))),
        }
    }
}

/// Learning rate and L2 strength shared by a family of learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdParams {
    pub learning_rate: f64,
    pub l2_strength: f64,
}

impl Default for SgdParams {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            l2_strength: DEFAULT_L2_STRENGTH,
        }
    }
}

impl SgdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2_strength.is_finite() && self.l2_strength >= 0.0) {
            return Err(Error::Config(format!(
                "l2 strength must be finite and non-negative, got {}",
                self.l2_strength
            )));
        }
        Ok(())
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: f64,
    params: SgdParams,
    mode: LossMode,
}

impl LinearModel {
    /// A zero-initialized model over `n_features` inputs.
    pub fn new(n_features: usize, mode: LossMode, params: SgdParams) -> Result<Self> {
        if n_features < 1 {
            return Err(Error::Arity(
                "a linear model needs at least one feature".into(),
            ));
        }
        params.validate()?;
        Ok(Self {
            weights: vec![0.0; n_features],
            bias: 0.0,
            params,
            mode,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn params(&self) -> SgdParams {
        self.params
    }

    pub fn mode(&self) -> LossMode {
        self.mode
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn check_arity(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.weights.len() {
            return Err(Error::Arity(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.weights.len()
            )));
        }
        Ok(())
    }

    fn margin(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_arity(x)?;
        let z = self.margin(x);
        Ok(match self.mode {
            LossMode::Logistic => sigmoid(z),
            LossMode::Squared => z,
        })
    }

    fn check_target(&self, y: f64) -> Result<()> {
        match self.mode {
            LossMode::Logistic if y != 0.0 && y != 1.0 => Err(Error::InvalidTarget(format!(
                "logistic mode needs a 0/1 target, got {y}"
            ))),
            LossMode::Squared if !y.is_finite() => {
                Err(Error::InvalidTarget(format!("non-finite target {y}")))
            }
            _ => Ok(()),
        }
    }

    /// Gradient of the regularized per-example loss: `(∂/∂w, ∂/∂b)`.
    pub fn gradient(&self, x: &[f64], y: f64) -> Result<(Vec<f64>, f64)> {
        self.check_target(y)?;
        let g = self.predict(x)? - y;
        let alpha = self.params.l2_strength;
        let dw = self
            .weights
            .iter()
            .zip(x)
            .map(|(w, v)| g * v + alpha * w)
            .collect();
        Ok((dw, g))
    }

    /// One SGD step on `(x, y)`. On a non-finite result the model is left
    /// untouched and a numeric-overflow error is returned.
    pub fn partial_fit(&mut self, x: &[f64], y: f64) -> Result<()> {
        let (dw, db) = self.gradient(x, y)?;
        let eta = self.params.learning_rate;
        let weights: Vec<f64> = self
            .weights
            .iter()
            .zip(&dw)
            .map(|(w, d)| w - eta * d)
            .collect();
        let bias = self.bias - eta * db;
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NumericOverflow {
                position: 0,
                detail: "SGD update produced a non-finite parameter".into(),
            });
        }
        self.weights = weights;
        self.bias = bias;
        Ok(())
    }

    /// Plain-text snapshot: mode, η, α, bias, then the weights.
    pub fn to_text(&self) -> String {
        let weights: Vec<String> = self.weights.iter().map(|w| format!("{w:?}")).collect();
        format!(
            "mode {}\nlearning_rate {:?}\nl2_strength {:?}\nbias {:?}\nweights {}\n",
            self.mode,
            self.params.learning_rate,
            self.params.l2_strength,
            self.bias,
            weights.join(" ")
        )
    }

    /// Parses the output of [`Self::to_text`]. `first_line` is the 1-based
    /// line number of `text` within `source`, for error messages.
    pub fn from_text(text: &str, source: &Path, first_line: usize) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let field = |i: usize, key: &str| -> Result<&str> {
            let line = lines
                .get(i)
                .ok_or_else(|| Error::parse(source, first_line + i, format!("missing `{key}`")))?;
            let (k, rest) = line.split_once(' ').unwrap_or((line, ""));
            if k != key {
                return Err(Error::parse(
                    source,
                    first_line + i,
                    format!("expected `{key}`"),
                ));
            }
            Ok(rest)
        };
        let num = |i: usize, s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(source, first_line + i, format!("bad number `{s}`")))
        };
        let mode: LossMode = field(0, "mode")?
            .parse()
            .map_err(|e: Error| Error::parse(source, first_line, e.to_string()))?;
        let params = SgdParams {
            learning_rate: num(1, field(1, "learning_rate")?)?,
            l2_strength: num(2, field(2, "l2_strength")?)?,
        };
        let bias = num(3, field(3, "bias")?)?;
        let weights = field(4, "weights")?
            .split_whitespace()
            .map(|w| num(4, w))
            .collect::<Result<Vec<_>>>()?;
        let mut model = Self::new(weights.len(), mode, params)
            .map_err(|e| Error::parse(source, first_line, e.to_string()))?;
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::parse(source, first_line + 3, "non-finite parameter"));
        }
        model.weights = weights;
        model.bias = bias;
        Ok(model)
    }

    #[cfg(test)]
    pub(crate) fn with_parameters(mut self, weights: Vec<f64>, bias: f64) -> Self {
        assert_eq!(weights.len(), self.weights.len());
        self.weights = weights;
        self.bias = bias;
        self
    }
}

/// Lines occupied by one [`LinearModel::to_text`] record.
pub const STATE_RECORD_LINES: usize = 5;
