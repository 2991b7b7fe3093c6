//! Domain types shared by every learner and pipeline: feature schemas,
//! normalized context vectors, arm identities and logged interactions.
//!
//! Every context component is mapped into `[0, 1]`. Numeric features use
//! min-max scaling with clamping; categorical features use their position in
//! the schema's fixed category list divided by `K - 1`.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureKind {
    Numeric { lower: f64, upper: f64 },
    Categorical(Vec<String>),
}

/// One named component of the context.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    name: String,
    kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>, lower: f64, upper: f64) -> Result<Self> {
        let name = name.into();
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Config(format!(
                "numeric feature `{name}` needs finite bounds with lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            name,
            kind: FeatureKind::Numeric { lower, upper },
        })
    }

    /// A categorical feature with the given ordered category list.
    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let name = name.into();
        let categories: Vec<String> = categories.into_iter().map(Into::into).collect();
        if categories.is_empty() {
            return Err(Error::Config(format!(
                "categorical feature `{name}` has no categories"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &categories {
            if !seen.insert(c.as_str()) {
                return Err(Error::Config(format!(
                    "categorical feature `{name}` lists `{c}` twice"
                )));
            }
        }
        Ok(Self {
            name,
            kind: FeatureKind::Categorical(categories),
        })
    }

    /// Builds a categorical feature from observed values: sorted, deduplicated.
    pub fn categorical_from_values<S: AsRef<str>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let mut cats: Vec<String> = values.into_iter().map(|v| v.as_ref().to_owned()).collect();
        cats.sort();
        cats.dedup();
        Self::categorical(name, cats)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &FeatureKind {
        &self.kind
    }

    fn encode(&self, raw: &RawValue) -> Result<f64> {
        match (&self.kind, raw) {
            (FeatureKind::Numeric { lower, upper }, RawValue::Number(v)) => {
                if !v.is_finite() {
                    return Err(self.violation(format!("non-finite value {v}")));
                }
                Ok(((v - lower) / (upper - lower)).clamp(0.0, 1.0))
            }
            (FeatureKind::Categorical(cats), RawValue::Category(c)) => {
                let idx = cats
                    .iter()
                    .position(|k| k == c)
                    .ok_or_else(|| self.violation(format!("unknown category `{c}`")))?;
                Ok(if cats.len() == 1 {
                    0.0
                } else {
                    idx as f64 / (cats.len() - 1) as f64
                })
            }
            (FeatureKind::Numeric { .. }, RawValue::Category(c)) => {
                Err(self.violation(format!("expected a number, got `{c}`")))
            }
            (FeatureKind::Categorical(_), RawValue::Number(v)) => {
                Err(self.violation(format!("expected a category, got {v}")))
            }
        }
    }

    fn violation(&self, detail: String) -> Error {
        Error::SchemaViolation {
            feature: self.name.clone(),
            detail,
        }
    }
}

/// Ordered list of features; the order fixes the context-vector layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSchema {
    features: Vec<FeatureSpec>,
}

impl ContextSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate feature name `{}`",
                    f.name
                )));
            }
        }
        Ok(Self { features })
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn normalize(&self, raw: &[RawValue]) -> Result<ContextVector> {
        normalize_context(self, raw)
    }

    /// Plain-text form, one feature per line: `name kind params`.
    ///
    /// ```text
    /// age numeric 0 100
    /// gender categorical f m
    /// ```
    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        for f in &self.features {
            check_token(&f.name)?;
            match &f.kind {
                FeatureKind::Numeric { lower, upper } => {
                    out.push_str(&format!("{} numeric {lower:?} {upper:?}\n", f.name));
                }
                FeatureKind::Categorical(cats) => {
                    out.push_str(&f.name);
                    out.push_str(" categorical");
                    for c in cats {
                        check_token(c)?;
                        out.push(' ');
                        out.push_str(c);
                    }
                    out.push('\n');
                }
            }
        }
        Ok(out)
    }

    /// Parses the text form. Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str, source: &Path) -> Result<Self> {
        let mut features = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let name = parts.next().unwrap_or_default();
            let kind = parts
                .next()
                .ok_or_else(|| Error::parse(source, i + 1, "missing feature kind"))?;
            let rest: Vec<&str> = parts.collect();
            let spec = match kind {
                "numeric" => {
                    let [lo, hi] = rest.as_slice() else {
                        return Err(Error::parse(
                            source,
                            i + 1,
                            "numeric feature needs two bounds",
                        ));
                    };
                    let lo: f64 = lo
                        .parse()
                        .map_err(|_| Error::parse(source, i + 1, format!("bad bound `{lo}`")))?;
                    let hi: f64 = hi
                        .parse()
                        .map_err(|_| Error::parse(source, i + 1, format!("bad bound `{hi}`")))?;
                    FeatureSpec::numeric(name, lo, hi)
                }
                "categorical" => FeatureSpec::categorical(name, rest.iter().copied()),
                other => {
                    return Err(Error::parse(
                        source,
                        i + 1,
                        format!("unknown feature kind `{other}`"),
                    ))
                }
            }
            .map_err(|e| Error::parse(source, i + 1, e.to_string()))?;
            features.push(spec);
        }
        Self::new(features).map_err(|e| Error::parse(source, 0, e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of [`Self::to_text`].
    pub fn fingerprint(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_text()?.as_bytes());
        Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
    }
}

fn check_token(s: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(Error::Config(format!(
            "`{s}` cannot be written as a whitespace-free schema token"
        )));
    }
    Ok(())
}

/// A raw, unnormalized context value.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Number(f64),
    Category(String),
}

impl From<f64> for RawValue {
    fn from(v: f64) -> Self {
        RawValue::Number(v)
    }
}

impl From<&str> for RawValue {
    fn from(v: &str) -> Self {
        RawValue::Category(v.to_owned())
    }
}

impl From<String> for RawValue {
    fn from(v: String) -> Self {
        RawValue::Category(v)
    }
}

impl fmt::Display for RawValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawValue::Number(v) => write!(f, "{v}"),
            RawValue::Category(c) => f.write_str(c),
        }
    }
}

/// Normalized context; every component lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVector(Vec<f64>);

impl ContextVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The learner input `X = (C_x, A_x)`: the context with the arm feature appended.
    pub fn with_arm_feature(&self, arm_value: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.0.len() + 1);
        x.extend_from_slice(&self.0);
        x.push(arm_value);
        x
    }
}

pub fn normalize_context(schema: &ContextSchema, raw: &[RawValue]) -> Result<ContextVector> {
    if raw.len() != schema.len() {
        return Err(Error::Arity(format!(
            "context has {} values, schema expects {}",
            raw.len(),
            schema.len()
        )));
    }
    schema
        .features
        .iter()
        .zip(raw)
        .map(|(f, v)| f.encode(v))
        .collect::<Result<Vec<_>>>()
        .map(ContextVector)
}

/// An action label with its first-seen index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArmId {
    label: String,
    index: usize,
}

impl ArmId {
    pub fn new(label: impl Into<String>, index: usize) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::Config("arm label must be non-empty".into()));
        }
        Ok(Self { label, index })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Encodes an arm as `index / (total_arms - 1)`, or 0 for a single arm.
pub fn arm_feature(arm: &ArmId, total_arms: usize) -> Result<f64> {
    if total_arms == 0 || arm.index >= total_arms {
        return Err(Error::Arity(format!(
            "arm `{}` has index {} but the action space has {total_arms} arms",
            arm.label, arm.index
        )));
    }
    Ok(if total_arms == 1 {
        0.0
    } else {
        arm.index as f64 / (total_arms - 1) as f64
    })
}

/// Assigns arm indices in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct ArmRegistry {
    arms: Vec<ArmId>,
    by_label: HashMap<String, usize>,
}

impl ArmRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the arm for `label`, registering it if unseen.
    pub fn intern(&mut self, label: &str) -> Result<ArmId> {
        if let Some(&i) = self.by_label.get(label) {
            return Ok(self.arms[i].clone());
        }
        let arm = ArmId::new(label, self.arms.len())?;
        self.by_label.insert(label.to_owned(), arm.index);
        self.arms.push(arm.clone());
        Ok(arm)
    }

    pub fn get(&self, label: &str) -> Option<&ArmId> {
        self.by_label.get(label).map(|&i| &self.arms[i])
    }

    pub fn arms(&self) -> &[ArmId] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }
}

/// One logged event `x`: context, the arm pulled and the reward observed.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionRecord {
    pub position: u64,
    pub raw_context: Vec<RawValue>,
    pub arm: ArmId,
    pub reward: f64,
}
