//! The array of per-arm online learners.
//!
//! Each arm gets its own [`LinearModel`], created lazily the first time the
//! arm appears. A record for a known arm is first *predicted* and only then
//! used for fitting, so every logged prediction is out-of-sample. A record
//! for an unseen arm creates the learner, fits it once and emits nothing.
//!
//! The learner input is `X = (C_x, A_x)`: the normalized context with the
//! arm feature appended, even though the arm feature is constant inside a
//! single arm's learner.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{PredictionLog, Task};
use crate::learners::{LinearModel, LossMode, SgdParams, STATE_RECORD_LINES};
use crate::schema::{arm_feature, ArmId, ContextSchema, InteractionRecord, RawValue};

const SNAPSHOT_MAGIC: &str = "bandit-array v1";

/// How rewards are mapped into the learners' target range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardScale {
    /// 0/1 rewards, fitted as-is.
    Click,
    /// Ratings in `[min, max]`, fitted as `(r - min) / (max - min)`.
    Rating { min: f64, max: f64 },
}

impl RewardScale {
    pub const STARS: RewardScale = RewardScale::Rating { min: 1.0, max: 5.0 };

    pub fn task(&self) -> Task {
        match self {
            RewardScale::Click => Task::Click,
            RewardScale::Rating { .. } => Task::Rating,
        }
    }

    pub fn to_unit(&self, reward: f64) -> Result<f64> {
        match *self {
            RewardScale::Click => Ok(reward),
            RewardScale::Rating { min, max } => {
                if !(min..=max).contains(&reward) {
                    return Err(Error::InvalidTarget(format!(
                        "rating {reward} outside [{min}, {max}]"
                    )));
                }
                Ok((reward - min) / (max - min))
            }
        }
    }

    pub fn from_unit(&self, value: f64) -> f64 {
        match *self {
            RewardScale::Click => value,
            RewardScale::Rating { min, max } => value * (max - min) + min,
        }
    }
}

/// Hyperparameters shared by every arm of one array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditConfig {
    pub mode: LossMode,
    pub params: SgdParams,
    pub reward_scale: RewardScale,
    /// Size of the action space, used to encode the arm feature.
    pub arm_space: usize,
}

impl BanditConfig {
    /// Logistic learners on 0/1 rewards.
    pub fn click(arm_space: usize) -> Self {
        Self {
            mode: LossMode::Logistic,
            params: SgdParams::default(),
            reward_scale: RewardScale::Click,
            arm_space,
        }
    }

    /// Squared-loss learners on 1–5 ratings.
    pub fn rating(arm_space: usize) -> Self {
        Self {
            mode: LossMode::Squared,
            params: SgdParams::default(),
            reward_scale: RewardScale::STARS,
            arm_space,
        }
    }

    pub fn with_params(mut self, params: SgdParams) -> Self {
        self.params = params;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// `P_x`, absent when the arm was seen for the first time.
    pub prediction: Option<f64>,
    pub arm: ArmId,
}

impl StepOutcome {
    pub fn was_cold_start(&self) -> bool {
        self.prediction.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmLearnerArray {
    schema: ContextSchema,
    config: BanditConfig,
    known_arms: Vec<ArmId>,
    learners: HashMap<String, LinearModel>,
}

impl ArmLearnerArray {
    pub fn new(schema: ContextSchema, config: BanditConfig) -> Result<Self> {
        if config.arm_space == 0 {
            return Err(Error::Config(
                "action space must hold at least one arm".into(),
            ));
        }
        config.params.validate()?;
        Ok(Self {
            schema,
            config,
            known_arms: Vec::new(),
            learners: HashMap::new(),
        })
    }

    pub fn schema(&self) -> &ContextSchema {
        &self.schema
    }

    pub fn config(&self) -> &BanditConfig {
        &self.config
    }

    /// Known arms, indexed in first-seen order.
    pub fn known_arms(&self) -> &[ArmId] {
        &self.known_arms
    }

    pub fn learner(&self, label: &str) -> Option<&LinearModel> {
        self.learners.get(label)
    }

    pub fn len(&self) -> usize {
        self.learners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learners.is_empty()
    }

    fn arm(&self, label: &str) -> Option<&ArmId> {
        self.known_arms.iter().find(|a| a.label() == label)
    }

    fn features(&self, raw: &[RawValue], arm: &ArmId) -> Result<Vec<f64>> {
        let context = self.schema.normalize(raw)?;
        Ok(context.with_arm_feature(arm_feature(arm, self.config.arm_space)?))
    }

    /// One predict-then-fit step of the streaming algorithm.
    pub fn step(&mut self, record: &InteractionRecord) -> Result<StepOutcome> {
        self.step_inner(record)
            .map_err(|e| e.at_position(record.position))
    }

    fn step_inner(&mut self, record: &InteractionRecord) -> Result<StepOutcome> {
        let label = record.arm.label();
        let target = self.config.reward_scale.to_unit(record.reward)?;
        match self.arm(label).cloned() {
            Some(arm) => {
                let x = self.features(&record.raw_context, &arm)?;
                let learner = self
                    .learners
                    .get_mut(label)
                    .expect("known arm has a learner");
                let p = learner.predict(&x)?;
                learner.partial_fit(&x, target)?;
                Ok(StepOutcome {
                    prediction: Some(self.config.reward_scale.from_unit(p)),
                    arm,
                })
            }
            None => {
                let arm = ArmId::new(label, self.known_arms.len())?;
                let x = self.features(&record.raw_context, &arm)?;
                let mut learner = LinearModel::new(x.len(), self.config.mode, self.config.params)?;
                learner.partial_fit(&x, target)?;
                self.learners.insert(label.to_owned(), learner);
                self.known_arms.push(arm.clone());
                Ok(StepOutcome {
                    prediction: None,
                    arm,
                })
            }
        }
    }

    /// `E[R | context, arm]` as estimated by the arm's learner, on the reward scale.
    pub fn expected_reward(&self, raw_context: &[RawValue], arm: &ArmId) -> Result<f64> {
        let known = self
            .arm(arm.label())
            .ok_or_else(|| Error::UnknownArm(arm.label().to_owned()))?;
        let x = self.features(raw_context, known)?;
        let p = self.learners[arm.label()].predict(&x)?;
        Ok(self.config.reward_scale.from_unit(p))
    }

    /// Greedy argmax of [`Self::expected_reward`] over known arms, ties to the
    /// lowest index. This is a convenience: the streaming algorithm itself
    /// only scores logged arms and never selects one.
    pub fn recommend(&self, raw_context: &[RawValue]) -> Result<ArmId> {
        let mut best: Option<(&ArmId, f64)> = None;
        for arm in &self.known_arms {
            let r = self.expected_reward(raw_context, arm)?;
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((arm, r));
            }
        }
        best.map(|(a, _)| a.clone())
            .ok_or_else(|| Error::UnknownArm("no arms are known yet".into()))
    }

    /// Plain-text snapshot: a header (mode, reward scale, action-space size,
    /// schema fingerprint, arms in index order) then one learner record per arm.
    pub fn to_snapshot(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(SNAPSHOT_MAGIC);
        out.push('\n');
        out.push_str(&format!("mode {}\n", self.config.mode));
        out.push_str(&match self.config.reward_scale {
            RewardScale::Click => "reward click\n".to_owned(),
            RewardScale::Rating { min, max } => format!("reward rating {min:?} {max:?}\n"),
        });
        out.push_str(&format!("arm_space {}\n", self.config.arm_space));
        out.push_str(&format!("schema {}\n", self.schema.fingerprint()?));
        out.push_str("arms");
        for arm in &self.known_arms {
            if arm.label().chars().any(char::is_whitespace) {
                return Err(Error::Config(format!(
                    "arm label `{}` cannot be written to a snapshot",
                    arm.label()
                )));
            }
            out.push(' ');
            out.push_str(arm.label());
        }
        out.push('\n');
        for arm in &self.known_arms {
            out.push_str(&format!("learner {}\n", arm.label()));
            out.push_str(&self.learners[arm.label()].to_text());
        }
        Ok(out)
    }

    /// Restores an array from [`Self::to_snapshot`]. The schema must match
    /// the fingerprint recorded in the header.
    pub fn from_snapshot(text: &str, schema: ContextSchema, source: &Path) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let at = |i: usize, detail: &str| Error::parse(source, i + 1, detail);
        let value = |i: usize, key: &str| -> Result<&str> {
            let line = *lines
                .get(i)
                .ok_or_else(|| at(i, "unexpected end of snapshot"))?;
            match line.split_once(' ') {
                Some((k, rest)) if k == key => Ok(rest),
                _ if line == key => Ok(""),
                _ => Err(at(i, &format!("expected `{key}`"))),
            }
        };
        if lines.first() != Some(&SNAPSHOT_MAGIC) {
            return Err(at(0, "not a bandit-array snapshot"));
        }
        let mode: LossMode = value(1, "mode")?
            .parse()
            .map_err(|e: Error| at(1, &e.to_string()))?;
        let reward_scale = match value(2, "reward")?.split_whitespace().collect::<Vec<_>>()[..] {
            ["click"] => RewardScale::Click,
            ["rating", lo, hi] => RewardScale::Rating {
                min: lo.parse().map_err(|_| at(2, "bad rating bound"))?,
                max: hi.parse().map_err(|_| at(2, "bad rating bound"))?,
            },
            _ => return Err(at(2, "unknown reward scale")),
        };
        let arm_space: usize = value(3, "arm_space")?
            .parse()
            .map_err(|_| at(3, "bad arm_space"))?;
        if value(4, "schema")? != schema.fingerprint()? {
            return Err(at(
                4,
                "schema fingerprint does not match the supplied schema",
            ));
        }
        let labels: Vec<&str> = value(5, "arms")?.split_whitespace().collect();

        let mut params = None;
        let mut known_arms = Vec::new();
        let mut learners = HashMap::new();
        let mut i = 6;
        for (index, label) in labels.iter().enumerate() {
            if value(i, "learner")? != *label {
                return Err(at(i, &format!("expected learner for `{label}`")));
            }
            let end = (i + 1 + STATE_RECORD_LINES).min(lines.len());
            let body = lines[i + 1..end].join("\n");
            let model = LinearModel::from_text(&body, source, i + 2)?;
            if model.mode() != mode {
                return Err(at(i, "learner mode differs from the header"));
            }
            params.get_or_insert(model.params());
            known_arms.push(ArmId::new(*label, index)?);
            learners.insert((*label).to_owned(), model);
            i += 1 + STATE_RECORD_LINES;
        }
        let config = BanditConfig {
            mode,
            params: params.unwrap_or_default(),
            reward_scale,
            arm_space,
        };
        let expected = schema.len() + 1;
        if learners.values().any(|m| m.n_features() != expected) {
            return Err(at(0, "learner arity does not match schema length + 1"));
        }
        Ok(Self {
            schema,
            config,
            known_arms,
            learners,
        })
    }
}

/// Runs the array over `stream`: the first `warmup_n` records only train,
/// every later record is predicted before it is fitted. Cold starts after
/// the warmup are counted but not logged.
pub fn run_prequential(
    array: &mut ArmLearnerArray,
    stream: &[InteractionRecord],
    warmup_n: usize,
) -> Result<PredictionLog> {
    if warmup_n > stream.len() {
        return Err(Error::Config(format!(
            "warmup of {warmup_n} exceeds the stream length {}",
            stream.len()
        )));
    }
    let mut log = PredictionLog::new(array.config.reward_scale.task());
    for (i, record) in stream.iter().enumerate() {
        let outcome = array.step(record)?;
        if i < warmup_n {
            continue;
        }
        match outcome.prediction {
            Some(p) => log
                .push(record.position, p, record.reward)
                .map_err(|e| e.at_position(record.position))?,
            None => log.record_cold_start(),
        }
    }
    Ok(log)
}
