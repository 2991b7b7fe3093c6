//! Experiment protocols.
//!
//! Static algorithms fit once on the first `train_n` records and predict the
//! rest. Online algorithms train on the same `train_n` records and then run
//! predict-then-fit over the remainder. All learners see the same input
//! `X = (C_x, A_x)`.

use std::fmt;
use std::str::FromStr;

use super::log::{PredictionLog, Task};
use super::metrics::{
    average_accuracy, rmse, rounds_rmse, windowed_accuracy, AccuracyRule, AccuracySeries,
    RoundsRmse, DEFAULT_ROUNDS, DEFAULT_ROUND_SIZE, DEFAULT_WINDOW,
};
use crate::bandit::{run_prequential, ArmLearnerArray, BanditConfig, RewardScale};
use crate::error::{Error, Result};
use crate::learners::{
    DecisionTree, LinearModel, LossMode, OlsModel, SgdParams, TreeParams, TreeTask,
};
use crate::schema::{arm_feature, ContextSchema, InteractionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    StaticTree,
    StaticOls,
    OnlineSgd,
    BanditArray,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::StaticTree,
        Algorithm::StaticOls,
        Algorithm::OnlineSgd,
        Algorithm::BanditArray,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::StaticTree => "static-tree",
            Algorithm::StaticOls => "static-ols",
            Algorithm::OnlineSgd => "online-sgd",
            Algorithm::BanditArray => "bandit-array",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// A record stream together with the schema and action space it lives in.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: ContextSchema,
    pub records: Vec<InteractionRecord>,
    pub task: Task,
    pub arm_space: usize,
}

impl Dataset {
    fn reward_scale(&self) -> RewardScale {
        match self.task {
            Task::Click => RewardScale::Click,
            Task::Rating => RewardScale::STARS,
        }
    }

    fn features(&self, record: &InteractionRecord) -> Result<Vec<f64>> {
        let context = self.schema.normalize(&record.raw_context)?;
        Ok(context.with_arm_feature(arm_feature(&record.arm, self.arm_space)?))
    }

    fn feature_matrix(&self, records: &[InteractionRecord]) -> Result<Vec<Vec<f64>>> {
        records
            .iter()
            .map(|r| self.features(r).map_err(|e| e.at_position(r.position)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    /// Records used for the static fit or the online warmup.
    pub train_n: usize,
    pub window_size: usize,
    pub rule: AccuracyRule,
    pub round_size: usize,
    pub rounds: usize,
    pub sgd: SgdParams,
    pub tree: TreeParams,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            train_n: 500,
            window_size: DEFAULT_WINDOW,
            rule: AccuracyRule::default(),
            round_size: DEFAULT_ROUND_SIZE,
            rounds: DEFAULT_ROUNDS,
            sgd: SgdParams::default(),
            tree: TreeParams::default(),
        }
    }
}

/// Runs one algorithm under the protocol and returns its prediction log.
pub fn run_algorithm(
    dataset: &Dataset,
    algorithm: Algorithm,
    config: &ProtocolConfig,
) -> Result<PredictionLog> {
    let n = config.train_n;
    if n > dataset.records.len() {
        return Err(Error::Config(format!(
            "training prefix of {n} exceeds the dataset length {}",
            dataset.records.len()
        )));
    }
    let (train, test) = dataset.records.split_at(n);
    match algorithm {
        Algorithm::StaticTree | Algorithm::StaticOls => {
            if train.is_empty() {
                return Err(Error::Config(
                    "static algorithms need a non-empty training prefix".into(),
                ));
            }
            let x = dataset.feature_matrix(train)?;
            let y: Vec<f64> = train.iter().map(|r| r.reward).collect();
            let model = if algorithm == Algorithm::StaticTree {
                let task = match dataset.task {
                    Task::Click => TreeTask::Classification,
                    Task::Rating => TreeTask::Regression,
                };
                StaticModel::Tree(DecisionTree::fit(&x, &y, task, config.tree)?)
            } else {
                StaticModel::Ols(OlsModel::fit(&x, &y)?)
            };
            let mut log = PredictionLog::new(dataset.task);
            for r in test {
                let p =
                    model.predict(&dataset.features(r).map_err(|e| e.at_position(r.position))?)?;
                log.push(r.position, p, r.reward)?;
            }
            Ok(log)
        }
        Algorithm::OnlineSgd => {
            let scale = dataset.reward_scale();
            let mode = match dataset.task {
                Task::Click => LossMode::Logistic,
                Task::Rating => LossMode::Squared,
            };
            let mut model = LinearModel::new(dataset.schema.len() + 1, mode, config.sgd)?;
            let mut log = PredictionLog::new(dataset.task);
            for (i, r) in dataset.records.iter().enumerate() {
                let emitted = online_step(dataset, &mut model, r, i >= n)
                    .map_err(|e| e.at_position(r.position))?;
                if let Some(p) = emitted {
                    log.push(r.position, scale.from_unit(p), r.reward)?;
                }
            }
            Ok(log)
        }
        Algorithm::BanditArray => {
            let bandit = BanditConfig {
                mode: match dataset.task {
                    Task::Click => LossMode::Logistic,
                    Task::Rating => LossMode::Squared,
                },
                params: config.sgd,
                reward_scale: dataset.reward_scale(),
                arm_space: dataset.arm_space,
            };
            let mut array = ArmLearnerArray::new(dataset.schema.clone(), bandit)?;
            run_prequential(&mut array, &dataset.records, n)
        }
    }
}

enum StaticModel {
    Tree(DecisionTree),
    Ols(OlsModel),
}

impl StaticModel {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            StaticModel::Tree(t) => t.predict(x),
            StaticModel::Ols(m) => m.predict(x),
        }
    }
}

fn online_step(
    dataset: &Dataset,
    model: &mut LinearModel,
    record: &InteractionRecord,
    emit: bool,
) -> Result<Option<f64>> {
    let x = dataset.features(record)?;
    let p = if emit { Some(model.predict(&x)?) } else { None };
    model.partial_fit(&x, dataset.reward_scale().to_unit(record.reward)?)?;
    Ok(p)
}

/// Metrics derived from one algorithm's log.
#[derive(Debug, Clone)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    pub log: PredictionLog,
    pub series: AccuracySeries,
    /// `None` when the log is empty.
    pub average_accuracy: Option<f64>,
    pub rmse: Option<f64>,
    /// `None` when the log holds less than one round.
    pub rounds: Option<RoundsRmse>,
}

pub fn summarize(
    algorithm: Algorithm,
    log: PredictionLog,
    config: &ProtocolConfig,
) -> Result<AlgorithmResult> {
    let series = windowed_accuracy(&log, config.window_size, config.rule)?;
    let average_accuracy = (!log.is_empty())
        .then(|| average_accuracy(&log, config.rule))
        .transpose()?;
    let rmse = (!log.is_empty()).then(|| rmse(&log)).transpose()?;
    let rounds = if log.len() >= config.round_size {
        Some(rounds_rmse(&log, config.round_size, config.rounds)?)
    } else {
        None
    };
    Ok(AlgorithmResult {
        algorithm,
        log,
        series,
        average_accuracy,
        rmse,
        rounds,
    })
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub task: Task,
    pub train_n: usize,
    pub results: Vec<AlgorithmResult>,
}

impl Comparison {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmResult> {
        self.results.iter().find(|r| r.algorithm == algorithm)
    }
}

/// Runs every algorithm (concurrently) and scores each on the positions that
/// all of them predicted, so that the comparison is over identical records.
pub fn compare_protocol(
    dataset: &Dataset,
    algorithms: &[Algorithm],
    config: &ProtocolConfig,
) -> Result<Comparison> {
    if dataset.records.len() <= config.train_n {
        return Err(Error::Config(format!(
            "dataset has {} records, needs more than the training prefix of {}",
            dataset.records.len(),
            config.train_n
        )));
    }
    let logs: Vec<Result<PredictionLog>> = std::thread::scope(|s| {
        let handles: Vec<_> = algorithms
            .iter()
            .map(|&a| s.spawn(move || run_algorithm(dataset, a, config)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("algorithm thread panicked"))
            .collect()
    });
    let mut logs = logs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut shared: Option<Vec<u64>> = None;
    for log in &logs {
        let pos: Vec<u64> = log.positions().collect();
        shared = Some(match shared {
            None => pos,
            Some(prev) => intersect_sorted(&prev, &pos),
        });
    }
    let shared = shared.unwrap_or_default();
    for log in &mut logs {
        log.retain_positions(|p| shared.binary_search(&p).is_ok());
    }

    let results = algorithms
        .iter()
        .zip(logs)
        .map(|(&a, log)| summarize(a, log, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        task: dataset.task,
        train_n: config.train_n,
        results,
    })
}

fn intersect_sorted(a: &[u64], b: &[u64]) -> Vec<u64> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}
