//! Prequential metrics over a [`PredictionLog`].

use super::log::{LogEntry, PredictionLog, Task};
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 20;
pub const DEFAULT_ROUND_SIZE: usize = 1000;
pub const DEFAULT_ROUNDS: usize = 10;
pub const RATING_MIN: f64 = 1.0;
pub const RATING_MAX: f64 = 5.0;

/// When a prediction counts as correct.
///
/// Clicks: `(predicted >= 0.5) == actual`. Ratings: the prediction is clamped
/// to `[1, 5]`, rounded half-up, and must lie within `rating_tolerance` of the
/// actual rating (0 means exact match).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyRule {
    pub rating_tolerance: f64,
}

impl Default for AccuracyRule {
    fn default() -> Self {
        Self {
            rating_tolerance: 0.0,
        }
    }
}

impl AccuracyRule {
    pub fn is_correct(&self, task: Task, entry: &LogEntry) -> bool {
        match task {
            Task::Click => (entry.predicted >= 0.5) == (entry.actual == 1.0),
            Task::Rating => {
                let rounded = round_half_up(clamp_rating(entry.predicted));
                (rounded - entry.actual).abs() <= self.rating_tolerance
            }
        }
    }
}

fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

pub fn clamp_rating(v: f64) -> f64 {
    v.clamp(RATING_MIN, RATING_MAX)
}

/// Accuracy per tumbling window, with the raw counts kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracySeries {
    window_size: usize,
    values: Vec<f64>,
    counts: Vec<(usize, usize)>,
}

impl AccuracySeries {
    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(correct, total)` for each window.
    pub fn counts(&self) -> &[(usize, usize)] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total correct over total entries.
    pub fn average(&self) -> Result<f64> {
        let (c, n) = self
            .counts
            .iter()
            .fold((0, 0), |(c, n), &(wc, wn)| (c + wc, n + wn));
        if n == 0 {
            return Err(Error::UndefinedMetric("accuracy of an empty series".into()));
        }
        Ok(c as f64 / n as f64)
    }
}

/// Groups the log into consecutive windows of `window_size` entries; a final
/// partial window keeps its own denominator.
pub fn windowed_accuracy(
    log: &PredictionLog,
    window_size: usize,
    rule: AccuracyRule,
) -> Result<AccuracySeries> {
    if window_size == 0 {
        return Err(Error::Config("window size must be at least 1".into()));
    }
    let counts: Vec<(usize, usize)> = log
        .entries()
        .chunks(window_size)
        .map(|w| {
            let correct = w.iter().filter(|e| rule.is_correct(log.task(), e)).count();
            (correct, w.len())
        })
        .collect();
    let values = counts.iter().map(|&(c, n)| c as f64 / n as f64).collect();
    Ok(AccuracySeries {
        window_size,
        values,
        counts,
    })
}

/// Fraction of correct entries over the whole log.
pub fn average_accuracy(log: &PredictionLog, rule: AccuracyRule) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty log".into()));
    }
    let correct = log
        .entries()
        .iter()
        .filter(|e| rule.is_correct(log.task(), e))
        .count();
    Ok(correct as f64 / log.len() as f64)
}

fn rmse_of(task: Task, entries: &[LogEntry]) -> f64 {
    let sq: f64 = entries
        .iter()
        .map(|e| {
            let p = match task {
                Task::Rating => clamp_rating(e.predicted),
                Task::Click => e.predicted,
            };
            (p - e.actual).powi(2)
        })
        .sum();
    (sq / entries.len() as f64).sqrt()
}

/// Root mean squared error; rating predictions are clamped to `[1, 5]` first.
pub fn rmse(log: &PredictionLog) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::UndefinedMetric("RMSE of an empty log".into()));
    }
    Ok(rmse_of(log.task(), log.entries()))
}

/// RMSE over consecutive blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundsRmse {
    pub round_size: usize,
    pub requested: usize,
    pub values: Vec<f64>,
}

impl RoundsRmse {
    /// True when the log held fewer than `requested` full rounds.
    pub fn is_short(&self) -> bool {
        self.values.len() < self.requested
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// RMSE of each full block of `round_size` entries, up to `rounds` blocks.
pub fn rounds_rmse(log: &PredictionLog, round_size: usize, rounds: usize) -> Result<RoundsRmse> {
    if round_size == 0 || rounds == 0 {
        return Err(Error::Config(
            "round size and round count must be at least 1".into(),
        ));
    }
    if log.len() < round_size {
        return Err(Error::UndefinedMetric(format!(
            "log has {} entries, fewer than one round of {round_size}",
            log.len()
        )));
    }
    let values = log
        .entries()
        .chunks_exact(round_size)
        .take(rounds)
        .map(|block| rmse_of(log.task(), block))
        .collect();
    Ok(RoundsRmse {
        round_size,
        requested: rounds,
        values,
    })
}
