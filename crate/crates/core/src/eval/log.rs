use std::fmt;

use crate::error::{Error, Result};

/// What a reward means: a 0/1 click or a 1–5 star rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Click,
    Rating,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Click => "click",
            Task::Rating => "rating",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub position: u64,
    pub predicted: f64,
    pub actual: f64,
}

/// Aligned predicted/actual rewards, in stream order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionLog {
    task: Task,
    entries: Vec<LogEntry>,
    cold_start_count: usize,
}

impl PredictionLog {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            entries: Vec::new(),
            cold_start_count: 0,
        }
    }

    /// Builds a log from parts, checking the ordering and label invariants.
    pub fn from_entries(task: Task, entries: Vec<LogEntry>) -> Result<Self> {
        let mut log = Self::new(task);
        for e in entries {
            log.push(e.position, e.predicted, e.actual)?;
        }
        Ok(log)
    }

    pub fn push(&mut self, position: u64, predicted: f64, actual: f64) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if position <= last.position {
                return Err(Error::Config(format!(
                    "log positions must increase: {position} after {}",
                    last.position
                )));
            }
        }
        if self.task == Task::Click && actual != 0.0 && actual != 1.0 {
            return Err(Error::InvalidTarget(format!(
                "click log entry at {position} has actual {actual}"
            )));
        }
        if !predicted.is_finite() || !actual.is_finite() {
            return Err(Error::NumericOverflow {
                position,
                detail: "non-finite prediction or reward".into(),
            });
        }
        self.entries.push(LogEntry {
            position,
            predicted,
            actual,
        });
        Ok(())
    }

    pub fn record_cold_start(&mut self) {
        self.cold_start_count += 1;
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cold_start_count(&self) -> usize {
        self.cold_start_count
    }

    pub fn positions(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.position)
    }

    /// Keeps only entries whose position satisfies `keep`.
    pub fn retain_positions(&mut self, mut keep: impl FnMut(u64) -> bool) {
        self.entries.retain(|e| keep(e.position));
    }

    /// The first `n` entries.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            task: self.task,
            entries: self.entries[..n.min(self.entries.len())].to_vec(),
            cold_start_count: self.cold_start_count,
        }
    }
}
