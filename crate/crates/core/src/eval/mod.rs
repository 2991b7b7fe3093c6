//! Prequential metrics, experiment protocols and report files.

mod log;
mod metrics;
mod protocol;
pub mod report;

pub use log::{LogEntry, PredictionLog, Task};
pub use metrics::{
    average_accuracy, clamp_rating, rmse, rounds_rmse, windowed_accuracy, AccuracyRule,
    AccuracySeries, RoundsRmse, DEFAULT_ROUNDS, DEFAULT_ROUND_SIZE, DEFAULT_WINDOW, RATING_MAX,
    RATING_MIN,
};
pub use protocol::{
    compare_protocol, run_algorithm, summarize, Algorithm, AlgorithmResult, Comparison, Dataset,
    ProtocolConfig,
};
pub use report::{emit_comparison, emit_report};
