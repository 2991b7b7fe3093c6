//! Report files. Floats are written with six decimals; every file uses LF
//! line endings and ends with a newline.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::protocol::{AlgorithmResult, Comparison};
use crate::error::{Error, Result};

/// Windows strictly above this accuracy are flagged `above`. Presentation only.
pub const HIGHLIGHT_THRESHOLD: f64 = 0.70;

pub const SUMMARY_FILE: &str = "summary.txt";
pub const SERIES_FILE: &str = "accuracy_series.csv";
pub const SERIES_PLOT_FILE: &str = "accuracy_series.dat";
pub const ROUNDS_FILE: &str = "rmse_rounds.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

fn flag(v: f64) -> &'static str {
    if v > HIGHLIGHT_THRESHOLD {
        "above"
    } else {
        "below"
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.6}"))
}

pub fn series_csv(result: &AlgorithmResult) -> String {
    let mut out = String::from("window_index,accuracy,flag\n");
    for (i, v) in result.series.values().iter().enumerate() {
        let _ = writeln!(out, "{i},{v:.6},{}", flag(*v));
    }
    out
}

/// Whitespace-separated columns for gnuplot; flag column is 1 above the threshold.
pub fn series_plot_data(results: &[&AlgorithmResult]) -> String {
    let mut out = String::from("# algorithm window_index accuracy above_threshold\n");
    for r in results {
        for (i, v) in r.series.values().iter().enumerate() {
            let _ = writeln!(
                out,
                "{} {i} {v:.6} {}",
                r.algorithm,
                u8::from(*v > HIGHLIGHT_THRESHOLD)
            );
        }
    }
    out
}

fn summary_block(out: &mut String, r: &AlgorithmResult) {
    let _ = writeln!(out, "algorithm {}", r.algorithm);
    let _ = writeln!(out, "task {}", r.log.task());
    let _ = writeln!(out, "evaluated {}", r.log.len());
    let _ = writeln!(out, "cold_start {}", r.log.cold_start_count());
    let _ = writeln!(out, "windows {}", r.series.len());
    let _ = writeln!(out, "average_accuracy {}", opt(r.average_accuracy));
    let _ = writeln!(out, "rmse {}", opt(r.rmse));
    match &r.rounds {
        Some(rounds) => {
            let vals: Vec<String> = rounds.values.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(out, "rmse_rounds {}", vals.join(" "));
            let _ = writeln!(out, "rmse_rounds_mean {:.6}", rounds.mean());
            let _ = writeln!(
                out,
                "rmse_rounds_complete {}/{}",
                rounds.values.len(),
                rounds.requested
            );
        }
        None => {
            let _ = writeln!(out, "rmse_rounds n/a");
        }
    }
}

pub fn summary_text(results: &[&AlgorithmResult]) -> String {
    let mut out = String::new();
    for (i, r) in results.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        summary_block(&mut out, r);
    }
    out
}

pub fn rounds_csv(results: &[&AlgorithmResult]) -> String {
    let mut out = String::from("algorithm,round,rmse\n");
    for r in results {
        if let Some(rounds) = &r.rounds {
            for (i, v) in rounds.values.iter().enumerate() {
                let _ = writeln!(out, "{},{},{v:.6}", r.algorithm, i + 1);
            }
        }
    }
    out
}

pub fn comparison_csv(cmp: &Comparison) -> String {
    let max_rounds = cmp
        .results
        .iter()
        .filter_map(|r| r.rounds.as_ref().map(|x| x.values.len()))
        .max()
        .unwrap_or(0);
    let mut out = String::from("algorithm,evaluated,average_accuracy,rmse");
    for i in 1..=max_rounds {
        let _ = write!(out, ",round_{i}");
    }
    out.push('\n');
    for r in &cmp.results {
        let _ = write!(
            out,
            "{},{},{},{}",
            r.algorithm,
            r.log.len(),
            opt(r.average_accuracy),
            opt(r.rmse)
        );
        let vals = r
            .rounds
            .as_ref()
            .map(|x| x.values.as_slice())
            .unwrap_or(&[]);
        for i in 0..max_rounds {
            match vals.get(i) {
                Some(v) => {
                    let _ = write!(out, ",{v:.6}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the single-run report files into `out_dir`.
pub fn emit_report(result: &AlgorithmResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    Ok(vec![
        write(out_dir, SERIES_FILE, &series_csv(result))?,
        write(out_dir, SERIES_PLOT_FILE, &series_plot_data(&[result]))?,
        write(out_dir, SUMMARY_FILE, &summary_text(&[result]))?,
        write(out_dir, ROUNDS_FILE, &rounds_csv(&[result]))?,
    ])
}

/// Writes the comparison report. The accuracy series CSV gains a leading
/// `algorithm` column.
pub fn emit_comparison(cmp: &Comparison, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let all: Vec<&AlgorithmResult> = cmp.results.iter().collect();
    let mut series = String::from("algorithm,window_index,accuracy,flag\n");
    for r in &all {
        for (i, v) in r.series.values().iter().enumerate() {
            let _ = writeln!(series, "{},{i},{v:.6},{}", r.algorithm, flag(*v));
        }
    }
    Ok(vec![
        write(out_dir, COMPARISON_FILE, &comparison_csv(cmp))?,
        write(out_dir, SERIES_FILE, &series)?,
        write(out_dir, SERIES_PLOT_FILE, &series_plot_data(&all))?,
        write(out_dir, SUMMARY_FILE, &summary_text(&all))?,
        write(out_dir, ROUNDS_FILE, &rounds_csv(&all))?,
    ])
}
