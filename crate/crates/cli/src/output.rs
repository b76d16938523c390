//! Machine-readable result files. Every CSV has a fixed header and column
//! order; floats are written with the shortest round-trip formatting so an
//! independent reader recovers the exact values; undefined metrics are
//! written as the literal `undefined`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

use adindrnn_core::data::SegmentStats;
use adindrnn_core::training::{CvSummary, EpochStats, MeanStd, MetricsReport};

pub const ROUNDS_HEADER: &str =
    "round,status,tp,fp,tn,fn,sensitivity,specificity,f1,precision,accuracy";
pub const CURVE_HEADER: &str = "epoch,train_loss,val_loss,val_accuracy";
pub const SWEEP_RESULTS_HEADER: &str = "seg_len_s,status,sensitivity_mean,sensitivity_std,\
specificity_mean,specificity_std,f1_mean,f1_std,precision_mean,precision_std,\
accuracy_mean,accuracy_std";
pub const SWEEP_STATS_HEADER: &str = "seg_len_s,status,num_seizure_segments,avg_seizure_len_s,\
perc_type1,perc_type2,perc_type3";

pub fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => "undefined".to_string(),
    }
}

fn fmt_mean_std(ms: &MeanStd) -> String {
    format!("{},{}", fmt_opt(ms.mean), fmt_opt(ms.std))
}

/// One `round,...` metrics row; `None` marks a failed round.
pub fn round_row(round: usize, report: Option<&MetricsReport>) -> String {
    match report {
        Some(r) => format!(
            "{round},ok,{},{},{},{},{},{},{},{},{}",
            r.tp,
            r.fp,
            r.tn,
            r.fn_,
            fmt_opt(r.sensitivity),
            fmt_opt(r.specificity),
            fmt_opt(r.f1),
            fmt_opt(r.precision),
            fmt_opt(r.accuracy),
        ),
        None => format!(
            "{round},failed,undefined,undefined,undefined,undefined,undefined,\
             undefined,undefined,undefined,undefined"
        ),
    }
}

pub fn rounds_csv(rows: &[String]) -> String {
    let mut out = String::from(ROUNDS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

pub fn curve_csv(curve: &[EpochStats]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for e in curve {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.epoch, e.train_loss, e.val_loss, e.val_accuracy
        );
    }
    out
}

pub fn summary_json(summary: &CvSummary) -> Result<String> {
    let mut text = serde_json::to_string_pretty(summary).context("serializing CV summary")?;
    text.push('\n');
    Ok(text)
}

pub fn sweep_result_row(seg_len_s: f64, summary: Option<&CvSummary>) -> String {
    match summary {
        Some(s) => format!(
            "{seg_len_s},ok,{},{},{},{},{}",
            fmt_mean_std(&s.sensitivity),
            fmt_mean_std(&s.specificity),
            fmt_mean_std(&s.f1),
            fmt_mean_std(&s.precision),
            fmt_mean_std(&s.accuracy),
        ),
        None => format!(
            "{seg_len_s},skipped,undefined,undefined,undefined,undefined,undefined,\
             undefined,undefined,undefined,undefined,undefined"
        ),
    }
}

pub fn sweep_stats_row(seg_len_s: f64, stats: Option<&SegmentStats>) -> String {
    match stats {
        Some(s) => format!(
            "{seg_len_s},ok,{},{},{},{},{}",
            s.num_seizure_segments,
            fmt_opt(s.avg_seizure_len_s),
            fmt_opt(s.perc_type1),
            fmt_opt(s.perc_type2),
            fmt_opt(s.perc_type3),
        ),
        None => format!(
            "{seg_len_s},skipped,undefined,undefined,undefined,undefined,undefined"
        ),
    }
}

pub fn csv_with_header(header: &str, rows: &[String]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

pub fn attention_header(channels: &[String]) -> String {
    let mut out = String::from("record_id,start_s,label");
    for c in channels {
        out.push(',');
        out.push_str(c);
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_rows_have_stable_schema() {
        let report = MetricsReport::from_counts(91, 15, 85, 9);
        let row = round_row(1, Some(&report));
        assert!(row.starts_with("1,ok,91,15,85,9,0.91,0.85,"));
        let failed = round_row(2, None);
        assert_eq!(failed.split(',').count(), ROUNDS_HEADER.split(',').count());
        assert!(failed.contains("failed"));
    }

    #[test]
    fn undefined_metrics_are_spelled_out() {
        let report = MetricsReport::from_counts(0, 0, 5, 5);
        let row = round_row(0, Some(&report));
        assert!(row.contains("undefined"));
        assert!(!row.contains("NaN"));
    }

    #[test]
    fn floats_round_trip_through_the_csv() {
        let stats = EpochStats {
            epoch: 3,
            train_loss: 0.6931471805599453,
            val_loss: 0.1234567890123456,
            val_accuracy: 0.95,
        };
        let csv = curve_csv(&[stats]);
        let line = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), stats.train_loss);
        assert_eq!(fields[2].parse::<f64>().unwrap(), stats.val_loss);
    }
}
