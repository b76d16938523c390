//! Seizure annotation ingestion. The canonical format is a CSV of
//! `record_id,start_s,end_s` rows; a reader for the CHB-MIT `*-summary.txt`
//! convention is provided as an importer.

use std::collections::BTreeMap;

use super::DataError;

#[derive(Clone, Debug, PartialEq)]
pub struct SeizureAnnotation {
    pub record_id: String,
    /// Seconds from record start, sorted and non-overlapping.
    pub intervals: Vec<(f64, f64)>,
}

impl SeizureAnnotation {
    pub fn new(record_id: String, mut intervals: Vec<(f64, f64)>) -> Result<Self, DataError> {
        for &(start, end) in &intervals {
            if !(start >= 0.0 && end > start) {
                return Err(DataError::Annotation(format!(
                    "record {record_id}: interval ({start}, {end}) must satisfy 0 <= start < end"
                )));
            }
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in intervals.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(DataError::Annotation(format!(
                    "record {record_id}: intervals ({}, {}) and ({}, {}) overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        Ok(Self {
            record_id,
            intervals,
        })
    }

    pub fn empty(record_id: String) -> Self {
        Self {
            record_id,
            intervals: Vec::new(),
        }
    }

    /// Total intersection length between `[start, end)` and the annotated
    /// intervals.
    pub fn overlap_seconds(&self, start: f64, end: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(s, e)| (e.min(end) - s.max(start)).max(0.0))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnnotationFormat {
    Csv,
    ChbSummary,
}

pub fn parse_annotations(
    text: &str,
    format: AnnotationFormat,
) -> Result<Vec<SeizureAnnotation>, DataError> {
    match format {
        AnnotationFormat::Csv => parse_csv(text),
        AnnotationFormat::ChbSummary => parse_chb_summary(text),
    }
}

fn parse_csv(text: &str) -> Result<Vec<SeizureAnnotation>, DataError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "record_id,start_s,end_s" => {}
        Some((_, header)) => {
            return Err(DataError::Annotation(format!(
                "expected header 'record_id,start_s,end_s', got {header:?}"
            )))
        }
        None => return Err(DataError::Annotation("empty annotation file".into())),
    }

    // Group rows by record id, keeping first-appearance order.
    let mut order = Vec::new();
    let mut by_record: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(DataError::Annotation(format!(
                "line {}: expected 3 comma-separated fields, got {line:?}",
                lineno + 1
            )));
        }
        let start: f64 = parts[1].parse().map_err(|_| {
            DataError::Annotation(format!("line {}: bad start {:?}", lineno + 1, parts[1]))
        })?;
        let end: f64 = parts[2].parse().map_err(|_| {
            DataError::Annotation(format!("line {}: bad end {:?}", lineno + 1, parts[2]))
        })?;
        let record = parts[0].to_string();
        if !by_record.contains_key(&record) {
            order.push(record.clone());
        }
        by_record.entry(record).or_default().push((start, end));
    }

    order
        .into_iter()
        .map(|record| {
            let intervals = by_record.remove(&record).unwrap_or_default();
            SeizureAnnotation::new(record, intervals)
        })
        .collect()
}

fn seconds_value(line: &str, lineno: usize) -> Result<f64, DataError> {
    let after_colon = line.split(':').nth(1).ok_or_else(|| {
        DataError::Annotation(format!("line {}: expected 'field: value'", lineno + 1))
    })?;
    after_colon
        .trim()
        .trim_end_matches("seconds")
        .trim()
        .parse()
        .map_err(|_| {
            DataError::Annotation(format!(
                "line {}: cannot read seconds from {line:?}",
                lineno + 1
            ))
        })
}

/// Extracts "Seizure Start Time"/"Seizure End Time" pairs grouped under each
/// "File Name:" line. Numbered forms ("Seizure 1 Start Time") are accepted.
fn parse_chb_summary(text: &str) -> Result<Vec<SeizureAnnotation>, DataError> {
    let mut annotations: Vec<SeizureAnnotation> = Vec::new();
    let mut current: Option<(String, Vec<(f64, f64)>, Option<f64>)> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix("File Name:") {
            if let Some((record, intervals, pending)) = current.take() {
                if pending.is_some() {
                    return Err(DataError::Annotation(format!(
                        "record {record}: seizure start without an end time"
                    )));
                }
                annotations.push(SeizureAnnotation::new(record, intervals)?);
            }
            current = Some((name.trim().to_string(), Vec::new(), None));
        } else if line.starts_with("Seizure") && line.contains("Start Time:") {
            let value = seconds_value(line, lineno)?;
            match &mut current {
                Some((_, _, pending @ None)) => *pending = Some(value),
                Some((record, _, Some(_))) => {
                    return Err(DataError::Annotation(format!(
                        "record {record}: two seizure starts in a row"
                    )))
                }
                None => {
                    return Err(DataError::Annotation(format!(
                        "line {}: seizure time before any 'File Name:'",
                        lineno + 1
                    )))
                }
            }
        } else if line.starts_with("Seizure") && line.contains("End Time:") {
            let value = seconds_value(line, lineno)?;
            match &mut current {
                Some((_, intervals, pending @ Some(_))) => {
                    intervals.push((pending.take().unwrap(), value));
                }
                Some((record, _, None)) => {
                    return Err(DataError::Annotation(format!(
                        "record {record}: seizure end without a start time"
                    )))
                }
                None => {
                    return Err(DataError::Annotation(format!(
                        "line {}: seizure time before any 'File Name:'",
                        lineno + 1
                    )))
                }
            }
        }
    }
    if let Some((record, intervals, pending)) = current.take() {
        if pending.is_some() {
            return Err(DataError::Annotation(format!(
                "record {record}: seizure start without an end time"
            )));
        }
        annotations.push(SeizureAnnotation::new(record, intervals)?);
    }
    Ok(annotations)
}
