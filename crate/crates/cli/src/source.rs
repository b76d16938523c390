//! Turns a `DataConfig` into a segment pool: EDF directories are parsed and
//! segmented, the synthetic corpus is generated, caches are read back.

use std::path::Path;

use anyhow::{bail, Context, Result};

use adindrnn_core::data::{
    generate_records, parse_annotations, parse_edf, segment_record, AnnotationFormat, EdfRecord,
    Segment, SegmentCache, SeizureAnnotation, SyntheticConfig,
};
use adindrnn_core::derive_seed;

use crate::config::{DataConfig, ExperimentConfig};

/// Stream index for synthetic corpus generation.
const SYNTHETIC_STREAM: u64 = 0x0da7a;

pub struct SegmentPool {
    pub segments: Vec<Segment>,
    pub channels: Vec<String>,
}

/// Loads records (not yet segmented) for sources that have them; the cache
/// source has none.
pub fn load_records(
    config: &ExperimentConfig,
) -> Result<Option<Vec<(EdfRecord, SeizureAnnotation)>>> {
    match &config.data {
        DataConfig::Edf {
            data_root,
            annotations,
            exclude,
        } => Ok(Some(load_edf_records(
            data_root,
            annotations,
            exclude,
        )?)),
        DataConfig::Synthetic { synthetic } => Ok(Some(synthetic_records(
            synthetic,
            derive_seed(config.seed, SYNTHETIC_STREAM),
        ))),
        DataConfig::Cache { .. } => Ok(None),
    }
}

/// Builds the segment pool at one segment length.
pub fn load_segments(config: &ExperimentConfig, seg_len_s: f64) -> Result<SegmentPool> {
    match &config.data {
        DataConfig::Cache { dir } => {
            let cache = SegmentCache::open(dir.clone()).context("opening segment cache")?;
            if cache.is_empty() {
                bail!("segment cache {} is empty", dir.display());
            }
            if config.channels.is_empty() {
                bail!(
                    "the cache data source needs an explicit `channels` list \
                     (it keys entries by channel list)"
                );
            }
            let segments = cache
                .load_all(seg_len_s, &config.channels)
                .context("reading segment cache")?;
            if segments.is_empty() {
                bail!(
                    "cache has no entries for seg_len_s = {seg_len_s} and the \
                     configured channel list"
                );
            }
            Ok(SegmentPool {
                segments,
                channels: config.channels.clone(),
            })
        }
        _ => {
            let records = load_records(config)?.expect("non-cache sources have records");
            segment_pool(&records, seg_len_s, &config.channels)
        }
    }
}

pub fn segment_pool(
    records: &[(EdfRecord, SeizureAnnotation)],
    seg_len_s: f64,
    configured_channels: &[String],
) -> Result<SegmentPool> {
    if records.is_empty() {
        bail!("no records to segment");
    }
    let channels = if configured_channels.is_empty() {
        common_channels(records.iter().map(|(r, _)| r))
    } else {
        configured_channels.to_vec()
    };
    if channels.is_empty() {
        bail!("no channel is present in every record; configure `channels` explicitly");
    }

    let mut segments = Vec::new();
    for (record, annotation) in records {
        let mut windows = segment_record(record, annotation, seg_len_s, &channels)
            .with_context(|| format!("segmenting record {}", annotation.record_id))?;
        segments.append(&mut windows);
    }
    Ok(SegmentPool { segments, channels })
}

/// Intersection of channel labels across records, in first-record order.
/// Unnamed ("-" or empty) signals never qualify.
fn common_channels<'a>(records: impl Iterator<Item = &'a EdfRecord>) -> Vec<String> {
    let mut iter = records;
    let first = match iter.next() {
        Some(r) => r,
        None => return Vec::new(),
    };
    let mut common: Vec<String> = first
        .signals
        .iter()
        .map(|s| s.label.clone())
        .filter(|l| !l.is_empty() && l != "-")
        .collect();
    for record in iter {
        common.retain(|label| record.signal(label).is_some());
    }
    common
}

fn synthetic_records(cfg: &SyntheticConfig, seed: u64) -> Vec<(EdfRecord, SeizureAnnotation)> {
    generate_records(cfg, seed)
}

fn load_edf_records(
    data_root: &Path,
    annotations_path: &Path,
    exclude: &[String],
) -> Result<Vec<(EdfRecord, SeizureAnnotation)>> {
    let text = std::fs::read_to_string(annotations_path)
        .with_context(|| format!("reading annotations {}", annotations_path.display()))?;
    let format = match annotations_path.extension().and_then(|e| e.to_str()) {
        Some("csv") => AnnotationFormat::Csv,
        _ => AnnotationFormat::ChbSummary,
    };
    let annotations = parse_annotations(&text, format).context("parsing annotations")?;

    let mut paths: Vec<_> = std::fs::read_dir(data_root)
        .with_context(|| format!("listing {}", data_root.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()).is_some_and(|e| {
                e.eq_ignore_ascii_case("edf")
            })
        })
        .collect();
    paths.sort();

    let mut records = Vec::new();
    for path in paths {
        let file_name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        if exclude.iter().any(|e| e.eq_ignore_ascii_case(&file_name)) {
            continue;
        }
        let bytes =
            std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        let record =
            parse_edf(&bytes).with_context(|| format!("parsing {}", path.display()))?;
        // Records without an annotation entry count as seizure-free.
        let annotation = annotations
            .iter()
            .find(|a| a.record_id.eq_ignore_ascii_case(&file_name))
            .cloned()
            .unwrap_or_else(|| SeizureAnnotation::empty(file_name.clone()));
        records.push((record, annotation));
    }
    if records.is_empty() {
        bail!("no .edf files found under {}", data_root.display());
    }
    Ok(records)
}
