//! EEG data ingestion: EDF parsing, seizure annotations, segmentation,
//! balanced stratified splits, the segment cache, and the synthetic corpus.

mod annotations;
mod cache;
mod dataset;
pub mod edf;
mod segment;
mod synthetic;

pub use annotations::{parse_annotations, AnnotationFormat, SeizureAnnotation};
pub use cache::SegmentCache;
pub use dataset::{assemble_dataset, segments_to_batch, LabeledDataset};
pub use edf::{parse_edf, write_edf, EdfFixture, EdfFixtureSignal, EdfRecord, EdfSignal};
pub use segment::{segment_record, segment_statistics, Segment, SegmentLabel, SegmentStats};
pub use synthetic::{generate_records, OscillationSpec, SyntheticConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("record {record}: channel {label:?} not present")]
    MissingChannel { record: String, label: String },
    #[error("annotation: {0}")]
    Annotation(String),
    #[error("segment length {seg_len_s}s does not fit in record duration {duration_s}s")]
    SegmentTooLong { seg_len_s: f64, duration_s: f64 },
    #[error("segment length {seg_len_s}s at {rate_hz}Hz is not a whole number of samples")]
    NonIntegralWindow { seg_len_s: f64, rate_hz: f64 },
    #[error("record {record}: selected channels have mixed sampling rates")]
    MixedRates { record: String },
    #[error("nonseizure pool of {available} cannot balance {needed} seizure segments")]
    InsufficientPool { needed: usize, available: usize },
    #[error("segment cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Shape(#[from] crate::tensor::ShapeError),
}
