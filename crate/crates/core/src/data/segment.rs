//! Record segmentation. Each record splits into non-overlapping windows of
//! the segment length from the beginning; when a remainder is left over it is
//! kept only if a seizure intersects it, in which case one final full-length
//! window is emitted flush with the record end (overlapping its predecessor).
//! A window is a seizure segment exactly when its intersection with any
//! annotated interval is positive.

use serde::{Deserialize, Serialize};

use super::{DataError, EdfRecord, SeizureAnnotation};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentLabel {
    Seizure,
    Nonseizure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub record_id: String,
    pub start_s: f64,
    pub length_s: f64,
    /// `[n_sp, n_ch]` raw physical values (microvolts), channel-major rows.
    pub data: Tensor<f64>,
    pub label: SegmentLabel,
    pub seizure_seconds: f64,
}

impl Segment {
    pub fn is_seizure(&self) -> bool {
        self.label == SegmentLabel::Seizure
    }
}

/// Splits one record into labeled windows over the requested channels.
pub fn segment_record(
    record: &EdfRecord,
    annotation: &SeizureAnnotation,
    seg_len_s: f64,
    channels: &[String],
) -> Result<Vec<Segment>, DataError> {
    let duration = record.duration_s();
    if seg_len_s <= 0.0 || seg_len_s > duration {
        return Err(DataError::SegmentTooLong {
            seg_len_s,
            duration_s: duration,
        });
    }
    if channels.is_empty() {
        return Err(DataError::Annotation("no channels selected".into()));
    }

    let mut selected = Vec::with_capacity(channels.len());
    for label in channels {
        let signal = record.signal(label).ok_or_else(|| DataError::MissingChannel {
            record: record.recording_id_or_patient(),
            label: label.clone(),
        })?;
        selected.push(signal);
    }
    let rate = record.sampling_rate(selected[0]);
    if selected
        .iter()
        .any(|s| record.sampling_rate(s) != rate)
    {
        return Err(DataError::MixedRates {
            record: record.recording_id_or_patient(),
        });
    }

    // All window arithmetic runs in whole samples; times derive from sample
    // indices so boundaries are exact.
    let window_samples_f = seg_len_s * rate;
    if window_samples_f.fract() != 0.0 {
        return Err(DataError::NonIntegralWindow {
            seg_len_s,
            rate_hz: rate,
        });
    }
    let window = window_samples_f as usize;
    let total: usize = record.n_records * selected[0].samples_per_record;
    let full_windows = total / window;
    let remainder = total % window;

    // Segments carry the annotation's record id: annotations key records by
    // file name, which the EDF header itself does not store.
    let record_id = annotation.record_id.clone();
    let mut segments = Vec::with_capacity(full_windows + 1);
    let mut emit = |start_sample: usize| {
        let start_s = start_sample as f64 / rate;
        let end_s = (start_sample + window) as f64 / rate;
        let seizure_seconds = annotation.overlap_seconds(start_s, end_s);
        let mut data = Vec::with_capacity(window * selected.len());
        for t in start_sample..start_sample + window {
            for signal in &selected {
                data.push(signal.samples[t]);
            }
        }
        segments.push(Segment {
            record_id: record_id.clone(),
            start_s,
            length_s: seg_len_s,
            data: Tensor::new(vec![window, selected.len()], data).expect("window shape"),
            label: if seizure_seconds > 0.0 {
                SegmentLabel::Seizure
            } else {
                SegmentLabel::Nonseizure
            },
            seizure_seconds,
        });
    };

    for k in 0..full_windows {
        emit(k * window);
    }
    if remainder > 0 {
        // Keep the remainder only when a seizure touches it, as one
        // full-length window flush with the end of the record.
        let rem_start_s = (full_windows * window) as f64 / rate;
        if annotation.overlap_seconds(rem_start_s, duration) > 0.0 {
            emit(total - window);
        }
    }
    Ok(segments)
}

impl EdfRecord {
    /// Identifier used in segments and error messages; CHB-MIT encodes the
    /// file name in the recording id, synthetic records set it directly.
    pub fn recording_id_or_patient(&self) -> String {
        if self.recording_id.is_empty() {
            self.patient_id.clone()
        } else {
            self.recording_id.clone()
        }
    }
}

/// Seizure-content statistics of a segment pool at one segment length:
/// how many seizure segments exist, their mean seizure duration, and the
/// share whose seizure content is at most a quarter (type 1), at least half
/// (type 2), and at least three quarters (type 3) of the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub seg_len_s: f64,
    pub num_seizure_segments: usize,
    pub avg_seizure_len_s: Option<f64>,
    pub perc_type1: Option<f64>,
    pub perc_type2: Option<f64>,
    pub perc_type3: Option<f64>,
}

pub fn segment_statistics(segments: &[Segment], seg_len_s: f64) -> SegmentStats {
    let seizure: Vec<&Segment> = segments.iter().filter(|s| s.is_seizure()).collect();
    let n = seizure.len();
    if n == 0 {
        return SegmentStats {
            seg_len_s,
            num_seizure_segments: 0,
            avg_seizure_len_s: None,
            perc_type1: None,
            perc_type2: None,
            perc_type3: None,
        };
    }
    let nf = n as f64;
    let total: f64 = seizure.iter().map(|s| s.seizure_seconds).sum();
    let share = |pred: &dyn Fn(&Segment) -> bool| {
        Some(100.0 * seizure.iter().filter(|s| pred(s)).count() as f64 / nf)
    };
    SegmentStats {
        seg_len_s,
        num_seizure_segments: n,
        avg_seizure_len_s: Some(total / nf),
        perc_type1: share(&|s| s.seizure_seconds <= seg_len_s / 4.0),
        perc_type2: share(&|s| s.seizure_seconds >= seg_len_s / 2.0),
        perc_type3: share(&|s| s.seizure_seconds >= 3.0 * seg_len_s / 4.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::edf::EdfSignal;

    pub(crate) fn synthetic_record(id: &str, duration_s: f64, rate: f64, n_ch: usize) -> EdfRecord {
        let n_records = duration_s.ceil() as usize;
        let record_duration_s = duration_s / n_records as f64;
        let spr = (rate * record_duration_s) as usize;
        let total = n_records * spr;
        EdfRecord {
            version: "0".into(),
            patient_id: id.into(),
            recording_id: id.into(),
            start_date: "01.01.00".into(),
            start_time: "00.00.00".into(),
            n_records,
            record_duration_s,
            signals: (0..n_ch)
                .map(|c| EdfSignal {
                    label: format!("CH{c}"),
                    transducer: String::new(),
                    physical_dimension: "uV".into(),
                    physical_min: -100.0,
                    physical_max: 100.0,
                    digital_min: -2048,
                    digital_max: 2047,
                    prefiltering: String::new(),
                    samples_per_record: spr,
                    samples: (0..total).map(|t| (t * (c + 1)) as f64 * 0.001).collect(),
                })
                .collect(),
        }
    }

    fn channels(n: usize) -> Vec<String> {
        (0..n).map(|c| format!("CH{c}")).collect()
    }

    #[test]
    fn overlap_window_appears_when_remainder_has_seizure() {
        // 100 s record at 23 s windows with a seizure at [95, 97]: four
        // non-overlapping windows plus the overlap window [77, 100).
        let record = synthetic_record("r", 100.0, 4.0, 2);
        let ann = SeizureAnnotation::new("r".into(), vec![(95.0, 97.0)]).unwrap();
        let segments = segment_record(&record, &ann, 23.0, &channels(2)).unwrap();
        assert_eq!(segments.len(), 5);
        let starts: Vec<f64> = segments.iter().map(|s| s.start_s).collect();
        assert_eq!(starts, vec![0.0, 23.0, 46.0, 69.0, 77.0]);
        for s in &segments[..4] {
            assert_eq!(s.label, SegmentLabel::Nonseizure);
            assert_eq!(s.seizure_seconds, 0.0);
        }
        let last = &segments[4];
        assert_eq!(last.label, SegmentLabel::Seizure);
        assert_eq!(last.seizure_seconds, 2.0);
        assert_eq!(last.data.shape(), &[92, 2]);
    }

    #[test]
    fn exact_division_has_no_overlap_window() {
        let record = synthetic_record("r", 92.0, 4.0, 1);
        let ann = SeizureAnnotation::new("r".into(), vec![(10.0, 12.0)]).unwrap();
        let segments = segment_record(&record, &ann, 23.0, &channels(1)).unwrap();
        assert_eq!(segments.len(), 4);
        assert!(segments.iter().all(|s| s.length_s == 23.0));
    }

    #[test]
    fn seizure_free_remainder_is_dropped() {
        let record = synthetic_record("r", 100.0, 4.0, 1);
        let ann = SeizureAnnotation::new("r".into(), vec![(30.0, 40.0)]).unwrap();
        let segments = segment_record(&record, &ann, 23.0, &channels(1)).unwrap();
        assert_eq!(segments.len(), 4);
        // Only window [23,46) intersects the [30,40) seizure.
        assert_eq!(segments.iter().filter(|s| s.is_seizure()).count(), 1);
    }

    #[test]
    fn rejects_bad_requests() {
        let record = synthetic_record("r", 10.0, 4.0, 2);
        let ann = SeizureAnnotation::empty("r".into());
        assert!(matches!(
            segment_record(&record, &ann, 11.0, &channels(2)),
            Err(DataError::SegmentTooLong { .. })
        ));
        assert!(matches!(
            segment_record(&record, &ann, 2.0, &vec!["NOPE".to_string()]),
            Err(DataError::MissingChannel { .. })
        ));
    }

    #[test]
    fn label_matches_positive_seizure_content() {
        let record = synthetic_record("r", 50.0, 4.0, 1);
        // Seizure exactly on a window boundary contributes zero seconds to
        // the right-hand window.
        let ann = SeizureAnnotation::new("r".into(), vec![(5.0, 10.0)]).unwrap();
        let segments = segment_record(&record, &ann, 10.0, &channels(1)).unwrap();
        assert_eq!(segments.len(), 5);
        assert!(segments[0].is_seizure());
        assert_eq!(segments[0].seizure_seconds, 5.0);
        assert!(!segments[1].is_seizure());
        for s in &segments {
            assert_eq!(s.is_seizure(), s.seizure_seconds > 0.0);
        }
    }

    fn stats_fixture(durations: &[f64], seg_len: f64) -> Vec<Segment> {
        durations
            .iter()
            .map(|&d| Segment {
                record_id: "r".into(),
                start_s: 0.0,
                length_s: seg_len,
                data: Tensor::zeros(vec![4, 1]),
                label: if d > 0.0 {
                    SegmentLabel::Seizure
                } else {
                    SegmentLabel::Nonseizure
                },
                seizure_seconds: d,
            })
            .collect()
    }

    #[test]
    fn statistics_trivial_full_window() {
        let segments = stats_fixture(&[20.0], 20.0);
        let stats = segment_statistics(&segments, 20.0);
        assert_eq!(stats.num_seizure_segments, 1);
        assert_eq!(stats.avg_seizure_len_s, Some(20.0));
        assert_eq!(stats.perc_type1, Some(0.0));
        assert_eq!(stats.perc_type2, Some(100.0));
        assert_eq!(stats.perc_type3, Some(100.0));
    }

    #[test]
    fn statistics_match_hand_count() {
        // Eight seizure segments of known content at L = 20 s:
        // type 1 (<= 5 s): 2, 5 -> 2 of 8 = 25 %
        // type 2 (>= 10 s): 10, 12, 16, 18, 20 -> 5 of 8 = 62.5 %
        // type 3 (>= 15 s): 16, 18, 20 -> 3 of 8 = 37.5 %
        let durations = [2.0, 5.0, 7.0, 10.0, 12.0, 16.0, 18.0, 20.0];
        let mut segments = stats_fixture(&durations, 20.0);
        segments.extend(stats_fixture(&[0.0, 0.0], 20.0)); // nonseizure ignored
        let stats = segment_statistics(&segments, 20.0);
        assert_eq!(stats.num_seizure_segments, 8);
        assert_eq!(stats.avg_seizure_len_s, Some(11.25));
        assert_eq!(stats.perc_type1, Some(25.0));
        assert_eq!(stats.perc_type2, Some(62.5));
        assert_eq!(stats.perc_type3, Some(37.5));
    }

    #[test]
    fn statistics_with_no_seizures_are_undefined() {
        let stats = segment_statistics(&stats_fixture(&[0.0, 0.0], 10.0), 10.0);
        assert_eq!(stats.num_seizure_segments, 0);
        assert_eq!(stats.avg_seizure_len_s, None);
        assert_eq!(stats.perc_type1, None);
    }
}
