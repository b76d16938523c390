//! Class balancing and stratified splitting. All seizure segments are kept;
//! an equal number of nonseizure segments is drawn uniformly without
//! replacement; each class then splits 70:15:15 with `round(0.15 * S)`
//! (ties to even) samples per class in val and test.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Segment};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct LabeledDataset {
    pub train: Vec<Segment>,
    pub val: Vec<Segment>,
    pub test: Vec<Segment>,
    pub seed: u64,
}

impl LabeledDataset {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

pub fn assemble_dataset(segments: Vec<Segment>, seed: u64) -> Result<LabeledDataset, DataError> {
    let (seizure, nonseizure): (Vec<Segment>, Vec<Segment>) =
        segments.into_iter().partition(Segment::is_seizure);
    let s = seizure.len();
    if s == 0 {
        return Err(DataError::InsufficientPool {
            needed: 1,
            available: 0,
        });
    }
    if nonseizure.len() < s {
        return Err(DataError::InsufficientPool {
            needed: s,
            available: nonseizure.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nonseizure = nonseizure;
    nonseizure.shuffle(&mut rng);
    nonseizure.truncate(s);

    let n_test = (0.15 * s as f64).round_ties_even() as usize;
    let n_val = n_test;
    if n_test + n_val >= s {
        return Err(DataError::InsufficientPool {
            needed: n_test + n_val + 1,
            available: s,
        });
    }

    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for mut class in [seizure, nonseizure] {
        class.shuffle(&mut rng);
        let rest = class.split_off(n_test);
        test.extend(class);
        let mut rest = rest;
        let train_part = rest.split_off(n_val);
        val.extend(rest);
        train.extend(train_part);
    }

    Ok(LabeledDataset {
        train,
        val,
        test,
        seed,
    })
}

/// Thins every segment's time axis to every k-th sample, in place. Label,
/// provenance, and timing metadata stay untouched; this is strictly a
/// model-input reduction.
pub fn decimate_segments(segments: &mut [Segment], factor: usize) -> Result<(), DataError> {
    assert!(factor >= 1, "decimation factor must be at least 1");
    if factor == 1 {
        return Ok(());
    }
    for segment in segments {
        let shape = segment.data.shape();
        let (n_sp, n_ch) = (shape[0], shape[1]);
        let kept: Vec<usize> = (0..n_sp).step_by(factor).collect();
        let mut data = Vec::with_capacity(kept.len() * n_ch);
        for &t in &kept {
            for c in 0..n_ch {
                data.push(segment.data.at2(t, c));
            }
        }
        segment.data = Tensor::new(vec![kept.len(), n_ch], data)?;
    }
    Ok(())
}

/// Stacks segments into a `[n, n_sp, n_ch]` batch plus 0/1 labels
/// (1 = seizure). `decimate` keeps every k-th time step; 1 keeps everything.
pub fn segments_to_batch<T: Scalar>(
    segments: &[&Segment],
    decimate: usize,
) -> Result<(Tensor<T>, Vec<usize>), DataError> {
    assert!(decimate >= 1, "decimation factor must be at least 1");
    assert!(!segments.is_empty(), "empty batch");
    let shape = segments[0].data.shape().to_vec();
    let (n_sp, n_ch) = (shape[0], shape[1]);
    let kept: Vec<usize> = (0..n_sp).step_by(decimate).collect();

    let mut data = Vec::with_capacity(segments.len() * kept.len() * n_ch);
    let mut labels = Vec::with_capacity(segments.len());
    for segment in segments {
        if segment.data.shape() != shape.as_slice() {
            return Err(DataError::Annotation(format!(
                "segment {} has shape {:?}, batch expects {:?}",
                segment.record_id,
                segment.data.shape(),
                shape
            )));
        }
        for &t in &kept {
            for c in 0..n_ch {
                data.push(T::from_f64(segment.data.at2(t, c)));
            }
        }
        labels.push(segment.is_seizure() as usize);
    }
    let batch = Tensor::new(vec![segments.len(), kept.len(), n_ch], data)?;
    Ok((batch, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SegmentLabel;

    fn pool(n_seizure: usize, n_nonseizure: usize) -> Vec<Segment> {
        let make = |i: usize, seizure: bool| Segment {
            record_id: format!("r{i}"),
            start_s: i as f64,
            length_s: 1.0,
            data: Tensor::filled(vec![4, 2], i as f64),
            label: if seizure {
                SegmentLabel::Seizure
            } else {
                SegmentLabel::Nonseizure
            },
            seizure_seconds: if seizure { 0.5 } else { 0.0 },
        };
        let mut v: Vec<Segment> = (0..n_seizure).map(|i| make(i, true)).collect();
        v.extend((0..n_nonseizure).map(|i| make(n_seizure + i, false)));
        v
    }

    fn class_counts(split: &[Segment]) -> (usize, usize) {
        let seizure = split.iter().filter(|s| s.is_seizure()).count();
        (seizure, split.len() - seizure)
    }

    #[test]
    fn full_scale_split_produces_published_counts() {
        // 665 seizure segments: 100 test and 100 val per class, 465 train.
        let ds = assemble_dataset(pool(665, 1200), 7).unwrap();
        assert_eq!(ds.counts(), (930, 200, 200));
        assert_eq!(class_counts(&ds.test), (100, 100));
        assert_eq!(class_counts(&ds.val), (100, 100));
        assert_eq!(class_counts(&ds.train), (465, 465));
    }

    #[test]
    fn small_pool_rounding() {
        // S = 20: round(3.0) = 3 per class in val and test, 14 in train.
        let ds = assemble_dataset(pool(20, 50), 3).unwrap();
        assert_eq!(class_counts(&ds.test), (3, 3));
        assert_eq!(class_counts(&ds.val), (3, 3));
        assert_eq!(class_counts(&ds.train), (14, 14));
    }

    #[test]
    fn splits_are_deterministic_and_disjoint() {
        let a = assemble_dataset(pool(30, 80), 11).unwrap();
        let b = assemble_dataset(pool(30, 80), 11).unwrap();
        let ids = |v: &[Segment]| -> Vec<String> {
            v.iter().map(|s| s.record_id.clone()).collect()
        };
        assert_eq!(ids(&a.train), ids(&b.train));
        assert_eq!(ids(&a.val), ids(&b.val));
        assert_eq!(ids(&a.test), ids(&b.test));

        let c = assemble_dataset(pool(30, 80), 12).unwrap();
        assert_ne!(ids(&a.train), ids(&c.train));

        // Disjoint and exhaustive over the balanced pool.
        let mut all = ids(&a.train);
        all.extend(ids(&a.val));
        all.extend(ids(&a.test));
        let total = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), total);
        assert_eq!(total, 60);
    }

    #[test]
    fn insufficient_nonseizure_pool_is_an_error() {
        assert!(matches!(
            assemble_dataset(pool(30, 10), 0),
            Err(DataError::InsufficientPool { needed: 30, available: 10 })
        ));
    }

    #[test]
    fn batching_stacks_and_decimates() {
        let segments = pool(2, 2);
        let refs: Vec<&Segment> = segments.iter().collect();
        let (batch, labels) = segments_to_batch::<f64>(&refs, 1).unwrap();
        assert_eq!(batch.shape(), &[4, 4, 2]);
        assert_eq!(labels, vec![1, 1, 0, 0]);

        let (batch, _) = segments_to_batch::<f64>(&refs, 2).unwrap();
        assert_eq!(batch.shape(), &[4, 2, 2]);

        let (batch, _) = segments_to_batch::<f64>(&refs, 3).unwrap();
        assert_eq!(batch.shape(), &[4, 2, 2]); // steps 0 and 3
    }
}
