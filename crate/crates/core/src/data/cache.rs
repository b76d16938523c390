//! On-disk segment cache: a JSON manifest plus one raw little-endian f32
//! block file per (record, segment length, channel list) key, so repeated
//! experiments skip EDF parsing and re-segmentation.

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{DataError, Segment, SegmentLabel};
use crate::tensor::Tensor;

const MANIFEST: &str = "manifest.json";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    entries: Vec<Entry>,
}

#[derive(Clone, Serialize, Deserialize)]
struct Entry {
    record_id: String,
    seg_len_s: f64,
    channels: Vec<String>,
    channels_hash: String,
    file: String,
    n_sp: usize,
    n_ch: usize,
    segments: Vec<SegmentMeta>,
}

#[derive(Clone, Serialize, Deserialize)]
struct SegmentMeta {
    start_s: f64,
    label: SegmentLabel,
    seizure_seconds: f64,
}

pub struct SegmentCache {
    dir: PathBuf,
    manifest: Manifest,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn channels_hash(channels: &[String]) -> String {
    format!("{:016x}", fnv1a64(channels.join("\x1f").as_bytes()))
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

impl SegmentCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, DataError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let manifest_path = dir.join(MANIFEST);
        let manifest = if manifest_path.exists() {
            let text = fs::read_to_string(&manifest_path)?;
            let manifest: Manifest =
                serde_json::from_str(&text).map_err(|e| DataError::Cache(e.to_string()))?;
            if manifest.version != VERSION {
                return Err(DataError::Cache(format!(
                    "unsupported cache version {}",
                    manifest.version
                )));
            }
            manifest
        } else {
            Manifest {
                version: VERSION,
                entries: Vec::new(),
            }
        };
        Ok(Self { dir, manifest })
    }

    /// Stores segments (grouped by their source record) under the key
    /// `(record, seg_len, channel list)`, replacing stale entries.
    pub fn store(
        &mut self,
        seg_len_s: f64,
        channels: &[String],
        segments: &[Segment],
    ) -> Result<(), DataError> {
        let hash = channels_hash(channels);
        let mut order: Vec<&str> = Vec::new();
        for s in segments {
            if !order.contains(&s.record_id.as_str()) {
                order.push(&s.record_id);
            }
        }
        for record_id in order {
            let group: Vec<&Segment> = segments
                .iter()
                .filter(|s| s.record_id == record_id)
                .collect();
            let (n_sp, n_ch) = (group[0].data.shape()[0], group[0].data.shape()[1]);
            let file = format!(
                "{}_{}_{}ms.f32",
                sanitize(record_id),
                hash,
                (seg_len_s * 1000.0).round() as u64
            );
            let mut bytes = Vec::with_capacity(group.len() * n_sp * n_ch * 4);
            for s in &group {
                for &v in s.data.data() {
                    bytes.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
            fs::write(self.dir.join(&file), bytes)?;

            self.manifest.entries.retain(|e| {
                !(e.record_id == record_id
                    && e.seg_len_s == seg_len_s
                    && e.channels_hash == hash)
            });
            self.manifest.entries.push(Entry {
                record_id: record_id.to_string(),
                seg_len_s,
                channels: channels.to_vec(),
                channels_hash: hash.clone(),
                file,
                n_sp,
                n_ch,
                segments: group
                    .iter()
                    .map(|s| SegmentMeta {
                        start_s: s.start_s,
                        label: s.label,
                        seizure_seconds: s.seizure_seconds,
                    })
                    .collect(),
            });
        }
        let json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| DataError::Cache(e.to_string()))?;
        fs::write(self.dir.join(MANIFEST), json)?;
        Ok(())
    }

    /// Loads every cached segment for this segment length and channel list.
    pub fn load_all(
        &self,
        seg_len_s: f64,
        channels: &[String],
    ) -> Result<Vec<Segment>, DataError> {
        let hash = channels_hash(channels);
        let mut out = Vec::new();
        for entry in self
            .manifest
            .entries
            .iter()
            .filter(|e| e.seg_len_s == seg_len_s && e.channels_hash == hash)
        {
            out.extend(self.load_entry(entry)?);
        }
        Ok(out)
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.entries.is_empty()
    }

    fn load_entry(&self, entry: &Entry) -> Result<Vec<Segment>, DataError> {
        let bytes = fs::read(self.dir.join(&entry.file))?;
        let per_segment = entry.n_sp * entry.n_ch;
        let expected = entry.segments.len() * per_segment * 4;
        if bytes.len() != expected {
            return Err(DataError::Cache(format!(
                "block file {} has {} bytes, expected {expected}",
                entry.file,
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Ok(entry
            .segments
            .iter()
            .enumerate()
            .map(|(i, meta)| Segment {
                record_id: entry.record_id.clone(),
                start_s: meta.start_s,
                length_s: entry.seg_len_s,
                data: Tensor::new(
                    vec![entry.n_sp, entry.n_ch],
                    values[i * per_segment..(i + 1) * per_segment].to_vec(),
                )
                .expect("manifest shape"),
                label: meta.label,
                seizure_seconds: meta.seizure_seconds,
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_records, segment_record, SyntheticConfig};

    #[test]
    fn cache_roundtrip_preserves_metadata_and_f32_samples() {
        let cfg = SyntheticConfig {
            n_records: 2,
            record_duration_s: 4.0,
            sample_rate_hz: 16.0,
            seizure_start_s: 1.0,
            seizure_end_s: 3.0,
            ..SyntheticConfig::default()
        };
        let channels: Vec<String> = (0..3).map(|c| format!("SYN{c}")).collect();
        let mut segments = Vec::new();
        for (record, ann) in generate_records(&cfg, 3) {
            segments.extend(segment_record(&record, &ann, 1.0, &channels).unwrap());
        }

        let dir = tempfile::tempdir().unwrap();
        let mut cache = SegmentCache::open(dir.path()).unwrap();
        cache.store(1.0, &channels, &segments).unwrap();

        // Reopen from disk and compare.
        let cache = SegmentCache::open(dir.path()).unwrap();
        let loaded = cache.load_all(1.0, &channels).unwrap();
        assert_eq!(loaded.len(), segments.len());
        for (a, b) in segments.iter().zip(&loaded) {
            assert_eq!(a.record_id, b.record_id);
            assert_eq!(a.start_s, b.start_s);
            assert_eq!(a.label, b.label);
            assert_eq!(a.seizure_seconds, b.seizure_seconds);
            assert_eq!(a.data.shape(), b.data.shape());
            for (&x, &y) in a.data.data().iter().zip(b.data.data()) {
                assert_eq!(x as f32, y as f32); // stored at f32 precision
            }
        }

        // A different channel list or length is a different key.
        assert!(cache.load_all(2.0, &channels).unwrap().is_empty());
        let other = vec!["A".to_string()];
        assert!(cache.load_all(1.0, &other).unwrap().is_empty());
    }
}
