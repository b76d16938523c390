//! EDF (European Data Format) reader and a writer used to build test
//! fixtures. The format is a 256-byte ASCII fixed header, 256 bytes of ASCII
//! header per signal, then data records of 16-bit little-endian
//! two's-complement samples. Samples convert to physical units through the
//! per-signal linear calibration
//! `physical = phys_min + (digital - dig_min) * (phys_max - phys_min) / (dig_max - dig_min)`.

use std::str::FromStr;

use super::DataError;

const FIXED_HEADER: usize = 256;
const PER_SIGNAL_HEADER: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct EdfSignal {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    /// Calibrated samples in physical units, all records concatenated.
    pub samples: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdfRecord {
    pub version: String,
    pub patient_id: String,
    pub recording_id: String,
    pub start_date: String,
    pub start_time: String,
    pub n_records: usize,
    pub record_duration_s: f64,
    pub signals: Vec<EdfSignal>,
}

impl EdfRecord {
    pub fn duration_s(&self) -> f64 {
        self.n_records as f64 * self.record_duration_s
    }

    pub fn signal(&self, label: &str) -> Option<&EdfSignal> {
        self.signals.iter().find(|s| s.label == label)
    }

    /// Sampling rate of one signal in Hz.
    pub fn sampling_rate(&self, signal: &EdfSignal) -> f64 {
        signal.samples_per_record as f64 / self.record_duration_s
    }
}

fn ascii_field<'a>(bytes: &'a [u8], offset: usize, len: usize) -> Result<&'a str, DataError> {
    let end = offset + len;
    if bytes.len() < end {
        return Err(DataError::Parse {
            offset,
            message: format!("file truncated inside header field ({} bytes total)", bytes.len()),
        });
    }
    std::str::from_utf8(&bytes[offset..end])
        .map(str::trim)
        .map_err(|_| DataError::Parse {
            offset,
            message: "header field is not ASCII".into(),
        })
}

fn numeric_field<T: FromStr>(
    bytes: &[u8],
    offset: usize,
    len: usize,
    what: &str,
) -> Result<T, DataError> {
    let text = ascii_field(bytes, offset, len)?;
    text.parse().map_err(|_| DataError::Parse {
        offset,
        message: format!("{what} is not numeric: {text:?}"),
    })
}

pub fn parse_edf(bytes: &[u8]) -> Result<EdfRecord, DataError> {
    let version = ascii_field(bytes, 0, 8)?.to_string();
    let patient_id = ascii_field(bytes, 8, 80)?.to_string();
    let recording_id = ascii_field(bytes, 88, 80)?.to_string();
    let start_date = ascii_field(bytes, 168, 8)?.to_string();
    let start_time = ascii_field(bytes, 176, 8)?.to_string();
    // Record count lives at its fixed offset 236.
    let n_records: usize = numeric_field(bytes, 236, 8, "record count")?;
    let record_duration_s: f64 = numeric_field(bytes, 244, 8, "record duration")?;
    let n_signals: usize = numeric_field(bytes, 252, 4, "signal count")?;

    let header_len = FIXED_HEADER + n_signals * PER_SIGNAL_HEADER;
    if bytes.len() < header_len {
        return Err(DataError::Parse {
            offset: bytes.len(),
            message: format!(
                "file truncated: {} signal headers need {header_len} bytes, got {}",
                n_signals,
                bytes.len()
            ),
        });
    }

    // Per-signal header fields are stored field-major: all labels, then all
    // transducers, and so on.
    let field = |field_offset: usize, width: usize, idx: usize| -> usize {
        FIXED_HEADER + field_offset * n_signals + width * idx
    };
    let mut signals = Vec::with_capacity(n_signals);
    for i in 0..n_signals {
        let label = ascii_field(bytes, field(0, 16, i), 16)?.to_string();
        let transducer = ascii_field(bytes, field(16, 80, i), 80)?.to_string();
        let physical_dimension = ascii_field(bytes, field(96, 8, i), 8)?.to_string();
        let physical_min: f64 = numeric_field(bytes, field(104, 8, i), 8, "physical minimum")?;
        let physical_max: f64 = numeric_field(bytes, field(112, 8, i), 8, "physical maximum")?;
        let digital_min: i32 = numeric_field(bytes, field(120, 8, i), 8, "digital minimum")?;
        let digital_max: i32 = numeric_field(bytes, field(128, 8, i), 8, "digital maximum")?;
        let prefiltering = ascii_field(bytes, field(136, 80, i), 80)?.to_string();
        let samples_per_record: usize =
            numeric_field(bytes, field(216, 8, i), 8, "samples per record")?;
        if digital_max == digital_min {
            return Err(DataError::Parse {
                offset: field(128, 8, i),
                message: format!("signal {label:?} has digital_max == digital_min"),
            });
        }
        signals.push(EdfSignal {
            label,
            transducer,
            physical_dimension,
            physical_min,
            physical_max,
            digital_min,
            digital_max,
            prefiltering,
            samples_per_record,
            samples: Vec::new(),
        });
    }

    let frame_samples: usize = signals.iter().map(|s| s.samples_per_record).sum();
    let expected = header_len + n_records * frame_samples * 2;
    if bytes.len() < expected {
        return Err(DataError::Parse {
            offset: bytes.len(),
            message: format!(
                "file truncated: {n_records} records of {frame_samples} samples need \
                 {expected} bytes, got {}",
                bytes.len()
            ),
        });
    }

    for signal in &mut signals {
        signal.samples.reserve(n_records * signal.samples_per_record);
    }
    let mut offset = header_len;
    for _ in 0..n_records {
        for signal in &mut signals {
            for _ in 0..signal.samples_per_record {
                let digital = i16::from_le_bytes([bytes[offset], bytes[offset + 1]]);
                signal.samples.push(calibrate(
                    digital,
                    signal.physical_min,
                    signal.physical_max,
                    signal.digital_min,
                    signal.digital_max,
                ));
                offset += 2;
            }
        }
    }

    Ok(EdfRecord {
        version,
        patient_id,
        recording_id,
        start_date,
        start_time,
        n_records,
        record_duration_s,
        signals,
    })
}

/// Signal description plus raw digital samples for the fixture writer.
#[derive(Clone, Debug)]
pub struct EdfFixtureSignal {
    pub label: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub samples_per_record: usize,
    pub digital_samples: Vec<i16>,
}

#[derive(Clone, Debug)]
pub struct EdfFixture {
    pub patient_id: String,
    pub recording_id: String,
    pub n_records: usize,
    pub record_duration_s: f64,
    pub signals: Vec<EdfFixtureSignal>,
}

fn pad_field(out: &mut Vec<u8>, text: &str, width: usize) -> Result<(), DataError> {
    if text.len() > width || !text.is_ascii() {
        return Err(DataError::Parse {
            offset: out.len(),
            message: format!("field {text:?} does not fit in {width} ASCII bytes"),
        });
    }
    out.extend_from_slice(text.as_bytes());
    out.extend(std::iter::repeat(b' ').take(width - text.len()));
    Ok(())
}

fn format_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e7 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Serializes a fixture to EDF bytes. Digital samples are written verbatim,
/// so `parse_edf` recovers exactly the physical values implied by the
/// calibration fields.
pub fn write_edf(fixture: &EdfFixture) -> Result<Vec<u8>, DataError> {
    let ns = fixture.signals.len();
    for s in &fixture.signals {
        if s.digital_samples.len() != fixture.n_records * s.samples_per_record {
            return Err(DataError::Parse {
                offset: 0,
                message: format!(
                    "signal {:?} has {} samples but {} records x {} per record",
                    s.label,
                    s.digital_samples.len(),
                    fixture.n_records,
                    s.samples_per_record
                ),
            });
        }
    }

    let mut out = Vec::new();
    pad_field(&mut out, "0", 8)?;
    pad_field(&mut out, &fixture.patient_id, 80)?;
    pad_field(&mut out, &fixture.recording_id, 80)?;
    pad_field(&mut out, "01.01.00", 8)?;
    pad_field(&mut out, "00.00.00", 8)?;
    let header_bytes = FIXED_HEADER + ns * PER_SIGNAL_HEADER;
    pad_field(&mut out, &header_bytes.to_string(), 8)?;
    pad_field(&mut out, "", 44)?;
    pad_field(&mut out, &fixture.n_records.to_string(), 8)?;
    pad_field(&mut out, &format_number(fixture.record_duration_s), 8)?;
    pad_field(&mut out, &ns.to_string(), 4)?;

    for s in &fixture.signals {
        pad_field(&mut out, &s.label, 16)?;
    }
    for _ in &fixture.signals {
        pad_field(&mut out, "", 80)?;
    }
    for s in &fixture.signals {
        pad_field(&mut out, &s.physical_dimension, 8)?;
    }
    for s in &fixture.signals {
        pad_field(&mut out, &format_number(s.physical_min), 8)?;
    }
    for s in &fixture.signals {
        pad_field(&mut out, &format_number(s.physical_max), 8)?;
    }
    for s in &fixture.signals {
        pad_field(&mut out, &s.digital_min.to_string(), 8)?;
    }
    for s in &fixture.signals {
        pad_field(&mut out, &s.digital_max.to_string(), 8)?;
    }
    for _ in &fixture.signals {
        pad_field(&mut out, "", 80)?;
    }
    for s in &fixture.signals {
        pad_field(&mut out, &s.samples_per_record.to_string(), 8)?;
    }
    for _ in &fixture.signals {
        pad_field(&mut out, "", 32)?;
    }

    for r in 0..fixture.n_records {
        for s in &fixture.signals {
            let start = r * s.samples_per_record;
            for &d in &s.digital_samples[start..start + s.samples_per_record] {
                out.extend_from_slice(&d.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// The calibration a parser applies to one digital sample; exposed so tests
/// can state expected physical values independently.
pub fn calibrate(digital: i16, phys_min: f64, phys_max: f64, dig_min: i32, dig_max: i32) -> f64 {
    phys_min + (digital as i32 - dig_min) as f64 * (phys_max - phys_min) / (dig_max - dig_min) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_signal_fixture() -> EdfFixture {
        // 3 data records, 256 samples per record per signal.
        let wave: Vec<i16> = (0..768).map(|i| ((i * 37) % 4096) as i16 - 2048).collect();
        let ramp: Vec<i16> = (0..768).map(|i| (i % 100) as i16).collect();
        EdfFixture {
            patient_id: "X X X X".into(),
            recording_id: "Startdate 01-JAN-2000".into(),
            n_records: 3,
            record_duration_s: 1.0,
            signals: vec![
                EdfFixtureSignal {
                    label: "EEG FP1-F7".into(),
                    physical_dimension: "uV".into(),
                    physical_min: -327.68,
                    physical_max: 327.67,
                    digital_min: -32768,
                    digital_max: 32767,
                    samples_per_record: 256,
                    digital_samples: wave,
                },
                EdfFixtureSignal {
                    label: "EEG F7-T7".into(),
                    physical_dimension: "uV".into(),
                    physical_min: -100.0,
                    physical_max: 100.0,
                    digital_min: -2048,
                    digital_max: 2047,
                    samples_per_record: 256,
                    digital_samples: ramp,
                },
            ],
        }
    }

    #[test]
    fn symmetric_calibration_maps_midscale_to_zero() {
        assert_eq!(calibrate(0, -327.68, 327.67, -32768, 32767), 0.0);
    }

    #[test]
    fn fixture_roundtrip_is_bit_identical() {
        let fixture = two_signal_fixture();
        let bytes = write_edf(&fixture).unwrap();
        let record = parse_edf(&bytes).unwrap();

        assert_eq!(record.n_records, 3);
        assert_eq!(record.record_duration_s, 1.0);
        assert_eq!(record.duration_s(), 3.0);
        assert_eq!(record.signals.len(), 2);
        for (parsed, fixture_signal) in record.signals.iter().zip(&fixture.signals) {
            assert_eq!(parsed.label, fixture_signal.label);
            assert_eq!(parsed.physical_min, fixture_signal.physical_min);
            assert_eq!(parsed.physical_max, fixture_signal.physical_max);
            assert_eq!(parsed.digital_min, fixture_signal.digital_min);
            assert_eq!(parsed.digital_max, fixture_signal.digital_max);
            assert_eq!(parsed.samples_per_record, 256);
            assert_eq!(record.sampling_rate(parsed), 256.0);
            let expected: Vec<f64> = fixture_signal
                .digital_samples
                .iter()
                .map(|&d| {
                    calibrate(
                        d,
                        fixture_signal.physical_min,
                        fixture_signal.physical_max,
                        fixture_signal.digital_min,
                        fixture_signal.digital_max,
                    )
                })
                .collect();
            assert_eq!(parsed.samples, expected);
        }
    }

    #[test]
    fn header_declares_signals_in_order() {
        let fixture = EdfFixture {
            signals: (0..17)
                .map(|i| EdfFixtureSignal {
                    label: format!("CH{i:02}"),
                    physical_dimension: "uV".into(),
                    physical_min: -100.0,
                    physical_max: 100.0,
                    digital_min: -2048,
                    digital_max: 2047,
                    samples_per_record: 4,
                    digital_samples: vec![0; 4],
                })
                .collect(),
            n_records: 1,
            ..two_signal_fixture()
        };
        let record = parse_edf(&write_edf(&fixture).unwrap()).unwrap();
        let labels: Vec<&str> = record.signals.iter().map(|s| s.label.as_str()).collect();
        let expected: Vec<String> = (0..17).map(|i| format!("CH{i:02}")).collect();
        assert_eq!(labels, expected);
    }

    #[test]
    fn truncated_and_malformed_files_error_with_offsets() {
        let bytes = write_edf(&two_signal_fixture()).unwrap();

        let truncated = &bytes[..bytes.len() - 7];
        match parse_edf(truncated) {
            Err(DataError::Parse { offset, .. }) => assert_eq!(offset, truncated.len()),
            other => panic!("expected truncation error, got {other:?}"),
        }

        let mut bad_field = bytes.clone();
        bad_field[236..244].copy_from_slice(b"oops    "); // record count
        assert!(matches!(
            parse_edf(&bad_field),
            Err(DataError::Parse { offset: 236, .. })
        ));

        let mut flat = two_signal_fixture();
        flat.signals[1].digital_min = 5;
        flat.signals[1].digital_max = 5;
        let flat_bytes = write_edf(&flat).unwrap();
        match parse_edf(&flat_bytes) {
            Err(DataError::Parse { message, .. }) => {
                assert!(message.contains("digital_max == digital_min"), "{message}");
            }
            other => panic!("expected calibration error, got {other:?}"),
        }
    }
}
