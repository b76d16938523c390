//! Confusion-matrix metrics for one CV round and their mean/std aggregation
//! across rounds. The seizure class is the positive class. Metrics whose
//! denominator is zero are reported as explicitly undefined, never silently
//! as 0 or 1. Aggregation uses the population standard deviation (divide by
//! N).

use serde::{Deserialize, Serialize};

use super::TrainError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// tp / (tp + fn)
    pub sensitivity: Option<f64>,
    /// tn / (tn + fp)
    pub specificity: Option<f64>,
    /// tp / (tp + fp)
    pub precision: Option<f64>,
    /// 2 * precision * sensitivity / (precision + sensitivity)
    pub f1: Option<f64>,
    /// (tp + tn) / total
    pub accuracy: Option<f64>,
}

impl MetricsReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                None
            } else {
                Some(num as f64 / den as f64)
            }
        };
        let sensitivity = ratio(tp, tp + fn_);
        let specificity = ratio(tn, tn + fp);
        let precision = ratio(tp, tp + fp);
        let f1 = match (precision, sensitivity) {
            (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
            _ => None,
        };
        let accuracy = ratio(tp + tn, tp + fp + tn + fn_);
        Self {
            tp,
            fp,
            tn,
            fn_,
            sensitivity,
            specificity,
            precision,
            f1,
            accuracy,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Counts the confusion matrix of `predictions` against `labels`
/// (1 = seizure).
pub fn compute_metrics(predictions: &[usize], labels: &[usize]) -> Result<MetricsReport, TrainError> {
    if predictions.len() != labels.len() {
        return Err(TrainError::Shape(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fn_ += 1,
            _ => {
                return Err(TrainError::Shape(format!(
                    "binary classes expected, got prediction {p} / label {l}"
                )))
            }
        }
    }
    Ok(MetricsReport::from_counts(tp, fp, tn, fn_))
}

/// Mean and population standard deviation of one metric across rounds;
/// undefined if the metric was undefined in any round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

fn mean_std(values: &[Option<f64>]) -> MeanStd {
    if values.iter().any(Option::is_none) {
        return MeanStd {
            mean: None,
            std: None,
        };
    }
    let vals: Vec<f64> = values.iter().map(|v| v.unwrap()).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd {
        mean: Some(mean),
        std: Some(var.sqrt()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub rounds: Vec<MetricsReport>,
    pub sensitivity: MeanStd,
    pub specificity: MeanStd,
    pub f1: MeanStd,
    pub precision: MeanStd,
    pub accuracy: MeanStd,
}

/// Aggregates per-round reports into per-metric mean and population std.
pub fn aggregate_cv(rounds: &[MetricsReport]) -> Result<CvSummary, TrainError> {
    if rounds.is_empty() {
        return Err(TrainError::Shape("no rounds to aggregate".into()));
    }
    let collect = |f: fn(&MetricsReport) -> Option<f64>| -> Vec<Option<f64>> {
        rounds.iter().map(f).collect()
    };
    Ok(CvSummary {
        rounds: rounds.to_vec(),
        sensitivity: mean_std(&collect(|r| r.sensitivity)),
        specificity: mean_std(&collect(|r| r.specificity)),
        f1: mean_std(&collect(|r| r.f1)),
        precision: mean_std(&collect(|r| r.precision)),
        accuracy: mean_std(&collect(|r| r.accuracy)),
    })
}
