use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::model::{LinearModel, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sentilex::SentimentLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Confusion matrix (rows = truth, columns = prediction, Neg/Neu/Pos) and
/// the metrics derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
    pub total: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class: [ClassMetrics; NUM_CLASSES],
    /// Classes absent from both truth and prediction. Their F1 is reported
    /// as 0 and they are left out of the macro average.
    #[serde(default)]
    pub absent_classes: Vec<SentimentLabel>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_confusion(confusion: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Result<Self> {
        let total: u64 = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(Error::InvalidArgument(
                "cannot evaluate on empty data".into(),
            ));
        }
        let trace: u64 = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
        let mut per_class = [ClassMetrics {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            support: 0,
        }; NUM_CLASSES];
        let mut absent = Vec::new();
        let mut macro_sum = 0.0;
        let mut present = 0usize;
        let mut weighted = 0.0;
        for c in 0..NUM_CLASSES {
            let tp = confusion[c][c];
            let support: u64 = confusion[c].iter().sum();
            let predicted: u64 = (0..NUM_CLASSES).map(|r| confusion[r][c]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            per_class[c] = ClassMetrics {
                precision,
                recall,
                f1,
                support,
            };
            if support == 0 && predicted == 0 {
                absent.push(SentimentLabel::ALL[c]);
            } else {
                macro_sum += f1;
                present += 1;
            }
            weighted += f1 * support as f64;
        }
        Ok(Self {
            confusion,
            total,
            accuracy: ratio(trace, total),
            macro_f1: macro_sum / present as f64,
            weighted_f1: weighted / total as f64,
            per_class,
            absent_classes: absent,
        })
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (SentimentLabel, SentimentLabel)>,
    ) -> Result<Self> {
        let mut confusion = [[0u64; NUM_CLASSES]; NUM_CLASSES];
        for (truth, pred) in pairs {
            confusion[truth.index()][pred.index()] += 1;
        }
        Self::from_confusion(confusion)
    }
}

/// Predicts every labeled example and tabulates the results.
pub fn evaluate(model: &LinearModel, data: &[FeatureVector], exec: Exec) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot evaluate on empty data".into(),
        ));
    }
    let preds = exec.map(data, |x| -> Result<(SentimentLabel, SentimentLabel)> {
        let truth = x
            .label
            .ok_or_else(|| Error::InvalidArgument(format!("example `{}` has no label", x.id)))?;
        Ok((truth, model.predict(x)?.label))
    });
    EvalReport::from_pairs(preds.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Accuracy of always predicting the most frequent true class.
pub fn majority_baseline(data: &[FeatureVector]) -> f64 {
    let counts = super::model::class_counts(data);
    let n: usize = counts.iter().sum();
    ratio(*counts.iter().max().unwrap_or(&0) as u64, n as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_confusion_matrix() {
        let r =
            EvalReport::from_confusion([[1543, 16, 77], [64, 658, 54], [88, 14, 1090]]).unwrap();
        assert!((r.accuracy - 0.9132).abs() < 1e-4);
        assert!((r.macro_f1 - 0.9096).abs() < 1e-4);
        assert!((r.weighted_f1 - 0.9129).abs() < 1e-4);
        assert!(r.absent_classes.is_empty());
    }

    #[test]
    fn perfect_diagonal() {
        let r = EvalReport::from_confusion([[5, 0, 0], [0, 3, 0], [0, 0, 9]]).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_f1, 1.0);
        assert_eq!(r.weighted_f1, 1.0);
    }

    #[test]
    fn two_class_symmetric() {
        // precision = recall = 2/3 for both present classes
        let r = EvalReport::from_confusion([[2, 0, 1], [0, 0, 0], [1, 0, 2]]).unwrap();
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.absent_classes, [SentimentLabel::Neutral]);
        assert_eq!(r.per_class[1].f1, 0.0);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(EvalReport::from_confusion([[0; 3]; 3]).is_err());
    }
}
