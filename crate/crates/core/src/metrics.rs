//! Binary classification metrics with class "on" (1) as positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion_matrix(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::input(format!(
            "label vectors differ in length: {} vs {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::input("no labels to score"));
    }
    let mut cm = ConfusionMatrix::default();
    for (i, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fn_ += 1,
            _ => return Err(Error::input(format!("non-binary label at position {i}: ({t}, {p})"))),
        }
    }
    Ok(cm)
}

/// Precision, recall and F1 for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub on: ClassScores,
    pub off: ClassScores,
}

impl MetricReport {
    pub fn f1_on(&self) -> f64 {
        self.on.f1
    }

    pub fn f1_off(&self) -> f64 {
        self.off.f1
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::F1On => self.on.f1,
            Metric::F1Off => self.off.f1,
        }
    }

    /// Copy with every rate rounded to four decimals, for report files.
    pub fn rounded(&self) -> MetricReport {
        let r = |v: f64| (v * 1e4).round() / 1e4;
        let class = |c: ClassScores| ClassScores {
            precision: r(c.precision),
            recall: r(c.recall),
            f1: r(c.f1),
            support: c.support,
        };
        MetricReport {
            accuracy: r(self.accuracy),
            on: class(self.on),
            off: class(self.off),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    F1On,
    F1Off,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Accuracy, Metric::F1On, Metric::F1Off];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::F1On => "f1_on",
            Metric::F1Off => "f1_off",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::input(format!("unknown metric `{s}`")))
    }
}

/// 0/0 is defined as 0.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn scores(tp: u64, fp: u64, fn_: u64) -> ClassScores {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassScores {
        precision,
        recall,
        f1,
        support: tp + fn_,
    }
}

pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<MetricReport> {
    if cm.total() == 0 {
        return Err(Error::input("confusion matrix is empty"));
    }
    Ok(MetricReport {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        on: scores(cm.tp, cm.fp, cm.fn_),
        // For "off" the roles swap: tn are its hits, fn its false alarms.
        off: scores(cm.tn, cm.fn_, cm.fp),
    })
}

pub fn score(y_true: &[u8], y_pred: &[u8]) -> Result<MetricReport> {
    classification_metrics(&confusion_matrix(y_true, y_pred)?)
}

pub fn accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    Ok(score(y_true, y_pred)?.accuracy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_prediction() {
        let cm = confusion_matrix(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 2, fp: 0, tn: 1, fn_: 0 });
        let r = classification_metrics(&cm).unwrap();
        assert_eq!((r.accuracy, r.f1_on(), r.f1_off()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_counted_example() {
        let cm = confusion_matrix(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, fp: 0, tn: 2, fn_: 1 });
        let r = classification_metrics(&cm).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert!((r.f1_on() - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1_off() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn total_miss() {
        let cm = confusion_matrix(&[1; 5], &[0; 5]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 0, fp: 0, tn: 0, fn_: 5 });
    }

    #[test]
    fn no_positives_anywhere() {
        let r = score(&[0, 0, 0], &[0, 0, 0]).unwrap();
        assert_eq!(r.f1_on(), 0.0);
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn input_errors() {
        assert!(confusion_matrix(&[1, 0], &[1]).is_err());
        assert!(confusion_matrix(&[], &[]).is_err());
        assert!(confusion_matrix(&[2], &[1]).is_err());
    }

    #[test]
    fn rounding_for_reports() {
        let r = score(&[1, 1, 0], &[1, 0, 0]).unwrap().rounded();
        assert_eq!(r.accuracy, 0.6667);
    }

    proptest! {
        #[test]
        fn swapping_classes_swaps_f1(labels in proptest::collection::vec((0u8..2, 0u8..2), 1..200)) {
            let (t, p): (Vec<u8>, Vec<u8>) = labels.into_iter().unzip();
            let a = score(&t, &p).unwrap();
            let flip = |v: &[u8]| v.iter().map(|x| 1 - x).collect::<Vec<_>>();
            let b = score(&flip(&t), &flip(&p)).unwrap();
            prop_assert_eq!(a.accuracy, b.accuracy);
            prop_assert_eq!(a.f1_on(), b.f1_off());
            prop_assert_eq!(a.f1_off(), b.f1_on());
        }
    }
}
