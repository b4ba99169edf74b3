//! Confusion matrices, one-vs-rest class metrics, ROC/AUC and the
//! misclassification histogram.
//!
//! Matrices are indexed `counts[predicted][true]`, so a column holds every
//! sample of one true class.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; CLASSES]; CLASSES],
}

fn check_class(id: usize, what: &'static str) -> Result<()> {
    if id >= CLASSES {
        return Err(Error::invalid(what, format!("unknown class id {id}")));
    }
    Ok(())
}

pub fn confusion_matrix(predictions: &[usize], labels: &[usize]) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid(
            "confusion matrix",
            format!("{} predictions for {} labels", predictions.len(), labels.len()),
        ));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("confusion matrix", "no samples"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(labels) {
        check_class(p, "prediction")?;
        check_class(t, "label")?;
        cm.counts[p][t] += 1;
    }
    Ok(cm)
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Number of samples whose true class is `class`.
    pub fn true_count(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    pub fn predicted_count(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..CLASSES).map(|c| self.counts[c][c]).sum()
    }

    pub fn overall_accuracy(&self) -> Option<f64> {
        ratio(self.correct(), self.total())
    }

    /// `(tp, fp, fn, tn)` for `class` against the rest.
    pub fn one_vs_rest(&self, class: usize) -> (u64, u64, u64, u64) {
        let tp = self.counts[class][class];
        let fp = self.predicted_count(class) - tp;
        let fn_ = self.true_count(class) - tp;
        let tn = self.total() - tp - fp - fn_;
        (tp, fp, fn_, tn)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// One-vs-rest metrics of a single class; `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
}

impl ClassMetrics {
    pub const NAMES: [&'static str; 5] = ["accuracy", "precision", "sensitivity", "specificity", "f1"];

    pub fn values(&self) -> [Option<f64>; 5] {
        [self.accuracy, self.precision, self.sensitivity, self.specificity, self.f1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClasswiseMetrics {
    pub classes: [ClassMetrics; CLASSES],
    pub overall_accuracy: Option<f64>,
}

pub fn classwise_metrics(cm: &ConfusionMatrix) -> ClasswiseMetrics {
    let n = cm.total();
    let mut classes = [ClassMetrics::default(); CLASSES];
    for (c, m) in classes.iter_mut().enumerate() {
        let (tp, fp, fn_, tn) = cm.one_vs_rest(c);
        m.accuracy = ratio(tp + tn, n);
        m.precision = ratio(tp, tp + fp);
        m.sensitivity = ratio(tp, tp + fn_);
        m.specificity = ratio(tn, tn + fp);
        m.f1 = match (m.precision, m.sensitivity) {
            (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
            _ => None,
        };
    }
    ClasswiseMetrics {
        classes,
        overall_accuracy: cm.overall_accuracy(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub class: usize,
    /// `(false positive rate, true positive rate)` from the strictest threshold down.
    pub points: Vec<(f64, f64)>,
}

/// One-vs-rest ROC of `class`, sweeping every distinct score as a threshold.
pub fn roc_curve(scores: &[f64], labels: &[usize], class: usize) -> Result<RocCurve> {
    check_class(class, "ROC class")?;
    if scores.len() != labels.len() {
        return Err(Error::invalid(
            "ROC curve",
            format!("{} scores for {} labels", scores.len(), labels.len()),
        ));
    }
    if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::invalid("ROC curve", format!("score {s} outside [0, 1]")));
    }
    let positives = labels.iter().filter(|&&l| l == class).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::invalid("ROC curve", "labels need both positives and negatives"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::with_capacity(order.len() + 1);
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == class {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    Ok(RocCurve { class, points })
}

/// Trapezoidal area under `curve`.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Misclassified samples tallied as `counts[true][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MisclassHistogram {
    pub counts: [[u64; CLASSES]; CLASSES],
}

impl MisclassHistogram {
    /// Percentage of `true_class`'s misclassifications going to each class,
    /// or `None` when it has none.
    pub fn row(&self, true_class: usize) -> Option<[f64; CLASSES]> {
        let row = &self.counts[true_class];
        let total: u64 = row.iter().sum();
        (total > 0).then(|| row.map(|c| 100.0 * c as f64 / total as f64))
    }
}

pub fn misclassification_histogram(predictions: &[usize], labels: &[usize]) -> Result<MisclassHistogram> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid(
            "misclassification histogram",
            format!("{} predictions for {} labels", predictions.len(), labels.len()),
        ));
    }
    let mut h = MisclassHistogram::default();
    for (&p, &t) in predictions.iter().zip(labels) {
        check_class(p, "prediction")?;
        check_class(t, "label")?;
        if p != t {
            h.counts[t][p] += 1;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_matrix_by_definition() {
        // labels AD, AD, CN; predictions AD, MCI, CN
        let cm = confusion_matrix(&[0, 1, 2], &[0, 0, 2]).unwrap();
        assert_eq!(cm.counts, [[1, 0, 0], [1, 0, 0], [0, 0, 1]]);
        assert!(confusion_matrix(&[0], &[0, 1]).is_err());
        assert!(confusion_matrix(&[3], &[0]).is_err());
    }

    #[test]
    fn diagonal_is_perfect() {
        let cm = confusion_matrix(&[0, 1, 2, 2], &[0, 1, 2, 2]).unwrap();
        for m in classwise_metrics(&cm).classes {
            for v in m.values() {
                assert_eq!(v, Some(1.0));
            }
        }
    }

    #[test]
    fn absent_class_is_undefined() {
        let cm = confusion_matrix(&[0, 1, 0], &[0, 1, 1]).unwrap();
        let m = classwise_metrics(&cm).classes[2];
        assert_eq!(m.precision, None);
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.specificity, Some(1.0));
    }

    #[test]
    fn fixed_example_by_hand() {
        let cm = ConfusionMatrix {
            counts: [[5, 2, 0], [1, 6, 1], [0, 2, 8]],
        };
        let m = classwise_metrics(&cm);
        let expect = [
            [22.0 / 25.0, 5.0 / 7.0, 5.0 / 6.0, 17.0 / 19.0, 10.0 / 13.0],
            [19.0 / 25.0, 6.0 / 8.0, 6.0 / 10.0, 13.0 / 15.0, 2.0 / 3.0],
            [22.0 / 25.0, 8.0 / 10.0, 8.0 / 9.0, 14.0 / 16.0, 16.0 / 19.0],
        ];
        for c in 0..3 {
            for (got, want) in m.classes[c].values().iter().zip(expect[c]) {
                assert!((got.unwrap() - want).abs() < 1e-12, "class {c}: {got:?} vs {want}");
            }
        }
        assert_eq!(m.overall_accuracy, Some(19.0 / 25.0));
    }

    #[test]
    fn roc_extremes() {
        let labels = [0, 0, 1, 2];
        let c = roc_curve(&[0.9, 0.8, 0.2, 0.1], &labels, 0).unwrap();
        assert!(c.points.contains(&(0.0, 1.0)));
        assert_eq!(auc(&c), 1.0);
        let c = roc_curve(&[0.1, 0.2, 0.8, 0.9], &labels, 0).unwrap();
        assert_eq!(auc(&c), 0.0);
        let c = roc_curve(&[0.5; 4], &labels, 0).unwrap();
        assert_eq!(c.points, [(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&c), 0.5);
        assert!(roc_curve(&[0.5; 2], &[1, 1], 0).is_err());
        assert!(roc_curve(&[1.5, 0.0], &[0, 1], 0).is_err());
    }

    #[test]
    fn histogram_rows() {
        let h = misclassification_histogram(&[1, 1, 0], &[0, 0, 0]).unwrap();
        assert_eq!(h.row(0), Some([0.0, 100.0, 0.0]));
        assert_eq!(h.row(1), None);
        let h = misclassification_histogram(&[0, 0, 0, 2, 1], &[1, 1, 1, 1, 1]).unwrap();
        assert_eq!(h.row(1), Some([75.0, 0.0, 25.0]));
        let h = misclassification_histogram(&[0, 1], &[0, 1]).unwrap();
        assert!((0..3).all(|c| h.row(c).is_none()));
    }
}
