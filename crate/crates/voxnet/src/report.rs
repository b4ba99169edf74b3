//! Comma-separated report tables and the plain-text confusion matrix.
//! Undefined values are written as `NA`.

use voxnet_core::ensemble::{AverageOutcome, VoteOutcome, VoteRule};
use voxnet_core::metrics::{
    auc, classwise_metrics, confusion_matrix, misclassification_histogram, roc_curve, ClassMetrics,
    ClasswiseMetrics, ConfusionMatrix, MisclassHistogram, RocCurve, CLASSES,
};
use voxnet_core::train::{FoldResult, TrainHistory};
use voxnet_core::Diagnosis;

use crate::error::{Error, Result};

pub const NA: &str = "NA";

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn class_name(c: usize) -> &'static str {
    Diagnosis::from_id(c).map_or("?", Diagnosis::name)
}

/// Accumulates rows and renders them as CSV text.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(header: I) -> Self {
        let mut t = Table {
            writer: csv::Writer::from_writer(Vec::new()),
        };
        t.row(header);
        t
    }

    pub fn row<I: IntoIterator<Item = S>, S: AsRef<str>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().map(|c| c.as_ref().to_string()).collect();
        self.writer.write_record(&cells).expect("writing to memory cannot fail");
    }

    pub fn finish(self) -> Result<String> {
        let bytes = self.writer.into_inner().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

pub fn history_table(history: &TrainHistory) -> Result<String> {
    let mut t = Table::new(["iteration", "epoch", "lr", "train_loss", "val_loss", "val_acc"]);
    for c in &history.checkpoints {
        t.row([
            c.iteration.to_string(),
            c.epoch.to_string(),
            c.lr.to_string(),
            c.train_loss.to_string(),
            fmt_opt(c.val_loss),
            fmt_opt(c.val_accuracy),
        ]);
    }
    t.finish()
}

/// Every summary quantity for one classifier (a model or an ensemble rule).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub name: String,
    pub n: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: ClasswiseMetrics,
    /// Per-class ROC curves; empty without probabilities.
    pub roc: Vec<RocCurve>,
    pub auc: [Option<f64>; CLASSES],
    pub misclass: MisclassHistogram,
}

/// Summarizes predictions; `probs` enables ROC and AUC.
pub fn result_row(name: &str, predicted: &[usize], labels: &[usize], probs: Option<&[Vec<f64>]>) -> Result<ResultRow> {
    let confusion = confusion_matrix(predicted, labels)?;
    let mut roc = Vec::new();
    let mut aucs = [None; CLASSES];
    if let Some(probs) = probs {
        for (c, slot) in aucs.iter_mut().enumerate() {
            let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
            // A class absent from (or alone in) the labels has no curve.
            if let Ok(curve) = roc_curve(&scores, labels, c) {
                *slot = Some(auc(&curve));
                roc.push(curve);
            }
        }
    }
    Ok(ResultRow {
        name: name.to_string(),
        n: labels.len(),
        metrics: classwise_metrics(&confusion),
        confusion,
        roc,
        auc: aucs,
        misclass: misclassification_histogram(predicted, labels)?,
    })
}

fn metric_header(prefix: &[&str], with_auc: bool) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    h.push("overall_accuracy".into());
    for c in 0..CLASSES {
        for m in ClassMetrics::NAMES {
            h.push(format!("{}_{m}", class_name(c)));
        }
        if with_auc {
            h.push(format!("{}_auc", class_name(c)));
        }
    }
    h
}

fn metric_cells(metrics: &ClasswiseMetrics, aucs: Option<&[Option<f64>; CLASSES]>) -> Vec<String> {
    let mut cells = vec![fmt_opt(metrics.overall_accuracy)];
    for c in 0..CLASSES {
        cells.extend(metrics.classes[c].values().iter().map(|v| fmt_opt(*v)));
        if let Some(a) = aucs {
            cells.push(fmt_opt(a[c]));
        }
    }
    cells
}

pub fn summary_table(rows: &[ResultRow]) -> Result<String> {
    let mut t = Table::new(metric_header(&["model", "n"], true));
    for r in rows {
        let mut cells = vec![r.name.clone(), r.n.to_string()];
        cells.extend(metric_cells(&r.metrics, Some(&r.auc)));
        t.row(cells);
    }
    t.finish()
}

pub fn roc_table(rows: &[ResultRow]) -> Result<String> {
    let mut t = Table::new(["model", "class", "fpr", "tpr"]);
    for r in rows {
        for curve in &r.roc {
            for (fpr, tpr) in &curve.points {
                t.row([r.name.clone(), class_name(curve.class).into(), fpr.to_string(), tpr.to_string()]);
            }
        }
    }
    t.finish()
}

pub fn misclass_table(rows: &[ResultRow]) -> Result<String> {
    let mut header = vec!["model".to_string(), "true_class".into(), "misclassified".into()];
    header.extend((0..CLASSES).map(|c| format!("pct_{}", class_name(c))));
    let mut t = Table::new(header);
    for r in rows {
        for true_class in 0..CLASSES {
            let mut cells = vec![
                r.name.clone(),
                class_name(true_class).to_string(),
                r.misclass.counts[true_class].iter().sum::<u64>().to_string(),
            ];
            match r.misclass.row(true_class) {
                Some(p) => cells.extend(p.iter().map(|v| v.to_string())),
                None => cells.extend([NA; CLASSES].map(String::from)),
            }
            t.row(cells);
        }
    }
    t.finish()
}

/// Confusion matrix with predicted classes down the side and true classes across.
pub fn render_confusion(name: &str, cm: &ConfusionMatrix) -> String {
    let mut s = format!("{name} (rows: predicted, columns: true)\n{:>10}", "");
    for c in 0..CLASSES {
        s.push_str(&format!("{:>8}", class_name(c)));
    }
    s.push('\n');
    for p in 0..CLASSES {
        s.push_str(&format!("{:>10}", class_name(p)));
        for t in 0..CLASSES {
            s.push_str(&format!("{:>8}", cm.counts[p][t]));
        }
        s.push('\n');
    }
    s
}

pub fn predictions_table(subjects: &[String], labels: &[usize], models: &[(String, Vec<Vec<f64>>)]) -> Result<String> {
    let mut header = vec!["subject".to_string(), "label".into(), "model".into()];
    header.extend((0..CLASSES).map(|c| format!("p_{}", class_name(c))));
    header.push("predicted".into());
    let mut t = Table::new(header);
    for (name, probs) in models {
        for ((s, &l), p) in subjects.iter().zip(labels).zip(probs) {
            let mut cells = vec![s.clone(), class_name(l).to_string(), name.clone()];
            cells.extend(p.iter().map(|v| v.to_string()));
            cells.push(class_name(voxnet_core::tensor::argmax(p)).to_string());
            t.row(cells);
        }
    }
    t.finish()
}

fn rule_name(r: VoteRule) -> &'static str {
    match r {
        VoteRule::Unanimous => "unanimous",
        VoteRule::Majority => "majority",
        VoteRule::HighestProbability => "highest_probability",
    }
}

/// Per-sample table of member vectors and both ensemble decisions.
pub fn ensemble_table(
    subjects: &[String],
    labels: &[usize],
    members: &[(String, Vec<Vec<f64>>)],
    averaged: &[AverageOutcome],
    voted: &[VoteOutcome],
) -> Result<String> {
    let mut header = vec!["subject".to_string(), "label".into()];
    for (name, _) in members {
        header.extend((0..CLASSES).map(|c| format!("{name}_{}", class_name(c))));
    }
    header.extend(["average_class", "average_tie", "vote_class", "vote_rule", "vote_tie"].map(String::from));
    let mut t = Table::new(header);
    for i in 0..subjects.len() {
        let mut cells = vec![subjects[i].clone(), class_name(labels[i]).to_string()];
        for (_, probs) in members {
            cells.extend(probs[i].iter().map(|v| v.to_string()));
        }
        cells.push(class_name(averaged[i].class).into());
        cells.push(averaged[i].tie.to_string());
        cells.push(class_name(voted[i].class).into());
        cells.push(rule_name(voted[i].rule).into());
        cells.push(voted[i].tie.to_string());
        t.row(cells);
    }
    t.finish()
}

pub fn folds_table(folds: &[FoldResult]) -> Result<String> {
    let mut t = Table::new(metric_header(&["fold", "seed", "n"], false));
    for f in folds {
        let mut cells = vec![f.fold.to_string(), f.seed.to_string(), f.predictions.ids.len().to_string()];
        cells.extend(metric_cells(&f.metrics, None));
        t.row(cells);
    }
    t.finish()
}

/// Minimum, median and maximum of the defined values.
pub fn min_median_max(values: &[Option<f64>]) -> Option<(f64, f64, f64)> {
    let mut v: Vec<f64> = values.iter().flatten().copied().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
    Some((v[0], median, v[n - 1]))
}

/// One row per metric and class: min, median and max over folds.
pub fn aggregate_table(folds: &[FoldResult]) -> Result<String> {
    let mut t = Table::new(["metric", "class", "min", "median", "max", "defined_folds"]);
    let mut emit = |metric: &str, class: &str, values: Vec<Option<f64>>| {
        let defined = values.iter().flatten().count();
        let (lo, mid, hi) = match min_median_max(&values) {
            Some((a, b, c)) => (a.to_string(), b.to_string(), c.to_string()),
            None => (NA.into(), NA.into(), NA.into()),
        };
        t.row([metric.to_string(), class.to_string(), lo, mid, hi, defined.to_string()]);
    };
    emit("overall_accuracy", "all", folds.iter().map(|f| f.metrics.overall_accuracy).collect());
    for c in 0..CLASSES {
        for (k, m) in ClassMetrics::NAMES.iter().enumerate() {
            emit(m, class_name(c), folds.iter().map(|f| f.metrics.classes[c].values()[k]).collect());
        }
    }
    t.finish()
}
