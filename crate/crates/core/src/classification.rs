//! Test-time prediction and evaluation metrics.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::coding::{codes_to_dense, omp_batch};
use crate::data::{write_atomic, LabeledDataset};
use crate::error::{Error, Result};
use crate::learning::TrainedModel;

/// Multi-label decision threshold (inclusive).
pub const MULTI_LABEL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    /// `q × N_test` raw classifier outputs `W x`.
    pub scores: DMatrix<f64>,
    /// Arg-max class per sample, lowest index on ties.
    pub labels_single: Vec<usize>,
    /// Classes scoring at least [`MULTI_LABEL_THRESHOLD`]; may be empty.
    pub labels_multi: Vec<Vec<usize>>,
}

impl PredictionResult {
    pub fn from_scores(scores: DMatrix<f64>) -> Self {
        let labels_single = scores
            .column_iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (l, &s)| if s > best.1 { (l, s) } else { best })
                    .0
            })
            .collect();
        let labels_multi = scores
            .column_iter()
            .map(|c| (0..c.len()).filter(|&l| c[l] >= MULTI_LABEL_THRESHOLD).collect())
            .collect();
        Self {
            scores,
            labels_single,
            labels_multi,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One line per sample: the predicted label field, then the raw scores.
    ///
    /// The label field is the arg-max index, or the `;`-joined threshold set
    /// when `multi_label` is set.
    pub fn to_csv(&self, multi_label: bool) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            if multi_label {
                let joined: Vec<String> = self.labels_multi[i].iter().map(usize::to_string).collect();
                out.push_str(&joined.join(";"));
            } else {
                let _ = write!(out, "{}", self.labels_single[i]);
            }
            for s in self.scores.column(i).iter() {
                let _ = write!(out, ",{s:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: &Path, multi_label: bool) -> Result<()> {
        write_atomic(path, self.to_csv(multi_label).as_bytes())
    }
}

/// Codes each column of `y` by OMP over the model dictionary and scores it with `W`.
pub fn predict(model: &TrainedModel, y: &DMatrix<f64>) -> Result<PredictionResult> {
    if y.nrows() != model.num_features() {
        return Err(Error::Dimension(format!(
            "test data has {} features, model expects {}",
            y.nrows(),
            model.num_features()
        )));
    }
    let codes = omp_batch(&model.dictionary, y, model.hyper.sparsity)?;
    let x = codes_to_dense(&codes, model.num_atoms());
    Ok(PredictionResult::from_scores(&model.classifier * x))
}

/// Percentage of samples whose arg-max label is the true class.
pub fn accuracy(pred: &PredictionResult, truth: &LabeledDataset) -> Result<f64> {
    if truth.is_multi_label() {
        return Err(Error::ModeMismatch(
            "accuracy needs single-label ground truth; use average_precision for multi-label data".into(),
        ));
    }
    check_len(pred.len(), truth)?;
    if pred.is_empty() {
        return Err(Error::InvalidArgument("no samples to evaluate".into()));
    }
    let correct = (0..pred.len())
        .filter(|&i| pred.labels_single[i] == truth.primary_class(i))
        .count();
    Ok(100.0 * correct as f64 / pred.len() as f64)
}

fn check_len(n: usize, truth: &LabeledDataset) -> Result<()> {
    if n != truth.num_samples() {
        return Err(Error::Dimension(format!(
            "{n} predictions for {} labelled samples",
            truth.num_samples()
        )));
    }
    Ok(())
}

/// 1-based rank of each class in the descending order of `scores`, lower index first on ties.
fn ranks(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut rank = vec![0; scores.len()];
    for (r, &l) in order.iter().enumerate() {
        rank[l] = r + 1;
    }
    rank
}

/// Mean per-sample average precision of the score ranking, as a percentage.
pub fn average_precision(scores: &DMatrix<f64>, truth: &LabeledDataset) -> Result<f64> {
    check_len(scores.ncols(), truth)?;
    if scores.nrows() != truth.num_classes() {
        return Err(Error::Dimension(format!(
            "{} score rows for {} classes",
            scores.nrows(),
            truth.num_classes()
        )));
    }
    if scores.ncols() == 0 {
        return Err(Error::InvalidArgument("no samples to evaluate".into()));
    }
    let mut total = 0.0;
    for i in 0..scores.ncols() {
        let labels = truth.labels_of(i);
        if labels.is_empty() {
            return Err(Error::InvalidArgument(format!("sample {i} has no true labels")));
        }
        let col: Vec<f64> = scores.column(i).iter().copied().collect();
        let rank = ranks(&col);
        let mut true_ranks: Vec<usize> = labels.iter().map(|&l| rank[l]).collect();
        true_ranks.sort_unstable();
        let ap: f64 = true_ranks
            .iter()
            .enumerate()
            .map(|(above, &r)| (above + 1) as f64 / r as f64)
            .sum::<f64>()
            / labels.len() as f64;
        total += ap;
    }
    Ok(100.0 * total / scores.ncols() as f64)
}

/// Accuracy for single-label truth, average precision for multi-label truth.
pub fn evaluate(pred: &PredictionResult, truth: &LabeledDataset) -> Result<f64> {
    if truth.is_multi_label() {
        average_precision(&pred.scores, truth)
    } else {
        accuracy(pred, truth)
    }
}
