//! Wellbeing classification: labelled datasets, the classifier registry,
//! statistical feature windows and the seeded cross-validation harness.
//!
//! Every model variant lives behind the [`ClassifierTrainer`] /
//! [`Classifier`] trait pair and is selected at runtime by name through
//! [`registry`] — the CLI and the pipeline config never mention concrete
//! types. Adding a variant means implementing the two traits and listing
//! the trainer in the registry.

pub mod cv;
pub mod decision_tree;
pub mod features;
pub mod logistic;
pub mod naive_bayes;
pub mod random_forest;

pub use cv::{fold_indices, kfold_cv, modality_ablation};
pub use decision_tree::DecisionTreeTrainer;
pub use features::statistical_features;
pub use logistic::LogisticRegressionTrainer;
pub use naive_bayes::GaussianNbTrainer;
pub use random_forest::RandomForestTrainer;

use ndarray::Array2;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training data holds a single class")]
    SingleClass,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{rows} rows cannot form {folds} folds")]
    TooFewRows { rows: usize, folds: usize },
    #[error("cross-validation needs at least 2 folds, got {0}")]
    InvalidFolds(usize),
    #[error("ablation datasets must share rows and labels")]
    RowMismatch,
    #[error("no labelled rows in the table")]
    NoLabeledRows,
    #[error("invalid windowing: {0}")]
    InvalidWindow(String),
    #[error("dataset: {0}")]
    InvalidDataset(String),
}

/// Where a dataset's feature matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RawFused,
    DbnFeatures,
    StatisticalFeatures,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::RawFused => "raw_fused",
            Provenance::DbnFeatures => "dbn_features",
            Provenance::StatisticalFeatures => "statistical_features",
        };
        f.write_str(s)
    }
}

/// Which sensor modality the features cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    All,
    Pollution,
    Physiological,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Modality::All => "all",
            Modality::Pollution => "pollution",
            Modality::Physiological => "physiological",
        };
        f.write_str(s)
    }
}

/// Complete feature matrix with valence labels in 1..=5.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub x: Array2<f64>,
    pub y: Vec<u8>,
    pub feature_names: Vec<String>,
    pub provenance: Provenance,
    pub modality: Modality,
}

impl LabeledDataset {
    pub fn new(
        x: Array2<f64>,
        y: Vec<u8>,
        feature_names: Vec<String>,
        provenance: Provenance,
        modality: Modality,
    ) -> Result<Self, ClassifyError> {
        if x.nrows() != y.len() {
            return Err(ClassifyError::InvalidDataset(format!(
                "{} feature rows vs {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.ncols() != feature_names.len() {
            return Err(ClassifyError::InvalidDataset(format!(
                "{} columns vs {} feature names",
                x.ncols(),
                feature_names.len()
            )));
        }
        if y.iter().any(|l| !(1..=5).contains(l)) {
            return Err(ClassifyError::InvalidDataset("label outside 1..=5".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::InvalidDataset("non-finite feature value".into()));
        }
        Ok(Self { x, y, feature_names, provenance, modality })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// Distinct labels present, ascending.
    pub fn classes(&self) -> Vec<u8> {
        let mut seen = [false; 6];
        for &l in &self.y {
            seen[l as usize] = true;
        }
        (1..=5).filter(|&l| seen[l as usize]).collect()
    }

    /// Row subset preserving provenance and modality.
    pub fn subset_rows(&self, rows: &[usize]) -> Self {
        let mut x = Array2::zeros((rows.len(), self.n_features()));
        let mut y = Vec::with_capacity(rows.len());
        for (i, &r) in rows.iter().enumerate() {
            x.row_mut(i).assign(&self.x.row(r));
            y.push(self.y[r]);
        }
        Self {
            x,
            y,
            feature_names: self.feature_names.clone(),
            provenance: self.provenance,
            modality: self.modality,
        }
    }
}

/// A trained model: maps feature rows to valence labels, deterministically.
pub trait Classifier {
    fn kind(&self) -> &'static str;
    fn predict(&self, x: &Array2<f64>) -> Result<Vec<u8>, ClassifyError>;
}

/// A named, configured algorithm that can fit a [`Classifier`].
pub trait ClassifierTrainer: Send + Sync {
    fn name(&self) -> &'static str;
    fn train(&self, data: &LabeledDataset, seed: u64) -> Result<Box<dyn Classifier>, ClassifyError>;
}

/// Every registered model variant with its default hyperparameters.
pub fn registry() -> Vec<Box<dyn ClassifierTrainer>> {
    vec![
        Box::new(LogisticRegressionTrainer::default()),
        Box::new(GaussianNbTrainer::default()),
        Box::new(DecisionTreeTrainer::default()),
        Box::new(RandomForestTrainer::default()),
    ]
}

/// Look a trainer up by its registered name.
pub fn trainer_by_name(name: &str) -> Option<Box<dyn ClassifierTrainer>> {
    registry().into_iter().find(|t| t.name() == name)
}

/// Lowest-label argmax over per-class counts or scores.
pub(crate) fn argmax_lowest<T: PartialOrd + Copy>(scores: &[T], classes: &[u8]) -> u8 {
    let mut best = 0usize;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    classes[best]
}

/// Majority vote over labels; ties break toward the lower valence.
pub(crate) fn majority_label(labels: impl Iterator<Item = u8>) -> Option<u8> {
    let mut counts = [0usize; 6];
    let mut any = false;
    for l in labels {
        counts[l as usize] += 1;
        any = true;
    }
    if !any {
        return None;
    }
    let mut best = 1u8;
    for l in 2..=5u8 {
        if counts[l as usize] > counts[best as usize] {
            best = l;
        }
    }
    Some(best)
}

/// Cross-validation outcome for one (model, feature source, modality) cell.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub model: String,
    pub provenance: Provenance,
    pub modality: Modality,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation over the folds.
    pub std_accuracy: f64,
    /// `confusion[true - 1][predicted - 1]` counts over all test folds.
    pub confusion: [[u32; 5]; 5],
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// One row of the comparison summary CSV.
    pub fn to_summary_row(&self) -> String {
        format!(
            "{},{},{},{},{}\n",
            self.model, self.provenance, self.modality, self.mean_accuracy, self.std_accuracy
        )
    }
}
