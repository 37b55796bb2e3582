//! Multinomial logistic regression trained by full-batch gradient descent
//! on the softmax cross-entropy.

use super::{Classifier, ClassifierTrainer, ClassifyError, LabeledDataset};
use ndarray::{Array2, Axis};

#[derive(Debug, Clone)]
pub struct LogisticRegressionTrainer {
    pub iterations: usize,
    pub learning_rate: f64,
}

impl Default for LogisticRegressionTrainer {
    fn default() -> Self {
        Self { iterations: 500, learning_rate: 0.1 }
    }
}

/// Prepend the intercept column of ones.
pub fn augment(x: &Array2<f64>) -> Array2<f64> {
    let (n, p) = x.dim();
    let mut out = Array2::ones((n, p + 1));
    for i in 0..n {
        for j in 0..p {
            out[[i, j + 1]] = x[[i, j]];
        }
    }
    out
}

/// Row-wise stable softmax.
fn softmax(mut logits: Array2<f64>) -> Array2<f64> {
    for mut row in logits.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    logits
}

/// Mean cross-entropy and its gradient for weights `w` ((p+1) x k) on an
/// already-augmented design matrix. `y_idx` holds class indices.
pub fn loss_and_gradient(
    x_aug: &Array2<f64>,
    y_idx: &[usize],
    w: &Array2<f64>,
) -> (f64, Array2<f64>) {
    let n = x_aug.nrows();
    let probs = softmax(x_aug.dot(w));
    let mut loss = 0.0;
    let mut delta = probs;
    for (i, &cls) in y_idx.iter().enumerate() {
        loss -= delta[[i, cls]].max(1e-300).ln();
        delta[[i, cls]] -= 1.0;
    }
    loss /= n as f64;
    let grad = x_aug.t().dot(&delta) / n as f64;
    (loss, grad)
}

struct LogisticModel {
    classes: Vec<u8>,
    /// (p+1) x k, intercept row first.
    weights: Array2<f64>,
}

impl Classifier for LogisticModel {
    fn kind(&self) -> &'static str {
        "logistic_regression"
    }

    fn predict(&self, x: &Array2<f64>) -> Result<Vec<u8>, ClassifyError> {
        let expected = self.weights.nrows() - 1;
        if x.ncols() != expected {
            return Err(ClassifyError::DimensionMismatch { expected, got: x.ncols() });
        }
        let probs = softmax(augment(x).dot(&self.weights));
        Ok(probs
            .axis_iter(Axis(0))
            .map(|row| {
                let mut best = 0usize;
                for (i, v) in row.iter().enumerate().skip(1) {
                    if *v > row[best] {
                        best = i;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}

impl ClassifierTrainer for LogisticRegressionTrainer {
    fn name(&self) -> &'static str {
        "logistic_regression"
    }

    fn train(&self, data: &LabeledDataset, _seed: u64) -> Result<Box<dyn Classifier>, ClassifyError> {
        if data.n_rows() == 0 {
            return Err(ClassifyError::EmptyDataset);
        }
        let classes = data.classes();
        if classes.len() < 2 {
            return Err(ClassifyError::SingleClass);
        }
        let y_idx: Vec<usize> = data
            .y
            .iter()
            .map(|l| classes.iter().position(|c| c == l).expect("label in class set"))
            .collect();
        let x_aug = augment(&data.x);
        let mut weights = Array2::zeros((x_aug.ncols(), classes.len()));
        for _ in 0..self.iterations {
            let (_, grad) = loss_and_gradient(&x_aug, &y_idx, &weights);
            weights -= &(grad * self.learning_rate);
        }
        Ok(Box::new(LogisticModel { classes, weights }))
    }
}
