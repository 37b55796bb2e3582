//! Gaussian naive Bayes with a variance floor.

use super::{argmax_lowest, Classifier, ClassifierTrainer, ClassifyError, LabeledDataset};
use ndarray::{Array2, ArrayView1};

#[derive(Debug, Clone)]
pub struct GaussianNbTrainer {
    pub variance_floor: f64,
}

impl Default for GaussianNbTrainer {
    fn default() -> Self {
        Self { variance_floor: 1e-9 }
    }
}

pub struct GaussianNbModel {
    classes: Vec<u8>,
    ln_priors: Vec<f64>,
    /// class x feature.
    means: Array2<f64>,
    vars: Array2<f64>,
}

impl GaussianNbModel {
    fn expected_width(&self) -> usize {
        self.means.ncols()
    }

    /// Per-class log joint density ln p(class) + ln p(x | class).
    pub fn log_joint(&self, row: ArrayView1<f64>) -> Vec<f64> {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.classes
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let mut ll = self.ln_priors[k];
                for j in 0..self.expected_width() {
                    let var = self.vars[[k, j]];
                    let d = row[j] - self.means[[k, j]];
                    ll += -0.5 * (ln_2pi + var.ln()) - d * d / (2.0 * var);
                }
                ll
            })
            .collect()
    }

    /// Normalised posteriors (they sum to 1 by construction).
    pub fn posteriors(&self, row: ArrayView1<f64>) -> Vec<f64> {
        let lj = self.log_joint(row);
        let max = lj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = lj.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / sum).collect()
    }
}

impl Classifier for GaussianNbModel {
    fn kind(&self) -> &'static str {
        "gaussian_nb"
    }

    fn predict(&self, x: &Array2<f64>) -> Result<Vec<u8>, ClassifyError> {
        if x.ncols() != self.expected_width() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.expected_width(),
                got: x.ncols(),
            });
        }
        Ok(x.rows()
            .into_iter()
            .map(|row| argmax_lowest(&self.log_joint(row), &self.classes))
            .collect())
    }
}

impl GaussianNbTrainer {
    /// Concrete fit, exposed so the posterior accessors stay reachable.
    pub fn fit(&self, data: &LabeledDataset) -> Result<GaussianNbModel, ClassifyError> {
        if data.n_rows() == 0 {
            return Err(ClassifyError::EmptyDataset);
        }
        let classes = data.classes();
        if classes.len() < 2 {
            return Err(ClassifyError::SingleClass);
        }
        let (n, p) = data.x.dim();
        let k = classes.len();
        let mut counts = vec![0usize; k];
        let mut means = Array2::zeros((k, p));
        for (i, &label) in data.y.iter().enumerate() {
            let c = classes.iter().position(|&l| l == label).unwrap();
            counts[c] += 1;
            for j in 0..p {
                means[[c, j]] += data.x[[i, j]];
            }
        }
        for c in 0..k {
            for j in 0..p {
                means[[c, j]] /= counts[c] as f64;
            }
        }
        let mut vars: Array2<f64> = Array2::zeros((k, p));
        for (i, &label) in data.y.iter().enumerate() {
            let c = classes.iter().position(|&l| l == label).unwrap();
            for j in 0..p {
                let d = data.x[[i, j]] - means[[c, j]];
                vars[[c, j]] += d * d;
            }
        }
        for c in 0..k {
            for j in 0..p {
                vars[[c, j]] = (vars[[c, j]] / counts[c] as f64).max(self.variance_floor);
            }
        }
        let ln_priors = counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect();
        Ok(GaussianNbModel { classes, ln_priors, means, vars })
    }
}

impl ClassifierTrainer for GaussianNbTrainer {
    fn name(&self) -> &'static str {
        "gaussian_nb"
    }

    fn train(&self, data: &LabeledDataset, _seed: u64) -> Result<Box<dyn Classifier>, ClassifyError> {
        Ok(Box::new(self.fit(data)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{Modality, Provenance};
    use ndarray::array;

    fn dataset(x: Array2<f64>, y: Vec<u8>) -> LabeledDataset {
        let names = (0..x.ncols()).map(|i| format!("f{i}")).collect();
        LabeledDataset::new(x, y, names, Provenance::RawFused, Modality::All).unwrap()
    }

    #[test]
    fn posteriors_sum_to_one() {
        let x = array![
            [0.1, 0.2],
            [0.0, 0.3],
            [0.9, 1.1],
            [1.0, 0.8],
            [2.1, -0.4],
            [1.9, -0.6]
        ];
        let y = vec![1u8, 1, 3, 3, 5, 5];
        let model = GaussianNbTrainer::default().fit(&dataset(x.clone(), y)).unwrap();
        for row in x.rows() {
            let p = model.posteriors(row);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn argmax_matches_brute_force_log_density() {
        // Brute-force oracle: recompute the Gaussian log densities by hand.
        let x = array![
            [0.1, 0.2],
            [0.0, 0.3],
            [0.9, 1.1],
            [1.0, 0.8],
            [2.1, -0.4],
            [1.9, -0.6]
        ];
        let y = vec![1u8, 1, 3, 3, 5, 5];
        let data = dataset(x.clone(), y.clone());
        let model = GaussianNbTrainer::default().fit(&data).unwrap();
        let preds = model.predict(&x).unwrap();

        let classes = data.classes();
        for (i, row) in x.rows().into_iter().enumerate() {
            let mut best_class = 0u8;
            let mut best_ll = f64::NEG_INFINITY;
            for &c in &classes {
                let members: Vec<usize> =
                    y.iter().enumerate().filter(|(_, l)| **l == c).map(|(i, _)| i).collect();
                let nc = members.len() as f64;
                let mut ll = (nc / y.len() as f64).ln();
                for j in 0..2 {
                    let mean = members.iter().map(|&m| x[[m, j]]).sum::<f64>() / nc;
                    let var = (members.iter().map(|&m| (x[[m, j]] - mean).powi(2)).sum::<f64>()
                        / nc)
                        .max(1e-9);
                    let d = row[j] - mean;
                    ll += -0.5 * ((2.0 * std::f64::consts::PI * var).ln()) - d * d / (2.0 * var);
                }
                if ll > best_ll {
                    best_ll = ll;
                    best_class = c;
                }
            }
            assert_eq!(preds[i], best_class, "row {i}");
        }
    }

    #[test]
    fn variance_floor_handles_constant_features() {
        let x = array![[1.0, 0.0], [1.0, 0.1], [1.0, 5.0], [1.0, 5.2]];
        let y = vec![1u8, 1, 4, 4];
        let model = GaussianNbTrainer::default().fit(&dataset(x.clone(), y.clone())).unwrap();
        assert_eq!(model.predict(&x).unwrap(), y);
    }
}
