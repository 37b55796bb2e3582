//! Random forest: bootstrap-bagged CART trees with sqrt-p feature
//! subsampling per split and a lowest-class-tie-break majority vote.
//! Per-tree seeds derive from `(base seed, tree index)`, so tree order
//! never depends on scheduling.

use super::decision_tree::{Tree, TreeBuilder};
use super::{majority_label, Classifier, ClassifierTrainer, ClassifyError, LabeledDataset};
use crate::seed::derive_seed;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomForestTrainer {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features tried per split; `None` means `floor(sqrt(p)).max(1)`.
    pub mtry: Option<usize>,
}

impl Default for RandomForestTrainer {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: 12, mtry: None }
    }
}

pub struct RandomForestModel {
    trees: Vec<Tree>,
    n_features: usize,
}

impl Classifier for RandomForestModel {
    fn kind(&self) -> &'static str {
        "random_forest"
    }

    fn predict(&self, x: &Array2<f64>) -> Result<Vec<u8>, ClassifyError> {
        if x.ncols() != self.n_features {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                let slice = row.as_slice().expect("contiguous row");
                majority_label(self.trees.iter().map(|t| t.predict_row(slice)))
                    .expect("at least one tree")
            })
            .collect())
    }
}

impl RandomForestTrainer {
    pub fn fit(&self, data: &LabeledDataset, seed: u64) -> Result<RandomForestModel, ClassifyError> {
        if data.n_rows() == 0 {
            return Err(ClassifyError::EmptyDataset);
        }
        if data.classes().len() < 2 {
            return Err(ClassifyError::SingleClass);
        }
        let n = data.n_rows();
        let p = data.n_features();
        let mtry = self.mtry.unwrap_or_else(|| (p as f64).sqrt().floor() as usize).clamp(1, p);
        let builder = TreeBuilder { max_depth: self.max_depth, min_samples_split: 2, mtry: Some(mtry) };

        let mut trees = Vec::with_capacity(self.n_trees);
        for i in 0..self.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("tree:{i}")));
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            trees.push(builder.build(&data.x, &data.y, rows, &mut rng));
        }
        Ok(RandomForestModel { trees, n_features: p })
    }
}

impl ClassifierTrainer for RandomForestTrainer {
    fn name(&self) -> &'static str {
        "random_forest"
    }

    fn train(&self, data: &LabeledDataset, seed: u64) -> Result<Box<dyn Classifier>, ClassifyError> {
        Ok(Box::new(self.fit(data, seed)?))
    }
}
