//! CART-style decision tree with Gini impurity and midpoint thresholds.
//!
//! The builder doubles as the forest's base learner: the forest passes a
//! per-split feature subsample size and an RNG; the plain tree scans every
//! feature and needs no randomness.

use super::{majority_label, Classifier, ClassifierTrainer, ClassifyError, LabeledDataset};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct DecisionTreeTrainer {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for DecisionTreeTrainer {
    fn default() -> Self {
        Self { max_depth: 12, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { label: u8 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { label } => return *label,
                Node::Split { feature, threshold, left, right } => {
                    idx = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

/// Shared CART construction. `mtry` limits each split to a random feature
/// subsample (the forest's sqrt-p rule); `None` scans every feature.
pub(crate) struct TreeBuilder {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub mtry: Option<usize>,
}

impl TreeBuilder {
    pub fn build(
        &self,
        x: &Array2<f64>,
        y: &[u8],
        rows: Vec<usize>,
        rng: &mut ChaCha8Rng,
    ) -> Tree {
        let mut tree = Tree { nodes: Vec::new(), n_features: x.ncols() };
        self.grow(x, y, rows, 0, &mut tree, rng);
        tree
    }

    fn grow(
        &self,
        x: &Array2<f64>,
        y: &[u8],
        rows: Vec<usize>,
        depth: usize,
        tree: &mut Tree,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let label = majority_label(rows.iter().map(|&r| y[r])).expect("non-empty node");
        let parent_gini = gini(rows.iter().map(|&r| y[r]), rows.len());
        let splittable = depth < self.max_depth
            && rows.len() >= self.min_samples_split
            && parent_gini > 0.0;
        if !splittable {
            tree.nodes.push(Node::Leaf { label });
            return tree.nodes.len() - 1;
        }

        let features = self.candidate_features(x.ncols(), rng);
        let mut best: Option<(f64, usize, f64)> = None; // (weighted gini, feature, threshold)
        let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(rows.len());
        for &feature in &features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (x[[r, feature]], y[r])));
            sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let n = sorted.len();

            // Left class counts accumulate as the scan sweeps boundaries.
            let mut left = [0usize; 6];
            let mut right = [0usize; 6];
            for &(_, l) in sorted.iter() {
                right[l as usize] += 1;
            }
            for i in 1..n {
                let l = sorted[i - 1].1 as usize;
                left[l] += 1;
                right[l] -= 1;
                if sorted[i].0 == sorted[i - 1].0 {
                    continue;
                }
                let gl = gini_counts(&left, i);
                let gr = gini_counts(&right, n - i);
                let weighted = (i as f64 * gl + (n - i) as f64 * gr) / n as f64;
                if best.as_ref().is_none_or(|(b, _, _)| weighted < *b) {
                    let threshold = 0.5 * (sorted[i - 1].0 + sorted[i].0);
                    best = Some((weighted, feature, threshold));
                }
            }
        }

        // Gini is concave, so the best boundary never increases weighted
        // impurity; zero-gain splits are kept (they are what lets a tree
        // memorise XOR-like patterns) and recursion still terminates
        // because both children shrink.
        match best {
            Some((_weighted, feature, threshold)) => {
                let (mut lrows, mut rrows) = (Vec::new(), Vec::new());
                for &r in &rows {
                    if x[[r, feature]] <= threshold {
                        lrows.push(r);
                    } else {
                        rrows.push(r);
                    }
                }
                if lrows.is_empty() || rrows.is_empty() {
                    tree.nodes.push(Node::Leaf { label });
                    return tree.nodes.len() - 1;
                }
                let idx = tree.nodes.len();
                tree.nodes.push(Node::Leaf { label }); // placeholder
                let left = self.grow(x, y, lrows, depth + 1, tree, rng);
                let right = self.grow(x, y, rrows, depth + 1, tree, rng);
                tree.nodes[idx] = Node::Split { feature, threshold, left, right };
                idx
            }
            None => {
                tree.nodes.push(Node::Leaf { label });
                tree.nodes.len() - 1
            }
        }
    }

    fn candidate_features(&self, p: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        match self.mtry {
            None => (0..p).collect(),
            Some(m) => {
                // Partial Fisher-Yates draw of m distinct features.
                let m = m.clamp(1, p);
                let mut idx: Vec<usize> = (0..p).collect();
                for i in 0..m {
                    let j = rng.random_range(i..p);
                    idx.swap(i, j);
                }
                idx.truncate(m);
                idx.sort_unstable();
                idx
            }
        }
    }
}

fn gini(labels: impl Iterator<Item = u8>, n: usize) -> f64 {
    let mut counts = [0usize; 6];
    for l in labels {
        counts[l as usize] += 1;
    }
    gini_counts(&counts, n)
}

fn gini_counts(counts: &[usize; 6], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut sum_sq = 0.0;
    for &c in counts.iter() {
        let p = c as f64 / n as f64;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

pub struct DecisionTreeModel {
    tree: Tree,
}

impl Classifier for DecisionTreeModel {
    fn kind(&self) -> &'static str {
        "decision_tree"
    }

    fn predict(&self, x: &Array2<f64>) -> Result<Vec<u8>, ClassifyError> {
        if x.ncols() != self.tree.n_features() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.tree.n_features(),
                got: x.ncols(),
            });
        }
        Ok(x.rows()
            .into_iter()
            .map(|row| self.tree.predict_row(row.as_slice().expect("contiguous row")))
            .collect())
    }
}

impl DecisionTreeTrainer {
    pub fn fit(&self, data: &LabeledDataset) -> Result<DecisionTreeModel, ClassifyError> {
        if data.n_rows() == 0 {
            return Err(ClassifyError::EmptyDataset);
        }
        if data.classes().len() < 2 {
            return Err(ClassifyError::SingleClass);
        }
        let builder = TreeBuilder {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            mtry: None,
        };
        // No randomness on this path; the stream is never drawn from.
        let mut rng = rand::SeedableRng::seed_from_u64(0);
        let rows: Vec<usize> = (0..data.n_rows()).collect();
        let tree = builder.build(&data.x, &data.y, rows, &mut rng);
        Ok(DecisionTreeModel { tree })
    }
}

impl ClassifierTrainer for DecisionTreeTrainer {
    fn name(&self) -> &'static str {
        "decision_tree"
    }

    fn train(&self, data: &LabeledDataset, _seed: u64) -> Result<Box<dyn Classifier>, ClassifyError> {
        Ok(Box::new(self.fit(data)?))
    }
}
