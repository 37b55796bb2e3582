//! Seeded k-fold cross-validation and the modality ablation harness.

use super::{ClassifierTrainer, ClassifyError, EvalReport, LabeledDataset};
use crate::seed::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shuffled near-equal partition of `0..n` into `k` folds. Sizes differ by
/// at most one (the first `n mod k` folds are larger). A pure function of
/// `(n, k, seed)`, so separate calls with the same arguments assign rows
/// identically.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "folds"));
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let base = n / k;
    let rem = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < rem);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    folds
}

/// k-fold cross-validation: train on k-1 folds, test on the held-out one,
/// aggregate accuracies and the 5x5 confusion matrix. Per-fold model seeds
/// derive from `(seed, fold index)`.
pub fn kfold_cv(
    trainer: &dyn ClassifierTrainer,
    data: &LabeledDataset,
    k: usize,
    seed: u64,
) -> Result<EvalReport, ClassifyError> {
    if k < 2 {
        return Err(ClassifyError::InvalidFolds(k));
    }
    let n = data.n_rows();
    if n < k {
        return Err(ClassifyError::TooFewRows { rows: n, folds: k });
    }
    let folds = fold_indices(n, k, seed);

    let mut fold_accuracies = Vec::with_capacity(k);
    let mut confusion = [[0u32; 5]; 5];
    for (i, test_rows) in folds.iter().enumerate() {
        let train_rows: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let train = data.subset_rows(&train_rows);
        let test = data.subset_rows(test_rows);
        let model = trainer.train(&train, derive_seed(seed, &format!("fold:{i}")))?;
        let preds = model.predict(&test.x)?;
        let mut correct = 0usize;
        for (p, t) in preds.iter().zip(&test.y) {
            confusion[(*t - 1) as usize][(*p - 1) as usize] += 1;
            if p == t {
                correct += 1;
            }
        }
        fold_accuracies.push(correct as f64 / test.y.len() as f64);
    }

    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    let std_accuracy = (fold_accuracies
        .iter()
        .map(|a| (a - mean_accuracy) * (a - mean_accuracy))
        .sum::<f64>()
        / k as f64)
        .sqrt();
    Ok(EvalReport {
        model: trainer.name().to_string(),
        provenance: data.provenance,
        modality: data.modality,
        fold_accuracies,
        mean_accuracy,
        std_accuracy,
        confusion,
    })
}

/// Evaluate the same classifier on all-channel, pollution-only and
/// physiology-only datasets under identical fold assignments. The three
/// datasets must share rows and labels and differ only in columns.
pub fn modality_ablation(
    d_all: &LabeledDataset,
    d_pollution: &LabeledDataset,
    d_physio: &LabeledDataset,
    trainer: &dyn ClassifierTrainer,
    k: usize,
    seed: u64,
) -> Result<[EvalReport; 3], ClassifyError> {
    let n = d_all.n_rows();
    if d_pollution.n_rows() != n || d_physio.n_rows() != n {
        return Err(ClassifyError::RowMismatch);
    }
    if d_pollution.y != d_all.y || d_physio.y != d_all.y {
        return Err(ClassifyError::RowMismatch);
    }
    // fold_indices(n, k, seed) is pure, so the three runs share folds.
    Ok([
        kfold_cv(trainer, d_all, k, seed)?,
        kfold_cv(trainer, d_pollution, k, seed)?,
        kfold_cv(trainer, d_physio, k, seed)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{GaussianNbTrainer, Modality, Provenance};
    use ndarray::Array2;

    fn clustered(n: usize, informative: bool) -> LabeledDataset {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            let cls = (i % 5) as f64;
            let noise = ((i * 31 + j * 7) % 17) as f64 / 17.0;
            if informative {
                cls * 3.0 + noise
            } else {
                noise * 5.0
            }
        });
        let y: Vec<u8> = (0..n).map(|i| 1 + (i % 5) as u8).collect();
        LabeledDataset::new(
            x,
            y,
            vec!["a".into(), "b".into()],
            Provenance::RawFused,
            Modality::All,
        )
        .unwrap()
    }

    #[test]
    fn folds_are_disjoint_exhaustive_and_sized() {
        let folds = fold_indices(13_658, 10, 7);
        let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        assert_eq!(sizes, vec![1366, 1366, 1366, 1366, 1366, 1366, 1366, 1366, 1365, 1365]);
        let mut all: Vec<usize> = folds.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..13_658).collect::<Vec<_>>());
    }

    #[test]
    fn fold_assignment_is_pure_in_inputs() {
        assert_eq!(fold_indices(100, 10, 3), fold_indices(100, 10, 3));
        assert_ne!(fold_indices(100, 10, 3), fold_indices(100, 10, 4));
    }

    #[test]
    fn leave_one_out_fold_shape() {
        let folds = fold_indices(10, 10, 1);
        assert_eq!(folds.len(), 10);
        assert!(folds.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn cv_learns_informative_clusters() {
        let data = clustered(200, true);
        let report = kfold_cv(&GaussianNbTrainer::default(), &data, 10, 5).unwrap();
        assert!(report.mean_accuracy > 0.9, "got {}", report.mean_accuracy);
        assert_eq!(report.fold_accuracies.len(), 10);
        let total: u32 = report.confusion.iter().flatten().sum();
        assert_eq!(total, 200);
        // Row sums equal the per-class test counts (40 each here).
        for row in report.confusion {
            assert_eq!(row.iter().sum::<u32>(), 40);
        }
    }

    #[test]
    fn cv_rejects_bad_folds() {
        let data = clustered(5, true);
        assert!(matches!(
            kfold_cv(&GaussianNbTrainer::default(), &data, 1, 0),
            Err(ClassifyError::InvalidFolds(1))
        ));
        assert!(matches!(
            kfold_cv(&GaussianNbTrainer::default(), &data, 6, 0),
            Err(ClassifyError::TooFewRows { .. })
        ));
    }

    #[test]
    fn ablation_identical_inputs_identical_reports() {
        let data = clustered(100, true);
        let [a, b, c] =
            modality_ablation(&data, &data, &data, &GaussianNbTrainer::default(), 5, 9).unwrap();
        assert_eq!(a.fold_accuracies, b.fold_accuracies);
        assert_eq!(b.fold_accuracies, c.fold_accuracies);
        assert_eq!(a.confusion, c.confusion);
    }

    #[test]
    fn ablation_rejects_mismatched_rows() {
        let a = clustered(100, true);
        let b = clustered(90, true);
        assert!(matches!(
            modality_ablation(&a, &b, &a, &GaussianNbTrainer::default(), 5, 0),
            Err(ClassifyError::RowMismatch)
        ));
    }
}
