//! Statistical feature windows over the fused table: mean, median, max,
//! min, max-min, standard deviation and the two quartiles per channel.

use super::{majority_label, ClassifyError, LabeledDataset, Modality, Provenance};
use crate::align::FusedFrameTable;
use ndarray::Array2;

const STAT_NAMES: [&str; 8] = ["mean", "median", "max", "min", "range", "sd", "q1", "q3"];

/// Linear-interpolation quantile (type 7): `h = (n - 1) p` between order
/// statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

fn window_stats(values: &[f64]) -> [f64; 8] {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    [
        mean,
        quantile(&sorted, 0.5),
        max,
        min,
        max - min,
        sd,
        quantile(&sorted, 0.25),
        quantile(&sorted, 0.75),
    ]
}

/// Slide non-overlapping-or-strided windows over a labelled table and emit
/// 8 statistics per channel per window. The window label is the majority
/// valence (ties toward the lower valence); windows without any labelled
/// row, or with a channel that is entirely missing, are dropped.
pub fn statistical_features(
    table: &FusedFrameTable,
    window_s: u32,
    stride_s: u32,
) -> Result<LabeledDataset, ClassifyError> {
    if window_s < 2 {
        return Err(ClassifyError::InvalidWindow(format!(
            "window must be at least 2 s, got {window_s}"
        )));
    }
    if stride_s == 0 {
        return Err(ClassifyError::InvalidWindow("stride must be positive".into()));
    }
    let n_rows = table.n_rows();
    let window = window_s as usize;
    let stride = stride_s as usize;
    let n_channels = table.channels.len();

    let mut feature_rows: Vec<Vec<f64>> = Vec::new();
    let mut y: Vec<u8> = Vec::new();
    let mut start = 0usize;
    while start + window <= n_rows {
        let rows = start..start + window;
        let label = majority_label(rows.clone().filter_map(|r| table.labels[r]));
        if let Some(label) = label {
            let mut features = Vec::with_capacity(n_channels * 8);
            let mut complete = true;
            for col in &table.columns {
                let values: Vec<f64> = rows.clone().filter_map(|r| col[r]).collect();
                if values.is_empty() {
                    complete = false;
                    break;
                }
                features.extend_from_slice(&window_stats(&values));
            }
            if complete {
                feature_rows.push(features);
                y.push(label);
            }
        }
        start += stride;
    }
    if feature_rows.is_empty() {
        return Err(ClassifyError::NoLabeledRows);
    }

    let mut feature_names = Vec::with_capacity(n_channels * 8);
    for c in &table.channels {
        for stat in STAT_NAMES {
            feature_names.push(format!("{}_{stat}", c.name));
        }
    }
    let x = Array2::from_shape_fn((feature_rows.len(), n_channels * 8), |(i, j)| {
        feature_rows[i][j]
    });
    LabeledDataset::new(x, y, feature_names, Provenance::StatisticalFeatures, Modality::All)
}
