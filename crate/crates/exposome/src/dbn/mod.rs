//! Deep belief network: stacked restricted Boltzmann machines trained
//! greedily with single-step contrastive divergence.
//!
//! Layer k + 1 trains on the hidden activation probabilities of the frozen
//! layer k; features are read from the top hidden layer by a deterministic
//! mean-field forward pass. The only sampling happens for the first hidden
//! state inside a CD-1 step; the reconstruction and its hidden response use
//! probabilities (the mean-field variant, toggleable in config).

use crate::seed::derive_seed;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Serialized model format version.
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DbnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty training data")]
    EmptyData,
    #[error("invalid layer sizes: {0}")]
    InvalidSizes(String),
    #[error("model serialization: {0}")]
    Serialization(String),
}

/// Training hyperparameters, shared by every layer of the stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Use probabilities for the reconstruction and its hidden response
    /// (lower-variance CD-1) instead of sampling them.
    pub mean_field: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, epochs: 20, batch_size: 128, seed: 0, mean_field: true }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One RBM: weights `w` (visible x hidden), visible bias, hidden bias.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmLayer {
    pub w: Array2<f64>,
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
}

impl RbmLayer {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        Self {
            w: Array2::zeros((visible, hidden)),
            visible_bias: Array1::zeros(visible),
            hidden_bias: Array1::zeros(hidden),
        }
    }

    /// Gaussian init (mean 0, given sd) for weights, zero biases.
    pub fn random<R: Rng>(visible: usize, hidden: usize, sd: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, sd).expect("valid sd");
        let w = Array2::from_shape_fn((visible, hidden), |_| normal.sample(rng));
        Self { w, visible_bias: Array1::zeros(visible), hidden_bias: Array1::zeros(hidden) }
    }

    pub fn n_visible(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_hidden(&self) -> usize {
        self.w.ncols()
    }

    /// P(h_j | v) = sigma(b_j + sum_i w_ij v_i) per hidden unit.
    pub fn hidden_probs(&self, v: ArrayView1<f64>) -> Result<Array1<f64>, DbnError> {
        if v.len() != self.n_visible() {
            return Err(DbnError::DimensionMismatch { expected: self.n_visible(), got: v.len() });
        }
        let act = v.dot(&self.w) + &self.hidden_bias;
        Ok(act.mapv(sigmoid))
    }

    /// P(v_i | h) = sigma(a_i + sum_j w_ij h_j) per visible unit.
    pub fn visible_probs(&self, h: ArrayView1<f64>) -> Result<Array1<f64>, DbnError> {
        if h.len() != self.n_hidden() {
            return Err(DbnError::DimensionMismatch { expected: self.n_hidden(), got: h.len() });
        }
        let act = self.w.dot(&h) + &self.visible_bias;
        Ok(act.mapv(sigmoid))
    }

    /// Batch form of [`RbmLayer::hidden_probs`]: rows are visible vectors.
    pub fn hidden_probs_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, DbnError> {
        if x.ncols() != self.n_visible() {
            return Err(DbnError::DimensionMismatch { expected: self.n_visible(), got: x.ncols() });
        }
        let act = x.dot(&self.w) + &self.hidden_bias;
        Ok(act.mapv(sigmoid))
    }

    /// Batch form of [`RbmLayer::visible_probs`]: rows are hidden vectors.
    pub fn visible_probs_batch(&self, h: ArrayView2<f64>) -> Result<Array2<f64>, DbnError> {
        if h.ncols() != self.n_hidden() {
            return Err(DbnError::DimensionMismatch { expected: self.n_hidden(), got: h.ncols() });
        }
        let act = h.dot(&self.w.t()) + &self.visible_bias;
        Ok(act.mapv(sigmoid))
    }

    /// Free energy F(v) = -a.v - sum_j ln(1 + exp(b_j + (w^T v)_j)).
    pub fn free_energy(&self, v: ArrayView1<f64>) -> Result<f64, DbnError> {
        if v.len() != self.n_visible() {
            return Err(DbnError::DimensionMismatch { expected: self.n_visible(), got: v.len() });
        }
        let act = v.dot(&self.w) + &self.hidden_bias;
        let hidden_term: f64 = act.iter().map(|x| (1.0 + x.exp()).ln()).sum();
        Ok(-v.dot(&self.visible_bias) - hidden_term)
    }
}

/// One CD-1 sweep over a batch.
///
/// The first hidden state is Bernoulli-sampled and drives the
/// reconstruction `v1`; the correlation statistics use the activation
/// probabilities (the low-variance form of CD-1), and `v1`/`h1` stay as
/// probabilities when `mean_field` is set. The update, averaged over the
/// batch:
///
/// ```text
/// dW = rate * (<v0 h0^T> - <v1 h1^T>)
/// da = rate * <v0 - v1>
/// db = rate * <h0 - h1>
/// ```
///
/// Returns the updated layer and the mean squared reconstruction error.
pub fn cd1_step<R: Rng>(
    layer: &RbmLayer,
    batch: ArrayView2<f64>,
    rate: f64,
    rng: &mut R,
    mean_field: bool,
) -> Result<(RbmLayer, f64), DbnError> {
    let n = batch.nrows();
    if n == 0 {
        return Err(DbnError::EmptyBatch);
    }
    if batch.ncols() != layer.n_visible() {
        return Err(DbnError::DimensionMismatch {
            expected: layer.n_visible(),
            got: batch.ncols(),
        });
    }

    let h0_probs = layer.hidden_probs_batch(batch)?;
    // Bernoulli sample of the first hidden state, row-major draw order.
    let mut h0_sample = h0_probs.clone();
    for v in h0_sample.iter_mut() {
        *v = if rng.random::<f64>() < *v { 1.0 } else { 0.0 };
    }

    let v1_probs = layer.visible_probs_batch(h0_sample.view())?;
    let v1 = if mean_field {
        v1_probs
    } else {
        let mut v1 = v1_probs;
        for v in v1.iter_mut() {
            *v = if rng.random::<f64>() < *v { 1.0 } else { 0.0 };
        }
        v1
    };
    let h1_probs = layer.hidden_probs_batch(v1.view())?;
    let h1 = if mean_field {
        h1_probs
    } else {
        let mut h1 = h1_probs;
        for v in h1.iter_mut() {
            *v = if rng.random::<f64>() < *v { 1.0 } else { 0.0 };
        }
        h1
    };

    let scale = 1.0 / n as f64;
    let h0 = h0_probs;
    let positive = batch.t().dot(&h0);
    let negative = v1.t().dot(&h1);
    let dw = (positive - negative) * scale;
    let da = (&batch.sum_axis(Axis(0)) - &v1.sum_axis(Axis(0))) * scale;
    let db = (&h0.sum_axis(Axis(0)) - &h1.sum_axis(Axis(0))) * scale;

    let updated = RbmLayer {
        w: &layer.w + &(dw * rate),
        visible_bias: &layer.visible_bias + &(da * rate),
        hidden_bias: &layer.hidden_bias + &(db * rate),
    };

    let mut err = 0.0;
    for (x, y) in batch.iter().zip(v1.iter()) {
        err += (x - y) * (x - y);
    }
    err /= (n * layer.n_visible()) as f64;
    Ok((updated, err))
}

/// A trained stack plus the widths `[input, h1, ..., hk]` it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnModel {
    pub layers: Vec<RbmLayer>,
    pub layer_sizes: Vec<usize>,
    pub config: TrainConfig,
}

/// Default stack widths when none are configured:
/// `[input, ceil(2/3 input), ceil(1/3 input)]`.
pub fn default_hidden_sizes(input: usize) -> Vec<usize> {
    vec![input, (2 * input).div_ceil(3), input.div_ceil(3)]
}

/// Greedy layerwise training: the first RBM learns the data; each further
/// RBM learns the previous layer's hidden probabilities while earlier
/// layers stay frozen.
pub fn train_dbn(
    data: ArrayView2<f64>,
    cfg: &TrainConfig,
    sizes: &[usize],
) -> Result<DbnModel, DbnError> {
    if data.nrows() == 0 {
        return Err(DbnError::EmptyData);
    }
    if sizes.len() < 2 {
        return Err(DbnError::InvalidSizes(
            "need the input width plus at least one hidden layer".into(),
        ));
    }
    if sizes.contains(&0) {
        return Err(DbnError::InvalidSizes("layer widths must be positive".into()));
    }
    if sizes[0] != data.ncols() {
        return Err(DbnError::InvalidSizes(format!(
            "first size {} must match data width {}",
            sizes[0],
            data.ncols()
        )));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(DbnError::InvalidSizes("epochs and batch_size must be positive".into()));
    }

    let mut layers = Vec::with_capacity(sizes.len() - 1);
    let mut input = data.to_owned();
    for (k, pair) in sizes.windows(2).enumerate() {
        let (visible, hidden) = (pair[0], pair[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("layer:{k}")));
        let mut layer = RbmLayer::random(visible, hidden, 0.01, &mut rng);

        let n = input.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        for _epoch in 0..cfg.epochs {
            // Fisher-Yates shuffle from the layer's own stream.
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            let mut start = 0;
            while start < n {
                let end = (start + cfg.batch_size).min(n);
                let mut batch = Array2::zeros((end - start, visible));
                for (bi, &row) in order[start..end].iter().enumerate() {
                    batch.row_mut(bi).assign(&input.row(row));
                }
                let (updated, _err) =
                    cd1_step(&layer, batch.view(), cfg.learning_rate, &mut rng, cfg.mean_field)?;
                layer = updated;
                start = end;
            }
        }

        // Frozen layer's activations feed the next RBM.
        input = layer.hidden_probs_batch(input.view())?;
        layers.push(layer);
    }

    Ok(DbnModel { layers, layer_sizes: sizes.to_vec(), config: *cfg })
}

impl DbnModel {
    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn feature_width(&self) -> usize {
        *self.layer_sizes.last().expect("at least two sizes")
    }

    /// Deterministic forward pass of hidden probabilities through every
    /// layer; output width is the top layer size.
    pub fn extract_features(&self, data: ArrayView2<f64>) -> Result<Array2<f64>, DbnError> {
        if data.ncols() != self.input_width() {
            return Err(DbnError::DimensionMismatch {
                expected: self.input_width(),
                got: data.ncols(),
            });
        }
        let mut current = data.to_owned();
        for layer in &self.layers {
            current = layer.hidden_probs_batch(current.view())?;
        }
        Ok(current)
    }

    /// Versioned JSON document: layer sizes, row-major weights, biases and
    /// the training config.
    pub fn to_json(&self) -> String {
        let layers: Vec<serde_json::Value> = self
            .layers
            .iter()
            .map(|l| {
                serde_json::json!({
                    "visible": l.n_visible(),
                    "hidden": l.n_hidden(),
                    "w": l.w.iter().copied().collect::<Vec<f64>>(),
                    "visible_bias": l.visible_bias.to_vec(),
                    "hidden_bias": l.hidden_bias.to_vec(),
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "version": MODEL_VERSION,
            "layer_sizes": self.layer_sizes,
            "config": self.config,
            "layers": layers,
        }))
        .expect("model serialization")
    }

    pub fn from_json(doc: &str) -> Result<Self, DbnError> {
        let v: serde_json::Value =
            serde_json::from_str(doc).map_err(|e| DbnError::Serialization(e.to_string()))?;
        let version = v["version"].as_u64().unwrap_or(0);
        if version != MODEL_VERSION as u64 {
            return Err(DbnError::Serialization(format!(
                "unsupported model version {version}"
            )));
        }
        let layer_sizes: Vec<usize> = serde_json::from_value(v["layer_sizes"].clone())
            .map_err(|e| DbnError::Serialization(e.to_string()))?;
        let config: TrainConfig = serde_json::from_value(v["config"].clone())
            .map_err(|e| DbnError::Serialization(e.to_string()))?;
        let raw = v["layers"]
            .as_array()
            .ok_or_else(|| DbnError::Serialization("missing layers".into()))?;
        let mut layers = Vec::with_capacity(raw.len());
        for l in raw {
            let visible = l["visible"].as_u64().unwrap_or(0) as usize;
            let hidden = l["hidden"].as_u64().unwrap_or(0) as usize;
            let w: Vec<f64> = serde_json::from_value(l["w"].clone())
                .map_err(|e| DbnError::Serialization(e.to_string()))?;
            if w.len() != visible * hidden {
                return Err(DbnError::Serialization("weight array length mismatch".into()));
            }
            let visible_bias: Vec<f64> = serde_json::from_value(l["visible_bias"].clone())
                .map_err(|e| DbnError::Serialization(e.to_string()))?;
            let hidden_bias: Vec<f64> = serde_json::from_value(l["hidden_bias"].clone())
                .map_err(|e| DbnError::Serialization(e.to_string()))?;
            layers.push(RbmLayer {
                w: Array2::from_shape_vec((visible, hidden), w)
                    .map_err(|e| DbnError::Serialization(e.to_string()))?,
                visible_bias: Array1::from_vec(visible_bias),
                hidden_bias: Array1::from_vec(hidden_bias),
            });
        }
        Ok(Self { layers, layer_sizes, config })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn zero_parameters_give_exactly_half() {
        let layer = RbmLayer::zeros(3, 4);
        let h = layer.hidden_probs(array![0.2, 0.9, 0.5].view()).unwrap();
        assert!(h.iter().all(|&p| p == 0.5));
        let v = layer.visible_probs(array![1.0, 0.0, 1.0, 0.5].view()).unwrap();
        assert!(v.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn hidden_probs_hand_case() {
        // W = [1, 1]^T as a 2x1 matrix, b = [-2], v = [1, 1] -> sigma(0).
        let layer = RbmLayer {
            w: array![[1.0], [1.0]],
            visible_bias: Array1::zeros(2),
            hidden_bias: array![-2.0],
        };
        let h = layer.hidden_probs(array![1.0, 1.0].view()).unwrap();
        assert_eq!(h[0], 0.5);
    }

    #[test]
    fn visible_probs_hand_case() {
        // m=1, n=2, W = [0.5, -0.5], a = [0.3], h = [1, 1] -> sigma(0.3).
        let layer = RbmLayer {
            w: array![[0.5, -0.5]],
            visible_bias: array![0.3],
            hidden_bias: Array1::zeros(2),
        };
        let v = layer.visible_probs(array![1.0, 1.0].view()).unwrap();
        assert!((v[0] - sigmoid(0.3)).abs() < 1e-15);
        assert!((v[0] - 0.574442516811659).abs() < 1e-12);
    }

    #[test]
    fn saturated_bias_drives_probability_to_one() {
        let layer = RbmLayer {
            w: Array2::zeros((2, 1)),
            visible_bias: Array1::zeros(2),
            hidden_bias: array![20.0],
        };
        let h = layer.hidden_probs(array![0.0, 0.0].view()).unwrap();
        assert!((h[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn transpose_symmetry_of_activations() {
        let layer = RbmLayer {
            w: array![[0.25, -0.75], [1.5, 0.5], [-0.1, 0.9]],
            visible_bias: array![0.1, -0.2, 0.3],
            hidden_bias: array![-0.4, 0.6],
        };
        let flipped = RbmLayer {
            w: layer.w.t().to_owned(),
            visible_bias: layer.hidden_bias.clone(),
            hidden_bias: layer.visible_bias.clone(),
        };
        let v = array![0.3, 0.8];
        let a = flipped.hidden_probs(v.view()).unwrap();
        let b = layer.visible_probs(v.view()).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_detected() {
        let layer = RbmLayer::zeros(3, 2);
        assert!(layer.hidden_probs(array![0.1, 0.2].view()).is_err());
        assert!(layer.visible_probs(array![0.1].view()).is_err());
        let model = DbnModel { layers: vec![layer], layer_sizes: vec![3, 2], config: TrainConfig::default() };
        assert!(model.extract_features(Array2::zeros((1, 4)).view()).is_err());
    }

    #[test]
    fn zero_rate_leaves_layer_bitwise_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let layer = RbmLayer::random(4, 3, 0.01, &mut rng);
        let batch = Array2::from_shape_fn((8, 4), |(i, j)| ((i * 7 + j) % 10) as f64 / 10.0);
        let (updated, _) = cd1_step(&layer, batch.view(), 0.0, &mut rng, true).unwrap();
        assert_eq!(updated, layer);
    }

    #[test]
    fn cd1_deterministic_for_fixed_seed() {
        let layer = RbmLayer::zeros(3, 2);
        let batch = array![[0.0, 1.0, 0.5], [1.0, 0.0, 0.25]];
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            cd1_step(&layer, batch.view(), 0.1, &mut rng, true).unwrap()
        };
        let (a, ea) = run();
        let (b, eb) = run();
        assert_eq!(a, b);
        assert_eq!(ea, eb);
    }

    #[test]
    fn cd1_rejects_empty_batch() {
        let layer = RbmLayer::zeros(2, 2);
        let batch = Array2::zeros((0, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            cd1_step(&layer, batch.view(), 0.1, &mut rng, true),
            Err(DbnError::EmptyBatch)
        ));
    }

    #[test]
    fn training_shapes_follow_sizes() {
        let data = Array2::from_shape_fn((40, 12), |(i, j)| ((i + j) % 5) as f64 / 4.0);
        let cfg = TrainConfig { epochs: 2, batch_size: 16, seed: 3, ..TrainConfig::default() };
        let model = train_dbn(data.view(), &cfg, &[12, 8, 4]).unwrap();
        assert_eq!(model.layers.len(), 2);
        assert_eq!(model.layers[0].w.dim(), (12, 8));
        assert_eq!(model.layers[1].w.dim(), (8, 4));
        let features = model.extract_features(data.view()).unwrap();
        assert_eq!(features.dim(), (40, 4));
        assert!(features.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn training_is_deterministic() {
        let data = Array2::from_shape_fn((30, 6), |(i, j)| ((i * 3 + j) % 7) as f64 / 6.0);
        let cfg = TrainConfig { epochs: 3, batch_size: 8, seed: 11, ..TrainConfig::default() };
        let a = train_dbn(data.view(), &cfg, &[6, 4]).unwrap();
        let b = train_dbn(data.view(), &cfg, &[6, 4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stacking_freezes_lower_layers() {
        let data = Array2::from_shape_fn((30, 6), |(i, j)| ((i * 3 + j) % 7) as f64 / 6.0);
        let cfg = TrainConfig { epochs: 3, batch_size: 8, seed: 11, ..TrainConfig::default() };
        let shallow = train_dbn(data.view(), &cfg, &[6, 4]).unwrap();
        let deep = train_dbn(data.view(), &cfg, &[6, 4, 2]).unwrap();
        assert_eq!(shallow.layers[0], deep.layers[0]);
    }

    #[test]
    fn invalid_sizes_rejected() {
        let data = Array2::zeros((5, 4));
        let cfg = TrainConfig::default();
        assert!(train_dbn(data.view(), &cfg, &[4]).is_err());
        assert!(train_dbn(data.view(), &cfg, &[4, 0]).is_err());
        assert!(train_dbn(data.view(), &cfg, &[3, 2]).is_err());
        assert!(train_dbn(Array2::zeros((0, 4)).view(), &cfg, &[4, 2]).is_err());
    }

    #[test]
    fn default_sizes_follow_two_thirds_rule() {
        assert_eq!(default_hidden_sizes(12), vec![12, 8, 4]);
        assert_eq!(default_hidden_sizes(14), vec![14, 10, 5]);
        assert_eq!(default_hidden_sizes(5), vec![5, 4, 2]);
    }

    #[test]
    fn features_match_layerwise_composition() {
        // Independent recomposition: apply sigmoid affine maps by hand.
        let data = Array2::from_shape_fn((10, 5), |(i, j)| ((i + 2 * j) % 9) as f64 / 8.0);
        let cfg = TrainConfig { epochs: 2, batch_size: 4, seed: 21, ..TrainConfig::default() };
        let model = train_dbn(data.view(), &cfg, &[5, 3, 2]).unwrap();
        let features = model.extract_features(data.view()).unwrap();
        for row in 0..data.nrows() {
            let mut v: Vec<f64> = data.row(row).to_vec();
            for layer in &model.layers {
                let mut next = vec![0.0; layer.n_hidden()];
                for (j, slot) in next.iter_mut().enumerate() {
                    let mut act = layer.hidden_bias[j];
                    for (i, x) in v.iter().enumerate() {
                        act += layer.w[[i, j]] * x;
                    }
                    *slot = 1.0 / (1.0 + (-act).exp());
                }
                v = next;
            }
            for (j, expect) in v.iter().enumerate() {
                assert!((features[[row, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn model_json_round_trip() {
        let data = Array2::from_shape_fn((12, 4), |(i, j)| ((i + j) % 3) as f64 / 2.0);
        let cfg = TrainConfig { epochs: 1, batch_size: 4, seed: 5, ..TrainConfig::default() };
        let model = train_dbn(data.view(), &cfg, &[4, 2]).unwrap();
        let doc = model.to_json();
        let back = DbnModel::from_json(&doc).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn probabilities_stay_bounded_under_many_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut layer = RbmLayer::random(6, 4, 0.01, &mut rng);
        let data = Array2::from_shape_fn((16, 6), |(i, j)| ((i * 5 + j * 3) % 11) as f64 / 10.0);
        for step in 0..1000 {
            let rate = 0.05 + 0.9 * ((step % 10) as f64 / 10.0); // rates up to <= 1
            let (updated, err) = cd1_step(&layer, data.view(), rate, &mut rng, true).unwrap();
            layer = updated;
            assert!(err.is_finite());
        }
        let h = layer.hidden_probs_batch(data.view()).unwrap();
        assert!(h.iter().all(|&p| p.is_finite() && p > 0.0 && p < 1.0));
        assert!(layer.w.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn single_pattern_training_lowers_its_free_energy() {
        // 2-visible / 2-hidden RBM trained on one repeated pattern: that
        // pattern ends with the lowest free energy of all four states.
        let pattern = array![[1.0, 0.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut layer = RbmLayer::random(2, 2, 0.01, &mut rng);
        for _ in 0..500 {
            let (updated, _) = cd1_step(&layer, pattern.view(), 0.2, &mut rng, true).unwrap();
            layer = updated;
        }
        let f = |a: f64, b: f64| layer.free_energy(array![a, b].view()).unwrap();
        let trained = f(1.0, 0.0);
        for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            assert!(
                trained < f(a, b),
                "free energy of trained pattern should undercut ({a},{b})"
            );
        }
    }
}
