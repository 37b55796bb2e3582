//! Exploratory statistics on the fused table: Pearson correlation matrix,
//! PCA via Jacobi eigendecomposition of the covariance matrix, multivariate
//! OLS with t-based inference, and normal Q-Q data for residual diagnostics.
//!
//! Missing-data policy: pairwise deletion for correlations, listwise
//! deletion for PCA and OLS.

pub mod linalg;
pub mod special;

use crate::align::FusedFrameTable;
use linalg::{invert, jacobi_eigen_sym};
use ndarray::{Array1, Array2};
use special::{normal_quantile, two_sided_p};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("unknown channel '{0}'")]
    UnknownChannel(String),
    #[error("insufficient data: needed {needed} complete rows, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("zero variance in '{0}'")]
    ZeroVariance(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
}

/// Symmetric matrix of Pearson coefficients over the named channels.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub channels: Vec<String>,
    pub r: Array2<f64>,
}

impl CorrelationMatrix {
    /// CSV matrix form: header row of channel names, one row per channel.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel");
        for c in &self.channels {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (i, c) in self.channels.iter().enumerate() {
            out.push_str(c);
            for j in 0..self.channels.len() {
                out.push_str(&format!(",{}", self.r[[i, j]]));
            }
            out.push('\n');
        }
        out
    }
}

/// Gather listwise-complete rows of the named channels as a dense matrix.
/// Returns the surviving row indices alongside the data.
pub fn complete_matrix(
    table: &FusedFrameTable,
    channels: &[String],
) -> Result<(Vec<usize>, Array2<f64>), StatsError> {
    let cols: Vec<&[Option<f64>]> = channels
        .iter()
        .map(|name| {
            table
                .column(name)
                .ok_or_else(|| StatsError::UnknownChannel(name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    'row: for r in 0..table.n_rows() {
        for col in &cols {
            if col[r].is_none() {
                continue 'row;
            }
        }
        rows.push(r);
    }
    let mut data = Array2::zeros((rows.len(), channels.len()));
    for (i, &r) in rows.iter().enumerate() {
        for (j, col) in cols.iter().enumerate() {
            data[[i, j]] = col[r].unwrap();
        }
    }
    Ok((rows, data))
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Pearson correlation matrix with pairwise deletion of missing rows.
pub fn pearson_matrix(
    table: &FusedFrameTable,
    channels: &[String],
) -> Result<CorrelationMatrix, StatsError> {
    let cols: Vec<&[Option<f64>]> = channels
        .iter()
        .map(|name| {
            table
                .column(name)
                .ok_or_else(|| StatsError::UnknownChannel(name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let k = channels.len();
    let mut r = Array2::zeros((k, k));
    for i in 0..k {
        r[[i, i]] = 1.0;
        for j in i + 1..k {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (x, y) in cols[i].iter().zip(cols[j]) {
                if let (Some(x), Some(y)) = (x, y) {
                    xs.push(*x);
                    ys.push(*y);
                }
            }
            if xs.len() < 2 {
                return Err(StatsError::InsufficientData { needed: 2, got: xs.len() });
            }
            let rho = pearson(&xs, &ys).ok_or_else(|| {
                // Report whichever side of the pair is flat on these rows.
                let flat = if xs.iter().all(|v| *v == xs[0]) {
                    channels[i].clone()
                } else {
                    channels[j].clone()
                };
                StatsError::ZeroVariance(flat)
            })?;
            r[[i, j]] = rho;
            r[[j, i]] = rho;
        }
    }
    Ok(CorrelationMatrix { channels: channels.to_vec(), r })
}

/// PCA over the covariance of the (already min–max scaled) columns.
#[derive(Debug, Clone)]
pub struct PcaResult {
    pub channels: Vec<String>,
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// `eigenvalues / total variance`; sums to 1.
    pub explained_ratio: Vec<f64>,
    /// channels x components, columns orthonormal; the largest-magnitude
    /// entry of each column is positive.
    pub loadings: Array2<f64>,
    /// rows x components projection of the centered data.
    pub scores: Array2<f64>,
    /// Squared loadings: per-variable contribution to each component.
    pub contributions: Array2<f64>,
}

impl PcaResult {
    /// Contribution of each variable across components weighted by the
    /// component's explained share — the usual "importance" gradient.
    pub fn variable_importance(&self) -> Vec<f64> {
        let k = self.channels.len();
        (0..k)
            .map(|i| {
                self.explained_ratio
                    .iter()
                    .enumerate()
                    .map(|(c, ratio)| self.contributions[[i, c]] * ratio)
                    .sum()
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let loadings: Vec<Vec<f64>> = (0..self.channels.len())
            .map(|i| (0..self.channels.len()).map(|c| self.loadings[[i, c]]).collect())
            .collect();
        let contributions: Vec<Vec<f64>> = (0..self.channels.len())
            .map(|i| (0..self.channels.len()).map(|c| self.contributions[[i, c]]).collect())
            .collect();
        serde_json::json!({
            "channels": self.channels,
            "eigenvalues": self.eigenvalues,
            "explained_ratio": self.explained_ratio,
            "loadings": loadings,
            "contributions": contributions,
            "variable_importance": self.variable_importance(),
        })
    }
}

/// Principal component analysis with listwise deletion.
pub fn pca(table: &FusedFrameTable, channels: &[String]) -> Result<PcaResult, StatsError> {
    let (_, data) = complete_matrix(table, channels)?;
    let n = data.nrows();
    let k = channels.len();
    if n < k + 1 {
        return Err(StatsError::InsufficientData { needed: k + 1, got: n });
    }
    let mean = data.mean_axis(ndarray::Axis(0)).expect("n > 0");
    let centered = &data - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);

    let (vals, vecs) = jacobi_eigen_sym(&cov);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());

    let mut eigenvalues = Vec::with_capacity(k);
    let mut loadings = Array2::zeros((k, k));
    for (c, &idx) in order.iter().enumerate() {
        eigenvalues.push(vals[idx].max(0.0));
        // Sign convention: largest-magnitude entry positive.
        let mut col: Vec<f64> = (0..k).map(|i| vecs[[i, idx]]).collect();
        let lead = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if col[lead] < 0.0 {
            for v in &mut col {
                *v = -*v;
            }
        }
        for i in 0..k {
            loadings[[i, c]] = col[i];
        }
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(StatsError::ZeroVariance("all channels".into()));
    }
    let explained_ratio: Vec<f64> = eigenvalues.iter().map(|v| v / total).collect();
    let scores = centered.dot(&loadings);
    let contributions = loadings.mapv(|v| v * v);
    Ok(PcaResult {
        channels: channels.to_vec(),
        eigenvalues,
        explained_ratio,
        loadings,
        scores,
        contributions,
    })
}

/// Multivariate OLS fit of one response on named predictors.
#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub response: String,
    pub predictors: Vec<String>,
    /// Intercept first, then one coefficient per predictor.
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub r_squared: f64,
    pub df_residual: usize,
}

impl RegressionResult {
    /// The familiar four-column regression table: term, coefficient,
    /// standard error, t statistic, p-value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,Coefficients,Standard Error,t Stat,P-value\n");
        let mut terms = vec!["Intercept".to_string()];
        terms.extend(self.predictors.iter().cloned());
        for (i, term) in terms.iter().enumerate() {
            out.push_str(&format!(
                "{term},{},{},{},{}\n",
                self.coefficients[i], self.standard_errors[i], self.t_stats[i], self.p_values[i]
            ));
        }
        out
    }
}

/// Ordinary least squares via the normal equations, with standard errors
/// from the `sigma^2 (X^T X)^-1` diagonal and two-sided Student-t p-values.
pub fn ols_regress(
    table: &FusedFrameTable,
    response: &str,
    predictors: &[String],
) -> Result<RegressionResult, StatsError> {
    let mut names = vec![response.to_string()];
    names.extend(predictors.iter().cloned());
    let (_, data) = complete_matrix(table, &names)?;
    let n = data.nrows();
    let p = predictors.len();
    if n <= p + 1 {
        return Err(StatsError::InsufficientData { needed: p + 2, got: n });
    }

    let y = data.column(0).to_owned();
    let mut x = Array2::ones((n, p + 1));
    for j in 0..p {
        for i in 0..n {
            x[[i, j + 1]] = data[[i, j + 1]];
        }
    }

    let xtx = x.t().dot(&x);
    let xtx_inv = invert(&xtx, 1e-10).ok_or(StatsError::RankDeficient)?;
    let xty = x.t().dot(&y);
    let beta = xtx_inv.dot(&xty);

    let fitted = x.dot(&beta);
    let residuals: Array1<f64> = &y - &fitted;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let df = n - p - 1;
    let sigma2 = rss / df as f64;

    let mean_y = y.sum() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    if tss == 0.0 {
        return Err(StatsError::ZeroVariance(response.to_string()));
    }
    let r_squared = 1.0 - rss / tss;

    let mut standard_errors = Vec::with_capacity(p + 1);
    let mut t_stats = Vec::with_capacity(p + 1);
    let mut p_values = Vec::with_capacity(p + 1);
    for j in 0..=p {
        let se = (sigma2 * xtx_inv[[j, j]]).max(0.0).sqrt();
        let t = if se > 0.0 {
            beta[j] / se
        } else if beta[j] == 0.0 {
            0.0
        } else {
            beta[j].signum() * f64::INFINITY
        };
        standard_errors.push(se);
        t_stats.push(t);
        p_values.push(two_sided_p(t, df as f64));
    }

    Ok(RegressionResult {
        response: response.to_string(),
        predictors: predictors.to_vec(),
        coefficients: beta.to_vec(),
        standard_errors,
        t_stats,
        p_values,
        residuals: residuals.to_vec(),
        fitted: fitted.to_vec(),
        r_squared,
        df_residual: df,
    })
}

/// Normal Q-Q pairs: `(Phi^-1((i - 0.5) / n), standardized sorted residual)`.
pub fn qq_data(residuals: &[f64]) -> Result<Vec<(f64, f64)>, StatsError> {
    let n = residuals.len();
    if n < 3 {
        return Err(StatsError::InsufficientData { needed: 3, got: n });
    }
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let var = residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        return Err(StatsError::ZeroVariance("residuals".into()));
    }
    let sd = var.sqrt();
    let mut sorted: Vec<f64> = residuals.iter().map(|r| (r - mean) / sd).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, sample)| {
            let q = (i as f64 + 0.5) / n as f64;
            (normal_quantile(q), sample)
        })
        .collect())
}

/// Two-column CSV for Q-Q plots.
pub fn qq_to_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("theoretical_quantile,sample_quantile\n");
    for (t, s) in points {
        out.push_str(&format!("{t},{s}\n"));
    }
    out
}
