//! Synthetic session generator.
//!
//! Stands in for the unreleased study data: a latent pollution level drives
//! the environment channels, a coupling matrix maps the environment field
//! into the physiological channels, and a binned wellbeing score produces
//! the labels. The planted structure is returned next to the bundle so
//! every downstream statistic has a known ground truth.
//!
//! The pollution latent is an AR(1) walk plus an optional slow sinusoidal
//! sweep. The sweep guarantees the wellbeing score crosses all five bins
//! within one session; the AR part keeps neighbouring seconds from being
//! trivially identical. A second, independent body latent feeds only the
//! physiological channels and contributes a minor share of the wellbeing
//! score, so combining modalities genuinely beats either alone.

use super::{
    ChannelKind, ChannelSpec, GeoPoint, GeoTrace, IngestError, LabelEvent, RawSample, RawStream,
    SessionBundle,
};
use crate::seed::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

/// An environment channel: couples to the latent level directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvChannelCfg {
    pub name: String,
    pub unit: String,
    pub period_s: f64,
    /// Mean level of the channel's field.
    pub base: f64,
    /// Field response per unit of latent level.
    pub latent_gain: f64,
    /// Per-sample measurement noise (standard deviation).
    pub noise_sd: f64,
}

/// A physiological channel: couples to the environment *field* (not the
/// noisy sensor readings) through the coupling matrix, plus an own
/// response to the body latent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysioChannelCfg {
    pub name: String,
    pub unit: String,
    pub period_s: f64,
    pub base: f64,
    /// Response to the body latent (the physiology-only information).
    pub body_gain: f64,
    pub noise_sd: f64,
}

/// Waveform for channels outside the latent chain (movement, people count,
/// deliberately dead sensors).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ExtraSignal {
    /// Always the same value — the "no change during the experiment" case.
    Constant { value: f64 },
    /// Smoothed Gaussian walk, optionally rounded to whole numbers.
    Noisy { base: f64, sd: f64, smoothing: f64, round: bool },
    /// Sinusoid plus noise (walking-cadence accelerometer magnitude).
    Oscillating { base: f64, amp: f64, period_s: f64, noise_sd: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtraChannelCfg {
    pub name: String,
    pub unit: String,
    pub period_s: f64,
    pub kind: ChannelKind,
    pub signal: ExtraSignal,
}

/// Full recipe for one synthetic walk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub participant_id: String,
    /// Walk duration in seconds.
    pub duration_s: u32,
    /// Route corners as (lat, lon); walked at constant speed.
    pub waypoints: Vec<(f64, f64)>,
    /// Seconds between self-report label events (first event at t = 0).
    pub label_period_s: u32,
    /// AR(1) coefficient of the latent level, in [0, 1).
    pub latent_smoothing: f64,
    /// Stationary standard deviation of the AR(1) component.
    pub latent_ar_sd: f64,
    /// Amplitude of the slow deterministic sweep (0 disables it).
    pub latent_sweep_amp: f64,
    /// Period of the sweep in seconds.
    pub latent_sweep_period_s: f64,
    /// Standard deviation of the body latent's AR component.
    pub body_latent_sd: f64,
    /// AR(1) coefficient of the body latent.
    pub body_latent_smoothing: f64,
    /// Sweep amplitude of the body latent. A period incommensurate with
    /// the pollution sweep keeps the two latents decorrelated within one
    /// session instead of relying on chance.
    pub body_sweep_amp: f64,
    pub body_sweep_period_s: f64,
    /// Weight of the body latent in the wellbeing score
    /// (`score = -pollution + weight * body`).
    pub body_latent_weight: f64,
    pub env_channels: Vec<EnvChannelCfg>,
    pub physio_channels: Vec<PhysioChannelCfg>,
    /// Coupling matrix B, `physio_channels.len()` rows by
    /// `env_channels.len()` columns: row j maps centered environment
    /// fields onto physiological channel j.
    pub coupling: Vec<Vec<f64>>,
    pub extra_channels: Vec<ExtraChannelCfg>,
    /// Ascending thresholds binning the wellbeing score into valence 1..=5.
    pub label_bins: [f64; 4],
}

/// Normal-quintile thresholds: a unit-variance score covers all five bins.
pub fn default_label_bins() -> [f64; 4] {
    [-0.8416, -0.2533, 0.2533, 0.8416]
}

impl Default for SynthConfig {
    fn default() -> Self {
        let period_64hz = 1.0 / 64.0;
        Self {
            participant_id: "synthetic".into(),
            duration_s: 1500,
            waypoints: vec![
                (52.9120, -1.1870),
                (52.9133, -1.1855),
                (52.9141, -1.1836),
                (52.9130, -1.1818),
                (52.9114, -1.1829),
                (52.9107, -1.1853),
                (52.9120, -1.1870),
            ],
            label_period_s: 10,
            latent_smoothing: 0.985,
            latent_ar_sd: 0.45,
            latent_sweep_amp: 1.3,
            latent_sweep_period_s: 750.0,
            body_latent_sd: 0.35,
            body_latent_smoothing: 0.985,
            body_sweep_amp: 1.1,
            body_sweep_period_s: 470.0,
            body_latent_weight: 0.2,
            env_channels: vec![
                env("pm1", "ug/m3", 8.0, 2.0, 0.4),
                env("pm25", "ug/m3", 12.0, 3.0, 0.6),
                env("pm10", "ug/m3", 21.0, 5.0, 1.0),
                env("oxidised", "kohm", 120.0, 4.0, 8.0),
                env("reduced", "kohm", 450.0, -12.0, 25.0),
                env("nh3", "kohm", 80.0, 2.5, 5.0),
                env("noise", "db", 58.0, 1.0, 1.2),
            ],
            physio_channels: vec![
                PhysioChannelCfg { name: "eda".into(), unit: "us".into(), period_s: period_64hz, base: 2.5, body_gain: 0.5, noise_sd: 0.15 },
                PhysioChannelCfg { name: "hr".into(), unit: "bpm".into(), period_s: 1.0, base: 78.0, body_gain: 0.9, noise_sd: 1.5 },
                PhysioChannelCfg { name: "hrv".into(), unit: "ms".into(), period_s: period_64hz, base: 55.0, body_gain: -1.6, noise_sd: 3.0 },
                PhysioChannelCfg { name: "bvp".into(), unit: "au".into(), period_s: period_64hz, base: 0.0, body_gain: 0.3, noise_sd: 0.5 },
                PhysioChannelCfg { name: "temp".into(), unit: "degc".into(), period_s: period_64hz, base: 33.6, body_gain: 0.08, noise_sd: 0.05 },
            ],
            // Rows: eda, hr, hrv, bvp, temp. Columns follow env_channels.
            coupling: vec![
                vec![0.00, 0.50, 0.06, 0.010, 0.000, 0.00, 0.00],
                vec![0.00, 0.80, 0.00, 0.000, 0.000, 0.00, 0.40],
                vec![0.00, 0.00, -0.90, 0.000, 0.000, -0.25, 0.00],
                vec![0.00, 0.20, 0.00, 0.000, -0.002, 0.00, 0.00],
                vec![0.00, 0.01, 0.00, 0.001, 0.000, 0.00, 0.00],
            ],
            extra_channels: vec![
                ExtraChannelCfg {
                    name: "accel".into(),
                    unit: "m/s2".into(),
                    period_s: 0.1,
                    kind: ChannelKind::Motion,
                    signal: ExtraSignal::Oscillating { base: 9.8, amp: 1.5, period_s: 1.1, noise_sd: 0.3 },
                },
                ExtraChannelCfg {
                    name: "people_count".into(),
                    unit: "count".into(),
                    period_s: 20.0,
                    kind: ChannelKind::Context,
                    signal: ExtraSignal::Noisy { base: 4.0, sd: 2.0, smoothing: 0.8, round: true },
                },
                ExtraChannelCfg {
                    name: "co2".into(),
                    unit: "ppm".into(),
                    period_s: 20.0,
                    kind: ChannelKind::Environment,
                    signal: ExtraSignal::Constant { value: 412.0 },
                },
            ],
            label_bins: default_label_bins(),
        }
    }
}

fn env(name: &str, unit: &str, base: f64, latent_gain: f64, noise_sd: f64) -> EnvChannelCfg {
    EnvChannelCfg {
        name: name.into(),
        unit: unit.into(),
        period_s: 20.0,
        base,
        latent_gain,
        noise_sd,
    }
}

impl SynthConfig {
    /// Scale every coupling entry; `0.0` fully decouples physiology from
    /// the environment (labels then depend on pollution alone).
    pub fn with_coupling_scale(mut self, scale: f64) -> Self {
        for row in &mut self.coupling {
            for b in row.iter_mut() {
                *b *= scale;
            }
        }
        self
    }

    fn validate(&self) -> Result<(), IngestError> {
        if self.duration_s == 0 {
            return Err(IngestError::InvalidConfig("duration_s must be positive".into()));
        }
        if self.label_period_s == 0 {
            return Err(IngestError::InvalidConfig("label_period_s must be positive".into()));
        }
        if self.waypoints.len() < 2 {
            return Err(IngestError::InvalidConfig("need at least 2 waypoints".into()));
        }
        if !(0.0..1.0).contains(&self.latent_smoothing) {
            return Err(IngestError::InvalidConfig("latent_smoothing must be in [0,1)".into()));
        }
        if !(0.0..1.0).contains(&self.body_latent_smoothing) {
            return Err(IngestError::InvalidConfig(
                "body_latent_smoothing must be in [0,1)".into(),
            ));
        }
        if self.coupling.len() != self.physio_channels.len() {
            return Err(IngestError::InvalidConfig(format!(
                "coupling has {} rows, expected one per physio channel ({})",
                self.coupling.len(),
                self.physio_channels.len()
            )));
        }
        for row in &self.coupling {
            if row.len() != self.env_channels.len() {
                return Err(IngestError::InvalidConfig(format!(
                    "coupling row has {} columns, expected one per env channel ({})",
                    row.len(),
                    self.env_channels.len()
                )));
            }
        }
        let mut names = std::collections::HashSet::new();
        let periods = self
            .env_channels
            .iter()
            .map(|c| (c.name.as_str(), c.period_s))
            .chain(self.physio_channels.iter().map(|c| (c.name.as_str(), c.period_s)))
            .chain(self.extra_channels.iter().map(|c| (c.name.as_str(), c.period_s)));
        for (name, period) in periods {
            if !period.is_finite() || period < 0.001 {
                return Err(IngestError::InvalidConfig(format!(
                    "channel '{name}': period must be >= 1 ms, got {period}"
                )));
            }
            if !names.insert(name.to_string()) {
                return Err(IngestError::InvalidConfig(format!("duplicate channel name '{name}'")));
            }
        }
        Ok(())
    }
}

/// How one channel responds to the two latents.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelResponse {
    pub name: String,
    /// Response to the pollution latent (coupling-folded for physio).
    pub latent_gain: f64,
    /// Response to the body latent (zero for environment channels).
    pub body_gain: f64,
    /// Per-sample measurement noise sd.
    pub noise_sd: f64,
}

/// The planted generative structure, kept next to the generated bundle.
#[derive(Debug, Clone, Serialize)]
pub struct PlantedTruth {
    /// Pollution latent on the 1 Hz grid (index = second).
    pub latent: Vec<f64>,
    /// Body latent on the same grid.
    pub body_latent: Vec<f64>,
    /// Realized variances of the two latent series.
    pub latent_var: f64,
    pub body_latent_var: f64,
    pub channel_response: Vec<ChannelResponse>,
    pub coupling: Vec<Vec<f64>>,
    /// Weight of the body latent in the wellbeing score.
    pub body_latent_weight: f64,
    pub label_bins: [f64; 4],
}

impl PlantedTruth {
    fn response(&self, name: &str) -> Option<&ChannelResponse> {
        self.channel_response.iter().find(|r| r.name == name)
    }

    /// Closed-form Pearson correlation between two channels implied by the
    /// planted covariance: each channel is `gz * z + gw * w + noise` with
    /// independent latents and noise, so
    /// `r = (gz1 gz2 vz + gw1 gw2 vw) / (sd1 * sd2)` with the realized
    /// latent variances. Exact for channels sampled on the fused 1 Hz
    /// grid; resampling (window means, interpolation) moves the fused
    /// estimate slightly.
    pub fn analytic_correlation(&self, a: &str, b: &str) -> Option<f64> {
        let ra = self.response(a)?;
        let rb = self.response(b)?;
        let (vz, vw) = (self.latent_var, self.body_latent_var);
        let var = |r: &ChannelResponse| {
            r.latent_gain * r.latent_gain * vz
                + r.body_gain * r.body_gain * vw
                + r.noise_sd * r.noise_sd
        };
        let cov = ra.latent_gain * rb.latent_gain * vz + ra.body_gain * rb.body_gain * vw;
        let denom = (var(ra) * var(rb)).sqrt();
        if denom == 0.0 {
            return Some(0.0);
        }
        Some(cov / denom)
    }

    /// Wellbeing score at given latent levels.
    pub fn wellbeing_score(&self, z: f64, w: f64) -> f64 {
        -z + self.body_latent_weight * w
    }

    /// Valence implied by a wellbeing score (ascending bins).
    pub fn label_for_score(&self, score: f64) -> u8 {
        1 + self.label_bins.iter().filter(|&&b| score >= b).count() as u8
    }
}

/// A generated bundle plus its ground truth.
#[derive(Debug, Clone)]
pub struct SynthSession {
    pub bundle: SessionBundle,
    pub truth: PlantedTruth,
}

/// Generate a deterministic synthetic session. Identical `(cfg, seed)`
/// pairs produce bitwise-identical bundles.
pub fn generate_synthetic_session(
    cfg: &SynthConfig,
    seed: u64,
) -> Result<SynthSession, IngestError> {
    cfg.validate()?;
    let duration_ms = cfg.duration_s as i64 * 1000;

    let n_grid = cfg.duration_s as usize + 1;
    let grid_ar = |rng: &mut ChaCha8Rng, rho: f64, sd: f64| -> Vec<f64> {
        let innovation = (1.0 - rho * rho).sqrt() * sd;
        let first: f64 = StandardNormal.sample(rng);
        let mut value = first * sd;
        let mut series = Vec::with_capacity(n_grid);
        for k in 0..n_grid {
            if k > 0 {
                let step: f64 = StandardNormal.sample(rng);
                value = rho * value + innovation * step;
            }
            series.push(value);
        }
        series
    };
    let series_var = |series: &[f64]| -> f64 {
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        series.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / series.len() as f64
    };

    let add_sweep = |series: &mut [f64], amp: f64, period: f64, phase: f64| {
        if amp != 0.0 {
            for (k, z) in series.iter_mut().enumerate() {
                *z += amp * (2.0 * std::f64::consts::PI * k as f64 / period + phase).sin();
            }
        }
    };

    // Pollution latent: AR(1) plus the deterministic sweep.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "latent"));
    let mut latent = grid_ar(&mut rng, cfg.latent_smoothing, cfg.latent_ar_sd);
    add_sweep(&mut latent, cfg.latent_sweep_amp, cfg.latent_sweep_period_s, 0.0);
    let latent_var = series_var(&latent);

    // Body latent: independent, seen only by physiology. Its sweep runs at
    // an unrelated period with a seeded phase.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "body-latent"));
    let phase: f64 = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
    let mut body_latent = grid_ar(&mut rng, cfg.body_latent_smoothing, cfg.body_latent_sd);
    add_sweep(&mut body_latent, cfg.body_sweep_amp, cfg.body_sweep_period_s, phase);
    let body_latent_var = series_var(&body_latent);

    // Piecewise-linear interpolation between grid seconds.
    let grid_at = |series: &[f64], t_ms: i64| -> f64 {
        let k = (t_ms / 1000) as usize;
        let frac = (t_ms % 1000) as f64 / 1000.0;
        if k + 1 < series.len() {
            series[k] * (1.0 - frac) + series[k + 1] * frac
        } else {
            series[series.len() - 1]
        }
    };
    let z_at = |t_ms: i64| grid_at(&latent, t_ms);
    let w_at = |t_ms: i64| grid_at(&body_latent, t_ms);

    let sample_times = |period_s: f64| -> Vec<i64> {
        let period_ms = period_s * 1000.0;
        let mut times = Vec::new();
        let mut j = 0u64;
        loop {
            let t = (j as f64 * period_ms).round() as i64;
            if t > duration_ms {
                break;
            }
            if times.last() != Some(&t) {
                times.push(t);
            }
            j += 1;
        }
        times
    };

    let mut streams = Vec::new();
    let mut channel_response = Vec::new();

    for ch in &cfg.env_channels {
        let spec = ChannelSpec::new(&ch.name, &ch.unit, ch.period_s, ChannelKind::Environment)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("chan:{}", ch.name)));
        let samples = sample_times(ch.period_s)
            .into_iter()
            .map(|t| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                RawSample {
                    t_ms: t,
                    value: Some(ch.base + ch.latent_gain * z_at(t) + ch.noise_sd * noise),
                }
            })
            .collect();
        streams.push(RawStream::new(spec, samples)?);
        channel_response.push(ChannelResponse {
            name: ch.name.clone(),
            latent_gain: ch.latent_gain,
            body_gain: 0.0,
            noise_sd: ch.noise_sd,
        });
    }

    for (row, ch) in cfg.coupling.iter().zip(&cfg.physio_channels) {
        // Coupling acts on the noiseless environment fields, so the folded
        // latent gain is the row dotted with the env gains.
        let gain: f64 = row
            .iter()
            .zip(&cfg.env_channels)
            .map(|(b, e)| b * e.latent_gain)
            .sum();
        let spec = ChannelSpec::new(&ch.name, &ch.unit, ch.period_s, ChannelKind::Physiology)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("chan:{}", ch.name)));
        let samples = sample_times(ch.period_s)
            .into_iter()
            .map(|t| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                RawSample {
                    t_ms: t,
                    value: Some(
                        ch.base + gain * z_at(t) + ch.body_gain * w_at(t) + ch.noise_sd * noise,
                    ),
                }
            })
            .collect();
        streams.push(RawStream::new(spec, samples)?);
        channel_response.push(ChannelResponse {
            name: ch.name.clone(),
            latent_gain: gain,
            body_gain: ch.body_gain,
            noise_sd: ch.noise_sd,
        });
    }

    for ch in &cfg.extra_channels {
        let spec = ChannelSpec::new(&ch.name, &ch.unit, ch.period_s, ch.kind)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("chan:{}", ch.name)));
        let times = sample_times(ch.period_s);
        let samples = match &ch.signal {
            ExtraSignal::Constant { value } => times
                .into_iter()
                .map(|t| RawSample { t_ms: t, value: Some(*value) })
                .collect(),
            ExtraSignal::Noisy { base, sd, smoothing, round } => {
                let normal = Normal::new(0.0, 1.0).expect("unit normal");
                let mut level = 0.0f64;
                times
                    .into_iter()
                    .map(|t| {
                        level = smoothing * level
                            + (1.0 - smoothing * smoothing).sqrt() * normal.sample(&mut rng);
                        let mut v = base + sd * level;
                        if *round {
                            v = v.round().max(0.0);
                        }
                        RawSample { t_ms: t, value: Some(v) }
                    })
                    .collect()
            }
            ExtraSignal::Oscillating { base, amp, period_s, noise_sd } => times
                .into_iter()
                .map(|t| {
                    let phase = 2.0 * std::f64::consts::PI * (t as f64 / 1000.0) / period_s;
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    RawSample {
                        t_ms: t,
                        value: Some(base + amp * phase.sin() + noise_sd * noise),
                    }
                })
                .collect(),
        };
        streams.push(RawStream::new(spec, samples)?);
    }

    // Geo trace: constant speed along the waypoint polyline, 1 Hz fixes.
    let geo = {
        let mut cum = vec![0.0f64];
        for w in cfg.waypoints.windows(2) {
            let (lat0, lon0) = w[0];
            let (lat1, lon1) = w[1];
            // Degrees scaled to a common local metric; only ratios matter.
            let dy = lat1 - lat0;
            let dx = (lon1 - lon0) * (lat0.to_radians().cos());
            cum.push(cum.last().unwrap() + (dx * dx + dy * dy).sqrt());
        }
        let total = *cum.last().unwrap();
        let mut points = Vec::with_capacity(n_grid);
        for k in 0..n_grid {
            let target = if total > 0.0 {
                total * k as f64 / (n_grid - 1).max(1) as f64
            } else {
                0.0
            };
            let mut seg = cum.len() - 2;
            for i in 0..cum.len() - 1 {
                if target <= cum[i + 1] || i == cum.len() - 2 {
                    seg = i;
                    break;
                }
            }
            let seg_len = cum[seg + 1] - cum[seg];
            let frac = if seg_len > 0.0 { (target - cum[seg]) / seg_len } else { 0.0 };
            let (lat0, lon0) = cfg.waypoints[seg];
            let (lat1, lon1) = cfg.waypoints[seg + 1];
            points.push(GeoPoint {
                t_ms: k as i64 * 1000,
                lat: lat0 + (lat1 - lat0) * frac,
                lon: lon0 + (lon1 - lon0) * frac,
            });
        }
        GeoTrace::new(points)?
    };

    let mut labels = Vec::new();
    let mut t = 0i64;
    while t <= duration_ms {
        let score = -z_at(t) + cfg.body_latent_weight * w_at(t);
        let valence = 1 + cfg.label_bins.iter().filter(|&&b| score >= b).count() as u8;
        labels.push(LabelEvent::new(t, valence)?);
        t += cfg.label_period_s as i64 * 1000;
    }

    let truth = PlantedTruth {
        latent,
        body_latent,
        latent_var,
        body_latent_var,
        channel_response,
        coupling: cfg.coupling.clone(),
        body_latent_weight: cfg.body_latent_weight,
        label_bins: cfg.label_bins,
    };

    let bundle = SessionBundle {
        participant_id: cfg.participant_id.clone(),
        streams,
        geo,
        labels,
    };
    Ok(SynthSession { bundle, truth })
}
