//! Session ingestion: channel specs, raw streams, geo traces, labels and
//! the on-disk session layout (per-channel CSV files plus a JSON manifest).
//!
//! A session is a set of independently sampled channels sharing one time
//! origin. Timestamps are integer milliseconds from session start; floating
//! time is never stored so streams can be compared exactly.

mod synth;

pub use synth::{
    generate_synthetic_session, EnvChannelCfg, ExtraChannelCfg, ExtraSignal, PhysioChannelCfg,
    PlantedTruth, SynthConfig, SynthSession,
};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Absolute spread below which a channel counts as "no change in value".
pub const CONSTANT_TOLERANCE: f64 = 1e-9;

/// Minimum number of samples before the constant-channel rule applies.
pub const CONSTANT_MIN_SAMPLES: usize = 10;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed row: {detail}")]
    MalformedRow { line: usize, detail: String },
    #[error("line {line}: timestamps must be strictly increasing")]
    NonMonotonicTime { line: usize },
    #[error("invalid channel spec: {0}")]
    InvalidSpec(String),
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("invalid stream '{channel}': {detail}")]
    InvalidStream { channel: String, detail: String },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// What a channel measures. Drives modality splits downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Environment,
    Physiology,
    Motion,
    Context,
    Label,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChannelKind::Environment => "environment",
            ChannelKind::Physiology => "physiology",
            ChannelKind::Motion => "motion",
            ChannelKind::Context => "context",
            ChannelKind::Label => "label",
        };
        f.write_str(s)
    }
}

/// Static description of one sensor channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub name: String,
    pub unit: String,
    /// Native sampling period in seconds (e.g. 20.0 for a 20 s logger,
    /// 0.015625 for a 64 Hz wristband signal).
    pub native_period_s: f64,
    pub kind: ChannelKind,
}

impl ChannelSpec {
    pub fn new(
        name: &str,
        unit: &str,
        native_period_s: f64,
        kind: ChannelKind,
    ) -> Result<Self, IngestError> {
        if name.is_empty() {
            return Err(IngestError::InvalidSpec("empty channel name".into()));
        }
        if !native_period_s.is_finite() || native_period_s <= 0.0 {
            return Err(IngestError::InvalidSpec(format!(
                "channel '{name}': native_period_s must be positive, got {native_period_s}"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            unit: unit.to_string(),
            native_period_s,
            kind,
        })
    }
}

/// One timestamped sample. `value` is `None` for an explicitly missing
/// reading (an empty CSV cell); missing samples are dropped before
/// resampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSample {
    pub t_ms: i64,
    pub value: Option<f64>,
}

/// One channel's samples at its native rate, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct RawStream {
    pub channel: ChannelSpec,
    pub samples: Vec<RawSample>,
}

impl RawStream {
    pub fn new(channel: ChannelSpec, samples: Vec<RawSample>) -> Result<Self, IngestError> {
        for (i, s) in samples.iter().enumerate() {
            if s.t_ms < 0 {
                return Err(IngestError::InvalidStream {
                    channel: channel.name.clone(),
                    detail: format!("negative timestamp {} at index {i}", s.t_ms),
                });
            }
            if let Some(v) = s.value {
                if !v.is_finite() {
                    return Err(IngestError::InvalidStream {
                        channel: channel.name.clone(),
                        detail: format!("non-finite value at t={} ms", s.t_ms),
                    });
                }
            }
            if i > 0 && samples[i - 1].t_ms >= s.t_ms {
                return Err(IngestError::InvalidStream {
                    channel: channel.name.clone(),
                    detail: format!("timestamps not strictly increasing at index {i}"),
                });
            }
        }
        Ok(Self { channel, samples })
    }

    /// First and last timestamp, if the stream is non-empty.
    pub fn span_ms(&self) -> Option<(i64, i64)> {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => Some((a.t_ms, b.t_ms)),
            _ => None,
        }
    }

    /// Present (non-missing) values in time order.
    pub fn present_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().filter_map(|s| s.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub t_ms: i64,
    pub lat: f64,
    pub lon: f64,
}

/// Timestamped GPS trace for one session.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeoTrace {
    pub points: Vec<GeoPoint>,
}

impl GeoTrace {
    pub fn new(points: Vec<GeoPoint>) -> Result<Self, IngestError> {
        for (i, p) in points.iter().enumerate() {
            if !(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0) {
                return Err(IngestError::InvalidStream {
                    channel: "geo".into(),
                    detail: format!("coordinate out of range at t={} ms", p.t_ms),
                });
            }
            if i > 0 && points[i - 1].t_ms >= p.t_ms {
                return Err(IngestError::InvalidStream {
                    channel: "geo".into(),
                    detail: format!("timestamps not strictly increasing at index {i}"),
                });
            }
        }
        Ok(Self { points })
    }
}

/// One self-reported valence event on the five-point scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub t_ms: i64,
    /// 1 = negative/low .. 5 = positive/high.
    pub valence: u8,
}

impl LabelEvent {
    pub fn new(t_ms: i64, valence: u8) -> Result<Self, IngestError> {
        if !(1..=5).contains(&valence) {
            return Err(IngestError::InvalidStream {
                channel: "labels".into(),
                detail: format!("valence {valence} outside 1..=5"),
            });
        }
        Ok(Self { t_ms, valence })
    }
}

/// Everything one participant's walk produced. An empty label list marks an
/// unlabeled session; it still supports the unsupervised analyses.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionBundle {
    pub participant_id: String,
    pub streams: Vec<RawStream>,
    pub geo: GeoTrace,
    pub labels: Vec<LabelEvent>,
}

impl SessionBundle {
    pub fn stream(&self, name: &str) -> Option<&RawStream> {
        self.streams.iter().find(|s| s.channel.name == name)
    }
}

// ---------------------------------------------------------------------------
// CSV parsing / serialization
// ---------------------------------------------------------------------------

/// Parse a per-channel CSV document with header `t_ms,value`.
///
/// Empty value cells become missing samples. Rows must be strictly
/// increasing in time; an empty document is a valid zero-length stream.
pub fn parse_stream<R: Read>(reader: R, spec: ChannelSpec) -> Result<RawStream, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = rdr.headers().map_err(|e| IngestError::MalformedRow {
            line: 1,
            detail: e.to_string(),
        })?;
        if headers.len() < 2 || &headers[0] != "t_ms" || &headers[1] != "value" {
            return Err(IngestError::MalformedRow {
                line: 1,
                detail: format!("expected header t_ms,value, got {:?}", headers),
            });
        }
    }
    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let record = record.map_err(|e| IngestError::MalformedRow {
            line,
            detail: e.to_string(),
        })?;
        if record.len() < 2 {
            return Err(IngestError::MalformedRow {
                line,
                detail: "expected two cells".into(),
            });
        }
        let t_ms: i64 = record[0].trim().parse().map_err(|_| IngestError::MalformedRow {
            line,
            detail: format!("non-numeric timestamp '{}'", &record[0]),
        })?;
        let cell = record[1].trim();
        let value = if cell.is_empty() {
            None
        } else {
            let v: f64 = cell.parse().map_err(|_| IngestError::MalformedRow {
                line,
                detail: format!("non-numeric cell '{cell}'"),
            })?;
            Some(v)
        };
        if let Some(prev) = samples.last() {
            let prev: &RawSample = prev;
            if prev.t_ms >= t_ms {
                return Err(IngestError::NonMonotonicTime { line });
            }
        }
        samples.push(RawSample { t_ms, value });
    }
    RawStream::new(spec, samples)
}

/// Serialize a stream back to the `t_ms,value` CSV format parsed by
/// [`parse_stream`]. Missing values become empty cells.
pub fn stream_to_csv(stream: &RawStream) -> String {
    let mut out = String::from("t_ms,value\n");
    for s in &stream.samples {
        match s.value {
            Some(v) => out.push_str(&format!("{},{}\n", s.t_ms, v)),
            None => out.push_str(&format!("{},\n", s.t_ms)),
        }
    }
    out
}

/// Parse a geo trace CSV with header `t_ms,lat,lon`.
pub fn parse_geo<R: Read>(reader: R) -> Result<GeoTrace, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut points = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| IngestError::MalformedRow {
            line,
            detail: e.to_string(),
        })?;
        let parse = |idx: usize| -> Result<f64, IngestError> {
            record[idx].trim().parse().map_err(|_| IngestError::MalformedRow {
                line,
                detail: format!("non-numeric cell '{}'", &record[idx]),
            })
        };
        let t_ms: i64 = record[0].trim().parse().map_err(|_| IngestError::MalformedRow {
            line,
            detail: format!("non-numeric timestamp '{}'", &record[0]),
        })?;
        points.push(GeoPoint {
            t_ms,
            lat: parse(1)?,
            lon: parse(2)?,
        });
    }
    GeoTrace::new(points)
}

pub fn geo_to_csv(geo: &GeoTrace) -> String {
    let mut out = String::from("t_ms,lat,lon\n");
    for p in &geo.points {
        out.push_str(&format!("{},{},{}\n", p.t_ms, p.lat, p.lon));
    }
    out
}

/// Parse a labels CSV with header `t_ms,valence`.
pub fn parse_labels<R: Read>(reader: R) -> Result<Vec<LabelEvent>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut labels: Vec<LabelEvent> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| IngestError::MalformedRow {
            line,
            detail: e.to_string(),
        })?;
        let t_ms: i64 = record[0].trim().parse().map_err(|_| IngestError::MalformedRow {
            line,
            detail: format!("non-numeric timestamp '{}'", &record[0]),
        })?;
        let valence: u8 = record[1].trim().parse().map_err(|_| IngestError::MalformedRow {
            line,
            detail: format!("non-numeric valence '{}'", &record[1]),
        })?;
        if let Some(prev) = labels.last() {
            if prev.t_ms >= t_ms {
                return Err(IngestError::NonMonotonicTime { line });
            }
        }
        labels.push(LabelEvent::new(t_ms, valence)?);
    }
    Ok(labels)
}

pub fn labels_to_csv(labels: &[LabelEvent]) -> String {
    let mut out = String::from("t_ms,valence\n");
    for l in labels {
        out.push_str(&format!("{},{}\n", l.t_ms, l.valence));
    }
    out
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Per-channel findings from [`validate_bundle`].
#[derive(Debug, Clone, Serialize)]
pub struct ChannelReport {
    pub name: String,
    pub kind: ChannelKind,
    pub samples: usize,
    pub first_ms: Option<i64>,
    pub last_ms: Option<i64>,
    /// Time covered by the stream in seconds (0 for empty streams).
    pub coverage_s: f64,
    /// Spread below [`CONSTANT_TOLERANCE`] over at least
    /// [`CONSTANT_MIN_SAMPLES`] samples — the channel logged no change
    /// and must be excluded before fusion.
    pub constant: bool,
}

/// Report-only validation outcome; nothing here is fatal.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub participant_id: String,
    pub channels: Vec<ChannelReport>,
    /// `[max of stream starts, min of stream ends]`, or `None` when any
    /// stream is empty or the spans do not intersect.
    pub overlap_ms: Option<(i64, i64)>,
    pub label_count: usize,
    pub geo_points: usize,
}

impl ValidationReport {
    pub fn constant_channels(&self) -> Vec<&str> {
        self.channels
            .iter()
            .filter(|c| c.constant)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Inspect every stream of a bundle: sample counts, coverage, the
/// constant-channel flag and the common overlap window.
pub fn validate_bundle(bundle: &SessionBundle) -> ValidationReport {
    let mut channels = Vec::with_capacity(bundle.streams.len());
    let mut overlap: Option<(i64, i64)> = Some((i64::MIN, i64::MAX));
    for stream in &bundle.streams {
        let span = stream.span_ms();
        let (first_ms, last_ms) = match span {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        let coverage_s = match span {
            Some((a, b)) => (b - a) as f64 / 1000.0,
            None => 0.0,
        };
        overlap = match (overlap, span) {
            (Some((lo, hi)), Some((a, b))) => {
                let lo = lo.max(a);
                let hi = hi.min(b);
                (lo <= hi).then_some((lo, hi))
            }
            _ => None,
        };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut present = 0usize;
        for v in stream.present_values() {
            lo = lo.min(v);
            hi = hi.max(v);
            present += 1;
        }
        let constant = present >= CONSTANT_MIN_SAMPLES && (hi - lo) < CONSTANT_TOLERANCE;
        channels.push(ChannelReport {
            name: stream.channel.name.clone(),
            kind: stream.channel.kind,
            samples: stream.samples.len(),
            first_ms,
            last_ms,
            coverage_s,
            constant,
        });
    }
    if bundle.streams.is_empty() {
        overlap = None;
    }
    ValidationReport {
        participant_id: bundle.participant_id.clone(),
        channels,
        overlap_ms: overlap,
        label_count: bundle.labels.len(),
        geo_points: bundle.geo.points.len(),
    }
}

// ---------------------------------------------------------------------------
// Session manifest (on-disk layout)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestChannel {
    pub name: String,
    pub unit: String,
    pub native_period_s: f64,
    pub kind: ChannelKind,
    /// Path of the channel CSV, relative to the manifest file.
    pub path: String,
}

/// JSON document describing a session directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionManifest {
    pub participant_id: String,
    pub channels: Vec<ManifestChannel>,
    pub geo: String,
    /// Relative path of the labels CSV; absent for unlabeled sessions.
    pub labels: Option<String>,
}

/// Write a bundle as one CSV per channel plus geo/label CSVs and a
/// `manifest.json`, returning the manifest path.
pub fn write_session(dir: &Path, bundle: &SessionBundle) -> Result<PathBuf, IngestError> {
    std::fs::create_dir_all(dir)?;
    let mut channels = Vec::with_capacity(bundle.streams.len());
    for stream in &bundle.streams {
        let file = format!("{}.csv", stream.channel.name);
        std::fs::write(dir.join(&file), stream_to_csv(stream))?;
        channels.push(ManifestChannel {
            name: stream.channel.name.clone(),
            unit: stream.channel.unit.clone(),
            native_period_s: stream.channel.native_period_s,
            kind: stream.channel.kind,
            path: file,
        });
    }
    std::fs::write(dir.join("geo.csv"), geo_to_csv(&bundle.geo))?;
    let labels = if bundle.labels.is_empty() {
        None
    } else {
        std::fs::write(dir.join("labels.csv"), labels_to_csv(&bundle.labels))?;
        Some("labels.csv".to_string())
    };
    let manifest = SessionManifest {
        participant_id: bundle.participant_id.clone(),
        channels,
        geo: "geo.csv".to_string(),
        labels,
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// Load a session bundle from a manifest file written by [`write_session`]
/// (or assembled by hand to the same schema).
pub fn load_session(manifest_path: &Path) -> Result<SessionBundle, IngestError> {
    let manifest: SessionManifest =
        serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
    let base = manifest_path
        .parent()
        .ok_or_else(|| IngestError::Manifest("manifest has no parent directory".into()))?;
    let mut streams = Vec::with_capacity(manifest.channels.len());
    for ch in &manifest.channels {
        let spec = ChannelSpec::new(&ch.name, &ch.unit, ch.native_period_s, ch.kind)?;
        let file = std::fs::File::open(base.join(&ch.path))?;
        streams.push(parse_stream(file, spec)?);
    }
    let geo = parse_geo(std::fs::File::open(base.join(&manifest.geo))?)?;
    let labels = match &manifest.labels {
        Some(p) => parse_labels(std::fs::File::open(base.join(p))?)?,
        None => Vec::new(),
    };
    Ok(SessionBundle {
        participant_id: manifest.participant_id,
        streams,
        geo,
        labels,
    })
}
