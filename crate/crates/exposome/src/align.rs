//! Alignment to the common 1 Hz grid and fusion into one table.
//!
//! Channels faster than 1 Hz are down-sampled with per-second window means;
//! channels slower than 1 Hz are up-sampled with linear interpolation
//! between the bracketing samples. Nothing is extrapolated beyond a
//! stream's span. After resampling, every retained column is min–max
//! normalised into `[0, 1]`, geo positions are interpolated componentwise
//! and labels are attached by last-observation-carried-forward.

use crate::ingest::{
    ChannelKind, ChannelSpec, GeoTrace, LabelEvent, RawSample, RawStream, SessionBundle,
    CONSTANT_MIN_SAMPLES, CONSTANT_TOLERANCE,
};
use serde::{Deserialize, Serialize};
use std::io::Read;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("degenerate interval: x1 == x2")]
    DegenerateInterval,
    #[error("channel '{0}' has no samples")]
    EmptyStream(String),
    #[error("channel '{0}' needs at least 2 samples for up-sampling")]
    TooFewSamples(String),
    #[error("column is constant; channel must be excluded upstream")]
    ConstantColumn,
    #[error("streams share no overlap window of at least 2 s")]
    NoOverlap,
    #[error("every channel is constant; nothing to fuse")]
    AllChannelsConstant,
    #[error("fused table: {0}")]
    Malformed(String),
}

/// The two known points of the interpolation rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationPoint {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

/// Value on the straight line through `(x1, y1)` and `(x2, y2)` at `x`:
/// `y = y1 + (x - x1) * (y2 - y1) / (x2 - x1)`.
pub fn interpolate_linear(p: &InterpolationPoint, x: f64) -> Result<f64, AlignError> {
    if p.x1 == p.x2 {
        return Err(AlignError::DegenerateInterval);
    }
    Ok(p.y1 + (x - p.x1) * (p.y2 - p.y1) / (p.x2 - p.x1))
}

/// Resample one stream onto the whole-second grid.
///
/// * native period < 1 s: mean of the samples inside each `[k, k+1)` window
/// * native period >= 1 s: linear interpolation between bracketing samples
///
/// Grid seconds outside the stream's span are omitted (treated as missing
/// by [`fuse`]). Missing input samples are dropped first.
pub fn resample_to_1hz(stream: &RawStream) -> Result<RawStream, AlignError> {
    let name = &stream.channel.name;
    let present: Vec<(i64, f64)> = stream
        .samples
        .iter()
        .filter_map(|s| s.value.map(|v| (s.t_ms, v)))
        .collect();
    if present.is_empty() {
        return Err(AlignError::EmptyStream(name.clone()));
    }

    let mut out = Vec::new();
    if stream.channel.native_period_s < 1.0 {
        // Down-sample: one window per second that holds data.
        let mut i = 0usize;
        while i < present.len() {
            let sec = present[i].0.div_euclid(1000);
            let mut sum = 0.0;
            let mut n = 0usize;
            while i < present.len() && present[i].0.div_euclid(1000) == sec {
                sum += present[i].1;
                n += 1;
                i += 1;
            }
            out.push(RawSample { t_ms: sec * 1000, value: Some(sum / n as f64) });
        }
    } else {
        if present.len() < 2 {
            return Err(AlignError::TooFewSamples(name.clone()));
        }
        let first = present[0].0;
        let last = present[present.len() - 1].0;
        let start_s = first.div_euclid(1000) + i64::from(first.rem_euclid(1000) != 0);
        let end_s = last.div_euclid(1000);
        let mut seg = 0usize;
        for sec in start_s..=end_s {
            let t = sec * 1000;
            // Advance to the bracketing pair: present[seg].0 <= t <=
            // present[seg+1].0 (t stays inside the span by construction).
            while seg + 2 < present.len() && present[seg + 1].0 < t {
                seg += 1;
            }
            let (x1, y1) = present[seg];
            let (x2, y2) = present[seg + 1];
            let value = if t == x1 {
                y1
            } else if t == x2 {
                y2
            } else {
                interpolate_linear(
                    &InterpolationPoint { x1: x1 as f64, y1, x2: x2 as f64, y2 },
                    t as f64,
                )?
            };
            out.push(RawSample { t_ms: t, value: Some(value) });
        }
    }

    let spec = ChannelSpec {
        name: stream.channel.name.clone(),
        unit: stream.channel.unit.clone(),
        native_period_s: 1.0,
        kind: stream.channel.kind,
    };
    Ok(RawStream { channel: spec, samples: out })
}

/// Min–max normalisation: the minimum maps to 0, the maximum to 1.
pub fn normalize(column: &[f64]) -> Result<Vec<f64>, AlignError> {
    let (min, max) = min_max(column.iter().copied()).ok_or(AlignError::ConstantColumn)?;
    if max == min {
        return Err(AlignError::ConstantColumn);
    }
    Ok(column.iter().map(|v| (v - min) / (max - min)).collect())
}

fn min_max(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut any = false;
    for v in values {
        min = min.min(v);
        max = max.max(v);
        any = true;
    }
    any.then_some((min, max))
}

/// Channel metadata for a fused table, serialised next to the CSV so the
/// normalisation is reversible and modality splits survive a round-trip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusedMeta {
    pub channels: Vec<ChannelSpec>,
    /// Per-channel (min, max) used by the min–max step.
    pub norm: Vec<(f64, f64)>,
    /// Channels dropped for being constant.
    pub excluded: Vec<String>,
}

/// The 1 Hz aligned, normalised, geo-tagged, optionally labelled matrix
/// every analysis consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedFrameTable {
    /// Grid seconds (spacing exactly 1 s).
    pub times_s: Vec<i64>,
    /// Retained channels, in fused column order.
    pub channels: Vec<ChannelSpec>,
    /// One column per retained channel; values in `[0, 1]` or missing.
    pub columns: Vec<Vec<Option<f64>>>,
    /// Per-row (lat, lon), missing outside the geo trace's span.
    pub geo: Vec<Option<(f64, f64)>>,
    /// Per-row valence via last-observation-carried-forward.
    pub labels: Vec<Option<u8>>,
    /// Per-channel (min, max) recorded before normalisation.
    pub norm: Vec<(f64, f64)>,
    /// Constant channels excluded during fusion.
    pub excluded: Vec<String>,
}

impl FusedFrameTable {
    pub fn n_rows(&self) -> usize {
        self.times_s.len()
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.channel_index(name).map(|i| self.columns[i].as_slice())
    }

    pub fn channel_names(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.name.clone()).collect()
    }

    /// Names of retained channels of one kind.
    pub fn channels_of_kind(&self, kind: ChannelKind) -> Vec<String> {
        self.channels
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| c.name.clone())
            .collect()
    }

    /// Project the table onto a subset of its channels (times, geo and
    /// labels are shared). Unknown names are ignored.
    pub fn select_channels(&self, names: &[String]) -> FusedFrameTable {
        let idx: Vec<usize> = names.iter().filter_map(|n| self.channel_index(n)).collect();
        FusedFrameTable {
            times_s: self.times_s.clone(),
            channels: idx.iter().map(|&i| self.channels[i].clone()).collect(),
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            geo: self.geo.clone(),
            labels: self.labels.clone(),
            norm: idx.iter().map(|&i| self.norm[i]).collect(),
            excluded: self.excluded.clone(),
        }
    }

    pub fn meta(&self) -> FusedMeta {
        FusedMeta {
            channels: self.channels.clone(),
            norm: self.norm.clone(),
            excluded: self.excluded.clone(),
        }
    }

    /// Serialise as `t_s,lat,lon,label,<channel...>` with empty cells for
    /// missing values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,lat,lon,label");
        for c in &self.channels {
            out.push(',');
            out.push_str(&c.name);
        }
        out.push('\n');
        for row in 0..self.n_rows() {
            out.push_str(&self.times_s[row].to_string());
            match self.geo[row] {
                Some((lat, lon)) => out.push_str(&format!(",{lat},{lon}")),
                None => out.push_str(",,"),
            }
            match self.labels[row] {
                Some(l) => out.push_str(&format!(",{l}")),
                None => out.push(','),
            }
            for col in &self.columns {
                match col[row] {
                    Some(v) => out.push_str(&format!(",{v}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parse a table written by [`FusedFrameTable::to_csv`]. When `meta` is
    /// absent, channel kinds are inferred from well-known names and the
    /// normalisation record is left empty.
    pub fn from_csv<R: Read>(reader: R, meta: Option<FusedMeta>) -> Result<Self, AlignError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| AlignError::Malformed(e.to_string()))?
            .clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.len() < 4 || cols[0] != "t_s" || cols[1] != "lat" || cols[2] != "lon" || cols[3] != "label" {
            return Err(AlignError::Malformed(format!(
                "expected header t_s,lat,lon,label,<channels>, got {cols:?}"
            )));
        }
        let names: Vec<String> = cols[4..].iter().map(|s| s.to_string()).collect();
        // Specs and norm records follow the CSV column order, whatever
        // order the meta document lists them in.
        let (channels, norm_by_name): (Vec<ChannelSpec>, Option<Vec<(f64, f64)>>) = match &meta {
            Some(m) => {
                let mut specs = Vec::with_capacity(names.len());
                let mut norm = Vec::with_capacity(names.len());
                for n in &names {
                    let idx = m
                        .channels
                        .iter()
                        .position(|c| &c.name == n)
                        .ok_or_else(|| AlignError::Malformed(format!("channel '{n}' missing from meta")))?;
                    specs.push(m.channels[idx].clone());
                    norm.push(*m.norm.get(idx).unwrap_or(&(0.0, 1.0)));
                }
                (specs, Some(norm))
            }
            None => (
                names
                    .iter()
                    .map(|n| ChannelSpec {
                        name: n.clone(),
                        unit: String::new(),
                        native_period_s: 1.0,
                        kind: infer_kind(n),
                    })
                    .collect(),
                None,
            ),
        };

        let mut times_s = Vec::new();
        let mut geo = Vec::new();
        let mut labels = Vec::new();
        let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| AlignError::Malformed(e.to_string()))?;
            if record.len() != 4 + names.len() {
                return Err(AlignError::Malformed(format!(
                    "row {}: expected {} cells, got {}",
                    i + 2,
                    4 + names.len(),
                    record.len()
                )));
            }
            let t: i64 = record[0]
                .parse()
                .map_err(|_| AlignError::Malformed(format!("row {}: bad t_s", i + 2)))?;
            times_s.push(t);
            let lat = parse_opt(&record[1], i)?;
            let lon = parse_opt(&record[2], i)?;
            geo.push(match (lat, lon) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => None,
            });
            labels.push(if record[3].is_empty() {
                None
            } else {
                Some(record[3].parse().map_err(|_| {
                    AlignError::Malformed(format!("row {}: bad label", i + 2))
                })?)
            });
            for (c, cell) in record.iter().skip(4).enumerate() {
                columns[c].push(parse_opt(cell, i)?);
            }
        }
        let norm = norm_by_name.unwrap_or_else(|| vec![(0.0, 1.0); names.len()]);
        let excluded = meta.map(|m| m.excluded).unwrap_or_default();
        Ok(Self { times_s, channels, columns, geo, labels, norm, excluded })
    }
}

fn parse_opt(cell: &str, row: usize) -> Result<Option<f64>, AlignError> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse()
        .map(Some)
        .map_err(|_| AlignError::Malformed(format!("row {}: bad numeric cell '{cell}'", row + 2)))
}

/// Best-effort kind inference for tables loaded without their meta sidecar.
fn infer_kind(name: &str) -> ChannelKind {
    match name {
        "pm1" | "pm25" | "pm10" | "oxidised" | "reduced" | "nh3" | "noise" | "co2" | "voc" => {
            ChannelKind::Environment
        }
        "eda" | "hr" | "hrv" | "bvp" | "temp" => ChannelKind::Physiology,
        "accel" => ChannelKind::Motion,
        _ => ChannelKind::Context,
    }
}

/// Fuse a session bundle into the 1 Hz table.
///
/// Constant channels (the validation rule) are excluded and reported; rows
/// are restricted to the overlap window of the remaining channels; each
/// column is min–max normalised over that window.
pub fn fuse(bundle: &SessionBundle) -> Result<FusedFrameTable, AlignError> {
    let mut excluded: Vec<String> = Vec::new();
    let mut resampled: Vec<RawStream> = Vec::new();
    for stream in &bundle.streams {
        let (min, max) = match min_max(stream.present_values()) {
            Some(mm) => mm,
            None => return Err(AlignError::EmptyStream(stream.channel.name.clone())),
        };
        let present = stream.present_values().count();
        if present >= CONSTANT_MIN_SAMPLES && (max - min) < CONSTANT_TOLERANCE {
            excluded.push(stream.channel.name.clone());
            continue;
        }
        resampled.push(resample_to_1hz(stream)?);
    }
    if resampled.is_empty() {
        return Err(AlignError::AllChannelsConstant);
    }

    // Overlap window over the 1 Hz grids of all retained channels.
    let mut start_s = i64::MIN;
    let mut end_s = i64::MAX;
    for s in &resampled {
        let (a, b) = s.span_ms().ok_or_else(|| AlignError::EmptyStream(s.channel.name.clone()))?;
        start_s = start_s.max(a / 1000);
        end_s = end_s.min(b / 1000);
    }
    if end_s - start_s < 2 {
        return Err(AlignError::NoOverlap);
    }
    let n_rows = (end_s - start_s + 1) as usize;
    let times_s: Vec<i64> = (start_s..=end_s).collect();

    // Materialise raw (pre-normalisation) columns on the window.
    let mut channels = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    let mut norm = Vec::new();
    for s in &resampled {
        let mut col = vec![None; n_rows];
        for sample in &s.samples {
            let sec = sample.t_ms / 1000;
            if sec >= start_s && sec <= end_s {
                col[(sec - start_s) as usize] = sample.value;
            }
        }
        match min_max(col.iter().flatten().copied()) {
            Some((min, max)) if max - min >= CONSTANT_TOLERANCE => {
                for v in col.iter_mut().flatten() {
                    *v = (*v - min) / (max - min);
                }
                channels.push(s.channel.clone());
                columns.push(col);
                norm.push((min, max));
            }
            _ => excluded.push(s.channel.name.clone()),
        }
    }
    if channels.is_empty() {
        return Err(AlignError::AllChannelsConstant);
    }

    // Geo: componentwise linear interpolation inside the trace's span.
    let geo = interpolate_geo(&bundle.geo, &times_s)?;

    // Labels: last observation carried forward.
    let labels = locf_labels(&bundle.labels, &times_s);

    Ok(FusedFrameTable { times_s, channels, columns, geo, labels, norm, excluded })
}

fn interpolate_geo(trace: &GeoTrace, times_s: &[i64]) -> Result<Vec<Option<(f64, f64)>>, AlignError> {
    let pts = &trace.points;
    let mut out = vec![None; times_s.len()];
    if pts.is_empty() {
        return Ok(out);
    }
    let mut seg = 0usize;
    for (row, &sec) in times_s.iter().enumerate() {
        let t = sec * 1000;
        if t < pts[0].t_ms || t > pts[pts.len() - 1].t_ms {
            continue;
        }
        if pts.len() == 1 {
            out[row] = (t == pts[0].t_ms).then_some((pts[0].lat, pts[0].lon));
            continue;
        }
        while seg + 2 < pts.len() && pts[seg + 1].t_ms < t {
            seg += 1;
        }
        let (a, b) = (&pts[seg], &pts[seg + 1]);
        if t == a.t_ms {
            out[row] = Some((a.lat, a.lon));
        } else if t == b.t_ms {
            out[row] = Some((b.lat, b.lon));
        } else {
            let lat = interpolate_linear(
                &InterpolationPoint { x1: a.t_ms as f64, y1: a.lat, x2: b.t_ms as f64, y2: b.lat },
                t as f64,
            )?;
            let lon = interpolate_linear(
                &InterpolationPoint { x1: a.t_ms as f64, y1: a.lon, x2: b.t_ms as f64, y2: b.lon },
                t as f64,
            )?;
            out[row] = Some((lat, lon));
        }
    }
    Ok(out)
}

fn locf_labels(labels: &[LabelEvent], times_s: &[i64]) -> Vec<Option<u8>> {
    let mut out = vec![None; times_s.len()];
    if labels.is_empty() {
        return out;
    }
    let mut idx = 0usize;
    let mut current: Option<u8> = None;
    for (row, &sec) in times_s.iter().enumerate() {
        let t = sec * 1000;
        while idx < labels.len() && labels[idx].t_ms <= t {
            current = Some(labels[idx].valence);
            idx += 1;
        }
        out[row] = current;
    }
    out
}
