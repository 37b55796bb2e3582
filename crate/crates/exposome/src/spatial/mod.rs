//! Spatial summarisation of geo-tagged readings: Voronoi tessellation with
//! per-cell class values, grid heat maps, and GeoJSON/SVG export.
//!
//! All geometry runs in planar meters under a local equirectangular
//! projection about the route centroid; walking-scale extents keep the
//! distortion negligible and make the Euclidean metric well-defined.

mod export;
mod voronoi;

pub use export::{polygon_areas_from_geojson, tessellation_to_geojson, tessellation_to_svg};
pub use voronoi::voronoi;

use crate::align::FusedFrameTable;
use thiserror::Error;

const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// GPS fixes repeat while stationary; coordinates are merged after
/// rounding to this many degrees (~1 cm).
pub const DEDUP_DEGREES: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error("no sites after deduplication")]
    NoSites,
    #[error("site ({x}, {y}) lies outside the bounding box")]
    SiteOutsideBox { x: f64, y: f64 },
    #[error("class bins must be strictly ascending")]
    UnsortedBins,
    #[error("table has no geo-tagged rows for channel '{0}'")]
    NoGeoRows(String),
    #[error("cell size must be positive, got {0}")]
    InvalidCellSize(f64),
    #[error("unknown channel '{0}'")]
    UnknownChannel(String),
}

/// Local equirectangular projection about a reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub lat0: f64,
    pub lon0: f64,
    cos_lat0: f64,
}

impl Projection {
    pub fn new(lat0: f64, lon0: f64) -> Self {
        Self { lat0, lon0, cos_lat0: lat0.to_radians().cos() }
    }

    /// Centroid-referenced projection for a point cloud.
    pub fn for_points<I: IntoIterator<Item = (f64, f64)>>(points: I) -> Option<Self> {
        let mut lat = 0.0;
        let mut lon = 0.0;
        let mut n = 0usize;
        for (la, lo) in points {
            lat += la;
            lon += lo;
            n += 1;
        }
        (n > 0).then(|| Self::new(lat / n as f64, lon / n as f64))
    }

    /// (lat, lon) degrees -> planar meters.
    pub fn project(&self, lat: f64, lon: f64) -> (f64, f64) {
        let x = EARTH_RADIUS_M * (lon - self.lon0).to_radians() * self.cos_lat0;
        let y = EARTH_RADIUS_M * (lat - self.lat0).to_radians();
        (x, y)
    }

    /// Planar meters -> (lat, lon) degrees; exact inverse up to rounding.
    pub fn unproject(&self, x: f64, y: f64) -> (f64, f64) {
        let lat = self.lat0 + (y / EARTH_RADIUS_M).to_degrees();
        let lon = self.lon0 + (x / (EARTH_RADIUS_M * self.cos_lat0)).to_degrees();
        (lat, lon)
    }
}

/// Axis-aligned rectangle in planar meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn around_points(points: &[(f64, f64)], padding: f64) -> Option<Self> {
        let first = points.first()?;
        let mut r = Rect { min_x: first.0, min_y: first.1, max_x: first.0, max_y: first.1 };
        for &(x, y) in points {
            r.min_x = r.min_x.min(x);
            r.min_y = r.min_y.min(y);
            r.max_x = r.max_x.max(x);
            r.max_y = r.max_y.max(y);
        }
        r.min_x -= padding;
        r.min_y -= padding;
        r.max_x += padding;
        r.max_y += padding;
        Some(r)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn area(&self) -> f64 {
        (self.max_x - self.min_x).max(0.0) * (self.max_y - self.min_y).max(0.0)
    }

    /// Corners in counterclockwise order.
    pub fn corners(&self) -> Vec<(f64, f64)> {
        vec![
            (self.min_x, self.min_y),
            (self.max_x, self.min_y),
            (self.max_x, self.max_y),
            (self.min_x, self.max_y),
        ]
    }
}

/// A generator point with the sensor (or label) value observed there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// One Voronoi region: site, clipped polygon (counterclockwise, not
/// explicitly closed), and the class assigned by [`classify_cells`].
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub site: Site,
    pub polygon: Vec<(f64, f64)>,
    pub class: Option<usize>,
}

/// The full diagram clipped to a bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Tessellation {
    pub cells: Vec<VoronoiCell>,
    pub bbox: Rect,
}

impl Tessellation {
    pub fn total_cell_area(&self) -> f64 {
        self.cells.iter().map(|c| polygon_area(&c.polygon)).sum()
    }
}

/// Shoelace area of a simple polygon (positive for counterclockwise).
pub fn polygon_area(polygon: &[(f64, f64)]) -> f64 {
    let n = polygon.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let (x1, y1) = polygon[i];
        let (x2, y2) = polygon[(i + 1) % n];
        twice += x1 * y2 - x2 * y1;
    }
    0.5 * twice
}

/// Even–odd point-in-polygon test; boundary points count as inside.
pub fn point_in_polygon(x: f64, y: f64, polygon: &[(f64, f64)]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = polygon[i];
        let (xj, yj) = polygon[j];
        // On-edge check within a small absolute tolerance.
        let cross = (xj - xi) * (y - yi) - (yj - yi) * (x - xi);
        let dot = (x - xi) * (x - xj) + (y - yi) * (y - yj);
        if cross.abs() < 1e-9 && dot <= 1e-9 {
            return true;
        }
        if (yi > y) != (yj > y) {
            let x_cross = xi + (y - yi) / (yj - yi) * (xj - xi);
            if x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// What value to attach to each generated site.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteValue {
    Channel(String),
    Label,
}

/// Project a fused table's geo-tagged rows into planar sites, merging
/// repeated coordinates (mean value) after rounding to [`DEDUP_DEGREES`].
pub fn sites_from_table(
    table: &FusedFrameTable,
    value: &SiteValue,
) -> Result<(Vec<Site>, Projection), SpatialError> {
    let values: Vec<Option<f64>> = match value {
        SiteValue::Channel(name) => table
            .column(name)
            .ok_or_else(|| SpatialError::UnknownChannel(name.clone()))?
            .to_vec(),
        SiteValue::Label => table.labels.iter().map(|l| l.map(|v| v as f64)).collect(),
    };
    let label = match value {
        SiteValue::Channel(name) => name.clone(),
        SiteValue::Label => "label".to_string(),
    };

    let mut tagged: Vec<(i64, i64, f64)> = Vec::new();
    let mut coords: Vec<(f64, f64)> = Vec::new();
    for (row, v) in values.iter().enumerate() {
        if let (Some((lat, lon)), Some(v)) = (table.geo[row], v) {
            let key_lat = (lat / DEDUP_DEGREES).round() as i64;
            let key_lon = (lon / DEDUP_DEGREES).round() as i64;
            tagged.push((key_lat, key_lon, *v));
            coords.push((lat, lon));
        }
    }
    if tagged.is_empty() {
        return Err(SpatialError::NoGeoRows(label));
    }
    let projection =
        Projection::for_points(coords.iter().copied()).expect("non-empty coordinates");

    // Merge duplicates, keeping first-seen order for determinism.
    let mut order: Vec<(i64, i64)> = Vec::new();
    let mut acc: std::collections::HashMap<(i64, i64), (f64, usize)> =
        std::collections::HashMap::new();
    for (klat, klon, v) in tagged {
        let e = acc.entry((klat, klon)).or_insert_with(|| {
            order.push((klat, klon));
            (0.0, 0)
        });
        e.0 += v;
        e.1 += 1;
    }
    let sites = order
        .into_iter()
        .map(|key| {
            let (sum, n) = acc[&key];
            let lat = key.0 as f64 * DEDUP_DEGREES;
            let lon = key.1 as f64 * DEDUP_DEGREES;
            let (x, y) = projection.project(lat, lon);
            Site { x, y, value: sum / n as f64 }
        })
        .collect();
    Ok((sites, projection))
}

/// Assign each cell the bin index of its site value: below the first
/// threshold is class 0, at or above the last is the final class.
pub fn classify_cells(t: &Tessellation, bins: &[f64]) -> Result<Tessellation, SpatialError> {
    for w in bins.windows(2) {
        if w[0] >= w[1] {
            return Err(SpatialError::UnsortedBins);
        }
    }
    let mut out = t.clone();
    for cell in &mut out.cells {
        cell.class = Some(bins.iter().filter(|&&b| cell.site.value >= b).count());
    }
    Ok(out)
}

/// Regular-grid aggregation of one channel in planar meters.
#[derive(Debug, Clone)]
pub struct HeatGrid {
    pub cell_size_m: f64,
    /// Planar coordinates of the grid's lower-left corner.
    pub origin: (f64, f64),
    pub projection: Projection,
    /// Per-cell mean, meaningful where `counts > 0`.
    pub values: Vec<Vec<f64>>,
    pub counts: Vec<Vec<u32>>,
}

impl HeatGrid {
    pub fn n_rows(&self) -> usize {
        self.counts.len()
    }

    pub fn n_cols(&self) -> usize {
        self.counts.first().map_or(0, |r| r.len())
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().flatten().map(|&c| c as u64).sum()
    }

    /// Sparse CSV of populated cells: `row,col,value,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,value,count\n");
        for (r, row) in self.counts.iter().enumerate() {
            for (c, &count) in row.iter().enumerate() {
                if count > 0 {
                    out.push_str(&format!("{r},{c},{},{count}\n", self.values[r][c]));
                }
            }
        }
        out
    }
}

/// Mean of the channel per grid cell over the rows whose projected
/// position falls in that cell.
pub fn grid_heatmap(
    table: &FusedFrameTable,
    channel: &str,
    cell_size_m: f64,
) -> Result<HeatGrid, SpatialError> {
    if !cell_size_m.is_finite() || cell_size_m <= 0.0 {
        return Err(SpatialError::InvalidCellSize(cell_size_m));
    }
    let column = table
        .column(channel)
        .ok_or_else(|| SpatialError::UnknownChannel(channel.to_string()))?;

    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    for (row, v) in column.iter().enumerate() {
        if let (Some((lat, lon)), Some(v)) = (table.geo[row], v) {
            pts.push((lat, lon, *v));
        }
    }
    if pts.is_empty() {
        return Err(SpatialError::NoGeoRows(channel.to_string()));
    }
    let projection = Projection::for_points(pts.iter().map(|&(la, lo, _)| (la, lo)))
        .expect("non-empty points");
    let planar: Vec<(f64, f64, f64)> = pts
        .iter()
        .map(|&(la, lo, v)| {
            let (x, y) = projection.project(la, lo);
            (x, y, v)
        })
        .collect();

    let min_x = planar.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let min_y = planar.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_x = planar.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let max_y = planar.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let n_cols = ((max_x - min_x) / cell_size_m).floor() as usize + 1;
    let n_rows = ((max_y - min_y) / cell_size_m).floor() as usize + 1;

    let mut sums = vec![vec![0.0f64; n_cols]; n_rows];
    let mut counts = vec![vec![0u32; n_cols]; n_rows];
    for (x, y, v) in planar {
        let c = (((x - min_x) / cell_size_m).floor() as usize).min(n_cols - 1);
        let r = (((y - min_y) / cell_size_m).floor() as usize).min(n_rows - 1);
        sums[r][c] += v;
        counts[r][c] += 1;
    }
    let values = sums
        .into_iter()
        .zip(&counts)
        .map(|(row, crow)| {
            row.into_iter()
                .zip(crow)
                .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(HeatGrid { cell_size_m, origin: (min_x, min_y), projection, values, counts })
}
