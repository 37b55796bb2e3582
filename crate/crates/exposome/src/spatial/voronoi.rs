//! Voronoi tessellation by half-plane clipping.
//!
//! Each site's cell starts as the bounding box and is clipped against the
//! perpendicular bisector of every other site, keeping the near side.
//! Neighbours are visited in increasing distance with the standard cutoff:
//! a site farther than twice the current maximum site-to-vertex distance
//! cannot cut the cell (triangle inequality), so route-scale inputs with
//! thousands of sites finish in near-linear work per cell despite the
//! O(n^2) worst case.

use super::{polygon_area, Rect, Site, SpatialError, Tessellation, VoronoiCell};

/// Build the Euclidean Voronoi diagram of `sites` clipped to `bbox`.
///
/// Exactly coincident sites are merged with the mean of their values. Every
/// site must lie inside the box.
pub fn voronoi(sites: &[Site], bbox: Rect) -> Result<Tessellation, SpatialError> {
    let sites = merge_coincident(sites);
    if sites.is_empty() {
        return Err(SpatialError::NoSites);
    }
    for s in &sites {
        if !bbox.contains(s.x, s.y) {
            return Err(SpatialError::SiteOutsideBox { x: s.x, y: s.y });
        }
    }

    let n = sites.len();
    let mut cells = Vec::with_capacity(n);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        let p = sites[i];
        candidates.clear();
        for (j, q) in sites.iter().enumerate() {
            if j != i {
                let dx = q.x - p.x;
                let dy = q.y - p.y;
                candidates.push((dx * dx + dy * dy, j));
            }
        }

        let mut polygon = bbox.corners();
        let mut max_d2 = max_vertex_dist2(&p, &polygon);
        let total = candidates.len();
        let mut sorted_upto = 0usize;
        let mut processed = 0usize;
        'clip: while processed < total {
            if processed == sorted_upto {
                let next = (sorted_upto.max(16) * 4).min(total);
                partial_sort(&mut candidates, sorted_upto, next);
                sorted_upto = next;
            }
            while processed < sorted_upto {
                let (d2, j) = candidates[processed];
                processed += 1;
                if d2 > 4.0 * max_d2 {
                    break 'clip;
                }
                clip_by_bisector(&mut polygon, &p, &sites[j]);
                max_d2 = max_vertex_dist2(&p, &polygon);
            }
        }

        if polygon_area(&polygon) < 0.0 {
            polygon.reverse();
        }
        cells.push(VoronoiCell { site: p, polygon, class: None });
    }
    Ok(Tessellation { cells, bbox })
}

fn merge_coincident(sites: &[Site]) -> Vec<Site> {
    let mut out: Vec<(Site, usize)> = Vec::with_capacity(sites.len());
    let mut index: std::collections::HashMap<(u64, u64), usize> = std::collections::HashMap::new();
    for s in sites {
        let key = (s.x.to_bits(), s.y.to_bits());
        match index.get(&key) {
            Some(&k) => {
                out[k].0.value += s.value;
                out[k].1 += 1;
            }
            None => {
                index.insert(key, out.len());
                out.push((*s, 1));
            }
        }
    }
    out.into_iter()
        .map(|(mut s, n)| {
            s.value /= n as f64;
            s
        })
        .collect()
}

fn max_vertex_dist2(site: &Site, polygon: &[(f64, f64)]) -> f64 {
    polygon
        .iter()
        .map(|&(x, y)| {
            let dx = x - site.x;
            let dy = y - site.y;
            dx * dx + dy * dy
        })
        .fold(0.0, f64::max)
}

/// Sort `candidates[lo..hi]` into ascending-distance order, leaving
/// everything beyond `hi` no closer than anything before it.
fn partial_sort(candidates: &mut [(f64, usize)], lo: usize, hi: usize) {
    let tail = &mut candidates[lo..];
    let k = hi - lo;
    if k < tail.len() {
        tail.select_nth_unstable_by(k - 1, |a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    tail[..k].sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
}

/// Sutherland–Hodgman clip of `polygon` against the half-plane of points
/// at least as close to `p` as to `q`.
fn clip_by_bisector(polygon: &mut Vec<(f64, f64)>, p: &Site, q: &Site) {
    if polygon.is_empty() {
        return;
    }
    let mx = 0.5 * (p.x + q.x);
    let my = 0.5 * (p.y + q.y);
    let nx = q.x - p.x;
    let ny = q.y - p.y;
    // f(v) = (v - m) . (q - p); keep f <= 0.
    let f = |v: (f64, f64)| (v.0 - mx) * nx + (v.1 - my) * ny;

    let mut out: Vec<(f64, f64)> = Vec::with_capacity(polygon.len() + 2);
    let n = polygon.len();
    for i in 0..n {
        let cur = polygon[i];
        let next = polygon[(i + 1) % n];
        let fc = f(cur);
        let fn_ = f(next);
        if fc <= 0.0 {
            out.push(cur);
            if fn_ > 0.0 {
                out.push(edge_intersection(cur, next, fc, fn_));
            }
        } else if fn_ <= 0.0 {
            out.push(edge_intersection(cur, next, fc, fn_));
        }
    }
    dedup_vertices(&mut out);
    *polygon = out;
}

fn edge_intersection(a: (f64, f64), b: (f64, f64), fa: f64, fb: f64) -> (f64, f64) {
    let t = fa / (fa - fb);
    (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
}

fn dedup_vertices(polygon: &mut Vec<(f64, f64)>) {
    if polygon.len() < 2 {
        return;
    }
    let scale = polygon
        .iter()
        .map(|&(x, y)| x.abs().max(y.abs()))
        .fold(1.0, f64::max);
    let eps = 1e-12 * scale;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(polygon.len());
    for &v in polygon.iter() {
        if let Some(&last) = out.last() {
            if (v.0 - last.0).abs() <= eps && (v.1 - last.1).abs() <= eps {
                continue;
            }
        }
        out.push(v);
    }
    while out.len() >= 2 {
        let first = out[0];
        let last = *out.last().unwrap();
        if (first.0 - last.0).abs() <= eps && (first.1 - last.1).abs() <= eps {
            out.pop();
        } else {
            break;
        }
    }
    *polygon = out;
}
