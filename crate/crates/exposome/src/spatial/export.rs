//! GeoJSON and SVG serialisation of tessellations.

use super::{polygon_area, Projection, Tessellation};
use serde_json::{json, Value};

/// Five-step class palette (diverging, class 0 = low).
const PALETTE: [&str; 5] = ["#2c7bb6", "#abd9e9", "#ffffbf", "#fdae61", "#d7191c"];
const UNCLASSED: &str = "#bbbbbb";

/// RFC 7946 FeatureCollection of the cells: closed polygon rings
/// back-projected to (lon, lat), with the site value and class carried as
/// feature properties.
pub fn tessellation_to_geojson(t: &Tessellation, projection: &Projection) -> String {
    let features: Vec<Value> = t
        .cells
        .iter()
        .map(|cell| {
            let mut ring: Vec<[f64; 2]> = cell
                .polygon
                .iter()
                .map(|&(x, y)| {
                    let (lat, lon) = projection.unproject(x, y);
                    [lon, lat]
                })
                .collect();
            if let Some(first) = ring.first().copied() {
                ring.push(first);
            }
            let (site_lat, site_lon) = projection.unproject(cell.site.x, cell.site.y);
            json!({
                "type": "Feature",
                "geometry": { "type": "Polygon", "coordinates": [ring] },
                "properties": {
                    "value": cell.site.value,
                    "class": cell.class,
                    "site": [site_lon, site_lat],
                },
            })
        })
        .collect();
    serde_json::to_string(&json!({
        "type": "FeatureCollection",
        "features": features,
    }))
    .expect("geojson serialization")
}

/// Planar areas of every Polygon feature in a GeoJSON document, computed
/// after re-projection. Used to verify export round-trips.
pub fn polygon_areas_from_geojson(
    doc: &str,
    projection: &Projection,
) -> Result<Vec<f64>, serde_json::Error> {
    let value: Value = serde_json::from_str(doc)?;
    let mut areas = Vec::new();
    if let Some(features) = value["features"].as_array() {
        for f in features {
            if f["geometry"]["type"] == "Polygon" {
                if let Some(ring) = f["geometry"]["coordinates"][0].as_array() {
                    let pts: Vec<(f64, f64)> = ring
                        .iter()
                        .filter_map(|c| {
                            let lon = c[0].as_f64()?;
                            let lat = c[1].as_f64()?;
                            Some(projection.project(lat, lon))
                        })
                        .collect();
                    // Drop the closing vertex for the shoelace sum.
                    let open = if pts.len() > 1 && pts.first() == pts.last() {
                        &pts[..pts.len() - 1]
                    } else {
                        &pts[..]
                    };
                    areas.push(polygon_area(open).abs());
                }
            }
        }
    }
    Ok(areas)
}

/// Standalone SVG of the tessellation with the five-colour class palette.
/// Output is a pure function of the tessellation (no timestamps).
pub fn tessellation_to_svg(t: &Tessellation) -> String {
    let w = t.bbox.max_x - t.bbox.min_x;
    let h = t.bbox.max_y - t.bbox.min_y;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" width=\"800\" height=\"{:.0}\">\n",
        if w > 0.0 { 800.0 * h / w } else { 800.0 }
    );
    for cell in &t.cells {
        let fill = match cell.class {
            Some(c) => PALETTE[c.min(PALETTE.len() - 1)],
            None => UNCLASSED,
        };
        let points: Vec<String> = cell
            .polygon
            .iter()
            .map(|&(x, y)| format!("{},{}", x - t.bbox.min_x, t.bbox.max_y - y))
            .collect();
        svg.push_str(&format!(
            "  <polygon points=\"{}\" fill=\"{fill}\" stroke=\"#333333\" stroke-width=\"0.5\"/>\n",
            points.join(" ")
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
