//! Minimal GeoJSON (RFC 7946 subset) reader.
//!
//! Accepts a FeatureCollection of Point, LineString, Polygon and their
//! Multi* forms. Multi-part geometries are exploded into one feature per
//! part; properties are flattened to strings.

use std::collections::BTreeMap;

use serde_json::Value;

use super::{Coord, Feature, Geometry, VectorLayer};
use crate::{Error, Result};

fn err(feature: usize, message: impl Into<String>) -> Error {
    Error::GeoJson {
        feature,
        message: message.into(),
    }
}

pub fn parse_geojson(bytes: &[u8]) -> Result<VectorLayer> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("invalid JSON: {e}"),
    })?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::Parse {
            line: 1,
            message: "top-level object must be a FeatureCollection".into(),
        });
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "FeatureCollection without a 'features' array".into(),
        })?;

    let mut out = Vec::new();
    for (idx, f) in features.iter().enumerate() {
        if f.get("type").and_then(Value::as_str) != Some("Feature") {
            return Err(err(idx, "entry is not a Feature"));
        }
        let properties = flatten_properties(f.get("properties"));
        let geometry = f
            .get("geometry")
            .filter(|g| !g.is_null())
            .ok_or_else(|| err(idx, "missing geometry"))?;
        for geometry in parse_geometry(geometry, idx)? {
            out.push(Feature {
                geometry,
                properties: properties.clone(),
            });
        }
    }
    Ok(VectorLayer::new(out))
}

fn flatten_properties(props: Option<&Value>) -> BTreeMap<String, String> {
    let Some(Value::Object(map)) = props else {
        return BTreeMap::new();
    };
    map.iter()
        .map(|(k, v)| {
            let s = match v {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                other => other.to_string(),
            };
            (k.clone(), s)
        })
        .collect()
}

fn parse_geometry(g: &Value, idx: usize) -> Result<Vec<Geometry>> {
    let kind = g
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| err(idx, "geometry without a type"))?;
    let coords = g
        .get("coordinates")
        .ok_or_else(|| err(idx, format!("{kind} without coordinates")))?;
    let parts = |v: &Value| -> Result<Vec<Value>> {
        v.as_array()
            .cloned()
            .ok_or_else(|| err(idx, format!("{kind} coordinates must be an array")))
    };
    match kind {
        "Point" => Ok(vec![Geometry::Point(position(coords, idx)?)]),
        "LineString" => Ok(vec![line(coords, idx)?]),
        "Polygon" => Ok(vec![polygon(coords, idx)?]),
        "MultiPoint" => parts(coords)?
            .iter()
            .map(|p| position(p, idx).map(Geometry::Point))
            .collect(),
        "MultiLineString" => parts(coords)?.iter().map(|l| line(l, idx)).collect(),
        "MultiPolygon" => parts(coords)?.iter().map(|p| polygon(p, idx)).collect(),
        other => Err(err(idx, format!("unsupported geometry type '{other}'"))),
    }
}

fn position(v: &Value, idx: usize) -> Result<Coord> {
    let arr = v
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| err(idx, "position must be an array of at least two numbers"))?;
    let x = arr[0].as_f64();
    let y = arr[1].as_f64();
    match (x, y) {
        (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok(Coord::new(x, y)),
        _ => Err(err(idx, "non-numeric coordinate")),
    }
}

fn positions(v: &Value, idx: usize) -> Result<Vec<Coord>> {
    v.as_array()
        .ok_or_else(|| err(idx, "expected an array of positions"))?
        .iter()
        .map(|p| position(p, idx))
        .collect()
}

fn line(v: &Value, idx: usize) -> Result<Geometry> {
    let pts = positions(v, idx)?;
    if pts.is_empty() {
        return Err(err(idx, "LineString has no vertices"));
    }
    Ok(Geometry::LineString(pts))
}

fn polygon(v: &Value, idx: usize) -> Result<Geometry> {
    let rings = v
        .as_array()
        .ok_or_else(|| err(idx, "Polygon coordinates must be an array of rings"))?;
    if rings.is_empty() {
        return Err(err(idx, "Polygon has no rings"));
    }
    let mut parsed = Vec::with_capacity(rings.len());
    for (ri, r) in rings.iter().enumerate() {
        let ring = positions(r, idx)?;
        if ring.len() < 4 {
            return Err(err(idx, format!("ring {ri} has fewer than 4 positions")));
        }
        if ring.first() != ring.last() {
            return Err(err(idx, format!("ring {ri} is not closed")));
        }
        parsed.push(ring);
    }
    let exterior = parsed.remove(0);
    Ok(Geometry::Polygon {
        exterior,
        holes: parsed,
    })
}
