use rayon::prelude::*;

use super::{ClassMap, Coord, Geometry, TagSelector, VectorLayer};
use crate::raster::{gaussian_blur, GeoTransform, Grid, GridKind};
use crate::{Error, Result};

/// Categorical grid restricted to {0, 1} with no nodata.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask(Grid);

impl BinaryMask {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.nodata().is_some() && grid.has_nodata_cells() {
            return Err(Error::data("binary mask contains nodata cells"));
        }
        if let Some(i) = grid.data().iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::data(format!(
                "binary mask value {} at pixel {i} is not 0/1",
                grid.data()[i]
            )));
        }
        let grid = grid.with_nodata(None)?.into_kind(GridKind::Categorical)?;
        Ok(Self(grid))
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }

    pub fn into_grid(self) -> Grid {
        self.0
    }

    pub fn is_set(&self, idx: usize) -> bool {
        self.0.data()[idx] == 1.0
    }

    pub fn count(&self) -> usize {
        self.0.data().iter().filter(|&&v| v == 1.0).count()
    }
}

/// One geometry to burn with its radius, prepared with a pixel window.
struct Burn<'a> {
    geometry: &'a Geometry,
    radius: f64,
    value: f64,
    cols: (usize, usize),
    rows: (usize, usize),
}

/// Inclusive pixel window whose centers may fall within `radius` of the geometry.
fn pixel_window(
    geometry: &Geometry,
    radius: f64,
    t: &GeoTransform,
    w: usize,
    h: usize,
) -> Option<((usize, usize), (usize, usize))> {
    let b = geometry.bbox().expand(radius);
    let corners = [
        t.invert(b.min_x, b.min_y),
        t.invert(b.min_x, b.max_y),
        t.invert(b.max_x, b.min_y),
        t.invert(b.max_x, b.max_y),
    ];
    let (mut c0, mut c1, mut r0, mut r1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (c, r) in corners {
        c0 = c0.min(c);
        c1 = c1.max(c);
        r0 = r0.min(r);
        r1 = r1.max(r);
    }
    // One pixel of slack on each side; the exact test decides.
    let lo = |v: f64| (v - 1.5).floor().max(0.0);
    let hi = |v: f64, n: usize| (v + 0.5).ceil().min(n as f64 - 1.0);
    let (cl, ch) = (lo(c0), hi(c1, w));
    let (rl, rh) = (lo(r0), hi(r1, h));
    if !(cl <= ch && rl <= rh) {
        return None;
    }
    Some(((cl as usize, ch as usize), (rl as usize, rh as usize)))
}

fn burn_all(burns: &[Burn], background: f64, t: &GeoTransform, w: usize, h: usize) -> Vec<f64> {
    let mut data = vec![background; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(row, line)| {
        for b in burns {
            if row < b.rows.0 || row > b.rows.1 {
                continue;
            }
            for (col, cell) in line.iter_mut().enumerate().take(b.cols.1 + 1).skip(b.cols.0) {
                let (x, y) = t.pixel_center(col, row);
                if b.geometry.covers(Coord::new(x, y), b.radius) {
                    *cell = b.value;
                }
            }
        }
    });
    data
}

fn check_target(transform: &GeoTransform, w: usize, h: usize) -> Result<()> {
    transform.validate()?;
    if w == 0 || h == 0 {
        return Err(Error::param(format!("target size {w}x{h} is empty")));
    }
    Ok(())
}

/// Burns the layer into a class grid.
///
/// Polygons cover pixel centers inside them (even-odd, holes respected) or
/// within the entry buffer of their boundary; points and lines cover centers
/// within the buffer. Entries are applied in order, later ones overwriting
/// earlier ones. Uncovered pixels get the background class.
pub fn rasterize_classes(
    layer: &VectorLayer,
    class_map: &ClassMap,
    transform: &GeoTransform,
    w: usize,
    h: usize,
) -> Result<Grid> {
    check_target(transform, w, h)?;
    if class_map.entries().is_empty() {
        return Err(Error::param("class map has no entries"));
    }
    let mut burns = Vec::new();
    for entry in class_map.entries() {
        for f in layer.features.iter().filter(|f| entry.selector.matches(f)) {
            if let Some((cols, rows)) = pixel_window(&f.geometry, entry.buffer, transform, w, h) {
                burns.push(Burn {
                    geometry: &f.geometry,
                    radius: entry.buffer,
                    value: entry.class_id as f64,
                    cols,
                    rows,
                });
            }
        }
    }
    let data = burn_all(&burns, class_map.background_class() as f64, transform, w, h);
    Grid::new(w, h, *transform, data, None, GridKind::Categorical)
}

/// 1 where a pixel center lies within `radius` of any selected feature.
pub fn binary_mask(
    layer: &VectorLayer,
    selector: &TagSelector,
    radius: f64,
    transform: &GeoTransform,
    w: usize,
    h: usize,
) -> Result<BinaryMask> {
    check_target(transform, w, h)?;
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::param(format!("mask radius must be >= 0, got {radius}")));
    }
    let burns: Vec<Burn> = layer
        .features
        .iter()
        .filter(|f| selector.matches(f))
        .filter_map(|f| {
            pixel_window(&f.geometry, radius, transform, w, h).map(|(cols, rows)| Burn {
                geometry: &f.geometry,
                radius,
                value: 1.0,
                cols,
                rows,
            })
        })
        .collect();
    let data = burn_all(&burns, 0.0, transform, w, h);
    BinaryMask::new(Grid::new(w, h, *transform, data, None, GridKind::Categorical)?)
}

/// Maps a class grid to three continuous channels (color / 255), optionally
/// Gaussian-smoothed per channel. Nodata cells take the background color.
pub fn to_rgb_raster(class_grid: &Grid, class_map: &ClassMap, smooth_sigma: Option<f64>) -> Result<[Grid; 3]> {
    if class_grid.kind() != GridKind::Categorical {
        return Err(Error::Kind("to_rgb_raster expects a categorical grid".into()));
    }
    let bg = class_map
        .color_of(class_map.background_class())
        .expect("background always mapped");
    let mut unmapped = std::collections::BTreeSet::new();
    let mut channels = [
        Vec::with_capacity(class_grid.len()),
        Vec::with_capacity(class_grid.len()),
        Vec::with_capacity(class_grid.len()),
    ];
    for idx in 0..class_grid.len() {
        let color = match class_grid.class_at(idx) {
            None => bg,
            Some(c) => class_map.color_of(c).unwrap_or_else(|| {
                unmapped.insert(c);
                bg
            }),
        };
        for (ch, &v) in channels.iter_mut().zip(&color) {
            ch.push(v as f64 / 255.0);
        }
    }
    if !unmapped.is_empty() {
        return Err(Error::Mapping(unmapped.into_iter().collect()));
    }
    let make = |data: Vec<f64>| -> Result<Grid> {
        let g = Grid::new(
            class_grid.width(),
            class_grid.height(),
            *class_grid.transform(),
            data,
            None,
            GridKind::Continuous,
        )?;
        match smooth_sigma {
            Some(s) => gaussian_blur(&g, s),
            None => Ok(g),
        }
    };
    let [r, g, b] = channels;
    Ok([make(r)?, make(g)?, make(b)?])
}

/// Inverse palette lookup of an unsmoothed RGB raster back to class ids.
pub fn rgb_to_classes(rgb: &[Grid; 3], class_map: &ClassMap) -> Result<Grid> {
    let [r, g, b] = rgb;
    if !(r.same_footprint(g) && r.same_footprint(b)) {
        return Err(Error::Alignment("RGB channels differ in footprint".into()));
    }
    let to_byte = |v: f64| -> Option<u8> {
        let s = v * 255.0;
        let q = s.round();
        ((s - q).abs() < 1e-6 && (0.0..=255.0).contains(&q)).then_some(q as u8)
    };
    let mut data = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        let color = [to_byte(r.data()[i]), to_byte(g.data()[i]), to_byte(b.data()[i])];
        let class = match color {
            [Some(x), Some(y), Some(z)] => class_map.class_of_color([x, y, z]),
            _ => None,
        }
        .ok_or_else(|| Error::data(format!("pixel {i} does not hold a palette color")))?;
        data.push(class as f64);
    }
    Grid::new(r.width(), r.height(), *r.transform(), data, None, GridKind::Categorical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::{ClassEntry, Feature};
    use std::collections::BTreeMap;

    fn t10() -> GeoTransform {
        GeoTransform::north_up(0.0, 40.0, 10.0)
    }

    fn feature(geometry: Geometry, k: &str, v: &str) -> Feature {
        let mut properties = BTreeMap::new();
        properties.insert(k.to_string(), v.to_string());
        Feature { geometry, properties }
    }

    fn cmap(buffer: f64) -> ClassMap {
        ClassMap::new(
            vec![ClassEntry {
                selector: TagSelector::new("highway", "*"),
                class_id: 3,
                color: [255, 0, 0],
                buffer,
            }],
            0,
            [0, 0, 0],
        )
        .unwrap()
    }

    fn ring(pts: &[(f64, f64)]) -> Vec<Coord> {
        pts.iter().map(|&p| Coord::from(p)).collect()
    }

    #[test]
    fn empty_layer_is_background() {
        let g = rasterize_classes(&VectorLayer::default(), &cmap(0.0), &t10(), 4, 4).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn square_polygon_covers_four_pixels() {
        // Pixels (1..2, 1..2) span x in [10, 30], y in [10, 30].
        let sq = Geometry::Polygon {
            exterior: ring(&[(10.0, 10.0), (30.0, 10.0), (30.0, 30.0), (10.0, 30.0), (10.0, 10.0)]),
            holes: vec![],
        };
        let layer = VectorLayer::new(vec![feature(sq, "highway", "x")]);
        let g = rasterize_classes(&layer, &cmap(0.0), &t10(), 4, 4).unwrap();
        for row in 0..4 {
            for col in 0..4 {
                let want = if (1..=2).contains(&row) && (1..=2).contains(&col) { 3.0 } else { 0.0 };
                assert_eq!(g.get(col, row), want, "({col},{row})");
            }
        }
    }

    #[test]
    fn buffered_road_is_one_pixel_stripe() {
        // Road along the center line of row 1 (y = 25); rows 0 and 2 have
        // centers exactly 10 units away, which is not strictly within 10.
        let road = Geometry::LineString(ring(&[(-5.0, 25.0), (45.0, 25.0)]));
        let layer = VectorLayer::new(vec![feature(road, "highway", "primary")]);
        let g = rasterize_classes(&layer, &cmap(10.0), &t10(), 4, 4).unwrap();
        for row in 0..4 {
            for col in 0..4 {
                let want = if row == 1 { 3.0 } else { 0.0 };
                assert_eq!(g.get(col, row), want, "({col},{row})");
            }
        }
    }

    #[test]
    fn painter_order_across_entries() {
        let sq = Geometry::Polygon {
            exterior: ring(&[(0.0, 0.0), (40.0, 0.0), (40.0, 40.0), (0.0, 40.0), (0.0, 0.0)]),
            holes: vec![],
        };
        let layer = VectorLayer::new(vec![feature(sq, "landuse", "forest")]);
        let entries = |first: u32, second: u32| {
            vec![
                ClassEntry { selector: TagSelector::new("landuse", "*"), class_id: first, color: [first as u8, 0, 0], buffer: 0.0 },
                ClassEntry { selector: TagSelector::new("landuse", "forest"), class_id: second, color: [second as u8, 0, 0], buffer: 0.0 },
            ]
        };
        let cm = ClassMap::new(entries(1, 2), 0, [0, 9, 9]).unwrap();
        let g = rasterize_classes(&layer, &cm, &t10(), 4, 4).unwrap();
        assert!(g.data().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn point_disk_mask() {
        let t = GeoTransform::north_up(0.0, 90.0, 10.0);
        let p = Geometry::Point(Coord::new(45.0, 45.0));
        let layer = VectorLayer::new(vec![feature(p, "building", "yes")]);
        let m = binary_mask(&layer, &TagSelector::new("building", "*"), 15.0, &t, 9, 9).unwrap();
        for row in 0..9 {
            for col in 0..9 {
                let (x, y) = t.pixel_center(col, row);
                let inside = (x - 45.0).hypot(y - 45.0) <= 15.0;
                assert_eq!(m.is_set(row * 9 + col), inside);
            }
        }
        assert_eq!(m.count(), 9);
        let none = binary_mask(&layer, &TagSelector::new("highway", "*"), 15.0, &t, 9, 9).unwrap();
        assert_eq!(none.count(), 0);
        assert!(binary_mask(&layer, &TagSelector::new("building", "*"), -1.0, &t, 9, 9).is_err());
    }

    #[test]
    fn rgb_mapping_and_errors() {
        let t = t10();
        let classes = Grid::new(2, 1, t, vec![0.0, 3.0], None, GridKind::Categorical).unwrap();
        let [r, g, b] = to_rgb_raster(&classes, &cmap(0.0), None).unwrap();
        assert_eq!(r.data(), &[0.0, 1.0]);
        assert_eq!(g.data(), &[0.0, 0.0]);
        assert_eq!(b.data(), &[0.0, 0.0]);
        let back = rgb_to_classes(&[r, g, b], &cmap(0.0)).unwrap();
        assert_eq!(back.data(), classes.data());

        let bad = Grid::new(3, 1, t, vec![0.0, 7.0, 5.0], None, GridKind::Categorical).unwrap();
        assert_eq!(to_rgb_raster(&bad, &cmap(0.0), None), Err(Error::Mapping(vec![5, 7])));
    }
}
