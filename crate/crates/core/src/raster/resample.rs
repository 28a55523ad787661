use rayon::prelude::*;

use super::{GeoTransform, Grid, GridKind, DEFAULT_NODATA};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResampleMethod {
    Nearest,
    #[default]
    Bilinear,
}

impl std::str::FromStr for ResampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Self::Nearest),
            "bilinear" => Ok(Self::Bilinear),
            other => Err(Error::param(format!("unknown resample method '{other}'"))),
        }
    }
}

/// Resamples `grid` onto a target footprint.
///
/// Each target pixel samples the source at its pixel-center world
/// coordinate. Target pixels outside the source extent become nodata
/// (the source sentinel, or [`DEFAULT_NODATA`] if the source declares none).
pub fn resample(
    grid: &Grid,
    target: &GeoTransform,
    target_w: usize,
    target_h: usize,
    method: ResampleMethod,
) -> Result<Grid> {
    target.validate()?;
    if target_w == 0 || target_h == 0 {
        return Err(Error::param(format!(
            "target size {target_w}x{target_h} is empty"
        )));
    }
    if method == ResampleMethod::Bilinear && grid.kind() == GridKind::Categorical {
        return Err(Error::Kind(
            "bilinear resampling of a categorical grid; use nearest".into(),
        ));
    }

    let fill = grid.nodata().unwrap_or(DEFAULT_NODATA);
    let src_t = grid.transform();
    let mut out = vec![0.0; target_w * target_h];
    out.par_chunks_mut(target_w)
        .enumerate()
        .for_each(|(row, line)| {
            for (col, o) in line.iter_mut().enumerate() {
                let (x, y) = target.pixel_center(col, row);
                let (fx, fy) = src_t.invert(x, y);
                let sample = match method {
                    ResampleMethod::Nearest => sample_nearest(grid, fx, fy),
                    ResampleMethod::Bilinear => sample_bilinear(grid, fx, fy),
                };
                *o = sample.unwrap_or(fill);
            }
        });

    let nodata = if grid.nodata().is_none() && out.iter().any(|&v| v == fill) {
        Some(fill)
    } else {
        grid.nodata()
    };
    Grid::new(target_w, target_h, *target, out, nodata, grid.kind())
}

/// Index of the nearest source center along one axis; exact ties go to the
/// smaller index. `f` is the continuous pixel coordinate.
fn nearest_index(f: f64, len: usize) -> Option<usize> {
    if !(f >= 0.0 && f < len as f64) {
        return None;
    }
    let u = f - 0.5;
    let i = (u - 0.5).ceil().max(0.0) as usize;
    Some(i.min(len - 1))
}

fn sample_nearest(grid: &Grid, fx: f64, fy: f64) -> Option<f64> {
    let c = nearest_index(fx, grid.width())?;
    let r = nearest_index(fy, grid.height())?;
    let v = grid.get(c, r);
    (!grid.is_nodata_value(v)).then_some(v)
}

fn sample_bilinear(grid: &Grid, fx: f64, fy: f64) -> Option<f64> {
    let (w, h) = (grid.width(), grid.height());
    // Continuous coordinates in units of source pixel centers.
    let u = fx - 0.5;
    let v = fy - 0.5;
    let in_hull = u >= 0.0 && u <= (w - 1) as f64 && v >= 0.0 && v <= (h - 1) as f64;
    if in_hull {
        let c0 = (u.floor() as usize).min(w - 1);
        let r0 = (v.floor() as usize).min(h - 1);
        let c1 = (c0 + 1).min(w - 1);
        let r1 = (r0 + 1).min(h - 1);
        let tx = u - c0 as f64;
        let ty = v - r0 as f64;
        let corners = [grid.get(c0, r0), grid.get(c1, r0), grid.get(c0, r1), grid.get(c1, r1)];
        if corners.iter().all(|&c| !grid.is_nodata_value(c)) {
            let top = corners[0] + (corners[1] - corners[0]) * tx;
            let bottom = corners[2] + (corners[3] - corners[2]) * tx;
            return Some(top + (bottom - top) * ty);
        }
    }
    sample_nearest(grid, fx, fy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn continuous(w: usize, h: usize, t: GeoTransform, data: Vec<f64>) -> Grid {
        Grid::new(w, h, t, data, None, GridKind::Continuous).unwrap()
    }

    #[test]
    fn nearest_identity_is_bit_exact() {
        let t = GeoTransform::north_up(10.0, 50.0, 2.5);
        let data: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let g = continuous(5, 4, t, data);
        let out = resample(&g, &t, 5, 4, ResampleMethod::Nearest).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn nearest_tie_breaks_to_smaller_index() {
        assert_eq!(nearest_index(1.0, 4), Some(0));
        assert_eq!(nearest_index(1.0001, 4), Some(1));
        assert_eq!(nearest_index(0.0, 4), Some(0));
        assert_eq!(nearest_index(3.9999, 4), Some(3));
        assert_eq!(nearest_index(4.0, 4), None);
        assert_eq!(nearest_index(-0.1, 4), None);
    }

    #[test]
    fn bilinear_reproduces_ramp_at_interior_points() {
        // Source centers at u = 0, 1; value = 2u (+ 4v).
        let src = continuous(2, 2, GeoTransform::north_up(0.0, 2.0, 1.0), vec![0.0, 2.0, 4.0, 6.0]);
        let target = GeoTransform::north_up(0.0, 2.0, 0.5);
        let out = resample(&src, &target, 4, 4, ResampleMethod::Bilinear).unwrap();
        for row in 1..3 {
            for col in 1..3 {
                let u = (col as f64 + 0.5) * 0.5 - 0.5;
                let v = (row as f64 + 0.5) * 0.5 - 0.5;
                let expected = 2.0 * u + 4.0 * v;
                assert!((out.get(col, row) - expected).abs() < 1e-12);
            }
        }
        // Outside the hull of centers: nearest fallback.
        assert_eq!(out.get(0, 0), 0.0);
        assert_eq!(out.get(3, 3), 6.0);
    }

    #[test]
    fn dem_20m_to_10m() {
        let src_t = GeoTransform::north_up(500_000.0, 4_000_000.0, 20.0);
        let data: Vec<f64> = (0..16).map(|i| 100.0 + i as f64).collect();
        let dem = continuous(4, 4, src_t, data);
        let dst_t = GeoTransform::north_up(500_000.0, 4_000_000.0, 10.0);
        let out = resample(&dem, &dst_t, 8, 8, ResampleMethod::Bilinear).unwrap();
        assert_eq!(out.width(), 8);
        assert_eq!(out.transform().pixel_w, 10.0);
        assert!(out.nodata().is_none());
    }

    #[test]
    fn outside_extent_becomes_nodata() {
        let g = continuous(2, 2, GeoTransform::north_up(0.0, 2.0, 1.0), vec![1.0; 4]);
        let shifted = GeoTransform::north_up(1.0, 2.0, 1.0);
        let out = resample(&g, &shifted, 2, 2, ResampleMethod::Nearest).unwrap();
        assert_eq!(out.nodata(), Some(DEFAULT_NODATA));
        assert_eq!(out.data(), &[1.0, DEFAULT_NODATA, 1.0, DEFAULT_NODATA]);
    }

    #[test]
    fn errors() {
        let t = GeoTransform::north_up(0.0, 0.0, 1.0);
        let cat = Grid::new(1, 1, t, vec![1.0], None, GridKind::Categorical).unwrap();
        assert!(matches!(
            resample(&cat, &t, 1, 1, ResampleMethod::Bilinear),
            Err(Error::Kind(_))
        ));
        let mut bad = t;
        bad.pixel_h = 0.0;
        assert!(matches!(
            resample(&cat, &bad, 1, 1, ResampleMethod::Nearest),
            Err(Error::Parameter(_))
        ));
    }
}
