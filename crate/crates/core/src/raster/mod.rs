//! Raster primitives shared by every other module: affine geotransforms,
//! single-band grids, Gaussian smoothing, resampling and ASCII grid I/O.
//!
//! World coordinates of pixel `(col, row)` refer to its center, i.e. the
//! transform applied to `(col + 0.5, row + 0.5)`.

mod ascii;
mod blur;
mod resample;

pub use ascii::{format_g, read_ascii_grid, write_ascii_grid};
pub use blur::{gaussian_blur, reflect_index, Kernel};
pub use resample::{resample, ResampleMethod};

use crate::{Error, Result};

/// Sentinel used when an operation must emit nodata and the source grid
/// declared none.
pub const DEFAULT_NODATA: f64 = -9999.0;

/// Affine pixel-to-world mapping.
///
/// `x = origin_x + col * pixel_w + row * shear_x`,
/// `y = origin_y + col * shear_y + row * pixel_h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_w: f64,
    pub pixel_h: f64,
    pub shear_x: f64,
    pub shear_y: f64,
}

impl GeoTransform {
    /// North-up transform with square pixels of `gsd` world units.
    pub fn north_up(origin_x: f64, origin_y: f64, gsd: f64) -> Self {
        Self {
            origin_x,
            origin_y,
            pixel_w: gsd,
            pixel_h: -gsd,
            shear_x: 0.0,
            shear_y: 0.0,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.pixel_w * self.pixel_h - self.shear_x * self.shear_y
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.origin_x,
            self.origin_y,
            self.pixel_w,
            self.pixel_h,
            self.shear_x,
            self.shear_y,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("geotransform has non-finite terms"));
        }
        if self.pixel_w == 0.0 || self.pixel_h == 0.0 || self.determinant() == 0.0 {
            return Err(Error::param(format!("degenerate geotransform {self:?}")));
        }
        Ok(())
    }

    pub fn is_sheared(&self) -> bool {
        self.shear_x != 0.0 || self.shear_y != 0.0
    }

    /// Maps continuous pixel coordinates to world coordinates.
    pub fn apply(&self, col: f64, row: f64) -> (f64, f64) {
        (
            self.origin_x + col * self.pixel_w + row * self.shear_x,
            self.origin_y + col * self.shear_y + row * self.pixel_h,
        )
    }

    /// Maps world coordinates back to continuous pixel coordinates.
    pub fn invert(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.origin_x;
        let dy = y - self.origin_y;
        let det = self.determinant();
        (
            (dx * self.pixel_h - dy * self.shear_x) / det,
            (dy * self.pixel_w - dx * self.shear_y) / det,
        )
    }

    pub fn pixel_center(&self, col: usize, row: usize) -> (f64, f64) {
        self.apply(col as f64 + 0.5, row as f64 + 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Continuous,
    Categorical,
}

/// Single-channel raster, row-major with row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    transform: GeoTransform,
    data: Vec<f64>,
    nodata: Option<f64>,
    kind: GridKind,
}

impl Grid {
    pub fn new(
        width: usize,
        height: usize,
        transform: GeoTransform,
        data: Vec<f64>,
        nodata: Option<f64>,
        kind: GridKind,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::shape(format!("empty grid {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::shape(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        transform.validate()?;
        if let Some(nd) = nodata {
            if nd.is_nan() {
                return Err(Error::param("nodata sentinel must not be NaN"));
            }
        }
        let grid = Self {
            width,
            height,
            transform,
            data,
            nodata,
            kind,
        };
        for (i, &v) in grid.data.iter().enumerate() {
            if grid.is_nodata_value(v) {
                continue;
            }
            let ok = match kind {
                GridKind::Continuous => v.is_finite(),
                GridKind::Categorical => v.is_finite() && v >= 0.0 && v.fract() == 0.0,
            };
            if !ok {
                return Err(Error::data(format!(
                    "invalid {kind:?} value {v} at pixel {i}"
                )));
            }
        }
        Ok(grid)
    }

    pub fn filled(
        width: usize,
        height: usize,
        transform: GeoTransform,
        value: f64,
        kind: GridKind,
    ) -> Result<Self> {
        Self::new(width, height, transform, vec![value; width * height], None, kind)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.transform
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn nodata(&self) -> Option<f64> {
        self.nodata
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn is_nodata_value(&self, v: f64) -> bool {
        self.nodata == Some(v)
    }

    pub fn is_nodata(&self, idx: usize) -> bool {
        self.is_nodata_value(self.data[idx])
    }

    pub fn has_nodata_cells(&self) -> bool {
        self.nodata.is_some() && self.data.iter().any(|&v| self.is_nodata_value(v))
    }

    /// Class id at `idx`, or `None` for nodata. Only meaningful for categorical grids.
    pub fn class_at(&self, idx: usize) -> Option<u32> {
        let v = self.data[idx];
        if self.is_nodata_value(v) {
            None
        } else {
            Some(v as u32)
        }
    }

    pub fn same_footprint(&self, other: &Grid) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.transform == other.transform
    }

    /// Copy of this grid carrying new values; validated like [`Grid::new`].
    pub fn with_data(&self, data: Vec<f64>, kind: GridKind) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.transform,
            data,
            self.nodata,
            kind,
        )
    }

    /// Reinterprets the values under another kind, re-running validation.
    pub fn into_kind(self, kind: GridKind) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.transform,
            self.data,
            self.nodata,
            kind,
        )
    }

    pub fn with_nodata(mut self, nodata: Option<f64>) -> Result<Self> {
        self.nodata = nodata;
        Self::new(
            self.width,
            self.height,
            self.transform,
            self.data,
            self.nodata,
            self.kind,
        )
    }

    /// Finite (min, max) over valid cells, or `None` when every cell is nodata.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        self.data
            .iter()
            .filter(|&&v| !self.is_nodata_value(v))
            .fold(None, |acc, &v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}
