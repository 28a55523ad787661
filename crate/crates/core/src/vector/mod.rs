//! Vector ingestion: GeoJSON parsing, tag-to-class mapping and rasterization
//! into class grids, binary proximity masks and RGB rasters.

mod classmap;
mod geojson;
mod geometry;
mod rasterize;

pub use classmap::{hex, ClassEntry, ClassMap, Rgb};
pub use geojson::parse_geojson;
pub use geometry::{glob_match, BBox, Coord, Feature, Geometry, TagSelector, VectorLayer};
pub use rasterize::{binary_mask, rasterize_classes, rgb_to_classes, to_rgb_raster, BinaryMask};
