//! Geographic-input fusion for satellite-imagery models.
//!
//! The crate covers the data side of three ways of feeding geographic layers
//! to an image model:
//!
//! - channel stacking of aligned rasters with the optical input ([`fusion::stack_channels`]),
//! - stacking a hand-crafted land-cover prior derived from coarse maps and
//!   auxiliary vector masks ([`prior`], [`fusion::proc_stack`]),
//! - injecting a projected location embedding as an extra transformer token
//!   ([`token`]).
//!
//! Supporting modules handle rasters ([`raster`]), vector ingestion
//! ([`vector`]) and the evaluation / label-efficiency harness ([`metrics`]).

pub mod error;
pub mod fusion;
pub mod metrics;
pub mod prior;
pub mod raster;
pub mod rng;
pub mod token;
pub mod vector;

pub use error::{Error, Result};
pub use fusion::{FusedTensor, NormRule};
pub use prior::{CoOccurrenceMatrix, PriorStack};
pub use raster::{GeoTransform, Grid, GridKind};
pub use vector::{ClassMap, VectorLayer};
