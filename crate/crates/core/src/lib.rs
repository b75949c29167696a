//! Peak isolation from tiled elevation models.
//!
//! The isolation of a peak is the distance to the closest strictly higher
//! ground. [`sweep`] finds it for every peak of an area in one top-down pass
//! over a dynamic k-D tree; [`multipass`] splits the same work into
//! independent per-tile passes that run in parallel; [`oracle`] answers by
//! exhaustive scan for testing.

pub mod cli;
pub mod dem;
pub mod geo;
pub mod metric;
pub mod multipass;
pub mod oracle;
pub mod output;
pub mod quad;
pub mod spatial_index;
pub mod sweep;

pub use dem::{Peak, Tile, TileKey};
pub use geo::{EarthModel, GeoPoint};
pub use metric::{DistanceKind, Metric};
pub use quad::Quadrilateral;
pub use sweep::IlpResult;
