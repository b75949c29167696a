//! Search trees: the dynamic sweep-plane index and the static tile index.

mod kdtree;
mod tile_index;

pub use kdtree::{Neighbor, SphereKdTree, TreeConfig};
pub use tile_index::{TileIndex, TileMatch};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("point ({lat}, {lng}) lies outside the index bounds")]
    OutOfBounds { lat: f64, lng: f64 },
    #[error("point ({lat}, {lng}) is not in the index")]
    NotFound { lat: f64, lng: f64 },
    #[error("nearest-neighbor query on an empty index")]
    Empty,
}
