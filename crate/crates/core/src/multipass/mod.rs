//! The tile-parallel algorithm: a bounding pass per tile, a high-point pass
//! over a static tile index, and a finalization pass per tile.

mod map;
mod passes;
mod pipeline;

pub use map::{Assignment, FrozenTilePeaksMap, TilePeaksMap};
pub use passes::{
    assigned_tiles, bounding_pass, finalization_pass, finalize, highpoint_bound, BoundScale,
    BoundSource, BoundingError, BoundingOutcome, Candidate, HighPointOutcome, PeakBound,
    TileSummary, Witness,
};
pub use pipeline::{
    area_peaks, area_tiles, compare_results, load_area, run_pipeline, run_single_sweep,
    DistanceMode, HgtDirectory, MemoryTiles, PipelineConfig, PipelineError, PipelineOutput,
    PipelineStats, SingleSweepStats, TileSource,
};
