//! The three passes, each usable on its own. Orchestration lives in
//! [`super::pipeline`].

use std::collections::BTreeMap;

use crate::dem::{DemError, EventSequence, LatticePos, Peak, Tile, TileKey};
use crate::geo::{great_circle_distance, EarthModel, GeoPoint};
use crate::metric::Metric;
use crate::spatial_index::{TileIndex, TreeConfig};
use crate::sweep::{run_sweep, IlpResult, SweepError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundSource {
    Bounding,
    HighPoint,
}

/// Upper bound on a peak's isolation under the final metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakBound {
    pub peak: Peak,
    pub bound_m: f64,
    pub source: BoundSource,
    /// The sample or tile that proves the bound.
    pub witness: Witness,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Witness {
    Sample(GeoPoint),
    Tile(TileKey),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileSummary {
    pub key: TileKey,
    /// Highest peak of the tile, if it has any.
    pub high_point: Option<Peak>,
    /// Grid maximum at full resolution.
    pub max_elevation_m: i16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundingOutcome {
    pub summary: TileSummary,
    pub peaks: Vec<Peak>,
    pub bounds: Vec<PeakBound>,
    /// Peaks with nothing higher in the downsampled tile.
    pub deferred: Vec<Peak>,
    /// Peaks proven to fall below the threshold.
    pub discarded: Vec<Peak>,
}

/// Factors relating great-circle geometry to the final metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundScale {
    /// Great-circle distance times this is at least the final-metric distance.
    pub ceiling: f64,
    /// A final-metric radius times this covers the same pairs in great-circle terms.
    pub assignment: f64,
}

impl BoundScale {
    pub fn for_metric(m: &Metric) -> Self {
        let assignment = match m.sphere_floor_radius() {
            Some(floor) => m.model.radius_m / floor * (1.0 + 1e-9),
            None => f64::INFINITY,
        };
        Self {
            ceiling: m.sphere_ceiling_ratio(),
            assignment,
        }
    }
}

/// Detects the tile's peaks at full resolution, then sweeps the strided
/// grid with `search` to find a higher sample near each one. The bound is
/// the great-circle distance to that sample, scaled to the final metric.
/// Bounds below `min_isolation_m` are dropped.
pub fn bounding_pass(
    tile: &Tile,
    stride: usize,
    search: &Metric,
    scale: BoundScale,
    min_isolation_m: f64,
    tree: TreeConfig,
) -> Result<BoundingOutcome, BoundingError> {
    let raster = tile.raster();
    let peaks = tile.peaks();
    let summary = TileSummary {
        key: tile.key(),
        high_point: peaks.iter().copied().min_by(Peak::sweep_cmp),
        max_elevation_m: raster.max(),
    };
    let coarse = raster.downsample(stride)?;
    let events = EventSequence::build(&coarse, &peaks);
    let found = run_sweep(&events, search, tree)?;
    let mut bounds = Vec::new();
    let mut deferred = Vec::new();
    let mut discarded = Vec::new();
    for r in found {
        match r.ilp {
            Some(w) => {
                let gc = great_circle_distance(r.peak.location, w, &search.model);
                let bound_m = gc * scale.ceiling;
                if bound_m >= min_isolation_m {
                    bounds.push(PeakBound {
                        peak: r.peak,
                        bound_m,
                        source: BoundSource::Bounding,
                        witness: Witness::Sample(w),
                    });
                } else {
                    discarded.push(r.peak);
                }
            }
            None => deferred.push(r.peak),
        }
    }
    Ok(BoundingOutcome {
        summary,
        peaks,
        bounds,
        deferred,
        discarded,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum BoundingError {
    #[error(transparent)]
    Dem(#[from] DemError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HighPointOutcome {
    Bounded(PeakBound),
    /// Bound below the threshold.
    Discarded(PeakBound),
    /// No tile holds anything higher: the area's summit.
    Undefined(Peak),
}

/// Bounds a deferred peak by the farthest point of the nearest tile that
/// holds higher ground.
pub fn highpoint_bound(
    peak: &Peak,
    index: &TileIndex,
    model: &EarthModel,
    scale: BoundScale,
    min_isolation_m: f64,
) -> HighPointOutcome {
    let Some(hit) = index.nearest_higher_tile(peak.location, peak.elevation_m) else {
        return HighPointOutcome::Undefined(*peak);
    };
    let bound = PeakBound {
        peak: *peak,
        bound_m: hit.key.quad().max_distance(peak.location, model) * scale.ceiling,
        source: BoundSource::HighPoint,
        witness: Witness::Tile(hit.key),
    };
    if bound.bound_m >= min_isolation_m {
        HighPointOutcome::Bounded(bound)
    } else {
        HighPointOutcome::Discarded(bound)
    }
}

/// Tiles that may hold the isolation limit point of a bounded peak.
pub fn assigned_tiles(bound: &PeakBound, index: &TileIndex, scale: BoundScale) -> Vec<TileKey> {
    index.tiles_within(bound.peak.location, bound.bound_m * scale.assignment)
}

/// Best candidate a single tile offers for a peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub peak: Peak,
    pub ilp: GeoPoint,
    pub distance_m: f64,
    pub tile: TileKey,
}

/// Sweeps the full-resolution tile with the assigned peaks as peak events.
/// Peaks at or above the tile maximum are skipped, since nothing in the
/// tile can be higher.
pub fn finalization_pass(
    tile: &Tile,
    assigned: &[Peak],
    metric: &Metric,
    tree: TreeConfig,
) -> Result<Vec<Candidate>, SweepError> {
    let top = tile.raster().max();
    let live: Vec<Peak> = assigned
        .iter()
        .filter(|p| p.elevation_m < top)
        .copied()
        .collect();
    if live.is_empty() {
        return Ok(Vec::new());
    }
    let events = EventSequence::build(tile.raster(), &live);
    Ok(run_sweep(&events, metric, tree)?
        .into_iter()
        .filter_map(|r| {
            Some(Candidate {
                peak: r.peak,
                ilp: r.ilp?,
                distance_m: r.isolation_m?,
                tile: tile.key(),
            })
        })
        .collect())
}

/// Per peak, the closest candidate (ties to the smaller ILP (lat, lng)).
/// Peaks without any candidate get undefined isolation. Output is sorted by
/// peak position.
pub fn finalize(peaks: &[Peak], candidates: impl IntoIterator<Item = Candidate>) -> Vec<IlpResult> {
    let mut best: BTreeMap<LatticePos, IlpResult> = peaks
        .iter()
        .map(|p| (p.pos, IlpResult::undefined(*p)))
        .collect();
    for c in candidates {
        let Some(slot) = best.get_mut(&c.peak.pos) else {
            continue;
        };
        let better = match (slot.isolation_m, slot.ilp) {
            (Some(d), Some(q)) => {
                c.distance_m < d || (c.distance_m == d && c.ilp.cmp_lat_lng(&q).is_lt())
            }
            _ => true,
        };
        if better {
            slot.ilp = Some(c.ilp);
            slot.isolation_m = Some(c.distance_m);
        }
    }
    best.into_values().collect()
}
