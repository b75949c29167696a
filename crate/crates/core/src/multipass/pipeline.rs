use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::dem::{hgt, DemError, EventSequence, LatticePos, Peak, Raster, Tile, TileKey};
use crate::geo::EarthModel;
use crate::metric::Metric;
use crate::quad::Quadrilateral;
use crate::spatial_index::{TileIndex, TreeConfig};
use crate::sweep::{run_sweep, IlpResult, SweepError};

use super::map::{Assignment, FrozenTilePeaksMap, TilePeaksMap};
use super::passes::{
    assigned_tiles, bounding_pass, finalization_pass, finalize, highpoint_bound, BoundScale,
    BoundingError, HighPointOutcome, PeakBound, TileSummary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceMode {
    /// Planar search in the bounding pass, ellipsoid distances for the result.
    Staged,
    /// Great-circle distances throughout.
    GreatCircleOnly,
}

impl DistanceMode {
    pub fn final_metric(self, model: EarthModel) -> Metric {
        match self {
            DistanceMode::Staged => Metric::ellipsoid(model),
            DistanceMode::GreatCircleOnly => Metric::great_circle(model),
        }
    }

    pub fn search_metric(self, model: EarthModel) -> Metric {
        match self {
            DistanceMode::Staged => Metric::planar(model),
            DistanceMode::GreatCircleOnly => Metric::great_circle(model),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub min_isolation_m: f64,
    pub stride: usize,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub distance_mode: DistanceMode,
    pub model: EarthModel,
    pub tree: TreeConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            min_isolation_m: 1000.0,
            stride: 2,
            threads: 0,
            distance_mode: DistanceMode::Staged,
            model: EarthModel::default(),
            tree: TreeConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("area {0:?} is not aligned to whole degrees inside (-180, 180]")]
    BadArea(Quadrilateral),
    #[error("missing tiles: {}", list_keys(.0))]
    MissingTiles(Vec<TileKey>),
    #[error("tile {key}: {source}")]
    Tile {
        key: TileKey,
        #[source]
        source: DemError,
    },
    #[error("tile {key}: {source}")]
    Sweep {
        key: TileKey,
        #[source]
        source: SweepError,
    },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

fn list_keys(keys: &[TileKey]) -> String {
    keys.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ")
}

/// Where tiles come from.
pub trait TileSource: Sync {
    fn has(&self, key: TileKey) -> bool;
    fn load(&self, key: TileKey) -> Result<Arc<Tile>, DemError>;
}

/// Tiles already in memory.
#[derive(Debug, Clone, Default)]
pub struct MemoryTiles {
    tiles: BTreeMap<TileKey, Arc<Tile>>,
}

impl MemoryTiles {
    pub fn new(tiles: impl IntoIterator<Item = Tile>) -> Self {
        Self {
            tiles: tiles.into_iter().map(|t| (t.key(), Arc::new(t))).collect(),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = TileKey> + '_ {
        self.tiles.keys().copied()
    }
}

impl TileSource for MemoryTiles {
    fn has(&self, key: TileKey) -> bool {
        self.tiles.contains_key(&key)
    }

    fn load(&self, key: TileKey) -> Result<Arc<Tile>, DemError> {
        self.tiles.get(&key).cloned().ok_or_else(|| {
            DemError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("tile {key}"),
            ))
        })
    }
}

/// `.hgt` files in one directory, read on demand.
#[derive(Debug, Clone)]
pub struct HgtDirectory {
    dir: PathBuf,
    voids_filled: Arc<AtomicU64>,
}

impl HgtDirectory {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            voids_filled: Arc::default(),
        }
    }

    pub fn path_of(&self, key: TileKey) -> PathBuf {
        self.dir.join(hgt::file_name(key))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Void samples filled across all loads so far.
    pub fn voids_filled(&self) -> u64 {
        self.voids_filled.load(Ordering::Relaxed)
    }
}

impl TileSource for HgtDirectory {
    fn has(&self, key: TileKey) -> bool {
        self.path_of(key).is_file()
    }

    fn load(&self, key: TileKey) -> Result<Arc<Tile>, DemError> {
        let (tile, report) = hgt::load_as(&self.path_of(key), key)?;
        self.voids_filled
            .fetch_add(report.voids_filled as u64, Ordering::Relaxed);
        Ok(Arc::new(tile))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineStats {
    pub tiles: usize,
    pub samples: usize,
    pub peaks: usize,
    pub deferred: usize,
    pub assignments: usize,
    pub reported: usize,
    /// Summed over workers.
    pub io: Duration,
    pub bounding: Duration,
    pub highpoint: Duration,
    pub finalization: Duration,
    pub total: Duration,
}

/// Everything the pipeline decided, for auditing.
#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    /// Peaks at or above the threshold plus the area summit, by position.
    pub results: Vec<IlpResult>,
    /// Every bound computed, kept or not, by peak position.
    pub bounds: Vec<PeakBound>,
    pub map: FrozenTilePeaksMap,
    pub summaries: Vec<TileSummary>,
    pub stats: PipelineStats,
}

/// Keys of the 1°×1° tiles covering a whole-degree area.
pub fn area_tiles(area: &Quadrilateral) -> Result<Vec<TileKey>, PipelineError> {
    let whole = |v: f64| v.fract() == 0.0;
    let ok = [area.lat_min, area.lat_max, area.lng_min, area.lng_max]
        .into_iter()
        .all(whole)
        && area.lat_min < area.lat_max
        && area.lng_min < area.lng_max
        && area.lng_min > -180.0;
    if !ok {
        return Err(PipelineError::BadArea(*area));
    }
    let mut keys = Vec::new();
    for lat in area.lat_min as i32..area.lat_max as i32 {
        for lng in area.lng_min as i32..area.lng_max as i32 {
            keys.push(TileKey::new(lat, lng));
        }
    }
    Ok(keys)
}

fn check_present(keys: &[TileKey], source: &dyn TileSource) -> Result<(), PipelineError> {
    let missing: Vec<TileKey> = keys.iter().copied().filter(|k| !source.has(*k)).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(PipelineError::MissingTiles(missing))
    }
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

struct Clock(AtomicU64);

impl Clock {
    fn new() -> Self {
        Self(AtomicU64::new(0))
    }

    fn time<T>(&self, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.0
            .fetch_add(t.elapsed().as_nanos() as u64, Ordering::Relaxed);
        out
    }

    fn total(&self) -> Duration {
        Duration::from_nanos(self.0.load(Ordering::Relaxed))
    }
}

fn load(source: &dyn TileSource, key: TileKey, io: &Clock) -> Result<Arc<Tile>, PipelineError> {
    io.time(|| source.load(key))
        .map_err(|source| PipelineError::Tile { key, source })
}

/// Runs the bounding, high-point and finalization passes over `area`.
///
/// Output is independent of the number of threads and of scheduling.
pub fn run_pipeline(
    area: &Quadrilateral,
    source: &dyn TileSource,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let keys = area_tiles(area)?;
    check_present(&keys, source)?;
    with_pool(config.threads, || pipeline(&keys, source, config))?
}

fn pipeline(
    keys: &[TileKey],
    source: &dyn TileSource,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let started = Instant::now();
    let model = config.model;
    let final_metric = config.distance_mode.final_metric(model);
    let search = config.distance_mode.search_metric(model);
    let scale = BoundScale::for_metric(&final_metric);
    let io = Clock::new();
    let mut stats = PipelineStats {
        tiles: keys.len(),
        ..Default::default()
    };

    // bounding pass
    let t = Instant::now();
    let outcomes = keys
        .par_iter()
        .map(|&key| {
            let tile = load(source, key, &io)?;
            let out = bounding_pass(
                &tile,
                config.stride,
                &search,
                scale,
                config.min_isolation_m,
                config.tree,
            )
            .map_err(|e| match e {
                BoundingError::Dem(source) => PipelineError::Tile { key, source },
                BoundingError::Sweep(source) => PipelineError::Sweep { key, source },
            })?;
            Ok((out, tile.raster().len()))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    stats.bounding = t.elapsed();

    // A seam peak can be found by two tiles; keep one record per position.
    let mut peaks: BTreeMap<LatticePos, Peak> = BTreeMap::new();
    let mut bounded: BTreeMap<LatticePos, PeakBound> = BTreeMap::new();
    let mut deferred: BTreeMap<LatticePos, Peak> = BTreeMap::new();
    let mut discarded: BTreeSet<LatticePos> = BTreeSet::new();
    let mut summaries = Vec::with_capacity(outcomes.len());
    for (out, samples) in &outcomes {
        stats.samples += samples;
        summaries.push(out.summary);
        for p in &out.peaks {
            peaks.entry(p.pos).or_insert(*p);
        }
        for b in &out.bounds {
            bounded
                .entry(b.peak.pos)
                .and_modify(|old| {
                    if b.bound_m < old.bound_m {
                        *old = *b;
                    }
                })
                .or_insert(*b);
        }
        for p in &out.deferred {
            deferred.entry(p.pos).or_insert(*p);
        }
        discarded.extend(out.discarded.iter().map(|p| p.pos));
    }
    drop(outcomes);
    // A witness in any tile settles a peak that another tile deferred, and a
    // witness below the threshold settles it for good.
    bounded.retain(|pos, _| !discarded.contains(pos));
    deferred.retain(|pos, _| !bounded.contains_key(pos) && !discarded.contains(pos));
    let mut all_bounds: Vec<PeakBound> = bounded.values().copied().collect();
    stats.peaks = peaks.len();
    stats.deferred = deferred.len();

    let index = TileIndex::build(
        &summaries
            .iter()
            .map(|s| (s.key, s.max_elevation_m))
            .collect::<Vec<_>>(),
        model,
    );

    // high-point pass
    let t = Instant::now();
    let deferred: Vec<Peak> = deferred.into_values().collect();
    let hp: Vec<HighPointOutcome> = deferred
        .par_iter()
        .map(|p| highpoint_bound(p, &index, &model, scale, config.min_isolation_m))
        .collect();
    let mut summits = Vec::new();
    for o in hp {
        match o {
            HighPointOutcome::Bounded(b) => {
                bounded.insert(b.peak.pos, b);
                all_bounds.push(b);
            }
            HighPointOutcome::Discarded(b) => all_bounds.push(b),
            HighPointOutcome::Undefined(p) => summits.push(p),
        }
    }
    all_bounds.sort_by(|a, b| a.peak.pos.cmp(&b.peak.pos));

    let map = TilePeaksMap::new(keys.iter().copied());
    bounded.values().collect::<Vec<_>>().par_iter().for_each(|b| {
        for key in assigned_tiles(b, &index, scale) {
            map.insert(
                key,
                Assignment {
                    peak: b.peak,
                    bound_m: b.bound_m,
                },
            );
        }
    });
    let map = map.freeze();
    stats.assignments = map.assignments();
    stats.highpoint = t.elapsed();

    // finalization pass
    let t = Instant::now();
    let work: Vec<(TileKey, Vec<Peak>)> = map
        .iter()
        .filter(|(_, a)| !a.is_empty())
        .map(|(k, a)| (k, a.iter().map(|x| x.peak).collect()))
        .collect();
    let candidates = work
        .par_iter()
        .map(|(key, assigned)| {
            let tile = load(source, *key, &io)?;
            finalization_pass(&tile, assigned, &final_metric, config.tree)
                .map_err(|source| PipelineError::Sweep { key: *key, source })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    stats.finalization = t.elapsed();

    let targets: Vec<Peak> = bounded.values().map(|b| b.peak).collect();
    let mut results = finalize(&targets, candidates.into_iter().flatten());
    if let Some(r) = results.iter().find(|r| r.isolation_m.is_none()) {
        return Err(PipelineError::Invariant(format!(
            "bounded peak at {:?} found no higher sample in its assigned tiles",
            r.peak.location
        )));
    }
    results.retain(|r| r.isolation_m.is_some_and(|d| d >= config.min_isolation_m));
    results.extend(summits.into_iter().map(IlpResult::undefined));
    results.sort_by(|a, b| a.peak.pos.cmp(&b.peak.pos));

    stats.reported = results.len();
    stats.io = io.total();
    stats.total = started.elapsed();
    summaries.sort_by_key(|s| s.key);
    Ok(PipelineOutput {
        results,
        bounds: all_bounds,
        map,
        summaries,
        stats,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SingleSweepStats {
    pub tiles: usize,
    pub samples: usize,
    pub peaks: usize,
    pub reported: usize,
    pub io: Duration,
    pub sweep: Duration,
    pub total: Duration,
}

/// The peaks of an area: per-tile detections, one record per position.
pub fn area_peaks(tiles: &[Arc<Tile>]) -> Vec<Peak> {
    let mut seen = BTreeSet::new();
    let mut out: Vec<Peak> = Vec::new();
    let mut sorted: Vec<&Arc<Tile>> = tiles.iter().collect();
    sorted.sort_by_key(|t| t.key());
    for t in sorted {
        for p in t.peaks() {
            if seen.insert(p.pos) {
                out.push(p);
            }
        }
    }
    out.sort_by(|a, b| a.pos.cmp(&b.pos));
    out
}

/// One sweep over the merged raster of the whole area, with the final metric.
pub fn run_single_sweep(
    area: &Quadrilateral,
    source: &dyn TileSource,
    config: &PipelineConfig,
) -> Result<(Vec<IlpResult>, SingleSweepStats), PipelineError> {
    let started = Instant::now();
    let keys = area_tiles(area)?;
    check_present(&keys, source)?;
    let io = Clock::new();
    let tiles = keys
        .iter()
        .map(|&k| load(source, k, &io))
        .collect::<Result<Vec<_>, _>>()?;
    let t = Instant::now();
    let peaks = area_peaks(&tiles);
    let rasters: Vec<&Raster> = tiles.iter().map(|t| t.raster()).collect();
    let merged = Raster::merge(&rasters).map_err(|source| PipelineError::Tile {
        key: keys[0],
        source,
    })?;
    let events = EventSequence::build(&merged, &peaks);
    let metric = config.distance_mode.final_metric(config.model);
    let mut results = run_sweep(&events, &metric, config.tree).map_err(|source| {
        PipelineError::Sweep {
            key: keys[0],
            source,
        }
    })?;
    results.retain(|r| r.isolation_m.map_or(true, |d| d >= config.min_isolation_m));
    results.sort_by(|a, b| a.peak.pos.cmp(&b.peak.pos));
    let stats = SingleSweepStats {
        tiles: keys.len(),
        samples: merged.len(),
        peaks: peaks.len(),
        reported: results.len(),
        io: io.total(),
        sweep: t.elapsed(),
        total: started.elapsed(),
    };
    Ok((results, stats))
}

/// Loads every tile of `area` once.
pub fn load_area(
    area: &Quadrilateral,
    source: &dyn TileSource,
) -> Result<Vec<Arc<Tile>>, PipelineError> {
    let keys = area_tiles(area)?;
    check_present(&keys, source)?;
    let io = Clock::new();
    keys.iter().map(|&k| load(source, k, &io)).collect()
}

/// Fails the first time two result lists disagree on a peak, its ILP or its
/// isolation.
pub fn compare_results(a: &[IlpResult], b: &[IlpResult]) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("{} results vs {}", a.len(), b.len()));
    }
    for (x, y) in a.iter().zip(b) {
        if x.peak.pos != y.peak.pos || x.ilp != y.ilp || x.isolation_m != y.isolation_m {
            return Err(format!(
                "peak {:?}: {:?} at {:?} vs {:?} at {:?}",
                x.peak.location, x.isolation_m, x.ilp, y.isolation_m, y.ilp
            ));
        }
    }
    Ok(())
}
