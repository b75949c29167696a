//! Elevation rasters, tiles, peaks and sweep events.
//!
//! Sample positions are kept on an integer arc-second lattice. Every
//! coordinate handed to geometry code is derived from that lattice with the
//! same division, so a sample shared by two tiles (or by a tile and its
//! downsampled copy) produces bit-identical [`GeoPoint`]s everywhere.

mod events;
pub mod hgt;
mod peaks;
pub mod synth;

pub use events::{Event, EventKind, EventSequence};
pub use peaks::detect_peaks;

use std::fmt;

use crate::geo::GeoPoint;
use crate::quad::Quadrilateral;

pub const ARCSEC_PER_DEGREE: i32 = 3600;

/// Marker used by HGT files for missing samples.
pub const VOID: i16 = i16::MIN;

#[derive(Debug, thiserror::Error)]
pub enum DemError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: size {size} bytes does not match any supported tile resolution")]
    BadSize { path: String, size: u64 },
    #[error("bad tile file name {0:?}, expected e.g. N46E010.hgt")]
    BadName(String),
    #[error("unsupported tile geometry: {0}")]
    Geometry(String),
    #[error("stride {stride} does not divide {intervals} sample intervals")]
    Stride { stride: usize, intervals: usize },
}

/// South-west corner of a 1°×1° tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TileKey {
    pub lat: i32,
    pub lng: i32,
}

impl TileKey {
    pub fn new(lat: i32, lng: i32) -> Self {
        Self { lat, lng }
    }

    pub fn quad(&self) -> Quadrilateral {
        Quadrilateral {
            lat_min: self.lat as f64,
            lat_max: (self.lat + 1) as f64,
            lng_min: self.lng as f64,
            lng_max: (self.lng + 1) as f64,
        }
    }
}

impl fmt::Display for TileKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ns = if self.lat < 0 { 'S' } else { 'N' };
        let ew = if self.lng < 0 { 'W' } else { 'E' };
        write!(f, "{ns}{:02}{ew}{:03}", self.lat.abs(), self.lng.abs())
    }
}

/// Sample position in whole arc-seconds. Orders like (lat, lng).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePos {
    pub lat: i32,
    pub lng: i32,
}

impl LatticePos {
    #[inline]
    pub fn point(&self) -> GeoPoint {
        let d = ARCSEC_PER_DEGREE as f64;
        GeoPoint::new(self.lat as f64 / d, self.lng as f64 / d)
    }
}

/// A local maximum of the terrain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub location: GeoPoint,
    pub pos: LatticePos,
    pub elevation_m: i16,
    pub home_tile: TileKey,
}

impl Peak {
    /// Sweep order: higher first, then (lat, lng).
    pub fn sweep_cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .elevation_m
            .cmp(&self.elevation_m)
            .then(self.pos.cmp(&other.pos))
    }
}

/// A north-up grid of samples on the arc-second lattice. Row 0 is north.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    north: i32,
    west: i32,
    step: i32,
    rows: usize,
    cols: usize,
    data: Vec<i16>,
}

impl Raster {
    /// `north`/`west` are the arc-second coordinates of sample (0, 0); `step`
    /// is the sample spacing in arc-seconds.
    pub fn new(
        north: i32,
        west: i32,
        step: i32,
        rows: usize,
        cols: usize,
        data: Vec<i16>,
    ) -> Result<Self, DemError> {
        if step <= 0 || rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(DemError::Geometry(format!(
                "{rows}x{cols} raster with step {step} and {} samples",
                data.len()
            )));
        }
        let south = north as i64 - step as i64 * (rows as i64 - 1);
        let east = west as i64 + step as i64 * (cols as i64 - 1);
        let max_lat = 90 * ARCSEC_PER_DEGREE as i64;
        let max_lng = 180 * ARCSEC_PER_DEGREE as i64;
        if north as i64 > max_lat || south < -max_lat || (west as i64) < -max_lng || east > max_lng {
            return Err(DemError::Geometry("raster leaves the coordinate domain".into()));
        }
        Ok(Self {
            north,
            west,
            step,
            rows,
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Sample spacing in arc-seconds.
    pub fn step(&self) -> i32 {
        self.step
    }

    pub fn data(&self) -> &[i16] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i16 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn lattice(&self, row: usize, col: usize) -> LatticePos {
        LatticePos {
            lat: self.north - self.step * row as i32,
            lng: self.west + self.step * col as i32,
        }
    }

    #[inline]
    pub fn point(&self, row: usize, col: usize) -> GeoPoint {
        self.lattice(row, col).point()
    }

    /// Grid indices of a lattice position, if it is a sample of this raster.
    pub fn index_of(&self, pos: LatticePos) -> Option<(usize, usize)> {
        let dr = self.north - pos.lat;
        let dc = pos.lng - self.west;
        if dr < 0 || dc < 0 || dr % self.step != 0 || dc % self.step != 0 {
            return None;
        }
        let (r, c) = ((dr / self.step) as usize, (dc / self.step) as usize);
        (r < self.rows && c < self.cols).then_some((r, c))
    }

    pub fn bounds(&self) -> Quadrilateral {
        let d = ARCSEC_PER_DEGREE as f64;
        let south = self.north - self.step * (self.rows as i32 - 1);
        let east = self.west + self.step * (self.cols as i32 - 1);
        Quadrilateral {
            lat_min: south as f64 / d,
            lat_max: self.north as f64 / d,
            lng_min: self.west as f64 / d,
            lng_max: east as f64 / d,
        }
    }

    pub fn max(&self) -> i16 {
        self.data.iter().copied().max().unwrap_or(i16::MIN)
    }

    /// Lowest of the existing north, east, south and west neighbours.
    /// `None` only for a 1×1 raster.
    pub fn lowest_nesw_neighbor(&self, row: usize, col: usize) -> Option<i16> {
        let mut low: Option<i16> = None;
        let mut see = |v: i16| low = Some(low.map_or(v, |l| l.min(v)));
        if row > 0 {
            see(self.get(row - 1, col));
        }
        if row + 1 < self.rows {
            see(self.get(row + 1, col));
        }
        if col > 0 {
            see(self.get(row, col - 1));
        }
        if col + 1 < self.cols {
            see(self.get(row, col + 1));
        }
        low
    }

    /// Every `stride`-th sample in both directions, starting at the north-west corner.
    pub fn downsample(&self, stride: usize) -> Result<Raster, DemError> {
        for n in [self.rows, self.cols] {
            if stride == 0 || (n - 1) % stride != 0 {
                return Err(DemError::Stride {
                    stride,
                    intervals: n - 1,
                });
            }
        }
        if stride == 1 {
            return Ok(self.clone());
        }
        let rows = (self.rows - 1) / stride + 1;
        let cols = (self.cols - 1) / stride + 1;
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let src = &self.data[r * stride * self.cols..][..self.cols];
            data.extend(src.iter().step_by(stride));
        }
        Raster::new(self.north, self.west, self.step * stride as i32, rows, cols, data)
    }

    /// Pastes rasters that share one lattice into their common bounding grid.
    /// Cells covered by no input are reported as an error.
    pub fn merge(parts: &[&Raster]) -> Result<Raster, DemError> {
        let first = parts
            .first()
            .ok_or_else(|| DemError::Geometry("nothing to merge".into()))?;
        let step = first.step;
        let mut north = i32::MIN;
        let mut south = i32::MAX;
        let mut west = i32::MAX;
        let mut east = i32::MIN;
        for p in parts {
            let aligned = (p.north - first.north) % step == 0 && (p.west - first.west) % step == 0;
            if p.step != step || !aligned {
                return Err(DemError::Geometry("rasters are on different lattices".into()));
            }
            north = north.max(p.north);
            south = south.min(p.north - step * (p.rows as i32 - 1));
            west = west.min(p.west);
            east = east.max(p.west + step * (p.cols as i32 - 1));
        }
        let rows = ((north - south) / step + 1) as usize;
        let cols = ((east - west) / step + 1) as usize;
        let mut data = vec![VOID; rows * cols];
        let mut covered = vec![false; rows * cols];
        for p in parts {
            let r0 = ((north - p.north) / step) as usize;
            let c0 = ((p.west - west) / step) as usize;
            for r in 0..p.rows {
                let at = (r0 + r) * cols + c0;
                data[at..at + p.cols].copy_from_slice(&p.data[r * p.cols..][..p.cols]);
                covered[at..at + p.cols].fill(true);
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(DemError::Geometry("merged area has holes".into()));
        }
        Raster::new(north, west, step, rows, cols, data)
    }
}

/// A square 1°×1° raster named by its south-west corner. Edge rows and
/// columns repeat the neighbouring tiles' edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    key: TileKey,
    raster: Raster,
}

impl Tile {
    /// `samples` per side; `samples - 1` must divide 3600 so the samples sit
    /// on the arc-second lattice.
    pub fn new(key: TileKey, samples: usize, data: Vec<i16>) -> Result<Self, DemError> {
        if samples < 2 || ARCSEC_PER_DEGREE as usize % (samples - 1) != 0 {
            return Err(DemError::Geometry(format!(
                "{samples} samples per side is not on the arc-second lattice"
            )));
        }
        if !(-90..90).contains(&key.lat) || !(-180..180).contains(&key.lng) {
            return Err(DemError::Geometry(format!("tile {key} outside the world")));
        }
        let step = ARCSEC_PER_DEGREE / (samples as i32 - 1);
        let raster = Raster::new(
            (key.lat + 1) * ARCSEC_PER_DEGREE,
            key.lng * ARCSEC_PER_DEGREE,
            step,
            samples,
            samples,
            data,
        )?;
        Ok(Self { key, raster })
    }

    #[inline]
    pub fn key(&self) -> TileKey {
        self.key
    }

    #[inline]
    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    pub fn samples_per_side(&self) -> usize {
        self.raster.rows
    }

    pub fn quad(&self) -> Quadrilateral {
        self.key.quad()
    }

    pub fn peaks(&self) -> Vec<Peak> {
        detect_peaks(&self.raster, self.key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(rows: usize, cols: usize, data: &[i16]) -> Raster {
        Raster::new(3600, 0, 30, rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn nesw_neighbors() {
        #[rustfmt::skip]
        let r = raster(3, 3, &[
            0, 5, 0,
            9, 1, 7,
            0, 3, 0,
        ]);
        assert_eq!(r.lowest_nesw_neighbor(1, 1), Some(3));
        #[rustfmt::skip]
        let r = raster(2, 2, &[
            1, 2,
            8, 4,
        ]);
        assert_eq!(r.lowest_nesw_neighbor(0, 0), Some(2));
        let flat = raster(3, 3, &[6; 9]);
        for (i, j) in [(0, 0), (1, 1), (2, 1)] {
            assert_eq!(flat.lowest_nesw_neighbor(i, j), Some(6));
        }
    }

    #[test]
    fn downsample_keeps_subset() {
        let data: Vec<i16> = (0..121 * 121).map(|i| (i % 977) as i16).collect();
        let t = Tile::new(TileKey::new(46, 10), 121, data).unwrap();
        assert_eq!(t.raster().downsample(1).unwrap(), *t.raster());
        let d = t.raster().downsample(2).unwrap();
        assert_eq!((d.rows(), d.cols()), (61, 61));
        for r in 0..d.rows() {
            for c in 0..d.cols() {
                let (sr, sc) = t.raster().index_of(d.lattice(r, c)).unwrap();
                assert_eq!(d.get(r, c), t.raster().get(sr, sc));
                assert_eq!(d.point(r, c), t.raster().point(sr, sc));
            }
        }
        assert!(t.raster().downsample(7).is_err());
        assert_eq!(d.bounds(), t.quad());
    }

    #[test]
    fn tile_lattice_matches_key() {
        let t = Tile::new(TileKey::new(-3, -72), 5, vec![0; 25]).unwrap();
        assert_eq!(t.raster().point(0, 0), GeoPoint::new(-2.0, -72.0));
        assert_eq!(t.raster().point(4, 4), GeoPoint::new(-3.0, -71.0));
        assert_eq!(t.key().to_string(), "S03W072");
        assert!(Tile::new(TileKey::new(0, 0), 8, vec![0; 64]).is_err());
    }

    #[test]
    fn merge_shares_seams() {
        let a = Tile::new(TileKey::new(0, 0), 3, vec![1; 9]).unwrap();
        let b = Tile::new(TileKey::new(0, 1), 3, vec![2; 9]).unwrap();
        let m = Raster::merge(&[a.raster(), b.raster()]).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 5));
        assert_eq!(m.point(2, 4), GeoPoint::new(0.0, 2.0));
        let far = Tile::new(TileKey::new(0, 5), 3, vec![2; 9]).unwrap();
        assert!(Raster::merge(&[a.raster(), far.raster()]).is_err());
    }
}
