use crate::geo::GeoPoint;

use super::{Peak, Raster};

/// Declaration order is the tie order at equal elevation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Peak,
    Insert,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub elevation_m: i16,
    pub kind: EventKind,
    pub point: GeoPoint,
    /// Index into [`EventSequence::peaks`] for peak events.
    pub peak: Option<usize>,
    /// Raster row and column for insert and remove events.
    pub cell: Option<(usize, usize)>,
}

const COL_BITS: u32 = 24;
const ROW_BITS: u32 = 23;
const KIND_SHIFT: u32 = COL_BITS + ROW_BITS;
const ELEV_SHIFT: u32 = KIND_SHIFT + 1;

/// Grid events packed as sortable integers: inverted elevation, kind,
/// inverted row (so latitude ascends), column.
#[inline]
fn pack(elev: i16, remove: bool, rrev: usize, col: usize) -> u64 {
    (((i16::MAX as i32 - elev as i32) as u64) << ELEV_SHIFT)
        | ((remove as u64) << KIND_SHIFT)
        | ((rrev as u64) << COL_BITS)
        | col as u64
}

/// The static event sequence of a sweep, ordered by descending elevation,
/// then kind (peak, insert, remove), then (lat, lng).
///
/// Every sample yields one insert at its elevation and one remove at the
/// lower of its own elevation and its lowest NESW neighbour.
#[derive(Debug, Clone)]
pub struct EventSequence<'a> {
    raster: &'a Raster,
    grid: Vec<u64>,
    peaks: Vec<Peak>,
}

impl<'a> EventSequence<'a> {
    /// `peaks` need not lie inside the raster.
    pub fn build(raster: &'a Raster, peaks: &[Peak]) -> Self {
        let (rows, cols) = (raster.rows(), raster.cols());
        assert!(rows < 1 << ROW_BITS && cols < 1 << COL_BITS, "raster too large");
        let mut grid = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            let rrev = rows - 1 - r;
            for c in 0..cols {
                let e = raster.get(r, c);
                let low = raster.lowest_nesw_neighbor(r, c).map_or(e, |n| n.min(e));
                grid.push(pack(e, false, rrev, c));
                grid.push(pack(low, true, rrev, c));
            }
        }
        grid.sort_unstable();
        let mut peaks = peaks.to_vec();
        peaks.sort_by(Peak::sweep_cmp);
        Self {
            raster,
            grid,
            peaks,
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len() + self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn raster(&self) -> &Raster {
        self.raster
    }

    /// Peaks in sweep order.
    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn iter(&self) -> impl Iterator<Item = Event> + '_ {
        let rows = self.raster.rows();
        let mut g = 0;
        let mut p = 0;
        std::iter::from_fn(move || {
            let grid_elev = self
                .grid
                .get(g)
                .map(|&k| (i16::MAX as i32 - (k >> ELEV_SHIFT) as i32) as i16);
            match (self.peaks.get(p), grid_elev) {
                (Some(peak), ge) if ge.map_or(true, |e| peak.elevation_m >= e) => {
                    p += 1;
                    Some(Event {
                        elevation_m: peak.elevation_m,
                        kind: EventKind::Peak,
                        point: peak.location,
                        peak: Some(p - 1),
                        cell: None,
                    })
                }
                (_, Some(elev)) => {
                    let k = self.grid[g];
                    g += 1;
                    let col = (k & ((1 << COL_BITS) - 1)) as usize;
                    let rrev = ((k >> COL_BITS) & ((1 << ROW_BITS) - 1)) as usize;
                    let kind = if (k >> KIND_SHIFT) & 1 == 1 {
                        EventKind::Remove
                    } else {
                        EventKind::Insert
                    };
                    let row = rows - 1 - rrev;
                    Some(Event {
                        elevation_m: elev,
                        kind,
                        point: self.raster.point(row, col),
                        peak: None,
                        cell: Some((row, col)),
                    })
                }
                (_, None) => None,
            }
        })
    }
}
