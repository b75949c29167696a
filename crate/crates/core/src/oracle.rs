//! Exhaustive reference answers: the closest strictly higher sample, by scan.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dem::{LatticePos, Peak, Raster};
use crate::geo::{to_cartesian, GeoPoint, Vec3};
use crate::metric::Metric;
use crate::sweep::IlpResult;

#[derive(Debug, Clone, Copy)]
struct Sample {
    point: GeoPoint,
    xyz: Vec3,
    elevation_m: i16,
}

/// Every sample of a small area once, highest first.
#[derive(Debug, Clone)]
pub struct SampleUniverse {
    samples: Vec<Sample>,
}

impl SampleUniverse {
    /// Collects the samples of all rasters; positions shared by several
    /// rasters (tile seams) are kept once.
    pub fn from_rasters<'a>(rasters: impl IntoIterator<Item = &'a Raster>) -> Self {
        let mut seen: BTreeMap<LatticePos, i16> = BTreeMap::new();
        for r in rasters {
            for row in 0..r.rows() {
                for col in 0..r.cols() {
                    seen.entry(r.lattice(row, col)).or_insert(r.get(row, col));
                }
            }
        }
        Self::from_samples(seen)
    }

    pub fn from_samples(samples: impl IntoIterator<Item = (LatticePos, i16)>) -> Self {
        let mut v: Vec<(LatticePos, i16)> = samples.into_iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v.dedup_by_key(|s| s.0);
        let samples = v
            .into_iter()
            .map(|(pos, e)| {
                let point = pos.point();
                Sample {
                    point,
                    xyz: to_cartesian(point),
                    elevation_m: e,
                }
            })
            .collect();
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// The closest sample strictly higher than the peak under `metric`; ties go
/// to the smaller (lat, lng).
pub fn brute_force_ilp(peak: &Peak, universe: &SampleUniverse, metric: &Metric) -> IlpResult {
    let higher = universe
        .samples
        .partition_point(|s| s.elevation_m > peak.elevation_m);
    let p = peak.location;
    let pxyz = to_cartesian(p);
    let floor = metric.sphere_floor_radius();
    let mut best: Option<(f64, GeoPoint)> = None;
    // squared chord beyond which a sample cannot beat `best`
    let mut chord2_cut = f64::INFINITY;
    for s in &universe.samples[..higher] {
        if floor.is_some() {
            let d = Vec3 {
                x: s.xyz.x - pxyz.x,
                y: s.xyz.y - pxyz.y,
                z: s.xyz.z - pxyz.z,
            };
            if d.dot(d) > chord2_cut {
                continue;
            }
        }
        let dist = metric.distance(p, s.point);
        let better = match best {
            None => true,
            Some((bd, bp)) => dist < bd || (dist == bd && s.point.cmp_lat_lng(&bp).is_lt()),
        };
        if better {
            best = Some((dist, s.point));
            if let Some(rf) = floor {
                let theta = (dist / rf * (1.0 + 1e-9)).min(std::f64::consts::PI);
                let chord = 2.0 * (theta * 0.5).sin() * (1.0 + 1e-9);
                chord2_cut = chord * chord;
            }
        }
    }
    match best {
        Some((d, q)) => IlpResult {
            peak: *peak,
            ilp: Some(q),
            isolation_m: Some(d),
        },
        None => IlpResult::undefined(*peak),
    }
}

/// [`brute_force_ilp`] for many peaks in parallel, in input order.
pub fn brute_force_all(peaks: &[Peak], universe: &SampleUniverse, metric: &Metric) -> Vec<IlpResult> {
    peaks
        .par_iter()
        .map(|p| brute_force_ilp(p, universe, metric))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dem::{detect_peaks, TileKey};
    use crate::geo::EarthModel;

    // 5×5 grids, 30″ spacing, NW sample at (1°, 0°). On a sphere the nearest
    // higher sample is found by counting steps, checked by hand below.
    fn raster(data: &[i16; 25]) -> Raster {
        Raster::new(3600, 0, 30, 5, 5, data.to_vec()).unwrap()
    }

    fn peak_at(r: &Raster, row: usize, col: usize) -> Peak {
        let pos = r.lattice(row, col);
        Peak {
            location: pos.point(),
            pos,
            elevation_m: r.get(row, col),
            home_tile: TileKey::new(0, 0),
        }
    }

    fn gc() -> Metric {
        Metric::great_circle(EarthModel::default())
    }

    #[test]
    fn lone_peak_undefined() {
        let r = Raster::new(3600, 0, 30, 1, 1, vec![7]).unwrap();
        let u = SampleUniverse::from_rasters([&r]);
        assert!(brute_force_ilp(&peak_at(&r, 0, 0), &u, &gc()).ilp.is_none());
    }

    #[test]
    fn hand_grid_one() {
        // peak 50 at centre; the only higher sample, 60, sits two columns east
        #[rustfmt::skip]
        let r = raster(&[
            0, 0,  0, 0,  0,
            0, 0,  0, 0,  0,
            0, 0, 50, 0, 60,
            0, 0,  0, 0,  0,
            0, 0,  0, 0,  0,
        ]);
        let u = SampleUniverse::from_rasters([&r]);
        let res = brute_force_ilp(&peak_at(&r, 2, 2), &u, &gc());
        assert_eq!(res.ilp, Some(r.point(2, 4)));
        // two 30″ steps along the parallel at 59'N: R·Δλ·cos φ, almost exactly
        let want = 6_371_000.0 * (60.0 / 3600f64).to_radians() * (1.0 - 1.0 / 60.0f64).to_radians().cos();
        assert!((res.isolation_m.unwrap() - want).abs() < 1e-3);
    }

    #[test]
    fn hand_grid_two() {
        // the 70 is one row north and one column west: diagonal √2 steps;
        // the 80 is two rows south: two steps. The diagonal is nearer.
        #[rustfmt::skip]
        let r = raster(&[
            0,  0,  0, 0, 0,
            0, 70,  0, 0, 0,
            0,  0, 60, 0, 0,
            0,  0,  0, 0, 0,
            0,  0, 80, 0, 0,
        ]);
        let u = SampleUniverse::from_rasters([&r]);
        let res = brute_force_ilp(&peak_at(&r, 2, 2), &u, &gc());
        assert_eq!(res.ilp, Some(r.point(1, 1)));
    }

    #[test]
    fn hand_grid_three_tie_and_equal_height() {
        // 40s north and south of the peak are equidistant only on a plane;
        // on the sphere the meridian steps are equal, so the tie goes to the
        // smaller latitude (south). The equal-height 30 is ignored.
        #[rustfmt::skip]
        let r = raster(&[
            0,  0,  0,  0, 0,
            0,  0, 40,  0, 0,
            0, 30, 30,  0, 0,
            0,  0, 40,  0, 0,
            0,  0,  0,  0, 0,
        ]);
        let u = SampleUniverse::from_rasters([&r]);
        let res = brute_force_ilp(&peak_at(&r, 2, 2), &u, &gc());
        let north = gc().distance(r.point(2, 2), r.point(1, 2));
        let south = gc().distance(r.point(2, 2), r.point(3, 2));
        if north == south {
            assert_eq!(res.ilp, Some(r.point(3, 2)));
        } else {
            let want = if north < south { (1, 2) } else { (3, 2) };
            assert_eq!(res.ilp, Some(r.point(want.0, want.1)));
        }
        assert_eq!(res.isolation_m, Some(north.min(south)));
    }

    #[test]
    fn seam_duplicates_collapse() {
        let a = Raster::new(3600, 0, 1800, 3, 3, vec![1; 9]).unwrap();
        let b = Raster::new(3600, 3600, 1800, 3, 3, vec![1; 9]).unwrap();
        assert_eq!(SampleUniverse::from_rasters([&a, &b]).len(), 15);
    }

    #[test]
    fn prefilter_matches_plain_scan() {
        let data: Vec<i16> = (0..400u32).map(|i| ((i * 7919) % 97) as i16).collect();
        let r = Raster::new(3600, 0, 30, 20, 20, data).unwrap();
        let u = SampleUniverse::from_rasters([&r]);
        let m = Metric::ellipsoid(EarthModel::default());
        for p in detect_peaks(&r, TileKey::new(0, 0)) {
            let got = brute_force_ilp(&p, &u, &m);
            let mut best: Option<(f64, GeoPoint)> = None;
            for row in 0..20 {
                for col in 0..20 {
                    if r.get(row, col) <= p.elevation_m {
                        continue;
                    }
                    let q = r.point(row, col);
                    let d = m.distance(p.location, q);
                    if best.map_or(true, |(bd, bq)| d < bd || (d == bd && q.cmp_lat_lng(&bq).is_lt())) {
                        best = Some((d, q));
                    }
                }
            }
            assert_eq!(got.ilp, best.map(|b| b.1));
            assert_eq!(got.isolation_m, best.map(|b| b.0));
        }
    }
}
