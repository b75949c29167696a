//! Latitude/longitude aligned quadrilaterals and point-quadrilateral predicates.

use std::f64::consts::PI;

use crate::geo::{self, central_angle, EarthModel, GeoPoint};

/// A closed lat-lng box. Never spans the antimeridian, so `lng_min <= lng_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrilateral {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lng_min: f64,
    pub lng_max: f64,
}

impl Quadrilateral {
    /// Returns `None` unless the bounds are ordered and inside the coordinate domain.
    pub fn new(lat_min: f64, lat_max: f64, lng_min: f64, lng_max: f64) -> Option<Self> {
        let ok = lat_min <= lat_max
            && lng_min <= lng_max
            && lat_min >= -90.0
            && lat_max <= 90.0
            && lng_min >= -180.0
            && lng_max <= 180.0;
        ok.then_some(Self {
            lat_min,
            lat_max,
            lng_min,
            lng_max,
        })
    }

    pub fn north_west(&self) -> GeoPoint {
        GeoPoint::new(self.lat_max, self.lng_min)
    }

    pub fn south_east(&self) -> GeoPoint {
        GeoPoint::new(self.lat_min, self.lng_max)
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint::new(
            (self.lat_min + self.lat_max) * 0.5,
            (self.lng_min + self.lng_max) * 0.5,
        )
    }

    /// Smallest box covering both.
    pub fn union(&self, o: &Self) -> Self {
        Self {
            lat_min: self.lat_min.min(o.lat_min),
            lat_max: self.lat_max.max(o.lat_max),
            lng_min: self.lng_min.min(o.lng_min),
            lng_max: self.lng_max.max(o.lng_max),
        }
    }

    #[inline]
    fn lng_inside(&self, lng: f64) -> bool {
        (lng >= self.lng_min && lng <= self.lng_max)
            || (lng == 180.0 && self.lng_min == -180.0)
    }

    /// Closed containment test.
    #[inline]
    pub fn contains(&self, p: GeoPoint) -> bool {
        p.lat() >= self.lat_min && p.lat() <= self.lat_max && self.lng_inside(p.lng())
    }

    /// Smallest central angle (radians) from `p` to any point of the box.
    pub fn min_angle(&self, p: GeoPoint) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        if self.lng_inside(p.lng()) {
            // between the longitude lines: straight along p's meridian
            let edge = if p.lat() > self.lat_max {
                self.lat_max
            } else {
                self.lat_min
            };
            return central_angle(p, GeoPoint::new(edge, p.lng()));
        }
        let center_lng = (self.lng_min + self.lng_max) * 0.5;
        let rotated = geo::normalize_lng(p.lng() - center_lng);
        let edge_lng = if rotated > 0.0 {
            self.lng_max
        } else {
            self.lng_min
        };
        let s = geo::nearest_point_on_meridian_arc(
            p,
            GeoPoint::new(self.lat_min, edge_lng),
            GeoPoint::new(self.lat_max, edge_lng),
        );
        central_angle(p, s)
    }

    /// Largest central angle (radians) from `p` to any point of the box.
    ///
    /// The farthest point from `p` is the nearest point to its antipode.
    pub fn max_angle(&self, p: GeoPoint) -> f64 {
        let anti = p.antipode();
        if self.contains(anti) {
            return PI;
        }
        PI - self.min_angle(anti)
    }

    /// Minimum great-circle distance in meters from `p` to the box.
    pub fn min_distance(&self, p: GeoPoint, model: &EarthModel) -> f64 {
        model.radius_m * self.min_angle(p)
    }

    /// Upper bound on the great-circle distance from `p` to every point of the box.
    pub fn max_distance(&self, p: GeoPoint, model: &EarthModel) -> f64 {
        model.radius_m * self.max_angle(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::great_circle_distance;

    fn q(lat_min: f64, lat_max: f64, lng_min: f64, lng_max: f64) -> Quadrilateral {
        Quadrilateral::new(lat_min, lat_max, lng_min, lng_max).unwrap()
    }

    #[test]
    fn containment() {
        let b = q(10.0, 20.0, 30.0, 40.0);
        assert!(b.contains(GeoPoint::new(15.0, 35.0)));
        assert!(b.contains(GeoPoint::new(20.0, 40.0)));
        assert!(!b.contains(GeoPoint::new(21.0, 35.0)));
        assert!(q(0.0, 1.0, -180.0, -179.0).contains(GeoPoint::new(0.5, -180.0)));
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(Quadrilateral::new(2.0, 1.0, 0.0, 1.0).is_none());
        assert!(Quadrilateral::new(0.0, 1.0, 5.0, 1.0).is_none());
        assert!(Quadrilateral::new(0.0, 91.0, 0.0, 1.0).is_none());
    }

    #[test]
    fn min_distance_cases() {
        let m = EarthModel::default();
        let b = q(10.0, 20.0, 30.0, 40.0);
        assert_eq!(b.min_distance(GeoPoint::new(15.0, 35.0), &m), 0.0);
        let p = GeoPoint::new(25.0, 35.0);
        assert_eq!(
            b.min_distance(p, &m),
            great_circle_distance(p, GeoPoint::new(20.0, 35.0), &m)
        );
        let b = q(0.0, 40.0, 0.0, 10.0);
        let p = GeoPoint::new(50.0, 20.0);
        let corner = great_circle_distance(p, GeoPoint::new(40.0, 10.0), &m);
        assert!((b.min_distance(p, &m) - corner).abs() < 1e-6);
    }

    #[test]
    fn min_distance_across_antimeridian() {
        let m = EarthModel::default();
        let b = q(0.0, 1.0, 178.0, 180.0);
        let p = GeoPoint::new(0.5, -179.0);
        // the east edge at 180 is one degree away; sample it densely
        let want = (0..=100_000)
            .map(|i| great_circle_distance(p, GeoPoint::new(i as f64 * 1e-5, 180.0), &m))
            .fold(f64::INFINITY, f64::min);
        let got = b.min_distance(p, &m);
        assert!(got <= want + 1e-6 && got > want - 1e-3, "{got} {want}");
        assert!(got < 112_000.0);
    }

    #[test]
    fn max_distance_examples() {
        let m = EarthModel::default();
        let b = q(-1.0, 1.0, -1.0, 1.0);
        let c = GeoPoint::new(0.0, 0.0);
        assert!(b.max_distance(c, &m) >= great_circle_distance(c, GeoPoint::new(1.0, 1.0), &m) - 1e-6);
        // antipode of p inside the box
        let p = GeoPoint::new(0.0, 180.0);
        assert_eq!(b.max_distance(p, &m), PI * m.radius_m);
    }

    #[test]
    fn max_distance_on_meridian_edge_interior() {
        // the farthest point sits mid-edge, not at a corner
        let m = EarthModel::default();
        let b = q(-40.0, 40.0, 100.0, 110.0);
        let p = GeoPoint::new(0.0, 0.0);
        let mid = great_circle_distance(p, GeoPoint::new(0.0, 110.0), &m);
        assert!(b.max_distance(p, &m) >= mid - 1e-6);
    }
}
