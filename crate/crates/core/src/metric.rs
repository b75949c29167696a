//! Distance functions as a runtime-selectable parameter.
//!
//! A [`Metric`] pairs a point-to-point distance with a lower bound on the
//! distance from a point to any point of a [`Quadrilateral`]. Tree searches
//! prune on that bound, so it must never exceed the true distance.

use crate::geo::{self, wrap_pi, EarthModel, GeoPoint};
use crate::quad::Quadrilateral;

/// Relative slack applied to every pruning bound to absorb rounding.
const BOUND_SLACK: f64 = 1.0 - 1e-9;

/// Ellipsoid distance / great-circle distance stays in
/// `[ELLIPSOID_FLOOR_FACTOR * a / R, ELLIPSOID_CEILING_RATIO]`.
/// Meridional curvature at the equator gives `a (1 - 2f)`; one extra `f` is margin.
const ELLIPSOID_FLOOR_FLATTENINGS: f64 = 3.0;

/// Ratio by which a great-circle distance (mean radius) is inflated to upper-bound
/// the ellipsoid distance of the same pair. The polar radius of curvature
/// `a / (1 - f)` over the mean radius is 1.00449.
pub const ELLIPSOID_CEILING_RATIO: f64 = 1.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    Planar,
    GreatCircle,
    Ellipsoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub kind: DistanceKind,
    pub model: EarthModel,
}

impl Metric {
    pub fn new(kind: DistanceKind, model: EarthModel) -> Self {
        Self { kind, model }
    }

    pub fn planar(model: EarthModel) -> Self {
        Self::new(DistanceKind::Planar, model)
    }

    pub fn great_circle(model: EarthModel) -> Self {
        Self::new(DistanceKind::GreatCircle, model)
    }

    pub fn ellipsoid(model: EarthModel) -> Self {
        Self::new(DistanceKind::Ellipsoid, model)
    }

    #[inline]
    pub fn distance(&self, a: GeoPoint, b: GeoPoint) -> f64 {
        match self.kind {
            DistanceKind::Planar => geo::planar_distance(a, b, &self.model),
            DistanceKind::GreatCircle => geo::great_circle_distance(a, b, &self.model),
            DistanceKind::Ellipsoid => geo::ellipsoid_distance(a, b, &self.model),
        }
    }

    /// Lower bound on `distance(p, s)` over all `s` in `q`.
    pub fn lower_bound(&self, q: &Quadrilateral, p: GeoPoint) -> f64 {
        let raw = match self.kind {
            DistanceKind::Planar => planar_lower_bound(q, p, &self.model),
            DistanceKind::GreatCircle | DistanceKind::Ellipsoid => {
                q.min_angle(p) * self.sphere_floor_radius().unwrap_or(0.0)
            }
        };
        raw * BOUND_SLACK
    }

    /// Meters per radian of central angle that this metric never undercuts,
    /// or `None` when no such constant exists (planar).
    pub fn sphere_floor_radius(&self) -> Option<f64> {
        match self.kind {
            DistanceKind::Planar => None,
            DistanceKind::GreatCircle => Some(self.model.radius_m),
            DistanceKind::Ellipsoid => Some(
                self.model.equatorial_radius_m
                    * (1.0 - ELLIPSOID_FLOOR_FLATTENINGS * self.model.flattening),
            ),
        }
    }

    /// Factor by which a great-circle distance must be inflated to bound this
    /// metric's distance for the same pair from above.
    pub fn sphere_ceiling_ratio(&self) -> f64 {
        match self.kind {
            DistanceKind::Ellipsoid => {
                let a_over_r = self.model.equatorial_radius_m / self.model.radius_m;
                ELLIPSOID_CEILING_RATIO.max(a_over_r * (1.0 + self.model.flattening) * 1.0005)
            }
            _ => 1.0 + 1e-9,
        }
    }
}

// Minimises each squared term independently: latitude gap, longitude gap, and
// the cosine of the mean latitude over the box's latitude span.
fn planar_lower_bound(q: &Quadrilateral, p: GeoPoint, model: &EarthModel) -> f64 {
    let lat = p.lat();
    let dlat = if lat < q.lat_min {
        q.lat_min - lat
    } else if lat > q.lat_max {
        lat - q.lat_max
    } else {
        0.0
    };
    let lng = p.lng();
    let dlng = if q.contains(GeoPoint::new(q.lat_min, lng)) {
        0.0
    } else {
        let west = wrap_pi((lng - q.lng_min).to_radians()).abs();
        let east = wrap_pi((lng - q.lng_max).to_radians()).abs();
        west.min(east)
    };
    let plat = lat.to_radians();
    let cos_lo = ((plat + q.lat_min.to_radians()) * 0.5).cos();
    let cos_hi = ((plat + q.lat_max.to_radians()) * 0.5).cos();
    let x = dlng * cos_lo.min(cos_hi).max(0.0);
    let y = dlat.to_radians();
    model.radius_m * (x * x + y * y).sqrt()
}
