//! Point-level geometry on the reference sphere and the WGS84 ellipsoid.
//!
//! Coordinates cross the API in degrees; every formula works in radians.

use std::f64::consts::PI;

/// A position on the reference surface.
///
/// Latitude lies in [-90, 90], longitude in (-180, 180]. The world is split at
/// the antimeridian, so -180 is folded onto 180.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lng: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lng_deg: f64) -> Self {
        Self {
            lat: lat_deg.clamp(-90.0, 90.0),
            lng: normalize_lng(lng_deg),
        }
    }

    #[inline]
    pub fn lat(&self) -> f64 {
        self.lat
    }

    #[inline]
    pub fn lng(&self) -> f64 {
        self.lng
    }

    /// The diametrically opposite point.
    pub fn antipode(&self) -> Self {
        Self::new(-self.lat, self.lng + 180.0)
    }

    /// Lexicographic (lat, lng) order used for every tie-break in the crate.
    #[inline]
    pub fn cmp_lat_lng(&self, other: &Self) -> std::cmp::Ordering {
        self.lat
            .total_cmp(&other.lat)
            .then(self.lng.total_cmp(&other.lng))
    }
}

/// Folds a longitude into (-180, 180]. Values already in range are returned
/// bit-for-bit.
pub fn normalize_lng(lng: f64) -> f64 {
    if lng > -180.0 && lng <= 180.0 {
        return lng;
    }
    let l = lng.rem_euclid(360.0);
    if l > 180.0 {
        l - 360.0
    } else {
        l
    }
}

/// Wraps an angular difference in radians into (-pi, pi].
#[inline]
pub(crate) fn wrap_pi(x: f64) -> f64 {
    if x > -PI && x <= PI {
        x
    } else {
        let y = (x + PI).rem_euclid(2.0 * PI) - PI;
        if y == -PI {
            PI
        } else {
            y
        }
    }
}

/// Radii and flattening of the reference surfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthModel {
    /// Sphere radius used by great-circle and planar distances.
    pub radius_m: f64,
    /// Ellipsoid semi-major axis.
    pub equatorial_radius_m: f64,
    pub flattening: f64,
}

impl EarthModel {
    pub const MEAN_RADIUS_M: f64 = 6_371_000.0;
    pub const WGS84_A: f64 = 6_378_137.0;
    pub const WGS84_F: f64 = 1.0 / 298.257_223_563;

    pub fn new(radius_m: f64, equatorial_radius_m: f64, flattening: f64) -> Option<Self> {
        let ok = radius_m > 0.0
            && equatorial_radius_m > 0.0
            && (0.0..1.0).contains(&flattening)
            && radius_m.is_finite()
            && equatorial_radius_m.is_finite();
        ok.then_some(Self {
            radius_m,
            equatorial_radius_m,
            flattening,
        })
    }

    /// A sphere-only model: the ellipsoid collapses onto a sphere of radius `r`.
    pub fn sphere(r: f64) -> Self {
        Self {
            radius_m: r,
            equatorial_radius_m: r,
            flattening: 0.0,
        }
    }
}

impl Default for EarthModel {
    fn default() -> Self {
        Self {
            radius_m: Self::MEAN_RADIUS_M,
            equatorial_radius_m: Self::WGS84_A,
            flattening: Self::WGS84_F,
        }
    }
}

/// Unit-sphere Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n, self.z / n)
    }
}

// Canonical argument order makes every distance exactly symmetric.
#[inline]
fn ordered(a: GeoPoint, b: GeoPoint) -> (GeoPoint, GeoPoint) {
    if a.cmp_lat_lng(&b).is_gt() {
        (b, a)
    } else {
        (a, b)
    }
}

/// Central angle in radians between two points (haversine form).
pub fn central_angle(a: GeoPoint, b: GeoPoint) -> f64 {
    let (a, b) = ordered(a, b);
    let p1 = a.lat.to_radians();
    let p2 = b.lat.to_radians();
    let (s_phi, c_phi) = ((p2 - p1) * 0.5).sin_cos();
    let (s_lam, c_lam) = ((b.lng - a.lng).to_radians() * 0.5).sin_cos();
    let h = s_phi * s_phi + p1.cos() * p2.cos() * s_lam * s_lam;
    // 1 - h written as a sum of squares, so near-antipodal pairs keep full precision
    let s_mid = ((p1 + p2) * 0.5).sin();
    let k = c_phi * c_phi * c_lam * c_lam + s_mid * s_mid * s_lam * s_lam;
    2.0 * h.max(0.0).sqrt().atan2(k.max(0.0).sqrt())
}

/// Great-circle distance in meters on the sphere of `model.radius_m`.
pub fn great_circle_distance(a: GeoPoint, b: GeoPoint, model: &EarthModel) -> f64 {
    model.radius_m * central_angle(a, b)
}

/// Andoyer-Lambert flattening-corrected distance on the ellipsoid.
///
/// Accurate to roughly f² relative; degrades near antipodal pairs.
pub fn ellipsoid_distance(a: GeoPoint, b: GeoPoint, model: &EarthModel) -> f64 {
    let (a, b) = ordered(a, b);
    let p1 = a.lat.to_radians();
    let p2 = b.lat.to_radians();
    let mean = (p1 + p2) * 0.5;
    let half_dlat = (p1 - p2) * 0.5;
    let half_dlng = wrap_pi((a.lng - b.lng).to_radians()) * 0.5;

    let (sf, cf) = mean.sin_cos();
    let (sg, cg) = half_dlat.sin_cos();
    let (sl, cl) = half_dlng.sin_cos();
    let (sf2, cf2, sg2, cg2, sl2, cl2) = (sf * sf, cf * cf, sg * sg, cg * cg, sl * sl, cl * cl);

    let s = sg2 * cl2 + cf2 * sl2;
    let c = cg2 * cl2 + sf2 * sl2;
    if s <= 0.0 {
        return 0.0;
    }
    let w = s.sqrt().atan2(c.sqrt());
    if w == 0.0 {
        return 0.0;
    }
    let r = (s * c).sqrt() / w;
    let d = 2.0 * w * model.equatorial_radius_m;
    let f = model.flattening;
    let h1 = (3.0 * r - 1.0) / (2.0 * c);
    let h2 = (3.0 * r + 1.0) / (2.0 * s);
    d * (1.0 + f * h1 * sf2 * cg2 - f * h2 * cf2 * sg2)
}

/// Equirectangular approximation scaled by the mean latitude.
pub fn planar_distance(a: GeoPoint, b: GeoPoint, model: &EarthModel) -> f64 {
    let (a, b) = ordered(a, b);
    let p1 = a.lat.to_radians();
    let p2 = b.lat.to_radians();
    let dphi = p2 - p1;
    let dlam = wrap_pi((b.lng - a.lng).to_radians()) * ((p1 + p2) * 0.5).cos();
    model.radius_m * (dphi * dphi + dlam * dlam).sqrt()
}

pub fn to_cartesian(p: GeoPoint) -> Vec3 {
    let (slat, clat) = p.lat.to_radians().sin_cos();
    let (slng, clng) = p.lng.to_radians().sin_cos();
    Vec3::new(clat * clng, clat * slng, slat)
}

pub fn from_cartesian(v: Vec3) -> GeoPoint {
    let v = v.normalized();
    let lat = v.z.clamp(-1.0, 1.0).asin().to_degrees();
    if v.x.abs() < 1e-15 && v.y.abs() < 1e-15 {
        // longitude is undefined at the poles
        return GeoPoint::new(lat, 0.0);
    }
    GeoPoint::new(lat, v.y.atan2(v.x).to_degrees())
}

/// Closest point to `p` on the meridian arc between `south_end` and
/// `north_end`, which share a longitude.
///
/// The foot of the perpendicular great circle is found with three cross
/// products; when it falls outside the arc the nearer endpoint wins.
pub fn nearest_point_on_meridian_arc(
    p: GeoPoint,
    south_end: GeoPoint,
    north_end: GeoPoint,
) -> GeoPoint {
    let lng = south_end.lng;
    let (lat_lo, lat_hi) = (south_end.lat, north_end.lat);
    let (slng, clng) = lng.to_radians().sin_cos();

    let mut a = to_cartesian(south_end).cross(to_cartesian(north_end));
    if a.norm() < 1e-12 {
        // pole-to-pole or zero-length arc: fall back to the meridian plane normal
        a = Vec3::new(-slng, clng, 0.0);
    }
    let pv = to_cartesian(p);
    let b = pv.cross(a);
    if b.norm() < 1e-12 {
        // p is a pole of the meridian circle; every point is equally far
        return GeoPoint::new(p.lat.clamp(lat_lo, lat_hi), lng);
    }
    let s = a.cross(b).normalized();
    let on_our_half = s.x * clng + s.y * slng >= 0.0;
    if on_our_half {
        let lat = s.z.clamp(-1.0, 1.0).asin().to_degrees();
        if lat >= lat_lo && lat <= lat_hi {
            return GeoPoint::new(lat, lng);
        }
    }
    let south = GeoPoint::new(lat_lo, lng);
    let north = GeoPoint::new(lat_hi, lng);
    if central_angle(p, north) < central_angle(p, south) {
        north
    } else {
        south
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: f64 = 6_371_000.0;

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    #[test]
    fn great_circle_examples() {
        let m = EarthModel::default();
        let p = GeoPoint::new(47.0, 8.0);
        assert_eq!(great_circle_distance(p, p, &m), 0.0);
        let d = great_circle_distance(GeoPoint::new(0.0, 0.0), GeoPoint::new(0.0, 180.0), &m);
        assert!(rel(d, PI * R) < 1e-12, "{d}");
        assert!((d - 20_015_086.8).abs() < 0.1);
        let d = great_circle_distance(GeoPoint::new(0.0, 0.0), GeoPoint::new(0.0, 1.0), &m);
        assert!(rel(d, R * PI / 180.0) < 1e-12);
        assert!((d - 111_194.93).abs() < 0.01);
    }

    #[test]
    fn ellipsoid_identity_and_sphere_limit() {
        let m = EarthModel::default();
        let p = GeoPoint::new(-33.2, 151.0);
        assert_eq!(ellipsoid_distance(p, p, &m), 0.0);
        let s = EarthModel::sphere(6_378_137.0);
        for (a, b) in [
            ((10.0, 20.0), (11.0, 22.0)),
            ((-45.0, 170.0), (40.0, -100.0)),
            ((89.0, 0.0), (88.0, 179.0)),
        ] {
            let a = GeoPoint::new(a.0, a.1);
            let b = GeoPoint::new(b.0, b.1);
            let e = ellipsoid_distance(a, b, &s);
            let g = great_circle_distance(a, b, &s);
            assert!(rel(e, g) < 1e-9, "{e} {g}");
        }
    }

    #[test]
    fn planar_examples() {
        let m = EarthModel::default();
        let a = GeoPoint::new(0.0, 0.0);
        assert_eq!(planar_distance(a, a, &m), 0.0);
        let b = GeoPoint::new(0.0, 1.0);
        assert!(rel(planar_distance(a, b, &m), great_circle_distance(a, b, &m)) < 1e-9);
        let a = GeoPoint::new(60.0, 0.0);
        let b = GeoPoint::new(60.0, 1.0);
        assert!(rel(planar_distance(a, b, &m), great_circle_distance(a, b, &m)) < 1e-4);
    }

    #[test]
    fn cartesian_examples() {
        let v = to_cartesian(GeoPoint::new(0.0, 0.0));
        assert!((v.x - 1.0).abs() < 1e-15 && v.y.abs() < 1e-15 && v.z.abs() < 1e-15);
        let v = to_cartesian(GeoPoint::new(90.0, 123.0));
        assert!(v.x.abs() < 1e-15 && v.y.abs() < 1e-15 && (v.z - 1.0).abs() < 1e-15);
        let v = to_cartesian(GeoPoint::new(0.0, 90.0));
        assert!(v.x.abs() < 1e-15 && (v.y - 1.0).abs() < 1e-15);

        assert_eq!(from_cartesian(Vec3::new(1.0, 0.0, 0.0)), GeoPoint::new(0.0, 0.0));
        let pole = from_cartesian(Vec3::new(0.0, 0.0, 1.0));
        assert_eq!((pole.lat(), pole.lng()), (90.0, 0.0));
    }

    #[test]
    fn longitude_normalization() {
        assert_eq!(normalize_lng(180.0), 180.0);
        assert_eq!(normalize_lng(-180.0), 180.0);
        assert_eq!(normalize_lng(190.0), -170.0);
        assert_eq!(normalize_lng(-190.0), 170.0);
        assert_eq!(normalize_lng(540.0), 180.0);
        assert_eq!(normalize_lng(720.0), 0.0);
        let x = -0.008_333_333_333_333_333;
        assert_eq!(normalize_lng(x).to_bits(), x.to_bits());
    }

    #[test]
    fn meridian_arc_examples() {
        let near = |p: (f64, f64), lng: f64, lo: f64, hi: f64| {
            nearest_point_on_meridian_arc(
                GeoPoint::new(p.0, p.1),
                GeoPoint::new(lo, lng),
                GeoPoint::new(hi, lng),
            )
        };
        let s = near((10.0, 20.0), 20.0, 0.0, 30.0);
        assert!((s.lat() - 10.0).abs() < 1e-9 && s.lng() == 20.0);
        let s = near((0.0, 10.0), 0.0, -30.0, 30.0);
        assert!(s.lat().abs() < 1e-9 && s.lng() == 0.0);
        let s = near((50.0, 10.0), 0.0, 0.0, 40.0);
        assert_eq!((s.lat(), s.lng()), (40.0, 0.0));
        // p on the far side of the globe from the arc
        let s = near((20.0, 175.0), 0.0, -10.0, 10.0);
        assert_eq!((s.lat(), s.lng()), (10.0, 0.0));
    }

    #[test]
    fn meridian_arc_matches_dense_sampling() {
        let p = GeoPoint::new(50.0, 10.0);
        let s = nearest_point_on_meridian_arc(p, GeoPoint::new(0.0, 0.0), GeoPoint::new(40.0, 0.0));
        let best = central_angle(p, s);
        let mut k = 0.0;
        while k <= 40.0 {
            let q = GeoPoint::new(k, 0.0);
            assert!(best <= central_angle(p, q) + 1e-15);
            k += 1e-4;
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn point() -> impl Strategy<Value = GeoPoint> {
            (-90.0..=90.0f64, -180.0..180.0f64).prop_map(|(lat, lng)| GeoPoint::new(lat, lng))
        }

        proptest! {
            #[test]
            fn cartesian_round_trip(p in (-89.9..=89.9f64, -179.9..179.9f64)) {
                let q = from_cartesian(to_cartesian(GeoPoint::new(p.0, p.1)));
                prop_assert!((q.lat() - p.0).abs() < 1e-9);
                prop_assert!((q.lng() - p.1).abs() < 1e-9);
            }

            #[test]
            fn distances_are_symmetric(a in point(), b in point()) {
                let m = EarthModel::default();
                prop_assert_eq!(great_circle_distance(a, b, &m), great_circle_distance(b, a, &m));
                prop_assert_eq!(ellipsoid_distance(a, b, &m), ellipsoid_distance(b, a, &m));
                prop_assert_eq!(planar_distance(a, b, &m), planar_distance(b, a, &m));
            }

            #[test]
            fn triangle_inequality(a in point(), b in point(), c in point()) {
                let m = EarthModel::default();
                let d = |x, y| great_circle_distance(x, y, &m);
                prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-6);
            }

            #[test]
            fn ellipsoid_within_sphere_band(a in point(), b in point()) {
                let m = EarthModel::default();
                let angle = central_angle(a, b);
                prop_assume!(angle < 3.0);
                let e = ellipsoid_distance(a, b, &m);
                let floor = m.equatorial_radius_m * (1.0 - 3.0 * m.flattening) * angle;
                prop_assert!(e >= floor * (1.0 - 1e-9));
                prop_assert!(e <= m.radius_m * angle * 1.005 + 1e-6);
            }
        }
    }
}
