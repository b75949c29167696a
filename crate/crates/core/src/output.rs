//! CSV rendering of results.
//!
//! Columns: `latitude,longitude,elevation_m,isolation_km,ilp_latitude,ilp_longitude`.
//! Coordinates carry 6 decimals and isolation 4. A peak without higher
//! ground gets isolation `-1` and empty ILP fields and is listed first; the
//! rest follow by descending isolation, then latitude and longitude.

use std::cmp::Ordering;
use std::io::{self, Write};

use crate::sweep::IlpResult;

pub const CSV_HEADER: &str = "latitude,longitude,elevation_m,isolation_km,ilp_latitude,ilp_longitude";

pub fn output_order(a: &IlpResult, b: &IlpResult) -> Ordering {
    let rank = |r: &IlpResult| r.isolation_m.unwrap_or(f64::INFINITY);
    rank(b)
        .total_cmp(&rank(a))
        .then(a.peak.location.cmp_lat_lng(&b.peak.location))
}

pub fn format_row(r: &IlpResult) -> String {
    let p = r.peak.location;
    match (r.isolation_m, r.ilp) {
        (Some(d), Some(q)) => format!(
            "{:.6},{:.6},{},{:.4},{:.6},{:.6}",
            p.lat(),
            p.lng(),
            r.peak.elevation_m,
            d / 1000.0,
            q.lat(),
            q.lng()
        ),
        _ => format!("{:.6},{:.6},{},-1,,", p.lat(), p.lng(), r.peak.elevation_m),
    }
}

/// Writes header and rows in output order.
pub fn write_csv<W: Write>(mut w: W, results: &[IlpResult]) -> io::Result<()> {
    let mut sorted: Vec<&IlpResult> = results.iter().collect();
    sorted.sort_by(|a, b| output_order(a, b));
    writeln!(w, "{CSV_HEADER}")?;
    for r in sorted {
        writeln!(w, "{}", format_row(r))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dem::{LatticePos, Peak, TileKey};
    use crate::geo::GeoPoint;

    fn result(lat: i32, iso: Option<f64>) -> IlpResult {
        let pos = LatticePos { lat, lng: 36_000 };
        IlpResult {
            peak: Peak {
                location: pos.point(),
                pos,
                elevation_m: 1234,
                home_tile: TileKey::new(0, 10),
            },
            ilp: iso.map(|_| GeoPoint::new(0.5, 10.25)),
            isolation_m: iso,
        }
    }

    #[test]
    fn rows_and_order() {
        let rs = [result(100, Some(1500.0)), result(200, None), result(300, Some(25_000.0))];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0.055556,10.000000,1234,-1,,");
        assert_eq!(lines[2], "0.083333,10.000000,1234,25.0000,0.500000,10.250000");
        assert_eq!(lines[3], "0.027778,10.000000,1234,1.5000,0.500000,10.250000");
    }
}
