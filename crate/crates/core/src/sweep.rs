//! The top-down sweep: walk the event sequence from the highest elevation
//! down, keep the active samples in a [`SphereKdTree`], and answer every peak
//! event with a nearest-neighbour query.

use std::collections::BTreeMap;

use crate::dem::{EventKind, EventSequence, Peak};
use crate::geo::GeoPoint;
use crate::metric::Metric;
use crate::spatial_index::{IndexError, SphereKdTree, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlpResult {
    pub peak: Peak,
    /// The isolation limit point; `None` when nothing higher was found.
    pub ilp: Option<GeoPoint>,
    pub isolation_m: Option<f64>,
}

impl IlpResult {
    pub fn undefined(peak: Peak) -> Self {
        Self {
            peak,
            ilp: None,
            isolation_m: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("sweep aborted at event {event}: {source}")]
pub struct SweepError {
    pub event: usize,
    #[source]
    pub source: IndexError,
}

/// What the sweep saw at one peak event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakCheck {
    pub event: usize,
    pub elevation_m: i16,
    /// Lowest elevation among the active samples, `None` if none was active.
    pub lowest_active_m: Option<i16>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTrace {
    pub events: usize,
    pub inserts: usize,
    pub removes: usize,
    pub peak_checks: Vec<PeakCheck>,
    /// Active samples left after the last event.
    pub active_at_end: usize,
}

/// Resolves every peak of `events`. Results come back in sweep order.
pub fn run_sweep(
    events: &EventSequence<'_>,
    metric: &Metric,
    config: TreeConfig,
) -> Result<Vec<IlpResult>, SweepError> {
    sweep(events, metric, config, None)
}

/// [`run_sweep`] that also records the active set seen by every peak event.
pub fn run_sweep_traced(
    events: &EventSequence<'_>,
    metric: &Metric,
    config: TreeConfig,
) -> Result<(Vec<IlpResult>, SweepTrace), SweepError> {
    let mut trace = SweepTrace::default();
    let out = sweep(events, metric, config, Some(&mut trace))?;
    Ok((out, trace))
}

/// Checks that every peak event saw only strictly higher active samples,
/// and that inserts and removes balanced out.
pub fn assert_sweep_invariant(trace: &SweepTrace) -> Result<(), String> {
    for c in &trace.peak_checks {
        if let Some(low) = c.lowest_active_m {
            if low <= c.elevation_m {
                return Err(format!(
                    "event {}: active sample at {low} m during peak event at {} m",
                    c.event, c.elevation_m
                ));
            }
        }
    }
    if trace.inserts != trace.removes || trace.active_at_end != 0 {
        return Err(format!(
            "{} inserts, {} removes, {} left active",
            trace.inserts, trace.removes, trace.active_at_end
        ));
    }
    Ok(())
}

fn sweep(
    events: &EventSequence<'_>,
    metric: &Metric,
    config: TreeConfig,
    mut trace: Option<&mut SweepTrace>,
) -> Result<Vec<IlpResult>, SweepError> {
    let raster = events.raster();
    let peaks = events.peaks();
    let mut tree = SphereKdTree::prebuild(raster.bounds(), config);
    let mut out = Vec::with_capacity(peaks.len());
    // multiset of active elevations, only kept when tracing
    let mut active: BTreeMap<i16, usize> = BTreeMap::new();
    for (i, ev) in events.iter().enumerate() {
        let fail = |source| SweepError { event: i, source };
        match ev.kind {
            EventKind::Insert => {
                tree.insert(ev.point).map_err(fail)?;
                if let Some(t) = trace.as_deref_mut() {
                    t.inserts += 1;
                    let (r, c) = ev.cell.expect("grid event");
                    *active.entry(raster.get(r, c)).or_default() += 1;
                }
            }
            EventKind::Remove => {
                tree.remove(ev.point).map_err(fail)?;
                if let Some(t) = trace.as_deref_mut() {
                    t.removes += 1;
                    let (r, c) = ev.cell.expect("grid event");
                    let e = raster.get(r, c);
                    let n = active.get_mut(&e).expect("active elevation");
                    *n -= 1;
                    if *n == 0 {
                        active.remove(&e);
                    }
                }
            }
            EventKind::Peak => {
                let peak = peaks[ev.peak.expect("peak event")];
                if let Some(t) = trace.as_deref_mut() {
                    t.peak_checks.push(PeakCheck {
                        event: i,
                        elevation_m: peak.elevation_m,
                        lowest_active_m: active.keys().next().copied(),
                    });
                }
                out.push(match tree.nearest_neighbor(peak.location, metric) {
                    Ok(n) => IlpResult {
                        peak,
                        ilp: Some(n.point),
                        isolation_m: Some(n.distance),
                    },
                    Err(IndexError::Empty) => IlpResult::undefined(peak),
                    Err(e) => return Err(fail(e)),
                });
            }
        }
    }
    if let Some(t) = trace {
        t.events = events.len();
        t.active_at_end = tree.len();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dem::{detect_peaks, Raster, TileKey};
    use crate::geo::EarthModel;

    fn raster(rows: usize, cols: usize, data: &[i16]) -> Raster {
        Raster::new(3600, 0, 30, rows, cols, data.to_vec()).unwrap()
    }

    fn run(r: &Raster) -> (Vec<IlpResult>, SweepTrace) {
        let peaks = detect_peaks(r, TileKey::new(0, 0));
        let ev = EventSequence::build(r, &peaks);
        run_sweep_traced(&ev, &Metric::great_circle(EarthModel::default()), TreeConfig::default())
            .unwrap()
    }

    #[test]
    fn two_summits() {
        #[rustfmt::skip]
        let r = raster(3, 5, &[
            0, 0, 0, 0, 0,
            9, 1, 0, 1, 5,
            0, 0, 0, 0, 0,
        ]);
        let (res, trace) = run(&r);
        assert_eq!(res.len(), 2);
        assert_eq!(res[0].peak.elevation_m, 9);
        assert!(res[0].ilp.is_none());
        assert_eq!(res[1].peak.elevation_m, 5);
        assert_eq!(res[1].ilp, Some(r.point(1, 0)));
        assert_sweep_invariant(&trace).unwrap();
    }

    #[test]
    fn flat_tile_single_undefined_peak() {
        let (res, trace) = run(&raster(4, 4, &[3; 16]));
        assert_eq!(res.len(), 1);
        assert!(res[0].isolation_m.is_none());
        assert_eq!(trace.peak_checks[0].lowest_active_m, None);
        assert_sweep_invariant(&trace).unwrap();
    }

    #[test]
    fn ramp_trace_holds() {
        let data: Vec<i16> = (0..64).map(|i| (i % 8 + i / 8) as i16).collect();
        let (_, trace) = run(&raster(8, 8, &data));
        assert_eq!(trace.inserts, 64);
        assert_eq!(trace.removes, 64);
        assert_sweep_invariant(&trace).unwrap();
    }

    #[test]
    fn invariant_violation_reported() {
        let t = SweepTrace {
            peak_checks: vec![PeakCheck {
                event: 7,
                elevation_m: 10,
                lowest_active_m: Some(10),
            }],
            ..Default::default()
        };
        assert!(assert_sweep_invariant(&t).unwrap_err().contains("event 7"));
    }
}
