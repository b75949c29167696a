//! Seeded synthetic terrain for tests and benchmarks.
//!
//! A whole world is generated on one lattice and then cut into tiles, so the
//! overlap rows and columns of neighbouring tiles are identical by
//! construction.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DemError, Tile, TileKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    /// Non-overlapping summits: the upper envelope of straight-sided cones.
    Cones,
    /// Diamond-square noise.
    Fractal,
    /// One constant elevation everywhere.
    Plateau,
    /// Diamond-square noise quantised to 50 m steps; many flat summits.
    Terraces,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::Cones, Profile::Fractal, Profile::Plateau, Profile::Terraces];
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Cones => "cones",
            Profile::Fractal => "fractal",
            Profile::Plateau => "plateau",
            Profile::Terraces => "terraces",
        })
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| format!("unknown profile {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub rows: usize,
    pub cols: usize,
    pub samples: usize,
    pub seed: u64,
    pub profile: Profile,
    /// South-west tile of the world.
    pub origin: TileKey,
    /// Number of cones for [`Profile::Cones`]; defaults to four per tile.
    pub cones: Option<usize>,
}

impl SynthSpec {
    pub fn new(rows: usize, cols: usize, profile: Profile, seed: u64) -> Self {
        Self {
            rows,
            cols,
            samples: 1201,
            seed,
            profile,
            origin: TileKey::new(46, 10),
            cones: None,
        }
    }

    pub fn samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn origin(mut self, origin: TileKey) -> Self {
        self.origin = origin;
        self
    }

    pub fn cones(mut self, n: usize) -> Self {
        self.cones = Some(n);
        self
    }

    fn world_shape(&self) -> (usize, usize) {
        let step = self.samples - 1;
        (self.rows * step + 1, self.cols * step + 1)
    }
}

/// Summit positions and heights of a cones world, as (global row, global col, height).
pub fn cone_apices(spec: &SynthSpec) -> Vec<(usize, usize, i16)> {
    let (h, w) = spec.world_shape();
    place_cones(spec, h, w)
        .into_iter()
        .map(|c| (c.row, c.col, c.height as i16))
        .collect()
}

/// The tiles of the world, sorted by key.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Vec<Tile>, DemError> {
    if spec.rows == 0 || spec.cols == 0 || spec.samples < 2 {
        return Err(DemError::Geometry("empty synthetic world".into()));
    }
    let (h, w) = spec.world_shape();
    let world = match spec.profile {
        Profile::Cones => cones(spec, h, w),
        Profile::Fractal => unique_max(fractal(spec.seed, h, w)),
        Profile::Terraces => unique_max(
            fractal(spec.seed, h, w)
                .into_iter()
                .map(|v| v.div_euclid(50) * 50)
                .collect(),
        ),
        Profile::Plateau => vec![1000; h * w],
    };
    let n = spec.samples;
    let step = n - 1;
    let mut tiles = Vec::with_capacity(spec.rows * spec.cols);
    for i in 0..spec.rows {
        for j in 0..spec.cols {
            let r0 = (spec.rows - 1 - i) * step;
            let c0 = j * step;
            let mut data = Vec::with_capacity(n * n);
            for r in 0..n {
                data.extend_from_slice(&world[(r0 + r) * w + c0..][..n]);
            }
            let key = TileKey::new(spec.origin.lat + i as i32, spec.origin.lng + j as i32);
            tiles.push(Tile::new(key, n, data)?);
        }
    }
    tiles.sort_by_key(|t| t.key());
    Ok(tiles)
}

#[derive(Debug, Clone, Copy)]
struct Cone {
    row: usize,
    col: usize,
    height: f64,
    slope: f64,
}

impl Cone {
    fn at(&self, r: usize, c: usize) -> f64 {
        let dr = r as f64 - self.row as f64;
        let dc = c as f64 - self.col as f64;
        self.height - self.slope * (dr * dr + dc * dc).sqrt()
    }
}

/// Margin by which every summit stands above all other cones, so that
/// rounding and diagonal neighbours can never hide it.
const SUMMIT_MARGIN: f64 = 12.0;

fn place_cones(spec: &SynthSpec, h: usize, w: usize) -> Vec<Cone> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let want = spec.cones.unwrap_or(4 * spec.rows * spec.cols);
    // height spread comparable to the world size keeps summits from burying each other
    let spread = 2 * h.max(w) as i32;
    let mut heights: Vec<i32> = (1000..1000 + spread).collect();
    heights.shuffle(&mut rng);
    let mut out: Vec<Cone> = Vec::with_capacity(want);
    let mut attempts = 0;
    while out.len() < want && attempts < 2000 * want.max(1) && !heights.is_empty() {
        attempts += 1;
        let cand = Cone {
            row: rng.gen_range(0..h),
            col: rng.gen_range(0..w),
            height: heights[heights.len() - 1] as f64,
            slope: rng.gen_range(2.0..4.0),
        };
        let clear = out.iter().all(|o| {
            o.at(cand.row, cand.col) <= cand.height - SUMMIT_MARGIN
                && cand.at(o.row, o.col) <= o.height - SUMMIT_MARGIN
        });
        if clear {
            heights.pop();
            out.push(cand);
        }
    }
    out
}

fn cones(spec: &SynthSpec, h: usize, w: usize) -> Vec<i16> {
    let cones = place_cones(spec, h, w);
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let v = cones
                .iter()
                .map(|k| k.at(r, c))
                .fold(f64::NEG_INFINITY, f64::max);
            let v = if v.is_finite() { v } else { 0.0 };
            out.push(v.round().clamp(-32767.0, 32767.0) as i16);
        }
    }
    out
}

fn fractal(seed: u64, h: usize, w: usize) -> Vec<i16> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut size = 2;
    while size + 1 < h.max(w) {
        size *= 2;
    }
    let n = size + 1;
    let mut g = vec![0f32; n * n];
    for (r, c) in [(0, 0), (0, size), (size, 0), (size, size)] {
        g[r * n + c] = rng.gen_range(200.0..2200.0);
    }
    let mut amp = 1500f32;
    let mut half = size / 2;
    let mut span = size;
    while half >= 1 {
        // diamond
        for r in (half..n).step_by(span) {
            for c in (half..n).step_by(span) {
                let avg = (g[(r - half) * n + c - half]
                    + g[(r - half) * n + c + half]
                    + g[(r + half) * n + c - half]
                    + g[(r + half) * n + c + half])
                    / 4.0;
                g[r * n + c] = avg + rng.gen_range(-amp..amp);
            }
        }
        // square
        for r in (0..n).step_by(half) {
            let start = if (r / half) % 2 == 0 { half } else { 0 };
            for c in (start..n).step_by(span) {
                let mut sum = 0.0;
                let mut k = 0.0;
                if r >= half {
                    sum += g[(r - half) * n + c];
                    k += 1.0;
                }
                if r + half < n {
                    sum += g[(r + half) * n + c];
                    k += 1.0;
                }
                if c >= half {
                    sum += g[r * n + c - half];
                    k += 1.0;
                }
                if c + half < n {
                    sum += g[r * n + c + half];
                    k += 1.0;
                }
                g[r * n + c] = sum / k + rng.gen_range(-amp..amp);
            }
        }
        amp *= 0.55;
        span = half;
        half /= 2;
    }
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            out.push(g[r * n + c].round().clamp(-500.0, 8800.0) as i16);
        }
    }
    out
}

/// Raises the first occurrence of the maximum by one metre.
fn unique_max(mut v: Vec<i16>) -> Vec<i16> {
    let top = v.iter().copied().max().unwrap_or(0);
    if let Some(i) = v.iter().position(|&x| x == top) {
        v[i] = top.saturating_add(1);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dem::detect_peaks;

    #[test]
    fn plateau_is_constant() {
        let t = generate_synthetic(&SynthSpec::new(1, 1, Profile::Plateau, 1).samples(31)).unwrap();
        assert!(t[0].raster().data().iter().all(|&v| v == 1000));
    }

    #[test]
    fn deterministic() {
        for p in Profile::ALL {
            let s = SynthSpec::new(2, 2, p, 9).samples(61);
            assert_eq!(generate_synthetic(&s).unwrap(), generate_synthetic(&s).unwrap());
        }
    }

    #[test]
    fn seams_match() {
        let s = SynthSpec::new(2, 2, Profile::Fractal, 3).samples(61);
        let t = generate_synthetic(&s).unwrap();
        // sorted by key: (46,10) (46,11) (47,10) (47,11)
        let (sw, se, nw) = (t[0].raster(), t[1].raster(), t[2].raster());
        for k in 0..61 {
            assert_eq!(sw.get(k, 60), se.get(k, 0));
            assert_eq!(sw.get(0, k), nw.get(60, k));
        }
        assert_eq!(sw.point(0, 60), se.point(0, 0));
    }

    #[test]
    fn cone_summits_are_the_peaks() {
        let s = SynthSpec::new(1, 1, Profile::Cones, 21).samples(121).cones(5);
        let apices = cone_apices(&s);
        assert_eq!(apices.len(), 5);
        let t = &generate_synthetic(&s).unwrap()[0];
        let mut found: Vec<(usize, usize, i16)> = detect_peaks(t.raster(), t.key())
            .iter()
            .map(|p| {
                let (r, c) = t.raster().index_of(p.pos).unwrap();
                (r, c, p.elevation_m)
            })
            .collect();
        let mut want = apices;
        found.sort();
        want.sort();
        assert_eq!(found, want);
    }

    #[test]
    fn single_global_maximum() {
        for p in [Profile::Cones, Profile::Fractal, Profile::Terraces] {
            let s = SynthSpec::new(2, 2, p, 5).samples(61);
            let tiles = generate_synthetic(&s).unwrap();
            let top = tiles.iter().map(|t| t.raster().max()).max().unwrap();
            let mut at = std::collections::BTreeSet::new();
            for t in &tiles {
                for r in 0..61 {
                    for c in 0..61 {
                        if t.raster().get(r, c) == top {
                            at.insert(t.raster().lattice(r, c));
                        }
                    }
                }
            }
            assert_eq!(at.len(), 1, "{p}");
        }
    }
}
