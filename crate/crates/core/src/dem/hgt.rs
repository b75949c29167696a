//! SRTM `.hgt` files: N×N big-endian `i16`, row-major from the north-west
//! corner, named after the south-west corner (`N46E010.hgt`).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{DemError, Tile, TileKey, VOID};

/// Samples per side of 3″ and 1″ tiles.
pub const SUPPORTED_SAMPLES: [usize; 2] = [1201, 3601];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub voids_filled: usize,
}

pub fn file_name(key: TileKey) -> String {
    format!("{key}.hgt")
}

pub fn parse_file_name(name: &str) -> Result<TileKey, DemError> {
    let bad = || DemError::BadName(name.to_string());
    let stem = name
        .strip_suffix(".hgt")
        .or_else(|| name.strip_suffix(".HGT"))
        .ok_or_else(bad)?;
    let b = stem.as_bytes();
    if b.len() != 7 || !b[1..3].iter().chain(&b[4..7]).all(u8::is_ascii_digit) {
        return Err(bad());
    }
    let lat: i32 = stem[1..3].parse().map_err(|_| bad())?;
    let lng: i32 = stem[4..7].parse().map_err(|_| bad())?;
    let lat = match b[0].to_ascii_uppercase() {
        b'N' => lat,
        b'S' => -lat,
        _ => return Err(bad()),
    };
    let lng = match b[3].to_ascii_uppercase() {
        b'E' => lng,
        b'W' => -lng,
        _ => return Err(bad()),
    };
    if !(-90..90).contains(&lat) || !(-180..180).contains(&lng) {
        return Err(bad());
    }
    Ok(TileKey { lat, lng })
}

/// Reads a tile, taking its position from the file name.
pub fn load(path: &Path) -> Result<(Tile, LoadReport), DemError> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| DemError::BadName(path.display().to_string()))?;
    let key = parse_file_name(name)?;
    load_as(path, key)
}

pub fn load_as(path: &Path, key: TileKey) -> Result<(Tile, LoadReport), DemError> {
    let bytes = fs::read(path)?;
    let samples = SUPPORTED_SAMPLES
        .into_iter()
        .find(|n| 2 * n * n == bytes.len())
        .ok_or(DemError::BadSize {
            path: path.display().to_string(),
            size: bytes.len() as u64,
        })?;
    let mut data: Vec<i16> = bytes
        .chunks_exact(2)
        .map(|b| i16::from_be_bytes([b[0], b[1]]))
        .collect();
    let voids_filled = fill_voids(&mut data, samples);
    Ok((Tile::new(key, samples, data)?, LoadReport { voids_filled }))
}

/// Writes `tile` into `dir` under its canonical name.
pub fn save(tile: &Tile, dir: &Path) -> Result<PathBuf, DemError> {
    let path = dir.join(file_name(tile.key()));
    let mut buf = Vec::with_capacity(tile.raster().len() * 2);
    for v in tile.raster().data() {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    let mut f = fs::File::create(&path)?;
    f.write_all(&buf)?;
    Ok(path)
}

/// Replaces void samples by the lowest valid 8-neighbour, growing inwards
/// pass by pass through void clusters. A grid with no valid sample becomes
/// flat at 0. Returns the number of samples filled.
pub fn fill_voids(data: &mut [i16], side: usize) -> usize {
    let total = data.iter().filter(|&&v| v == VOID).count();
    if total == 0 {
        return 0;
    }
    if total == data.len() {
        data.fill(0);
        return total;
    }
    let mut pending: Vec<usize> = (0..data.len()).filter(|&i| data[i] == VOID).collect();
    while !pending.is_empty() {
        let fills: Vec<(usize, Option<i16>)> = pending
            .iter()
            .map(|&i| {
                let (r, c) = ((i / side) as isize, (i % side) as isize);
                let mut low: Option<i16> = None;
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (nr, nc) = (r + dr, c + dc);
                        if (dr, dc) == (0, 0) || nr < 0 || nc < 0 {
                            continue;
                        }
                        let (nr, nc) = (nr as usize, nc as usize);
                        if nr >= side || nc >= side {
                            continue;
                        }
                        let v = data[nr * side + nc];
                        if v != VOID {
                            low = Some(low.map_or(v, |l| l.min(v)));
                        }
                    }
                }
                (i, low)
            })
            .collect();
        pending.clear();
        for (i, v) in fills {
            match v {
                Some(v) => data[i] = v,
                None => pending.push(i),
            }
        }
    }
    total
}
