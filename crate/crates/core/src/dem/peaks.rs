use super::{Peak, Raster, TileKey};

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Local maxima of the raster.
///
/// A sample qualifies when no existing 8-neighbour is strictly higher. A
/// connected region of equal elevation qualifies only as a whole and is
/// reported once, at its north-west-most sample (smallest row, then column).
/// Peaks come back in row-major order.
pub fn detect_peaks(raster: &Raster, home_tile: TileKey) -> Vec<Peak> {
    let (rows, cols) = (raster.rows(), raster.cols());
    let data = raster.data();
    let neighbors = |r: usize, c: usize| {
        NEIGHBORS_8.iter().filter_map(move |&(dr, dc)| {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            (nr >= 0 && nc >= 0 && (nr as usize) < rows && (nc as usize) < cols)
                .then(|| (nr as usize, nc as usize))
        })
    };
    let dominated = |r: usize, c: usize| {
        let v = data[r * cols + c];
        neighbors(r, c).any(|(nr, nc)| data[nr * cols + nc] > v)
    };

    let mut visited = vec![false; rows * cols];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let idx = r * cols + c;
            if visited[idx] || dominated(r, c) {
                continue;
            }
            // Flood the equal-elevation component; row-major scanning makes
            // (r, c) its north-west-most member.
            let v = data[idx];
            let mut qualifies = true;
            visited[idx] = true;
            stack.push((r, c));
            while let Some((cr, cc)) = stack.pop() {
                if qualifies && dominated(cr, cc) {
                    qualifies = false;
                }
                for (nr, nc) in neighbors(cr, cc) {
                    let n = nr * cols + nc;
                    if !visited[n] && data[n] == v {
                        visited[n] = true;
                        stack.push((nr, nc));
                    }
                }
            }
            if qualifies {
                let pos = raster.lattice(r, c);
                out.push(Peak {
                    location: pos.point(),
                    pos,
                    elevation_m: v,
                    home_tile,
                });
            }
        }
    }
    out
}
