//! Static tree over whole tiles, augmented with the highest elevation of
//! every subtree.

use crate::dem::TileKey;
use crate::geo::{EarthModel, GeoPoint};
use crate::quad::Quadrilateral;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileMatch {
    pub key: TileKey,
    /// Great-circle distance from the query point to the tile.
    pub min_distance_m: f64,
}

#[derive(Debug)]
enum Kind {
    Leaf(TileKey),
    Inner([u32; 2]),
}

#[derive(Debug)]
struct Node {
    quad: Quadrilateral,
    max_elevation: i16,
    kind: Kind,
}

#[derive(Debug)]
pub struct TileIndex {
    nodes: Vec<Node>,
    root: Option<u32>,
    model: EarthModel,
}

impl TileIndex {
    /// Builds the tree from `(tile, highest sample in the tile)` pairs.
    pub fn build(tiles: &[(TileKey, i16)], model: EarthModel) -> Self {
        let mut entries = tiles.to_vec();
        entries.sort_by_key(|(k, _)| *k);
        entries.dedup_by_key(|(k, _)| *k);
        let mut index = Self {
            nodes: Vec::with_capacity(entries.len() * 2),
            root: None,
            model,
        };
        if !entries.is_empty() {
            index.root = Some(index.build_rec(&mut entries));
        }
        index
    }

    fn build_rec(&mut self, entries: &mut [(TileKey, i16)]) -> u32 {
        if let [(key, elev)] = entries {
            self.nodes.push(Node {
                quad: key.quad(),
                max_elevation: *elev,
                kind: Kind::Leaf(*key),
            });
            return (self.nodes.len() - 1) as u32;
        }
        let lat_lo = entries.iter().map(|(k, _)| k.lat).min().unwrap();
        let lat_hi = entries.iter().map(|(k, _)| k.lat).max().unwrap();
        let lng_lo = entries.iter().map(|(k, _)| k.lng).min().unwrap();
        let lng_hi = entries.iter().map(|(k, _)| k.lng).max().unwrap();
        let mid_lat = (lat_lo + lat_hi) as f64 * 0.5;
        let lng_span = (lng_hi - lng_lo) as f64 * mid_lat.to_radians().cos();
        if (lat_hi - lat_lo) as f64 >= lng_span {
            entries.sort_by_key(|(k, _)| (k.lat, k.lng));
        } else {
            entries.sort_by_key(|(k, _)| (k.lng, k.lat));
        }
        let mid = entries.len() / 2;
        let (lo, hi) = entries.split_at_mut(mid);
        let a = self.build_rec(lo);
        let b = self.build_rec(hi);
        let (na, nb) = (&self.nodes[a as usize], &self.nodes[b as usize]);
        self.nodes.push(Node {
            quad: na.quad.union(&nb.quad),
            max_elevation: na.max_elevation.max(nb.max_elevation),
            kind: Kind::Inner([a, b]),
        });
        (self.nodes.len() - 1) as u32
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.kind, Kind::Leaf(_))).count()
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn max_elevation(&self) -> Option<i16> {
        self.root.map(|r| self.nodes[r as usize].max_elevation)
    }

    /// Closest tile holding a sample strictly higher than `elevation`, ties by
    /// tile key. `None` when no tile is higher.
    pub fn nearest_higher_tile(&self, h: GeoPoint, elevation: i16) -> Option<TileMatch> {
        let mut best: Option<TileMatch> = None;
        if let Some(root) = self.root {
            self.nearest_higher_rec(root, h, elevation, &mut best);
        }
        best
    }

    fn nearest_higher_rec(&self, id: u32, h: GeoPoint, elev: i16, best: &mut Option<TileMatch>) {
        let node = &self.nodes[id as usize];
        if node.max_elevation <= elev {
            return;
        }
        match node.kind {
            Kind::Leaf(key) => {
                let d = node.quad.min_distance(h, &self.model);
                let better = match best {
                    None => true,
                    Some(b) => d < b.min_distance_m || (d == b.min_distance_m && key < b.key),
                };
                if better {
                    *best = Some(TileMatch {
                        key,
                        min_distance_m: d,
                    });
                }
            }
            Kind::Inner(children) => {
                let mut order = children.map(|c| {
                    let n = &self.nodes[c as usize];
                    (n.quad.min_distance(h, &self.model), c)
                });
                if order[1].0 < order[0].0 {
                    order.swap(0, 1);
                }
                for (lb, c) in order {
                    if best.is_some_and(|b| lb > b.min_distance_m) {
                        continue;
                    }
                    self.nearest_higher_rec(c, h, elev, best);
                }
            }
        }
    }

    /// Every tile whose great-circle distance from `center` is at most `radius_m`,
    /// sorted by key.
    pub fn tiles_within(&self, center: GeoPoint, radius_m: f64) -> Vec<TileKey> {
        let mut out = Vec::new();
        let mut stack: Vec<u32> = self.root.into_iter().collect();
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if node.quad.min_distance(center, &self.model) > radius_m {
                continue;
            }
            match node.kind {
                Kind::Leaf(key) => out.push(key),
                Kind::Inner(children) => stack.extend(children),
            }
        }
        out.sort();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn key(lat: i32, lng: i32) -> TileKey {
        TileKey { lat, lng }
    }

    #[test]
    fn only_far_tile_is_higher() {
        let idx = TileIndex::build(&[(key(0, 0), 100), (key(0, 5), 500)], EarthModel::default());
        let m = idx.nearest_higher_tile(GeoPoint::new(0.5, 0.5), 200).unwrap();
        assert_eq!(m.key, key(0, 5));
    }

    #[test]
    fn own_tile_at_zero_distance() {
        let idx = TileIndex::build(&[(key(0, 0), 900), (key(0, 1), 500)], EarthModel::default());
        let m = idx.nearest_higher_tile(GeoPoint::new(0.5, 0.5), 200).unwrap();
        assert_eq!((m.key, m.min_distance_m), (key(0, 0), 0.0));
        assert!(idx.nearest_higher_tile(GeoPoint::new(0.5, 0.5), 900).is_none());
    }

    #[test]
    fn radius_limits() {
        let tiles: Vec<_> = (0..3)
            .flat_map(|a| (0..3).map(move |b| (key(a, b), 0)))
            .collect();
        let idx = TileIndex::build(&tiles, EarthModel::default());
        assert_eq!(idx.tiles_within(GeoPoint::new(1.5, 1.5), 0.0), vec![key(1, 1)]);
        // a shared corner is inside all four touching tiles
        assert_eq!(idx.tiles_within(GeoPoint::new(1.0, 1.0), 0.0).len(), 4);
        let all = idx.tiles_within(GeoPoint::new(1.5, 1.5), PI * 6_371_000.0);
        assert_eq!(all.len(), 9);
    }
}
