use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use crate::dem::{Peak, TileKey};

/// A peak handed to a tile for finalization, with the bound that sent it there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub peak: Peak,
    pub bound_m: f64,
}

/// Tile key → peaks whose isolation limit point may lie in that tile.
///
/// Appends may come from any number of threads. [`freeze`](Self::freeze)
/// turns it into the read-only form used by the finalization pass.
#[derive(Debug, Default)]
pub struct TilePeaksMap {
    slots: HashMap<TileKey, Mutex<Vec<Assignment>>>,
}

impl TilePeaksMap {
    pub fn new(keys: impl IntoIterator<Item = TileKey>) -> Self {
        Self {
            slots: keys.into_iter().map(|k| (k, Mutex::new(Vec::new()))).collect(),
        }
    }

    /// Returns `false` for a tile outside the map.
    pub fn insert(&self, key: TileKey, a: Assignment) -> bool {
        match self.slots.get(&key) {
            Some(slot) => {
                slot.lock().expect("tile slot poisoned").push(a);
                true
            }
            None => false,
        }
    }

    /// Sorts every list by peak position and keeps one entry per peak, with
    /// its smallest bound. The result does not depend on insertion order.
    pub fn freeze(self) -> FrozenTilePeaksMap {
        let map = self
            .slots
            .into_iter()
            .map(|(k, slot)| {
                let mut v = slot.into_inner().expect("tile slot poisoned");
                v.sort_by(|a, b| a.peak.pos.cmp(&b.peak.pos).then(a.bound_m.total_cmp(&b.bound_m)));
                v.dedup_by_key(|a| a.peak.pos);
                (k, v)
            })
            .collect();
        FrozenTilePeaksMap { map }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrozenTilePeaksMap {
    map: BTreeMap<TileKey, Vec<Assignment>>,
}

impl FrozenTilePeaksMap {
    pub fn get(&self, key: TileKey) -> &[Assignment] {
        self.map.get(&key).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (TileKey, &[Assignment])> {
        self.map.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn assignments(&self) -> usize {
        self.map.values().map(Vec::len).sum()
    }

    /// Whether `peak` was handed to tile `key`.
    pub fn contains(&self, key: TileKey, peak: &Peak) -> bool {
        self.get(key)
            .binary_search_by(|a| a.peak.pos.cmp(&peak.pos))
            .is_ok()
    }
}
