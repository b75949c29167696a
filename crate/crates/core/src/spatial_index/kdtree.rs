//! Dynamic k-D tree over lat-lng quadrilaterals.
//!
//! Points live in leaves of capacity `C`. An overfull leaf is center-split
//! along the longer side of its quadrilateral. The top `k` levels are built
//! up front as a quadtree and never collapse; deeper subtrees collapse back
//! into a leaf once empty and their nodes go to a free list.

use std::cmp::Ordering;

use crate::geo::GeoPoint;
use crate::metric::Metric;
use crate::quad::Quadrilateral;

use super::IndexError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub leaf_capacity: usize,
    pub prebuilt_levels: u32,
    /// Quadrilaterals narrower than this (degrees) in both directions are not split.
    pub min_split_extent_deg: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            leaf_capacity: 32,
            prebuilt_levels: 4,
            min_split_extent_deg: 1e-7,
        }
    }
}

/// A query answer: the point and its distance under the query metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub point: GeoPoint,
    pub distance: f64,
}

impl Neighbor {
    #[inline]
    fn better_than(&self, other: &Neighbor) -> bool {
        match self.distance.total_cmp(&other.distance) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.point.cmp_lat_lng(&other.point).is_lt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Lat,
    Lng,
}

#[derive(Debug)]
enum Kind {
    Leaf(Vec<GeoPoint>),
    Inner {
        axis: Axis,
        split: f64,
        children: [u32; 2],
    },
}

#[derive(Debug)]
struct Node {
    quad: Quadrilateral,
    count: u32,
    pinned: bool,
    kind: Kind,
}

const NIL: u32 = u32::MAX;

#[derive(Debug)]
pub struct SphereKdTree {
    nodes: Vec<Node>,
    free: Vec<u32>,
    spare_leaves: Vec<Vec<GeoPoint>>,
    root: u32,
    bounds: Quadrilateral,
    config: TreeConfig,
    len: usize,
}

impl SphereKdTree {
    /// Tree over `bounds` with the first `config.prebuilt_levels` quadtree
    /// levels already split, i.e. `4^k` empty leaf regions.
    pub fn prebuild(bounds: Quadrilateral, config: TreeConfig) -> Self {
        let mut tree = Self {
            nodes: Vec::with_capacity(1 << (2 * config.prebuilt_levels.min(8) + 2)),
            free: Vec::new(),
            spare_leaves: Vec::new(),
            root: NIL,
            bounds,
            config,
            len: 0,
        };
        tree.root = tree.alloc_leaf(bounds);
        tree.prebuild_node(tree.root, config.prebuilt_levels);
        tree
    }

    pub fn new(bounds: Quadrilateral) -> Self {
        Self::prebuild(bounds, TreeConfig::default())
    }

    fn prebuild_node(&mut self, id: u32, levels: u32) {
        if levels == 0 {
            return;
        }
        let q = self.nodes[id as usize].quad;
        let mid_lat = (q.lat_min + q.lat_max) * 0.5;
        let halves = self.make_inner(id, Axis::Lat, mid_lat);
        for h in halves {
            let hq = self.nodes[h as usize].quad;
            let quarters = self.make_inner(h, Axis::Lng, (hq.lng_min + hq.lng_max) * 0.5);
            for c in quarters {
                self.prebuild_node(c, levels - 1);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bounds(&self) -> Quadrilateral {
        self.bounds
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    /// Nodes currently allocated, live or on the free list.
    pub fn allocated_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn live_nodes(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    fn alloc_leaf(&mut self, quad: Quadrilateral) -> u32 {
        let points = self.spare_leaves.pop().unwrap_or_default();
        let node = Node {
            quad,
            count: 0,
            pinned: false,
            kind: Kind::Leaf(points),
        };
        if let Some(id) = self.free.pop() {
            self.nodes[id as usize] = node;
            id
        } else {
            self.nodes.push(node);
            (self.nodes.len() - 1) as u32
        }
    }

    fn release(&mut self, id: u32) {
        let node = &mut self.nodes[id as usize];
        match std::mem::replace(&mut node.kind, Kind::Leaf(Vec::new())) {
            Kind::Leaf(mut v) => {
                v.clear();
                self.spare_leaves.push(v);
            }
            Kind::Inner { children, .. } => {
                self.release(children[0]);
                self.release(children[1]);
            }
        }
        self.free.push(id);
    }

    // Turns the leaf `id` into an inner node with two empty leaf children.
    fn make_inner(&mut self, id: u32, axis: Axis, split: f64) -> [u32; 2] {
        let q = self.nodes[id as usize].quad;
        let (lo, hi) = match axis {
            Axis::Lat => (
                Quadrilateral { lat_max: split, ..q },
                Quadrilateral { lat_min: split, ..q },
            ),
            Axis::Lng => (
                Quadrilateral { lng_max: split, ..q },
                Quadrilateral { lng_min: split, ..q },
            ),
        };
        let a = self.alloc_leaf(lo);
        let b = self.alloc_leaf(hi);
        let node = &mut self.nodes[id as usize];
        node.pinned = true;
        if let Kind::Leaf(v) = std::mem::replace(
            &mut node.kind,
            Kind::Inner {
                axis,
                split,
                children: [a, b],
            },
        ) {
            debug_assert!(v.is_empty());
            self.spare_leaves.push(v);
        }
        [a, b]
    }

    #[inline]
    fn child_for(axis: Axis, split: f64, p: GeoPoint) -> usize {
        let c = match axis {
            Axis::Lat => p.lat(),
            Axis::Lng => p.lng(),
        };
        usize::from(c >= split)
    }

    pub fn insert(&mut self, p: GeoPoint) -> Result<(), IndexError> {
        if !self.bounds.contains(p) {
            return Err(IndexError::OutOfBounds {
                lat: p.lat(),
                lng: p.lng(),
            });
        }
        let mut id = self.root;
        loop {
            let node = &mut self.nodes[id as usize];
            node.count += 1;
            match &mut node.kind {
                Kind::Inner { axis, split, children } => {
                    id = children[Self::child_for(*axis, *split, p)];
                }
                Kind::Leaf(points) => {
                    points.push(p);
                    break;
                }
            }
        }
        self.len += 1;
        self.split_if_needed(id);
        Ok(())
    }

    fn split_axis(&self, q: &Quadrilateral) -> Option<Axis> {
        let min = self.config.min_split_extent_deg;
        let lat_ext = q.lat_max - q.lat_min;
        let lng_ext = q.lng_max - q.lng_min;
        let lng_len = lng_ext * ((q.lat_min + q.lat_max) * 0.5).to_radians().cos().abs();
        match (lat_ext >= min, lng_ext >= min) {
            (false, false) => None,
            (true, false) => Some(Axis::Lat),
            (false, true) => Some(Axis::Lng),
            (true, true) => Some(if lat_ext >= lng_len { Axis::Lat } else { Axis::Lng }),
        }
    }

    fn split_if_needed(&mut self, id: u32) {
        let mut stack = vec![id];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            let over = matches!(&node.kind, Kind::Leaf(v) if v.len() > self.config.leaf_capacity);
            if !over {
                continue;
            }
            let q = node.quad;
            let Some(axis) = self.split_axis(&q) else {
                continue;
            };
            let split = match axis {
                Axis::Lat => (q.lat_min + q.lat_max) * 0.5,
                Axis::Lng => (q.lng_min + q.lng_max) * 0.5,
            };
            let points = match &mut self.nodes[id as usize].kind {
                Kind::Leaf(v) => std::mem::take(v),
                Kind::Inner { .. } => unreachable!(),
            };
            let children = self.make_inner(id, axis, split);
            self.nodes[id as usize].pinned = false;
            for &p in &points {
                let c = children[Self::child_for(axis, split, p)];
                let child = &mut self.nodes[c as usize];
                child.count += 1;
                if let Kind::Leaf(v) = &mut child.kind {
                    v.push(p);
                }
            }
            let mut points = points;
            points.clear();
            self.spare_leaves.push(points);
            stack.extend(children);
        }
    }

    pub fn remove(&mut self, p: GeoPoint) -> Result<(), IndexError> {
        if !self.bounds.contains(p) || !self.remove_rec(self.root, p) {
            return Err(IndexError::NotFound {
                lat: p.lat(),
                lng: p.lng(),
            });
        }
        self.len -= 1;
        Ok(())
    }

    fn remove_rec(&mut self, id: u32, p: GeoPoint) -> bool {
        let found = match &mut self.nodes[id as usize].kind {
            Kind::Leaf(points) => match points.iter().position(|q| *q == p) {
                Some(i) => {
                    points.swap_remove(i);
                    true
                }
                None => false,
            },
            Kind::Inner { axis, split, children } => {
                let c = children[Self::child_for(*axis, *split, p)];
                self.remove_rec(c, p)
            }
        };
        if !found {
            return false;
        }
        let node = &mut self.nodes[id as usize];
        node.count -= 1;
        if node.count == 0 && !node.pinned {
            if let Kind::Inner { children, .. } = node.kind {
                node.kind = Kind::Leaf(self.spare_leaves.pop().unwrap_or_default());
                self.release(children[0]);
                self.release(children[1]);
            }
        }
        true
    }

    /// Active point minimising `metric.distance(p, ·)`, ties by (lat, lng).
    pub fn nearest_neighbor(&self, p: GeoPoint, metric: &Metric) -> Result<Neighbor, IndexError> {
        if self.len == 0 {
            return Err(IndexError::Empty);
        }
        let mut best = Neighbor {
            point: p,
            distance: f64::INFINITY,
        };
        self.nearest_rec(self.root, p, metric, &mut best);
        debug_assert!(best.distance.is_finite());
        Ok(best)
    }

    fn nearest_rec(&self, id: u32, p: GeoPoint, metric: &Metric, best: &mut Neighbor) {
        match &self.nodes[id as usize].kind {
            Kind::Leaf(points) => {
                for &q in points {
                    let cand = Neighbor {
                        point: q,
                        distance: metric.distance(p, q),
                    };
                    if cand.better_than(best) {
                        *best = cand;
                    }
                }
            }
            Kind::Inner { children, .. } => {
                let mut order = [(f64::INFINITY, NIL); 2];
                for (slot, &c) in order.iter_mut().zip(children) {
                    let child = &self.nodes[c as usize];
                    if child.count > 0 {
                        *slot = (metric.lower_bound(&child.quad, p), c);
                    }
                }
                if order[1].0 < order[0].0 {
                    order.swap(0, 1);
                }
                for (lb, c) in order {
                    if c == NIL || lb > best.distance {
                        continue;
                    }
                    self.nearest_rec(c, p, metric, best);
                }
            }
        }
    }

    /// Number of leaf regions currently in the tree.
    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.walk(|node, _| {
            if matches!(node.kind, Kind::Leaf(_)) {
                n += 1;
            }
        });
        n
    }

    fn walk(&self, mut f: impl FnMut(&Node, usize)) {
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let node = &self.nodes[id as usize];
            f(node, depth);
            if let Kind::Inner { children, .. } = &node.kind {
                stack.push((children[0], depth + 1));
                stack.push((children[1], depth + 1));
            }
        }
    }

    /// All active points, in no particular order.
    pub fn points(&self) -> Vec<GeoPoint> {
        let mut out = Vec::with_capacity(self.len);
        self.walk(|node, _| {
            if let Kind::Leaf(v) = &node.kind {
                out.extend_from_slice(v);
            }
        });
        out
    }

    /// Checks the structural invariants, returning a description of the first
    /// violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        self.check_node(self.root, &[]).map(|n| {
            debug_assert_eq!(n, self.len);
        })?;
        let counted = self.nodes[self.root as usize].count as usize;
        if counted != self.len {
            return Err(format!("root count {counted} != len {}", self.len));
        }
        Ok(())
    }

    fn check_node(&self, id: u32, ancestors: &[Quadrilateral]) -> Result<usize, String> {
        let node = &self.nodes[id as usize];
        let mut chain = ancestors.to_vec();
        chain.push(node.quad);
        let n = match &node.kind {
            Kind::Leaf(points) => {
                if points.len() > self.config.leaf_capacity && self.split_axis(&node.quad).is_some() {
                    return Err(format!("leaf {id} holds {} points", points.len()));
                }
                for p in points {
                    if let Some(q) = chain.iter().find(|q| !q.contains(*p)) {
                        return Err(format!("point {p:?} outside ancestor {q:?}"));
                    }
                }
                points.len()
            }
            Kind::Inner { axis, split, children } => {
                let a = &self.nodes[children[0] as usize].quad;
                let b = &self.nodes[children[1] as usize].quad;
                let q = &node.quad;
                let ok = match axis {
                    Axis::Lat => {
                        a.lat_min == q.lat_min
                            && a.lat_max == *split
                            && b.lat_min == *split
                            && b.lat_max == q.lat_max
                            && a.lng_min == q.lng_min
                            && a.lng_max == q.lng_max
                            && b.lng_min == q.lng_min
                            && b.lng_max == q.lng_max
                    }
                    Axis::Lng => {
                        a.lng_min == q.lng_min
                            && a.lng_max == *split
                            && b.lng_min == *split
                            && b.lng_max == q.lng_max
                            && a.lat_min == q.lat_min
                            && a.lat_max == q.lat_max
                            && b.lat_min == q.lat_min
                            && b.lat_max == q.lat_max
                    }
                };
                if !ok {
                    return Err(format!("children of node {id} do not partition it"));
                }
                self.check_node(children[0], &chain)? + self.check_node(children[1], &chain)?
            }
        };
        if n != node.count as usize {
            return Err(format!("node {id} count {} but holds {n}", node.count));
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::EarthModel;

    fn unit_bounds() -> Quadrilateral {
        Quadrilateral::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    fn gc() -> Metric {
        Metric::great_circle(EarthModel::default())
    }

    #[test]
    fn prebuilt_levels() {
        let cfg = |k| TreeConfig {
            prebuilt_levels: k,
            ..TreeConfig::default()
        };
        assert_eq!(SphereKdTree::prebuild(unit_bounds(), cfg(0)).leaf_count(), 1);
        let t = SphereKdTree::prebuild(unit_bounds(), cfg(1));
        assert_eq!(t.leaf_count(), 4);
        t.check_invariants().unwrap();
        let t = SphereKdTree::prebuild(unit_bounds(), cfg(4));
        assert_eq!(t.leaf_count(), 256);
        t.check_invariants().unwrap();
    }

    #[test]
    fn single_point() {
        let mut t = SphereKdTree::new(unit_bounds());
        let p = GeoPoint::new(0.25, 0.75);
        t.insert(p).unwrap();
        let n = t.nearest_neighbor(GeoPoint::new(0.9, 0.1), &gc()).unwrap();
        assert_eq!(n.point, p);
    }

    #[test]
    fn out_of_bounds_and_missing() {
        let mut t = SphereKdTree::new(unit_bounds());
        assert!(matches!(
            t.insert(GeoPoint::new(2.0, 0.5)),
            Err(IndexError::OutOfBounds { .. })
        ));
        assert!(matches!(
            t.remove(GeoPoint::new(0.5, 0.5)),
            Err(IndexError::NotFound { .. })
        ));
        assert!(matches!(
            t.nearest_neighbor(GeoPoint::new(0.5, 0.5), &gc()),
            Err(IndexError::Empty)
        ));
    }

    #[test]
    fn capacity_split() {
        let cfg = TreeConfig {
            leaf_capacity: 4,
            prebuilt_levels: 0,
            ..TreeConfig::default()
        };
        let mut t = SphereKdTree::prebuild(unit_bounds(), cfg);
        let pts: Vec<_> = (0..5).map(|i| GeoPoint::new(0.1 + 0.2 * i as f64, 0.5)).collect();
        for &p in &pts {
            t.insert(p).unwrap();
        }
        assert_eq!(t.leaf_count(), 2);
        t.check_invariants().unwrap();
        for &p in &pts {
            assert_eq!(t.nearest_neighbor(p, &gc()).unwrap().point, p);
        }
    }

    #[test]
    fn insert_remove_roundtrip() {
        let mut t = SphereKdTree::new(unit_bounds());
        let p = GeoPoint::new(0.5, 0.5);
        t.insert(p).unwrap();
        t.remove(p).unwrap();
        assert!(t.is_empty());
        assert!(matches!(t.nearest_neighbor(p, &gc()), Err(IndexError::Empty)));

        let a = GeoPoint::new(0.1, 0.1);
        let b = GeoPoint::new(0.9, 0.9);
        t.insert(a).unwrap();
        t.insert(b).unwrap();
        t.remove(a).unwrap();
        for x in [a, b, GeoPoint::new(0.0, 0.0), GeoPoint::new(0.5, 0.4)] {
            assert_eq!(t.nearest_neighbor(x, &gc()).unwrap().point, b);
        }
    }

    #[test]
    fn tie_break_prefers_smaller_lat_lng() {
        let mut t = SphereKdTree::new(unit_bounds());
        let south = GeoPoint::new(0.25, 0.5);
        let north = GeoPoint::new(0.75, 0.5);
        t.insert(north).unwrap();
        t.insert(south).unwrap();
        let n = t.nearest_neighbor(GeoPoint::new(0.5, 0.5), &Metric::planar(EarthModel::default()));
        assert_eq!(n.unwrap().point, south);
    }

    #[test]
    fn duplicate_points_do_not_split_forever() {
        let cfg = TreeConfig {
            leaf_capacity: 2,
            prebuilt_levels: 1,
            ..TreeConfig::default()
        };
        let mut t = SphereKdTree::prebuild(unit_bounds(), cfg);
        let p = GeoPoint::new(0.3, 0.3);
        for _ in 0..10 {
            t.insert(p).unwrap();
        }
        t.check_invariants().unwrap();
        for _ in 0..10 {
            t.remove(p).unwrap();
        }
        assert!(t.is_empty());
        assert_eq!(t.leaf_count(), 4);
    }

    #[test]
    fn emptied_subtrees_are_recycled() {
        let cfg = TreeConfig {
            leaf_capacity: 4,
            prebuilt_levels: 1,
            ..TreeConfig::default()
        };
        let mut t = SphereKdTree::prebuild(unit_bounds(), cfg);
        let pts: Vec<_> = (0..200)
            .map(|i| GeoPoint::new((i % 20) as f64 / 20.0, (i / 20) as f64 / 10.0))
            .collect();
        let mut first_peak = None;
        for _ in 0..3 {
            for &p in &pts {
                t.insert(p).unwrap();
            }
            let peak = *first_peak.get_or_insert(t.allocated_nodes());
            assert_eq!(t.allocated_nodes(), peak, "allocation grew on reuse");
            for &p in &pts {
                t.remove(p).unwrap();
            }
            t.check_invariants().unwrap();
            assert_eq!(t.leaf_count(), 4);
            assert_eq!(t.live_nodes(), 7);
        }
    }
}
