//! Exact k-nearest-neighbor search under the haversine metric.
//!
//! Points are embedded as unit vectors and stored in a bucketed 3-d tree.
//! Chord length between unit vectors is monotone in great-circle distance,
//! so the Euclidean distance from a query to a node's bounding box gives a
//! lower bound on the arc distance of anything inside it. Candidates are
//! always ranked by their actual haversine distance, which makes the search
//! exact rather than approximate.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};

/// Mean Earth radius (IUGG), kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

const LEAF_SIZE: usize = 16;

/// A validated latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    /// Latitude must lie in [-90, 90]. Longitude may be any finite value and
    /// is normalized into (-180, 180].
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::InvalidCoordinate(format!(
                "non-finite coordinate ({lat}, {lon})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidCoordinate(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        Ok(GeoPoint {
            lat,
            lon: normalize_lon(lon),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    fn unit_vector(&self) -> [f64; 3] {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }
}

fn normalize_lon(lon: f64) -> f64 {
    if lon > -180.0 && lon <= 180.0 {
        return lon;
    }
    let mut x = lon.rem_euclid(360.0);
    if x > 180.0 {
        x -= 360.0;
    }
    if x == -180.0 {
        x = 180.0;
    }
    x
}

/// Great-circle distance in kilometers.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let s = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * s.sqrt().min(1.0).asin()
}

/// Arc distance corresponding to a chord of length `chord` on the unit sphere.
fn chord_to_km(chord: f64) -> f64 {
    2.0 * EARTH_RADIUS_KM * (chord / 2.0).min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<'a> {
    /// Position of the neighbor in the index's input order.
    pub slot: usize,
    pub voter_id: &'a str,
    pub distance_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList<'a> {
    pub ego_id: &'a str,
    pub neighbors: Vec<Neighbor<'a>>,
    pub k_requested: usize,
    pub k_returned: usize,
}

#[derive(Debug, Clone)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

/// Immutable per-state index over voter coordinates.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    state_key: String,
    ids: Vec<String>,
    points: Vec<GeoPoint>,
    /// Rank of each slot's id in ascending id order; used for tie-breaking.
    id_rank: Vec<u32>,
    slot_of: HashMap<String, usize>,
    unit: Vec<[f64; 3]>,
    /// Slots permuted into tree order.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    distance: f64,
    rank: u32,
    slot: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.rank.cmp(&other.rank))
    }
}

impl SpatialIndex {
    pub fn build(points: Vec<(String, GeoPoint)>, state_key: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData(
                "spatial index needs at least one point".into(),
            ));
        }
        let mut slot_of = HashMap::with_capacity(points.len());
        let (ids, points): (Vec<String>, Vec<GeoPoint>) = points.into_iter().unzip();
        for (slot, id) in ids.iter().enumerate() {
            if slot_of.insert(id.clone(), slot).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        let mut by_id: Vec<usize> = (0..ids.len()).collect();
        by_id.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        let mut id_rank = vec![0u32; ids.len()];
        for (rank, &slot) in by_id.iter().enumerate() {
            id_rank[slot] = rank as u32;
        }
        let unit: Vec<[f64; 3]> = points.iter().map(GeoPoint::unit_vector).collect();

        let mut index = SpatialIndex {
            state_key: state_key.into(),
            ids,
            points,
            id_rank,
            slot_of,
            unit,
            order: (0..by_id.len()).collect(),
            nodes: Vec::new(),
        };
        let n = index.order.len();
        index.build_node(0, n);
        Ok(index)
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let (lo, hi) = self.bounds(start, end);
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            kind: NodeKind::Leaf { start, end },
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        let unit = &self.unit;
        // Stable tie-break on slot keeps the build deterministic.
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            unit[a][axis].total_cmp(&unit[b][axis]).then(a.cmp(&b))
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id].kind = NodeKind::Split { left, right };
        id
    }

    fn bounds(&self, start: usize, end: usize) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &slot in &self.order[start..end] {
            for d in 0..3 {
                lo[d] = lo[d].min(self.unit[slot][d]);
                hi[d] = hi[d].max(self.unit[slot][d]);
            }
        }
        (lo, hi)
    }

    pub fn state_key(&self) -> &str {
        &self.state_key
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn slot(&self, voter_id: &str) -> Option<usize> {
        self.slot_of.get(voter_id).copied()
    }

    pub fn voter_id(&self, slot: usize) -> &str {
        &self.ids[slot]
    }

    pub fn point(&self, slot: usize) -> GeoPoint {
        self.points[slot]
    }

    /// The `k` nearest other points to `ego_id`, ascending by distance with
    /// ties broken by ascending voter id.
    pub fn knn(&self, ego_id: &str, k: usize) -> Result<NeighborList<'_>> {
        let ego = self
            .slot(ego_id)
            .ok_or_else(|| Error::NotFound(format!("voter `{ego_id}` in state {}", self.state_key)))?;
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(self.knn_slot(ego, k))
    }

    pub fn knn_slot(&self, ego: usize, k: usize) -> NeighborList<'_> {
        let want = k.min(self.len() - 1);
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(want + 1);
        if want > 0 {
            self.search(0, ego, want, &mut heap);
        }
        let neighbors: Vec<Neighbor<'_>> = heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| Neighbor {
                slot: c.slot,
                voter_id: &self.ids[c.slot],
                distance_km: c.distance,
            })
            .collect();
        NeighborList {
            ego_id: &self.ids[ego],
            k_requested: k,
            k_returned: neighbors.len(),
            neighbors,
        }
    }

    fn lower_bound_km(&self, node: &Node, q: &[f64; 3]) -> f64 {
        let mut sq = 0.0;
        for d in 0..3 {
            let gap = if q[d] < node.lo[d] {
                node.lo[d] - q[d]
            } else if q[d] > node.hi[d] {
                q[d] - node.hi[d]
            } else {
                0.0
            };
            sq += gap * gap;
        }
        chord_to_km(sq.sqrt())
    }

    fn search(&self, node_id: usize, ego: usize, k: usize, heap: &mut BinaryHeap<Candidate>) {
        let node = &self.nodes[node_id];
        let q = &self.unit[ego];
        if heap.len() == k {
            let worst = heap.peek().map_or(f64::INFINITY, |c| c.distance);
            // Slack absorbs rounding differences between the chord bound and
            // the haversine evaluation, so equal-distance ties are never pruned.
            let bound = self.lower_bound_km(node, q) * (1.0 - 1e-9) - 1e-9;
            if bound > worst {
                return;
            }
        }
        match node.kind {
            NodeKind::Leaf { start, end } => {
                let origin = self.points[ego];
                for &slot in &self.order[start..end] {
                    if slot == ego {
                        continue;
                    }
                    let cand = Candidate {
                        distance: haversine_km(origin, self.points[slot]),
                        rank: self.id_rank[slot],
                        slot,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if heap.peek().is_some_and(|worst| cand < *worst) {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            NodeKind::Split { left, right } => {
                let dl = self.lower_bound_km(&self.nodes[left], q);
                let dr = self.lower_bound_km(&self.nodes[right], q);
                let (first, second) = if dl <= dr { (left, right) } else { (right, left) };
                self.search(first, ego, k, heap);
                self.search(second, ego, k, heap);
            }
        }
    }
}

/// One index per state over the given rows. Rows are grouped by state key;
/// within a state the input order is kept.
pub fn build_state_indexes<I>(rows: I) -> Result<Vec<SpatialIndex>>
where
    I: IntoIterator<Item = (String, String, GeoPoint)>,
{
    let mut by_state: std::collections::BTreeMap<String, Vec<(String, GeoPoint)>> =
        std::collections::BTreeMap::new();
    for (state, id, point) in rows {
        by_state.entry(state).or_default().push((id, point));
    }
    by_state
        .into_iter()
        .map(|(state, pts)| SpatialIndex::build(pts, state))
        .collect()
}
