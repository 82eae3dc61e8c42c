//! Hierarchical navigable small world graph over Hamming distance.
//!
//! Nodes are dense `u32` indices into a [`CodeStore`]. Every ordering on
//! distances breaks ties by node index, so construction and search are
//! deterministic for a fixed insertion order and seed.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::binary::hamming_words;
use super::IndexError;

const MAX_LEVEL: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HnswParams {
    /// Neighbors per node on upper layers; layer 0 allows twice as many.
    pub m: usize,
    pub ef_construction: usize,
    /// Lower bound on the search beam; the effective beam is
    /// `max(pool, ef_search)`.
    pub ef_search: usize,
    pub rng_seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 200,
            ef_search: 200,
            rng_seed: 0x74_686d_6478,
        }
    }
}

impl HnswParams {
    pub fn validate(&self) -> Result<(), IndexError> {
        if self.m < 2 {
            return Err(IndexError::InvalidParams(format!(
                "m = {} is below 2",
                self.m
            )));
        }
        if self.ef_construction < self.m {
            return Err(IndexError::InvalidParams(format!(
                "ef_construction = {} is below m = {}",
                self.ef_construction, self.m
            )));
        }
        if self.ef_search == 0 {
            return Err(IndexError::InvalidParams(
                "ef_search must be positive".into(),
            ));
        }
        Ok(())
    }

    fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.m
        } else {
            self.m
        }
    }

    /// Level of node `node`: geometric with parameter `1 / ln m`, drawn from
    /// the node's own stream of a ChaCha generator keyed by the seed.
    pub fn level_for(&self, node: u32) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(node as u64);
        let u: f64 = rng.random();
        let ml = 1.0 / (self.m as f64).ln();
        ((-(1.0 - u).ln() * ml).floor() as usize).min(MAX_LEVEL)
    }
}

/// Packed codes of all nodes, `stride` words each.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeStore {
    pub(crate) stride: usize,
    pub(crate) words: Vec<u64>,
}

impl CodeStore {
    pub fn new(stride: usize) -> Self {
        Self {
            stride,
            words: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len().checked_div(self.stride).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn push(&mut self, code: &[u64]) {
        debug_assert_eq!(code.len(), self.stride);
        self.words.extend_from_slice(code);
    }

    #[inline]
    pub fn get(&self, node: u32) -> &[u64] {
        let at = node as usize * self.stride;
        &self.words[at..at + self.stride]
    }

    #[inline]
    fn distance(&self, query: &[u64], node: u32) -> u32 {
        hamming_words(query, self.get(node))
    }
}

/// (distance, node) pairs order lexicographically.
type Scored = (u32, u32);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Hnsw {
    pub(crate) params: HnswParams,
    /// `links[node][layer]`
    pub(crate) links: Vec<Vec<Vec<u32>>>,
    pub(crate) entry_point: Option<u32>,
    pub(crate) max_level: usize,
}

struct Visited(Vec<u64>);

impl Visited {
    fn new(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)])
    }

    /// Marks `node`; true if it was unmarked.
    fn insert(&mut self, node: u32) -> bool {
        let (w, b) = (node as usize / 64, node % 64);
        let fresh = self.0[w] >> b & 1 == 0;
        self.0[w] |= 1 << b;
        fresh
    }
}

/// Max-heap of the nearest nodes seen, holding at least `ef` of them when
/// available and never dropping a node tied with the farthest kept one.
struct Beam {
    ef: usize,
    heap: BinaryHeap<Scored>,
    /// number of kept nodes at each distance
    at_distance: Vec<usize>,
}

impl Beam {
    fn new(ef: usize, max_distance: usize) -> Self {
        Self {
            ef: ef.max(1),
            heap: BinaryHeap::new(),
            at_distance: vec![0; max_distance + 1],
        }
    }

    fn full(&self) -> bool {
        self.heap.len() >= self.ef
    }

    fn worst(&self) -> Option<u32> {
        self.heap.peek().map(|&(d, _)| d)
    }

    fn push(&mut self, item: Scored) {
        self.heap.push(item);
        self.at_distance[item.0 as usize] += 1;
        // Drop the farthest distance class while the rest still fill the beam.
        while let Some(worst) = self.worst() {
            let tied = self.at_distance[worst as usize];
            if self.heap.len() - tied < self.ef {
                break;
            }
            for _ in 0..tied {
                self.heap.pop();
            }
            self.at_distance[worst as usize] = 0;
        }
    }
}

impl Hnsw {
    pub fn new(params: HnswParams) -> Self {
        Self {
            params,
            ..Self::default()
        }
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn level_of(&self, node: u32) -> usize {
        self.links[node as usize].len() - 1
    }

    pub fn neighbors(&self, node: u32, layer: usize) -> &[u32] {
        &self.links[node as usize][layer]
    }

    /// Link the next node, whose code is already the last one in `codes`.
    pub fn insert(&mut self, codes: &CodeStore) {
        let node = self.links.len() as u32;
        debug_assert_eq!(codes.len(), self.links.len() + 1);
        let level = self.params.level_for(node);
        self.links.push(vec![Vec::new(); level + 1]);
        let Some(entry) = self.entry_point else {
            self.entry_point = Some(node);
            self.max_level = level;
            return;
        };
        let query = codes.get(node);
        let mut eps = vec![(codes.distance(query, entry), entry)];
        for layer in (level + 1..=self.max_level).rev() {
            eps = self.search_layer(codes, query, &eps, 1, layer);
        }
        for layer in (0..=level.min(self.max_level)).rev() {
            let found = self.search_layer(codes, query, &eps, self.params.ef_construction, layer);
            let selected = select_neighbors(codes, &found, self.params.max_degree(layer));
            self.links[node as usize][layer] = selected.iter().map(|&(_, n)| n).collect();
            for &(_, neighbor) in &selected {
                self.connect(codes, neighbor, node, layer);
            }
            eps = found;
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry_point = Some(node);
        }
    }

    /// Add `new` to the neighbor list of `node`, pruning it back to the
    /// layer's degree bound with the selection heuristic.
    fn connect(&mut self, codes: &CodeStore, node: u32, new: u32, layer: usize) {
        let cap = self.params.max_degree(layer);
        let list = &mut self.links[node as usize][layer];
        list.push(new);
        if list.len() <= cap {
            return;
        }
        let base = codes.get(node);
        let mut candidates: Vec<Scored> =
            list.iter().map(|&n| (codes.distance(base, n), n)).collect();
        candidates.sort_unstable();
        let kept = select_neighbors(codes, &candidates, cap);
        *list = kept.into_iter().map(|(_, n)| n).collect();
    }

    /// Beam search on one layer. The beam keeps the `ef` nearest nodes plus
    /// every node tied with the farthest of them, so the result does not
    /// depend on which of several equidistant codes happened to be seen
    /// first. Returned ascending by (distance, node).
    fn search_layer(
        &self,
        codes: &CodeStore,
        query: &[u64],
        eps: &[Scored],
        ef: usize,
        layer: usize,
    ) -> Vec<Scored> {
        let mut visited = Visited::new(self.links.len());
        let mut frontier: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();
        let mut best = Beam::new(ef, codes.stride * 64);
        for &ep in eps {
            if visited.insert(ep.1) {
                frontier.push(Reverse(ep));
                best.push(ep);
            }
        }
        while let Some(Reverse(current)) = frontier.pop() {
            if best.full() && best.worst().is_some_and(|worst| current.0 > worst) {
                break;
            }
            for &n in &self.links[current.1 as usize][layer] {
                if !visited.insert(n) {
                    continue;
                }
                let cand = (codes.distance(query, n), n);
                if !best.full() || best.worst().is_some_and(|worst| cand.0 <= worst) {
                    frontier.push(Reverse(cand));
                    best.push(cand);
                }
            }
        }
        best.heap.into_sorted_vec()
    }

    /// Approximate nearest nodes to `query` with beam width `ef`, ascending
    /// by (distance, node).
    pub fn search(&self, codes: &CodeStore, query: &[u64], ef: usize) -> Vec<Scored> {
        let Some(entry) = self.entry_point else {
            return Vec::new();
        };
        let mut eps = vec![(codes.distance(query, entry), entry)];
        for layer in (1..=self.max_level).rev() {
            eps = self.search_layer(codes, query, &eps, 1, layer);
        }
        self.search_layer(codes, query, &eps, ef.max(1), 0)
    }
}

/// Neighbor selection heuristic: walk candidates nearest first and keep one
/// only if it is closer to the base than to every neighbor kept so far;
/// leftover slots are then filled with the nearest pruned candidates.
fn select_neighbors(codes: &CodeStore, candidates: &[Scored], m: usize) -> Vec<Scored> {
    let mut kept: Vec<Scored> = Vec::with_capacity(m);
    let mut pruned: Vec<Scored> = Vec::new();
    for &(d, c) in candidates {
        if kept.len() >= m {
            break;
        }
        let code = codes.get(c);
        if kept
            .iter()
            .all(|&(_, r)| d < hamming_words(code, codes.get(r)))
        {
            kept.push((d, c));
        } else {
            pruned.push((d, c));
        }
    }
    for p in pruned {
        if kept.len() >= m {
            break;
        }
        kept.push(p);
    }
    kept.sort_unstable();
    kept
}
