//! Matching graphs built from the hypergraph and exact minimum-weight
//! matching of defects (shortest paths, then blossom on the defect graph).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use crate::blossom::max_weight_matching;
use crate::dem::{weight, xor_probability, DecodingHypergraph, EdgeClass};
use crate::detectors::DetectorClass;
use crate::error::{Error, Result};

/// Distances are scaled to integers before matching.
const SCALE: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphEdge {
    pub id: usize,
    pub u: usize,
    pub v: usize,
    pub probability: f64,
    pub weight: f64,
    /// Hyperedge ids merged into this edge; the first is the representative.
    pub members: Vec<usize>,
    pub logical_flip: bool,
}

/// One candidate edge before parallel merging.
#[derive(Clone, Copy, Debug)]
pub struct RawEdge {
    pub u: usize,
    pub v: usize,
    pub probability: f64,
    pub member: usize,
    pub logical_flip: bool,
}

#[derive(Clone, Debug)]
pub struct MatchingGraph {
    /// Detector id of each node; `None` for the boundary and virtual nodes.
    pub detector_of: Vec<Option<usize>>,
    pub node_of: HashMap<usize, usize>,
    pub boundary: usize,
    pub edges: Vec<GraphEdge>,
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Merges whose members disagreed on the logical flip.
    pub conflicts: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchResult {
    pub matched_paths: Vec<Vec<usize>>,
    pub total_weight: f64,
    pub logical_correction: bool,
    /// Graph edge ids used an odd number of times, sorted.
    pub fault_set: Vec<usize>,
}

impl MatchingGraph {
    /// Builds a graph over `detector_of` (one entry per node), merging
    /// parallel edges.
    pub fn build(detector_of: Vec<Option<usize>>, boundary: usize, raw: &[RawEdge]) -> Self {
        let node_of = detector_of.iter().enumerate().filter_map(|(n, d)| d.map(|d| (d, n))).collect();
        let mut groups: BTreeMap<(usize, usize), Vec<RawEdge>> = BTreeMap::new();
        for e in raw {
            groups.entry((e.u.min(e.v), e.u.max(e.v))).or_default().push(*e);
        }
        let mut edges = Vec::with_capacity(groups.len());
        let mut conflicts = 0;
        for ((u, v), mut group) in groups {
            group.sort_by(|a, b| b.probability.total_cmp(&a.probability).then(a.member.cmp(&b.member)));
            let p = group.iter().fold(0.0, |acc, e| xor_probability(acc, e.probability));
            let flip = group[0].logical_flip;
            if group.iter().any(|e| e.logical_flip != flip) {
                conflicts += 1;
            }
            edges.push(GraphEdge {
                id: edges.len(),
                u,
                v,
                probability: p,
                weight: weight(p),
                members: group.iter().map(|e| e.member).collect(),
                logical_flip: flip,
            });
        }
        let mut adjacency = vec![Vec::new(); detector_of.len()];
        for e in &edges {
            adjacency[e.u].push((e.v, e.id));
            adjacency[e.v].push((e.u, e.id));
        }
        Self { detector_of, node_of, boundary, edges, adjacency, conflicts }
    }

    pub fn num_nodes(&self) -> usize {
        self.detector_of.len()
    }

    /// Node of each detector in `detectors` that belongs to this graph.
    pub fn nodes_of(&self, detectors: impl IntoIterator<Item = usize>) -> Vec<usize> {
        detectors.into_iter().filter_map(|d| self.node_of.get(&d).copied()).collect()
    }

    /// Same graph with edge weights replaced.
    pub fn with_weights(&self, weights: &[f64]) -> Self {
        let mut g = self.clone();
        for (e, &w) in g.edges.iter_mut().zip(weights) {
            e.weight = w;
        }
        g
    }

    /// Same graph plus unmerged edges `(u, v, weight, logical_flip)` with
    /// ids following the existing ones and no members.
    pub fn with_extra_edges(&self, extra: impl IntoIterator<Item = (usize, usize, f64, bool)>) -> Self {
        let mut g = self.clone();
        for (u, v, w, flip) in extra {
            let id = g.edges.len();
            g.edges.push(GraphEdge {
                id,
                u,
                v,
                probability: 1.0 / (1.0 + w.exp()),
                weight: w,
                members: Vec::new(),
                logical_flip: flip,
            });
            g.adjacency[u].push((v, id));
            g.adjacency[v].push((u, id));
        }
        g
    }

    /// Sum of weights and XOR of logical flips over a set of edges.
    pub fn evaluate(&self, edges: &[usize]) -> (f64, bool) {
        edges.iter().fold((0.0, false), |(w, l), &e| (w + self.edges[e].weight, l ^ self.edges[e].logical_flip))
    }

    fn dijkstra(&self, source: usize, targets: &[bool], want: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.num_nodes();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapItem(0.0, source));
        let mut found = 0;
        while let Some(HeapItem(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if targets[u] {
                found += 1;
                if found == want {
                    break;
                }
            }
            if u == self.boundary && u != source {
                continue;
            }
            for &(v, e) in &self.adjacency[u] {
                let nd = d + self.edges[e].weight;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = Some(e);
                    heap.push(HeapItem(nd, v));
                }
            }
        }
        (dist, prev)
    }

    fn path(&self, prev: &[Option<usize>], source: usize, mut to: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while to != source {
            let e = prev[to].expect("settled node has a predecessor");
            out.push(e);
            let ed = &self.edges[e];
            to = if ed.u == to { ed.v } else { ed.u };
        }
        out.reverse();
        out
    }

    /// Minimum-weight set of edges whose boundary (ignoring the boundary
    /// node) is exactly `defects`.
    pub fn decode(&self, defects: &[usize]) -> Result<MatchResult> {
        let mut defects: Vec<usize> = defects.to_vec();
        defects.sort_unstable();
        defects.dedup();
        if defects.iter().any(|&d| d == self.boundary || d >= self.num_nodes()) {
            return Err(Error::Matching("defect list contains the boundary or an unknown node".into()));
        }
        let k = defects.len();
        if k == 0 {
            return Ok(MatchResult::default());
        }
        let mut targets = vec![false; self.num_nodes()];
        for &d in &defects {
            targets[d] = true;
        }
        targets[self.boundary] = true;
        let trees: Vec<(Vec<f64>, Vec<Option<usize>>)> =
            defects.iter().map(|&s| self.dijkstra(s, &targets, k + 1)).collect();
        let to_boundary: Vec<f64> = trees.iter().map(|(d, _)| d[self.boundary]).collect();

        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let d = trees[i].0[defects[j]];
                if d.is_finite() && !(d >= to_boundary[i] + to_boundary[j]) {
                    pairs.push((i, j, d));
                }
            }
            if to_boundary[i].is_finite() {
                pairs.push((i, k + i, to_boundary[i]));
            }
        }
        let scaled: Vec<(usize, usize, i64)> = pairs.iter().map(|&(a, b, d)| (a, b, (d * SCALE).round() as i64)).collect();
        let big = scaled.iter().map(|e| e.2).max().unwrap_or(0) + 1;
        let mut edges: Vec<(usize, usize, i64)> = scaled.iter().map(|&(a, b, w)| (a, b, big - w)).collect();
        for i in 0..k {
            for j in i + 1..k {
                edges.push((k + i, k + j, big));
            }
        }
        let mate = max_weight_matching(2 * k, &edges, true);

        let mut result = MatchResult::default();
        let mut used = vec![false; self.edges.len()];
        for i in 0..k {
            let Some(m) = mate[i] else {
                return Err(Error::Matching(format!("detector node {} cannot be matched", defects[i])));
            };
            let path = if m == k + i {
                self.path(&trees[i].1, defects[i], self.boundary)
            } else if m < k && m > i {
                self.path(&trees[i].1, defects[i], defects[m])
            } else {
                continue;
            };
            for &e in &path {
                used[e] ^= true;
            }
            result.matched_paths.push(path);
        }
        result.fault_set = used.iter().enumerate().filter(|(_, &u)| u).map(|(e, _)| e).collect();
        let (w, l) = self.evaluate(&result.fault_set);
        result.total_weight = w;
        result.logical_correction = l;
        Ok(result)
    }

    /// Nodes with odd incidence in `edges`, boundary excluded.
    pub fn syndrome_of(&self, edges: &[usize]) -> Vec<usize> {
        let mut odd = vec![false; self.num_nodes()];
        for &e in edges {
            odd[self.edges[e].u] ^= true;
            odd[self.edges[e].v] ^= true;
        }
        odd[self.boundary] = false;
        odd.iter().enumerate().filter(|(_, &o)| o).map(|(n, _)| n).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Which detectors a graph is built over.
fn class_nodes(hg: &DecodingHypergraph, class: DetectorClass) -> Vec<usize> {
    (0..hg.num_detectors()).filter(|&d| hg.detector_class[d] == class).collect()
}

/// Z graph (Z-only and mixed edges by their Z endpoints) or X graph
/// (X-only edges).
pub fn compile_matching_graph(hg: &DecodingHypergraph, class: DetectorClass) -> Result<MatchingGraph> {
    compile_with_virtual(hg, class, None)
}

/// Time-slice attachment for the Z graph: single-endpoint edges whose
/// endpoint lies in the first (last) Z slice go to the extra node v0 (vf)
/// instead of the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VirtualBoundary {
    pub first_time: i32,
    pub last_time: i32,
}

impl VirtualBoundary {
    pub fn of(hg: &DecodingHypergraph) -> Option<Self> {
        let times = class_nodes(hg, DetectorClass::ZDet).into_iter().map(|d| hg.detector_time[d]);
        let (lo, hi) = times.fold((i32::MAX, i32::MIN), |(lo, hi), t| (lo.min(t), hi.max(t)));
        (lo <= hi).then_some(Self { first_time: lo, last_time: hi })
    }
}

/// Node indices of v0 and vf in a graph compiled with virtual boundaries.
pub fn virtual_nodes(graph: &MatchingGraph) -> (usize, usize) {
    (graph.boundary + 1, graph.boundary + 2)
}

pub fn compile_z_graph_vtb(hg: &DecodingHypergraph) -> Result<MatchingGraph> {
    let vb = VirtualBoundary::of(hg).ok_or_else(|| Error::Matching("no Z detectors".into()))?;
    compile_with_virtual(hg, DetectorClass::ZDet, Some(vb))
}

fn compile_with_virtual(hg: &DecodingHypergraph, class: DetectorClass, vb: Option<VirtualBoundary>) -> Result<MatchingGraph> {
    let dets = class_nodes(hg, class);
    let mut detector_of: Vec<Option<usize>> = dets.iter().map(|&d| Some(d)).collect();
    let boundary = detector_of.len();
    detector_of.push(None);
    if vb.is_some() {
        detector_of.push(None);
        detector_of.push(None);
    }
    let node: HashMap<usize, usize> = dets.iter().enumerate().map(|(n, &d)| (d, n)).collect();
    let mut raw = Vec::new();
    for e in &hg.edges {
        let ends = match (class, e.class) {
            (DetectorClass::ZDet, EdgeClass::Z | EdgeClass::Mixed) => &e.effect.dz,
            (DetectorClass::XDet, EdgeClass::X) => &e.effect.dx,
            _ => continue,
        };
        let (u, v) = match ends.as_slice() {
            [a] => {
                let other = match vb {
                    Some(vb) if hg.detector_time[*a] == vb.first_time => boundary + 1,
                    Some(vb) if hg.detector_time[*a] == vb.last_time => boundary + 2,
                    _ => boundary,
                };
                (node[a], other)
            }
            [a, b] => (node[a], node[b]),
            _ => return Err(Error::Matching(format!("edge {} has {} endpoints in this graph", e.id, ends.len()))),
        };
        raw.push(RawEdge { u, v, probability: e.probability, member: e.id, logical_flip: e.effect.logical_flip });
    }
    Ok(MatchingGraph::build(detector_of, boundary, &raw))
}
