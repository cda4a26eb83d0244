//! Decoding hypergraph: error locations, their detector footprints, the
//! retained graph-like edges and how every error splits into them.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::circuit::Circuit;
use crate::detectors::{DetectorClass, DetectorSet};
use crate::error::{Error, Result};
use crate::geometry::{Coord, Pauli, SparsePauli, Timestamp};

pub const P_MIN: f64 = 1e-12;
pub const P_MAX: f64 = 0.5 - 1e-9;

/// A single Pauli component of a noise channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorLocation {
    pub id: usize,
    pub timestamp: Timestamp,
    /// The fault acts right after this layer.
    pub after_layer: usize,
    pub fault: SparsePauli,
    pub probability: f64,
    pub parent_channel: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ErrorEffect {
    /// Sorted Z-detector ids.
    pub dz: Vec<usize>,
    /// Sorted X-detector ids.
    pub dx: Vec<usize>,
    pub logical_flip: bool,
}

impl ErrorEffect {
    pub fn is_trivial(&self) -> bool {
        self.dz.is_empty() && self.dx.is_empty() && !self.logical_flip
    }

    pub fn is_undetectable_logical(&self) -> bool {
        self.dz.is_empty() && self.dx.is_empty() && self.logical_flip
    }

    pub fn xor(&self, other: &ErrorEffect) -> ErrorEffect {
        ErrorEffect {
            dz: sym_diff(&self.dz, &other.dz),
            dx: sym_diff(&self.dx, &other.dx),
            logical_flip: self.logical_flip ^ other.logical_flip,
        }
    }

    /// All triggered detectors, sorted.
    pub fn detectors(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.dz.iter().chain(&self.dx).copied().collect();
        v.sort_unstable();
        v
    }

    fn graphlike(&self) -> bool {
        self.dz.len() <= 2 && self.dx.len() <= 2
    }
}

fn sym_diff(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                out.push(*x);
                i += 1;
            }
            (Some(_), Some(y)) => {
                out.push(*y);
                j += 1;
            }
            (Some(x), None) => {
                out.push(*x);
                i += 1;
            }
            (None, Some(y)) => {
                out.push(*y);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// p ⊕ q: probability that exactly one of two independent events happens.
pub fn xor_probability(p: f64, q: f64) -> f64 {
    p * (1.0 - q) + q * (1.0 - p)
}

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(P_MIN, P_MAX)
}

/// Log-likelihood weight ln((1 − p) / p) after clamping.
pub fn weight(p: f64) -> f64 {
    let p = clamp_probability(p);
    ((1.0 - p) / p).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeClass {
    /// Only Z detectors.
    Z,
    /// Only X detectors.
    X,
    /// Both.
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperEdge {
    pub id: usize,
    pub effect: ErrorEffect,
    pub probability: f64,
    pub weight: f64,
    pub class: EdgeClass,
    /// Noise channels contributing a candidate, sorted.
    pub channels: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Partition {
    pub z: Vec<usize>,
    pub x: Vec<usize>,
    pub mixed: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct DecodingHypergraph {
    pub detector_class: Vec<DetectorClass>,
    /// Time coordinate of each detector.
    pub detector_time: Vec<i32>,
    pub locations: Vec<ErrorLocation>,
    pub effects: Vec<ErrorEffect>,
    pub edges: Vec<HyperEdge>,
    pub partition: Partition,
    /// Edge ids whose effects XOR to each location's effect.
    pub decomposition: Vec<Vec<usize>>,
    /// Extra edges sharing a Z footprint with another Z-graph edge.
    pub ambiguities: usize,
}

/// Region states indexed by (layer, qubit) so a fault's footprint is a few
/// lookups.
#[derive(Clone, Debug)]
pub struct RegionIndex {
    layers: Vec<HashMap<Coord, Vec<(u32, Pauli)>>>,
    class: Vec<DetectorClass>,
    logical_tag: u32,
}

impl RegionIndex {
    pub fn new(circuit: &Circuit, set: &DetectorSet) -> Self {
        let mut layers: Vec<HashMap<Coord, Vec<(u32, Pauli)>>> = vec![HashMap::new(); circuit.layers.len()];
        let logical_tag = set.len() as u32;
        let regions = set.regions.iter().enumerate().map(|(i, r)| (i as u32, r));
        for (tag, region) in regions.chain(std::iter::once((logical_tag, &set.logical_region))) {
            for (l, _, state) in &region.states {
                for (c, p) in state.iter() {
                    layers[*l].entry(c).or_default().push((tag, p));
                }
            }
        }
        Self { layers, class: set.detectors.iter().map(|d| d.basis_class).collect(), logical_tag }
    }

    /// Detectors whose region anticommutes with `fault` right after `layer`.
    pub fn effect(&self, layer: usize, fault: &SparsePauli) -> ErrorEffect {
        let mut hits: Vec<u32> = Vec::new();
        for (c, p) in fault.iter() {
            if let Some(list) = self.layers[layer].get(&c) {
                hits.extend(list.iter().filter(|(_, q)| p.anticommutes(*q)).map(|(t, _)| *t));
            }
        }
        hits.sort_unstable();
        let mut effect = ErrorEffect::default();
        let mut i = 0;
        while i < hits.len() {
            let mut j = i;
            while j < hits.len() && hits[j] == hits[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                let t = hits[i];
                if t == self.logical_tag {
                    effect.logical_flip = true;
                } else if self.class[t as usize] == DetectorClass::ZDet {
                    effect.dz.push(t as usize);
                } else {
                    effect.dx.push(t as usize);
                }
            }
            i = j;
        }
        effect
    }
}

/// Footprint of a single error location computed from detecting regions.
pub fn effect_via_regions(circuit: &Circuit, set: &DetectorSet, error: &ErrorLocation) -> ErrorEffect {
    RegionIndex::new(circuit, set).effect(error.after_layer, &error.fault)
}

/// Every Pauli component of every noise channel.
pub fn error_locations(circuit: &Circuit) -> Vec<ErrorLocation> {
    let mut out = Vec::new();
    for ch in &circuit.noise {
        for (fault, p) in ch.components() {
            out.push(ErrorLocation {
                id: out.len(),
                timestamp: ch.timestamp,
                after_layer: ch.after_layer,
                fault,
                probability: p,
                parent_channel: ch.id,
            });
        }
    }
    out
}

/// Splits a Pauli into its single-qubit X and Z factors.
fn single_qubit_factors(p: &SparsePauli) -> Vec<SparsePauli> {
    let mut out = Vec::new();
    for (c, q) in p.iter() {
        if q.x_bit() {
            out.push(SparsePauli::single(c, Pauli::X));
        }
        if q.z_bit() {
            out.push(SparsePauli::single(c, Pauli::Z));
        }
    }
    out
}

/// Builds the hypergraph of a noisy circuit.
pub fn build_hypergraph(circuit: &Circuit, set: &DetectorSet) -> Result<DecodingHypergraph> {
    let index = RegionIndex::new(circuit, set);
    let locations = error_locations(circuit);

    // Effects of each location and of its X and Z parts.
    let computed: Vec<(ErrorEffect, ErrorEffect, ErrorEffect)> = locations
        .par_iter()
        .map(|loc| {
            let xp = loc.fault.x_part().unsigned();
            let zp = loc.fault.z_part().unsigned();
            (
                index.effect(loc.after_layer, &loc.fault),
                index.effect(loc.after_layer, &xp),
                index.effect(loc.after_layer, &zp),
            )
        })
        .collect();

    // Candidate edges keyed by effect; probabilities XOR-merged.
    let mut candidates: BTreeMap<ErrorEffect, (f64, Vec<usize>)> = BTreeMap::new();
    for (loc, (_, ex, ez)) in locations.iter().zip(&computed) {
        for part in [ex, ez] {
            if part.is_trivial() || part.is_undetectable_logical() || !part.graphlike() {
                continue;
            }
            let entry = candidates.entry(part.clone()).or_insert((0.0, Vec::new()));
            entry.0 = xor_probability(entry.0, loc.probability);
            entry.1.push(loc.parent_channel);
        }
    }
    let mut edges = Vec::with_capacity(candidates.len());
    let mut edge_of: HashMap<ErrorEffect, usize> = HashMap::new();
    let mut partition = Partition::default();
    for (effect, (p, mut channels)) in candidates {
        channels.sort_unstable();
        channels.dedup();
        let id = edges.len();
        let class = match (effect.dz.is_empty(), effect.dx.is_empty()) {
            (false, true) => EdgeClass::Z,
            (true, false) => EdgeClass::X,
            _ => EdgeClass::Mixed,
        };
        match class {
            EdgeClass::Z => partition.z.push(id),
            EdgeClass::X => partition.x.push(id),
            EdgeClass::Mixed => partition.mixed.push(id),
        }
        edge_of.insert(effect.clone(), id);
        edges.push(HyperEdge { id, effect, probability: p, weight: weight(p), class, channels });
    }

    let decomposition: Vec<Vec<usize>> = locations
        .par_iter()
        .zip(&computed)
        .map(|(loc, (full, ex, ez))| decompose(&index, &edge_of, loc, full, ex, ez))
        .collect::<Result<_>>()?;

    let mut footprints: HashMap<&[usize], usize> = HashMap::new();
    for e in edges.iter().filter(|e| e.class != EdgeClass::X) {
        *footprints.entry(&e.effect.dz).or_default() += 1;
    }
    let ambiguities = footprints.values().map(|n| n - 1).sum();

    Ok(DecodingHypergraph {
        detector_class: set.detectors.iter().map(|d| d.basis_class).collect(),
        detector_time: set.detectors.iter().map(|d| d.coordinate.2).collect(),
        effects: computed.into_iter().map(|(f, _, _)| f).collect(),
        locations,
        edges,
        partition,
        decomposition,
        ambiguities,
    })
}

fn decompose(
    index: &RegionIndex,
    edge_of: &HashMap<ErrorEffect, usize>,
    loc: &ErrorLocation,
    full: &ErrorEffect,
    ex: &ErrorEffect,
    ez: &ErrorEffect,
) -> Result<Vec<usize>> {
    if full.is_trivial() {
        return Ok(Vec::new());
    }
    if let Some(&e) = edge_of.get(full) {
        return Ok(vec![e]);
    }
    let lookup = |eff: &ErrorEffect| -> Option<Option<usize>> {
        if eff.is_trivial() {
            Some(None)
        } else {
            edge_of.get(eff).map(|&e| Some(e))
        }
    };
    let mut parts: Vec<usize> = match (lookup(ex), lookup(ez)) {
        (Some(a), Some(b)) => a.into_iter().chain(b).collect(),
        _ => {
            let mut out = Vec::new();
            for f in single_qubit_factors(&loc.fault) {
                let eff = index.effect(loc.after_layer, &f);
                match lookup(&eff) {
                    Some(e) => out.extend(e),
                    None => return Err(Error::Undecomposable { fault: format!("{} after layer {}", loc.fault, loc.after_layer) }),
                }
            }
            out
        }
    };
    // Cancel repeated edges pairwise.
    parts.sort_unstable();
    let mut reduced: Vec<usize> = Vec::with_capacity(parts.len());
    for e in parts {
        if reduced.last() == Some(&e) {
            reduced.pop();
        } else {
            reduced.push(e);
        }
    }
    Ok(reduced)
}

impl DecodingHypergraph {
    pub fn num_detectors(&self) -> usize {
        self.detector_class.len()
    }

    /// XOR of the effects of a list of edges.
    pub fn combined_effect(&self, edges: &[usize]) -> ErrorEffect {
        edges.iter().fold(ErrorEffect::default(), |acc, &e| acc.xor(&self.edges[e].effect))
    }

    /// Errors whose decomposition uses each edge.
    pub fn neighborhoods(&self) -> Vec<Vec<usize>> {
        let mut n = vec![Vec::new(); self.edges.len()];
        for (loc, parts) in self.decomposition.iter().enumerate() {
            for &e in parts {
                n[e].push(loc);
            }
        }
        n
    }

    /// Fraction of mixed edges touching exactly one X detector.
    pub fn mixed_single_x_fraction(&self) -> Option<f64> {
        if self.partition.mixed.is_empty() {
            return None;
        }
        let ones = self.partition.mixed.iter().filter(|&&e| self.edges[e].effect.dx.len() == 1).count();
        Some(ones as f64 / self.partition.mixed.len() as f64)
    }

    /// Checks that each decomposition reproduces its error's effect.
    pub fn verify_decompositions(&self) -> Result<()> {
        for (loc, parts) in self.decomposition.iter().enumerate() {
            if self.combined_effect(parts) != self.effects[loc] {
                return Err(Error::Undecomposable { fault: self.locations[loc].fault.to_string() });
            }
        }
        Ok(())
    }

    /// `EDGE p dZ:[..] dX:[..] L:b faults:[..]`, one line per edge.
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        for e in &self.edges {
            let _ = writeln!(
                out,
                "EDGE {:.6e} dZ:[{}] dX:[{}] L:{} faults:[{}]",
                e.probability,
                list(&e.effect.dz),
                list(&e.effect.dx),
                e.effect.logical_flip as u8,
                list(&e.channels)
            );
        }
        out
    }
}
