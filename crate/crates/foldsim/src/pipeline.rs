//! Correlated decoding: match Z detectors, push the matched errors' X
//! footprints onto the X syndrome, match X detectors, merge logical effects.
//! Optional virtual time boundaries and Z-informed reweighting of the X step.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dem::{clamp_probability, weight, xor_probability, DecodingHypergraph, EdgeClass};
use crate::detectors::DetectorClass;
use crate::error::{Error, ParseError, Result};
use crate::frame::ShotRecord;
use crate::matching::{compile_matching_graph, compile_z_graph_vtb, virtual_nodes, MatchResult, MatchingGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderMode {
    Plain,
    Vtb,
    VtbPr,
    VtbFr,
}

impl DecoderMode {
    pub const ALL: [DecoderMode; 4] = [DecoderMode::Plain, DecoderMode::Vtb, DecoderMode::VtbPr, DecoderMode::VtbFr];

    pub fn uses_vtb(self) -> bool {
        self != DecoderMode::Plain
    }

    pub fn name(self) -> &'static str {
        match self {
            DecoderMode::Plain => "plain",
            DecoderMode::Vtb => "vtb",
            DecoderMode::VtbPr => "vtb-pr",
            DecoderMode::VtbFr => "vtb-fr",
        }
    }
}

impl fmt::Display for DecoderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderMode {
    type Err = ParseError;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        DecoderMode::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase().replace('_', "-"))
            .ok_or_else(|| ParseError::new(format!("unknown decoder {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub mode: DecoderMode,
}

/// (v0, vf) defect status; tried in this order, the first minimum wins.
pub const VTB_CONDITIONS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecodeOutcome {
    pub logical_correction: bool,
    pub total_weight: f64,
    pub z_weight: f64,
    pub x_weight: f64,
    pub condition: Option<(bool, bool)>,
    /// Hyperedges chosen in the Z step (representatives) and X step.
    pub z_edges: Vec<usize>,
    pub x_edges: Vec<usize>,
}

/// Uniform inference over the errors that could have produced each decoded
/// Z-step edge.
#[derive(Clone, Debug)]
pub struct InferenceState {
    /// Base probability of every error location.
    pub base: Vec<f64>,
    /// Error locations whose decomposition contains each hyperedge.
    pub neighborhoods: Vec<Vec<usize>>,
    /// X-only hyperedges in each location's decomposition.
    x_edges_of: Vec<Vec<usize>>,
}

impl InferenceState {
    pub fn new(hg: &DecodingHypergraph) -> Self {
        let x_edges_of = hg
            .decomposition
            .iter()
            .map(|parts| parts.iter().copied().filter(|&e| hg.edges[e].class == EdgeClass::X).collect())
            .collect();
        Self { base: hg.locations.iter().map(|l| l.probability).collect(), neighborhoods: hg.neighborhoods(), x_edges_of }
    }

    /// Updated P_o for the locations that changed.
    pub fn infer(&self, decoded: &[usize]) -> HashMap<usize, f64> {
        let mut po: HashMap<usize, f64> = HashMap::new();
        for &e in decoded {
            for &loc in &self.neighborhoods[e] {
                po.insert(loc, 0.0);
            }
        }
        for &e in decoded {
            let n = &self.neighborhoods[e];
            for &loc in n {
                *po.get_mut(&loc).expect("reset above") += 1.0 / n.len() as f64;
            }
        }
        po
    }

    /// New probabilities (before clamping) of the X hyperedges touched by an
    /// inference result: P(e_x) = Σ P_o over N(e_x).
    pub fn reweight(&self, po: &HashMap<usize, f64>) -> HashMap<usize, f64> {
        let mut out = HashMap::new();
        for &loc in po.keys() {
            for &ex in &self.x_edges_of[loc] {
                out.entry(ex).or_insert_with(|| {
                    self.neighborhoods[ex].iter().map(|l| po.get(l).copied().unwrap_or(self.base[*l])).sum()
                });
            }
        }
        out
    }
}

/// Alternative member of a Z-graph edge, offered to the X step as an edge
/// carrying the difference of X footprints and logical effects.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Swap {
    pub from: usize,
    pub to: usize,
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    pub logical_flip: bool,
}

fn swap_table(hg: &DecodingHypergraph, z_graph: &MatchingGraph, x_graph: &MatchingGraph) -> Vec<Vec<Swap>> {
    z_graph
        .edges
        .iter()
        .map(|ge| {
            let rep = ge.members[0];
            ge.members[1..]
                .iter()
                .filter_map(|&m| {
                    let diff = hg.edges[rep].effect.xor(&hg.edges[m].effect);
                    let (u, v) = match x_graph.nodes_of(diff.dx.iter().copied())[..] {
                        [a] => (a, x_graph.boundary),
                        [a, b] => (a, b),
                        _ => return None,
                    };
                    Some(Swap {
                        from: rep,
                        to: m,
                        u,
                        v,
                        weight: (hg.edges[m].weight - hg.edges[rep].weight).max(0.0),
                        logical_flip: diff.logical_flip,
                    })
                })
                .collect()
        })
        .collect()
}

/// Compiled graphs and inference tables for one circuit.
#[derive(Clone, Debug)]
pub struct Decoder {
    pub config: DecoderConfig,
    hg_edges_dx: Vec<Vec<usize>>,
    hg_edges_flip: Vec<bool>,
    hg_edge_probability: Vec<f64>,
    class: Vec<DetectorClass>,
    pub z_graph: MatchingGraph,
    pub x_graph: MatchingGraph,
    /// X-graph edge containing each X hyperedge.
    x_graph_edge_of: HashMap<usize, usize>,
    /// Swaps available for each Z-graph edge.
    pub swaps: Vec<Vec<Swap>>,
    pub inference: Option<InferenceState>,
}

impl Decoder {
    pub fn new(hg: &DecodingHypergraph, config: DecoderConfig) -> Result<Self> {
        let z_graph = if config.mode.uses_vtb() {
            compile_z_graph_vtb(hg)?
        } else {
            compile_matching_graph(hg, DetectorClass::ZDet)?
        };
        let x_graph = compile_matching_graph(hg, DetectorClass::XDet)?;
        let x_graph_edge_of = x_graph.edges.iter().flat_map(|e| e.members.iter().map(move |&m| (m, e.id))).collect();
        let swaps = swap_table(hg, &z_graph, &x_graph);
        let inference = matches!(config.mode, DecoderMode::VtbPr | DecoderMode::VtbFr).then(|| InferenceState::new(hg));
        Ok(Self {
            config,
            hg_edges_dx: hg.edges.iter().map(|e| e.effect.dx.clone()).collect(),
            hg_edges_flip: hg.edges.iter().map(|e| e.effect.logical_flip).collect(),
            hg_edge_probability: hg.edges.iter().map(|e| e.probability).collect(),
            class: hg.detector_class.clone(),
            z_graph,
            x_graph,
            x_graph_edge_of,
            swaps,
            inference,
        })
    }

    fn split_syndrome(&self, shot: &ShotRecord) -> (Vec<usize>, Vec<usize>) {
        let (mut z, mut x) = (Vec::new(), Vec::new());
        for d in shot.detector_bits.ones() {
            match self.class[d] {
                DetectorClass::ZDet => z.push(d),
                DetectorClass::XDet => x.push(d),
            }
        }
        (z, x)
    }

    /// X-graph weights after reweighting, or None when nothing changed.
    fn reweighted_x(&self, z_edges: &[usize]) -> Option<Vec<f64>> {
        let inf = self.inference.as_ref()?;
        if z_edges.is_empty() {
            return None;
        }
        let updated = inf.reweight(&inf.infer(z_edges));
        if updated.is_empty() {
            return None;
        }
        let mut touched: Vec<usize> = updated.keys().filter_map(|e| self.x_graph_edge_of.get(e).copied()).collect();
        touched.sort_unstable();
        touched.dedup();
        let mut weights: Vec<f64> = self.x_graph.edges.iter().map(|e| e.weight).collect();
        for ge in touched {
            let p = self.x_graph.edges[ge]
                .members
                .iter()
                .map(|m| clamp_probability(updated.get(m).copied().unwrap_or(self.hg_edge_probability[*m])))
                .fold(0.0, xor_probability);
            weights[ge] = weight(p);
        }
        Some(weights)
    }

    fn run(&self, z_defects: &[usize], x_dets: &[usize], condition: Option<(bool, bool)>) -> Result<DecodeOutcome> {
        let mut z_nodes = self.z_graph.nodes_of(z_defects.iter().copied());
        if let Some((b0, bf)) = condition {
            let (v0, vf) = virtual_nodes(&self.z_graph);
            if b0 {
                z_nodes.push(v0);
            }
            if bf {
                z_nodes.push(vf);
            }
        }
        let zr: MatchResult = self.z_graph.decode(&z_nodes)?;
        let reps: Vec<usize> = zr.fault_set.iter().map(|&ge| self.z_graph.edges[ge].members[0]).collect();
        let swaps: Vec<Swap> = zr.fault_set.iter().flat_map(|&ge| self.swaps[ge].iter().copied()).collect();
        let mut x_syndrome = vec![false; self.class.len()];
        for &d in x_dets {
            x_syndrome[d] ^= true;
        }
        let mut logical = false;
        for &e in &reps {
            for &d in &self.hg_edges_dx[e] {
                x_syndrome[d] ^= true;
            }
            logical ^= self.hg_edges_flip[e];
        }
        let x_defects = self.x_graph.nodes_of(x_syndrome.iter().enumerate().filter(|(_, &b)| b).map(|(d, _)| d));

        let reweighted = self.reweighted_x(&reps);
        fn with_swaps<'g>(g: Cow<'g, MatchingGraph>, swaps: &[Swap]) -> Cow<'g, MatchingGraph> {
            if swaps.is_empty() {
                g
            } else {
                Cow::Owned(g.with_extra_edges(swaps.iter().map(|s| (s.u, s.v, s.weight, s.logical_flip))))
            }
        }
        let n_x = self.x_graph.edges.len();
        let (xr, x_weight) = match (self.config.mode, &reweighted) {
            (DecoderMode::VtbFr, Some(w)) => {
                let r = with_swaps(Cow::Owned(self.x_graph.with_weights(w)), &swaps).decode(&x_defects)?;
                let xw = r.total_weight;
                (r, xw)
            }
            (DecoderMode::VtbPr, Some(w)) => {
                let r = with_swaps(Cow::Borrowed(&self.x_graph), &swaps).decode(&x_defects)?;
                let xw = r.fault_set.iter().map(|&e| if e < n_x { w[e] } else { swaps[e - n_x].weight }).sum();
                (r, xw)
            }
            _ => {
                let r = with_swaps(Cow::Borrowed(&self.x_graph), &swaps).decode(&x_defects)?;
                let xw = r.total_weight;
                (r, xw)
            }
        };
        logical ^= xr.logical_correction;
        let mut chosen: BTreeSet<usize> = reps.iter().copied().collect();
        let mut x_edges = Vec::new();
        for &e in &xr.fault_set {
            if e < n_x {
                x_edges.push(self.x_graph.edges[e].members[0]);
            } else {
                for m in [swaps[e - n_x].from, swaps[e - n_x].to] {
                    if !chosen.remove(&m) {
                        chosen.insert(m);
                    }
                }
            }
        }
        Ok(DecodeOutcome {
            logical_correction: logical,
            total_weight: zr.total_weight + x_weight,
            z_weight: zr.total_weight,
            x_weight,
            condition,
            z_edges: chosen.into_iter().collect(),
            x_edges,
        })
    }

    /// Decodes one shot. The returned correction predicts the flip of the
    /// observable relative to its noiseless value.
    pub fn decode(&self, shot: &ShotRecord) -> Result<DecodeOutcome> {
        let (z, x) = self.split_syndrome(shot);
        if !self.config.mode.uses_vtb() {
            return self.run(&z, &x, None);
        }
        let mut best: Option<DecodeOutcome> = None;
        let mut last_err = None;
        for cond in VTB_CONDITIONS {
            match self.run(&z, &x, Some(cond)) {
                Ok(out) => {
                    if best.as_ref().map_or(true, |b| out.total_weight < b.total_weight) {
                        best = Some(out);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Matching("no boundary condition decoded".into())))
    }

    /// Every boundary condition's outcome, in preference order.
    pub fn decode_all_conditions(&self, shot: &ShotRecord) -> Vec<Result<DecodeOutcome>> {
        let (z, x) = self.split_syndrome(shot);
        VTB_CONDITIONS.iter().map(|&c| self.run(&z, &x, Some(c))).collect()
    }
}
