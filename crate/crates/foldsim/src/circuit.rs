//! Layered circuits for the X-memory and S-2 experiments.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Coord, MidCycleLabel, Pauli, Timestamp};
use crate::layout::{Layout, PhaseGate};
use crate::noise::NoiseChannel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    ResetX,
    ResetZ,
    MeasX,
    MeasZ,
    H,
    S,
    Sdag,
    CX,
    CZ,
    Idle,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::CX | GateKind::CZ => 2,
            _ => 1,
        }
    }

    pub fn is_reset(self) -> bool {
        matches!(self, GateKind::ResetX | GateKind::ResetZ)
    }

    pub fn is_measurement(self) -> bool {
        matches!(self, GateKind::MeasX | GateKind::MeasZ)
    }

    pub fn is_unitary(self) -> bool {
        !self.is_reset() && !self.is_measurement()
    }

    /// Pauli basis of a reset or measurement.
    pub fn basis(self) -> Option<Pauli> {
        match self {
            GateKind::ResetX | GateKind::MeasX => Some(Pauli::X),
            GateKind::ResetZ | GateKind::MeasZ => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::ResetX => "RX",
            GateKind::ResetZ => "RZ",
            GateKind::MeasX => "MX",
            GateKind::MeasZ => "MZ",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::Sdag => "S_DAG",
            GateKind::CX => "CX",
            GateKind::CZ => "CZ",
            GateKind::Idle => "I",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instruction {
    pub kind: GateKind,
    pub targets: Vec<Coord>,
    pub timestamp: Timestamp,
}

impl Instruction {
    pub fn new(kind: GateKind, targets: Vec<Coord>, timestamp: Timestamp) -> Self {
        debug_assert_eq!(targets.len(), kind.arity());
        Self { kind, targets, timestamp }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        for t in &self.targets {
            write!(f, " {t}")?;
        }
        write!(f, " @ {}", self.timestamp)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub timestamp: Timestamp,
    pub instructions: Vec<Instruction>,
}

impl Layer {
    pub fn is_unitary(&self) -> bool {
        self.instructions.iter().all(|i| i.kind.is_unitary())
    }

    pub fn targets(&self) -> impl Iterator<Item = Coord> + '_ {
        self.instructions.iter().flat_map(|i| i.targets.iter().copied())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoundKind {
    Init,
    ISE,
    SSE,
    FinalMeas,
}

impl RoundKind {
    pub fn is_se(self) -> bool {
        matches!(self, RoundKind::ISE | RoundKind::SSE)
    }
}

/// A measurement event: basis, qubit and round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasurementLocation {
    pub basis: Pauli,
    pub coord: Coord,
    pub round: u32,
}

impl fmt::Display for MeasurementLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{} {}@{}", self.basis, self.coord, self.round)
    }
}

/// A reset event: basis, qubit and round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResetLocation {
    pub basis: Pauli,
    pub coord: Coord,
    pub round: u32,
}

impl fmt::Display for ResetLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{} {}@{}", self.basis, self.coord, self.round)
    }
}

#[derive(Clone, Debug)]
pub struct Circuit {
    pub layout: Layout,
    pub layers: Vec<Layer>,
    pub round_kinds: Vec<RoundKind>,
    /// Data qubits whose final X readouts form the logical observable.
    pub observable: Vec<Coord>,
    pub noise: Vec<NoiseChannel>,
    pub noise_strength: f64,
}

fn ts(round: u32, label: MidCycleLabel) -> Timestamp {
    Timestamp::new(round, label)
}

const CNOT_LABELS: [MidCycleLabel; 4] = [
    MidCycleLabel::AfterLayer1,
    MidCycleLabel::HalfCycle,
    MidCycleLabel::WaningCrescent,
    MidCycleLabel::PreMeasure,
];

fn with_idles(layout: &Layout, timestamp: Timestamp, mut instructions: Vec<Instruction>) -> Layer {
    let busy: BTreeSet<Coord> = instructions.iter().flat_map(|i| i.targets.iter().copied()).collect();
    instructions.extend(
        layout
            .all_qubits()
            .into_iter()
            .filter(|q| !busy.contains(q))
            .map(|q| Instruction::new(GateKind::Idle, vec![q], timestamp)),
    );
    instructions.sort();
    Layer { timestamp, instructions }
}

fn cnot_layer(layout: &Layout, round: u32, k: usize) -> Layer {
    let t = ts(round, CNOT_LABELS[k]);
    let mut gates = Vec::new();
    for (&a, support) in &layout.stabilizer_support {
        if let Some(q) = support[k] {
            let targets = if layout.is_x_ancilla(a) { vec![a, q] } else { vec![q, a] };
            gates.push(Instruction::new(GateKind::CX, targets, t));
        }
    }
    with_idles(layout, t, gates)
}

fn fold_layer(layout: &Layout, round: u32) -> Layer {
    let t = ts(round, MidCycleLabel::PostS);
    let mut gates: Vec<Instruction> = layout
        .fold_phase_targets
        .iter()
        .map(|&(c, g)| {
            let kind = match g {
                PhaseGate::S => GateKind::S,
                PhaseGate::Sdag => GateKind::Sdag,
            };
            Instruction::new(kind, vec![c], t)
        })
        .collect();
    gates.extend(layout.fold_cz_pairs.iter().map(|&(a, b)| Instruction::new(GateKind::CZ, vec![a, b], t)));
    with_idles(layout, t, gates)
}

fn se_round(layout: &Layout, round: u32, with_fold: bool) -> Vec<Layer> {
    let reset_t = ts(round, MidCycleLabel::PostReset);
    let mut resets: Vec<Instruction> = layout
        .ancilla_x
        .iter()
        .map(|&a| Instruction::new(GateKind::ResetX, vec![a], reset_t))
        .chain(layout.ancilla_z.iter().map(|&a| Instruction::new(GateKind::ResetZ, vec![a], reset_t)))
        .collect();
    resets.sort();
    let mut layers = vec![Layer { timestamp: reset_t, instructions: resets }];
    layers.push(cnot_layer(layout, round, 0));
    layers.push(cnot_layer(layout, round, 1));
    if with_fold {
        layers.push(fold_layer(layout, round));
    }
    layers.push(cnot_layer(layout, round, 2));
    layers.push(cnot_layer(layout, round, 3));
    let meas_t = ts(round, MidCycleLabel::EndCycle);
    let mut meas: Vec<Instruction> = layout
        .ancilla_x
        .iter()
        .map(|&a| Instruction::new(GateKind::MeasX, vec![a], meas_t))
        .chain(layout.ancilla_z.iter().map(|&a| Instruction::new(GateKind::MeasZ, vec![a], meas_t)))
        .collect();
    meas.sort();
    layers.push(Layer { timestamp: meas_t, instructions: meas });
    layers
}

/// Layers of a plain syndrome-extraction round.
pub fn build_ise_round(layout: &Layout, round: u32) -> Vec<Layer> {
    se_round(layout, round, false)
}

/// Layers of a syndrome-extraction round with the fold inserted at half-cycle.
pub fn build_sse_round(layout: &Layout, round: u32) -> Vec<Layer> {
    se_round(layout, round, true)
}

impl Circuit {
    /// Assembles a circuit from the kinds of its syndrome-extraction rounds.
    /// Round 0 prepares data in |+⟩, the last round reads data out in X.
    pub fn from_se_rounds(d: usize, se: &[RoundKind]) -> Result<Self> {
        if se.is_empty() || se.iter().any(|k| !k.is_se()) {
            return Err(Error::InvalidParameters("need at least one syndrome-extraction round".into()));
        }
        let layout = Layout::new(d)?;
        let mut layers = Vec::new();
        let init_t = ts(0, MidCycleLabel::PostReset);
        layers.push(Layer {
            timestamp: init_t,
            instructions: layout.data.iter().map(|&q| Instruction::new(GateKind::ResetX, vec![q], init_t)).collect(),
        });
        let mut round_kinds = vec![RoundKind::Init];
        for (i, &kind) in se.iter().enumerate() {
            let r = i as u32 + 1;
            layers.extend(se_round(&layout, r, kind == RoundKind::SSE));
            round_kinds.push(kind);
        }
        let last = se.len() as u32 + 1;
        let final_t = ts(last, MidCycleLabel::EndCycle);
        layers.push(Layer {
            timestamp: final_t,
            instructions: layout.data.iter().map(|&q| Instruction::new(GateKind::MeasX, vec![q], final_t)).collect(),
        });
        round_kinds.push(RoundKind::FinalMeas);
        let observable = layout.logical_x_row();
        let circuit = Self { layout, layers, round_kinds, observable, noise: Vec::new(), noise_strength: 0.0 };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn distance(&self) -> usize {
        self.layout.distance
    }

    pub fn rounds(&self) -> usize {
        self.round_kinds.len()
    }

    /// Round indices of syndrome-extraction rounds, in order.
    pub fn se_rounds(&self) -> Vec<u32> {
        self.round_kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| k.is_se())
            .map(|(i, _)| i as u32)
            .collect()
    }

    pub fn final_round(&self) -> u32 {
        self.round_kinds.len() as u32 - 1
    }

    /// Index of the layer carrying `timestamp`, if any.
    pub fn layer_index(&self, timestamp: Timestamp) -> Option<usize> {
        self.layers.binary_search_by(|l| l.timestamp.cmp(&timestamp)).ok()
    }

    /// Index of the last layer at or before `timestamp`.
    pub fn layer_at_or_before(&self, timestamp: Timestamp) -> Option<usize> {
        match self.layers.binary_search_by(|l| l.timestamp.cmp(&timestamp)) {
            Ok(i) => Some(i),
            Err(0) => None,
            Err(i) => Some(i - 1),
        }
    }

    fn validate(&self) -> Result<()> {
        for w in self.layers.windows(2) {
            if w[0].timestamp >= w[1].timestamp {
                return Err(Error::InvalidParameters(format!("layers out of order at {}", w[1].timestamp)));
            }
        }
        for layer in &self.layers {
            let mut seen = BTreeSet::new();
            for q in layer.targets() {
                if !seen.insert(q) {
                    return Err(Error::DoubleTarget { coord: q, timestamp: layer.timestamp });
                }
            }
        }
        Ok(())
    }

    /// All measurement locations in circuit order.
    pub fn measurements(&self) -> Vec<MeasurementLocation> {
        self.layers
            .iter()
            .flat_map(|l| l.instructions.iter())
            .filter_map(|i| {
                i.kind.basis().filter(|_| i.kind.is_measurement()).map(|basis| MeasurementLocation {
                    basis,
                    coord: i.targets[0],
                    round: i.timestamp.round,
                })
            })
            .collect()
    }

    /// Text form: instructions then noise, grouped by timestamp.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# d={} rounds={} p={}", self.distance(), self.rounds(), self.noise_strength);
        let mut noise_iter = self.noise.iter().peekable();
        for layer in &self.layers {
            for inst in &layer.instructions {
                let _ = writeln!(out, "{inst}");
            }
            while let Some(ch) = noise_iter.peek() {
                if ch.after_layer > self.layer_index(layer.timestamp).unwrap_or(usize::MAX) {
                    break;
                }
                let _ = writeln!(out, "{ch}");
                noise_iter.next();
            }
        }
        for ch in noise_iter {
            let _ = writeln!(out, "{ch}");
        }
        out
    }

    /// SHA-256 of the text form, hex encoded.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// X-basis memory: init, `total_rounds` I-SE rounds, X readout.
pub fn build_x_memory(d: usize, total_rounds: usize) -> Result<Circuit> {
    if total_rounds == 0 {
        return Err(Error::InvalidParameters("total_rounds must be at least 1".into()));
    }
    Circuit::from_se_rounds(d, &vec![RoundKind::ISE; total_rounds])
}

/// Number of syndrome-extraction rounds in an S-2 circuit.
pub fn s2_round_count(n_pad: usize, n_m: usize) -> usize {
    2 * n_pad + n_m + 2
}

/// S-2: init, n_pad I-SE, S-SE, n_m I-SE, S-SE, n_pad I-SE, X readout.
pub fn build_s2(d: usize, n_pad: usize, n_m: usize) -> Result<Circuit> {
    if n_pad == 0 || n_m == 0 {
        return Err(Error::InvalidParameters(format!("n_pad and n_m must be positive, got {n_pad} and {n_m}")));
    }
    let mut se = vec![RoundKind::ISE; n_pad];
    se.push(RoundKind::SSE);
    se.extend(std::iter::repeat(RoundKind::ISE).take(n_m));
    se.push(RoundKind::SSE);
    se.extend(std::iter::repeat(RoundKind::ISE).take(n_pad));
    Circuit::from_se_rounds(d, &se)
}
