//! Index-based form of a circuit shared by the simulators.

use std::collections::HashMap;

use crate::circuit::{Circuit, GateKind, MeasurementLocation};
use crate::detectors::DetectorSet;
use crate::geometry::{Coord, SparsePauli, Timestamp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    ResetX(u32),
    ResetZ(u32),
    /// Qubit and measurement record index.
    MeasX(u32, u32),
    MeasZ(u32, u32),
    H(u32),
    S(u32),
    Sdag(u32),
    CX(u32, u32),
    CZ(u32, u32),
}

#[derive(Clone, Debug)]
pub struct Program {
    pub qubits: Vec<Coord>,
    pub index: HashMap<Coord, u32>,
    pub layers: Vec<Vec<Op>>,
    pub timestamps: Vec<Timestamp>,
    pub measurements: Vec<MeasurementLocation>,
    pub measurement_index: HashMap<MeasurementLocation, usize>,
}

impl Program {
    pub fn new(circuit: &Circuit) -> Self {
        let qubits = circuit.layout.all_qubits();
        let index: HashMap<Coord, u32> = qubits.iter().enumerate().map(|(i, c)| (*c, i as u32)).collect();
        let mut measurements = Vec::new();
        let mut layers = Vec::with_capacity(circuit.layers.len());
        for layer in &circuit.layers {
            let mut ops = Vec::with_capacity(layer.instructions.len());
            for inst in &layer.instructions {
                let q = |k: usize| index[&inst.targets[k]];
                let op = match inst.kind {
                    GateKind::Idle => continue,
                    GateKind::ResetX => Op::ResetX(q(0)),
                    GateKind::ResetZ => Op::ResetZ(q(0)),
                    GateKind::MeasX | GateKind::MeasZ => {
                        let m = MeasurementLocation {
                            basis: inst.kind.basis().expect("measurement basis"),
                            coord: inst.targets[0],
                            round: layer.timestamp.round,
                        };
                        let k = measurements.len() as u32;
                        measurements.push(m);
                        if inst.kind == GateKind::MeasX {
                            Op::MeasX(q(0), k)
                        } else {
                            Op::MeasZ(q(0), k)
                        }
                    }
                    GateKind::H => Op::H(q(0)),
                    GateKind::S => Op::S(q(0)),
                    GateKind::Sdag => Op::Sdag(q(0)),
                    GateKind::CX => Op::CX(q(0), q(1)),
                    GateKind::CZ => Op::CZ(q(0), q(1)),
                };
                ops.push(op);
            }
            layers.push(ops);
        }
        let measurement_index = measurements.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        Self { qubits, index, layers, timestamps: circuit.layers.iter().map(|l| l.timestamp).collect(), measurements, measurement_index }
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Sparse Pauli as (qubit index, x, z) triples.
    pub fn pauli_bits(&self, p: &SparsePauli) -> Vec<(u32, bool, bool)> {
        p.iter().map(|(c, q)| (self.index[&c], q.x_bit(), q.z_bit())).collect()
    }

    /// Measurement record indices of every detector and of the observable.
    pub fn detector_measurements(&self, set: &DetectorSet) -> (Vec<Vec<u32>>, Vec<u32>) {
        let dets = set
            .detectors
            .iter()
            .map(|d| d.measurements.iter().map(|m| self.measurement_index[m] as u32).collect())
            .collect();
        let obs = set.logical.measurements.iter().map(|m| self.measurement_index[m] as u32).collect();
        (dets, obs)
    }
}
