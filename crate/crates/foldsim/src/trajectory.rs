//! Forward propagation of reset-generated stabilizers through a circuit.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use crate::circuit::{Circuit, GateKind, Instruction, Layer, MeasurementLocation, ResetLocation};
use crate::error::{Error, Result};
use crate::geometry::{Coord, Pauli, Phase, SparsePauli, Timestamp};

/// Images of X and Z under each one- and two-qubit gate, as Paulis on
/// placeholder coordinates (0,0) and (1,0).
struct ImageTable {
    one: [[SparsePauli; 2]; 4],
    two: [[SparsePauli; 4]; 2],
}

const A: Coord = Coord::new(0, 0);
const B: Coord = Coord::new(1, 0);

fn image_table() -> &'static ImageTable {
    static TABLE: OnceLock<ImageTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let p = |items: &[(Coord, Pauli)]| SparsePauli::from_paulis(items.iter().copied());
        let x = p(&[(A, Pauli::X)]);
        let y = p(&[(A, Pauli::Y)]);
        let z = p(&[(A, Pauli::Z)]);
        ImageTable {
            // Order: Idle, H, S, Sdag; entries are images of X then Z.
            one: [
                [x.clone(), z.clone()],
                [z.clone(), x.clone()],
                [y.clone(), z.clone()],
                [y.negated(), z.clone()],
            ],
            // Order: CX(A->B), CZ(A,B); entries are images of X_A, Z_A, X_B, Z_B.
            two: [
                [p(&[(A, Pauli::X), (B, Pauli::X)]), p(&[(A, Pauli::Z)]), p(&[(B, Pauli::X)]), p(&[(A, Pauli::Z), (B, Pauli::Z)])],
                [p(&[(A, Pauli::X), (B, Pauli::Z)]), p(&[(A, Pauli::Z)]), p(&[(A, Pauli::Z), (B, Pauli::X)]), p(&[(B, Pauli::Z)])],
            ],
        }
    })
}

/// U P U† for a Pauli written as i^{xz} X^x Z^z per qubit.
fn conjugate_local(images: &[SparsePauli], locals: &[Pauli]) -> SparsePauli {
    let mut out = SparsePauli::identity();
    let mut power = 0u8;
    for (k, p) in locals.iter().enumerate() {
        if p.x_bit() {
            out.mul_assign_right(&images[2 * k]);
        }
        if p.z_bit() {
            out.mul_assign_right(&images[2 * k + 1]);
        }
        if *p == Pauli::Y {
            power += 1;
        }
    }
    out.set_phase(out.phase() * Phase::from_power(power));
    out
}

/// Conjugates `state` by one unitary instruction in place.
pub fn conjugate_instruction(state: &mut SparsePauli, inst: &Instruction) {
    let table = image_table();
    let locals: Vec<Pauli> = inst.targets.iter().map(|&t| state.get(t)).collect();
    if locals.iter().all(|p| p.is_identity()) {
        return;
    }
    let images: Vec<SparsePauli> = match inst.kind {
        GateKind::Idle => return,
        GateKind::H => table.one[1].to_vec(),
        GateKind::S => table.one[2].to_vec(),
        GateKind::Sdag => table.one[3].to_vec(),
        GateKind::CX => table.two[0].to_vec(),
        GateKind::CZ => table.two[1].to_vec(),
        _ => panic!("conjugate_instruction called on non-unitary {}", inst.kind.name()),
    };
    let local = conjugate_local(&images, &locals);
    state.set_phase(state.phase() * local.phase());
    for (k, &t) in inst.targets.iter().enumerate() {
        let placeholder = if k == 0 { A } else { B };
        state.set(t, local.get(placeholder));
    }
}

/// Clifford conjugation of `state` by a unitary layer.
pub fn propagate_layer(state: &SparsePauli, layer: &[Instruction]) -> SparsePauli {
    let mut out = state.clone();
    for inst in layer {
        conjugate_instruction(&mut out, inst);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Live,
    FullyAbsorbed,
    Annihilated { at: MeasurementLocation },
}

/// States of a stabilizer generated by a set of resets, one per layer after
/// the first reset for as long as the state is non-trivial.
#[derive(Clone, Debug)]
pub struct StabilizerTrajectory {
    pub origin: Vec<ResetLocation>,
    /// (layer index, timestamp, state after that layer).
    pub states: Vec<(usize, Timestamp, SparsePauli)>,
    pub absorbed_by: Vec<MeasurementLocation>,
    pub status: TrajectoryStatus,
    /// State after the last propagated layer.
    pub residual: SparsePauli,
    pub last_layer: usize,
}

impl StabilizerTrajectory {
    /// State in effect right after layer `layer`; identity outside the region.
    pub fn state_after_layer(&self, layer: usize) -> Option<&SparsePauli> {
        self.states.binary_search_by(|(l, _, _)| l.cmp(&layer)).ok().map(|i| &self.states[i].2)
    }

    /// State in effect at `timestamp`: that of the latest layer not after it.
    pub fn state_at(&self, circuit: &Circuit, timestamp: Timestamp) -> Option<&SparsePauli> {
        circuit.layer_at_or_before(timestamp).and_then(|l| self.state_after_layer(l))
    }

    /// Sign left over once fully absorbed, assuming all absorbed outcomes
    /// were 0. `true` means the outcome parity is odd in noiseless runs.
    pub fn reference_parity(&self) -> bool {
        self.status == TrajectoryStatus::FullyAbsorbed && self.residual.is_negative()
    }

    /// Pointwise product with another trajectory over the same circuit.
    pub fn product(&self, other: &StabilizerTrajectory) -> Vec<(usize, SparsePauli)> {
        let layers: BTreeSet<usize> =
            self.states.iter().map(|s| s.0).chain(other.states.iter().map(|s| s.0)).collect();
        layers
            .into_iter()
            .map(|l| {
                let a = self.state_after_layer(l).cloned().unwrap_or_default();
                let b = other.state_after_layer(l).cloned().unwrap_or_default();
                (l, &a * &b)
            })
            .filter(|(_, s)| !s.is_identity())
            .collect()
    }
}

/// Absorbs or annihilates against one measurement. Returns `Ok(true)` when
/// the measurement absorbed part of the state, `Err` with the location when it
/// annihilates it. `outcome` is the recorded bit.
pub fn step_measure(
    state: &mut SparsePauli,
    m: MeasurementLocation,
    outcome: bool,
) -> std::result::Result<bool, MeasurementLocation> {
    let here = state.get(m.coord);
    if here == Pauli::I {
        return Ok(false);
    }
    if here != m.basis {
        return Err(m);
    }
    state.mul_single(m.coord, m.basis);
    if outcome {
        state.negate();
    }
    Ok(true)
}

fn apply_layer(
    layer: &Layer,
    state: &mut SparsePauli,
    origin: &BTreeSet<ResetLocation>,
    absorbed: &mut Vec<MeasurementLocation>,
) -> Result<Option<MeasurementLocation>> {
    let round = layer.timestamp.round;
    for inst in &layer.instructions {
        match inst.kind {
            GateKind::ResetX | GateKind::ResetZ => {
                let q = inst.targets[0];
                let basis = inst.kind.basis().expect("reset has a basis");
                if state.get(q) != Pauli::I {
                    return Err(Error::Detector(format!("trajectory live on {q} when it is reset in round {round}")));
                }
                if origin.contains(&ResetLocation { basis, coord: q, round }) {
                    state.mul_single(q, basis);
                }
            }
            GateKind::MeasX | GateKind::MeasZ => {
                let m = MeasurementLocation { basis: inst.kind.basis().expect("measurement has a basis"), coord: inst.targets[0], round };
                match step_measure(state, m, false) {
                    Ok(true) => absorbed.push(m),
                    Ok(false) => {}
                    Err(at) => return Ok(Some(at)),
                }
            }
            _ => conjugate_instruction(state, inst),
        }
    }
    Ok(None)
}

/// Propagates the stabilizer generated by `origin` from its earliest reset
/// through layer `end_layer` (inclusive), stopping early once absorbed.
pub fn propagate(circuit: &Circuit, origin: &[ResetLocation], end_layer: usize) -> Result<StabilizerTrajectory> {
    let origin_set: BTreeSet<ResetLocation> = origin.iter().copied().collect();
    for r in &origin_set {
        let present = circuit
            .layer_index(Timestamp::new(r.round, crate::geometry::MidCycleLabel::PostReset))
            .map(|li| {
                circuit.layers[li]
                    .instructions
                    .iter()
                    .any(|i| i.kind.is_reset() && i.kind.basis() == Some(r.basis) && i.targets[0] == r.coord)
            })
            .unwrap_or(false);
        if !present {
            return Err(Error::Detector(format!("reset {r} does not occur in the circuit")));
        }
    }
    let first_round = origin_set.iter().map(|r| r.round).min().unwrap_or(0);
    let last_round = origin_set.iter().map(|r| r.round).max().unwrap_or(0);
    let start = circuit
        .layers
        .iter()
        .position(|l| l.timestamp.round >= first_round)
        .ok_or_else(|| Error::Detector("origin after the end of the circuit".into()))?;
    let mut state = SparsePauli::identity();
    let mut states = Vec::new();
    let mut absorbed = Vec::new();
    let mut status = TrajectoryStatus::Live;
    let mut last_layer = start;
    let mut introduced = 0usize;
    for li in start..=end_layer.min(circuit.layers.len() - 1) {
        let layer = &circuit.layers[li];
        last_layer = li;
        if let Some(at) = apply_layer(layer, &mut state, &origin_set, &mut absorbed)? {
            status = TrajectoryStatus::Annihilated { at };
            break;
        }
        introduced += layer
            .instructions
            .iter()
            .filter(|i| i.kind.is_reset())
            .filter(|i| {
                origin_set.contains(&ResetLocation {
                    basis: i.kind.basis().unwrap_or(Pauli::I),
                    coord: i.targets[0],
                    round: layer.timestamp.round,
                })
            })
            .count();
        if !state.is_identity() {
            states.push((li, layer.timestamp, state.clone()));
        } else if introduced == origin_set.len() && layer.timestamp.round >= last_round {
            status = TrajectoryStatus::FullyAbsorbed;
            break;
        }
    }
    Ok(StabilizerTrajectory { origin: origin_set.into_iter().collect(), states, absorbed_by: absorbed, status, residual: state, last_layer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MidCycleLabel;

    fn inst(kind: GateKind, targets: &[Coord]) -> Instruction {
        Instruction::new(kind, targets.to_vec(), Timestamp::new(0, MidCycleLabel::HalfCycle))
    }

    #[test]
    fn clifford_table() {
        let q = Coord::new(0, 0);
        let r = Coord::new(2, 0);
        let x = SparsePauli::single(q, Pauli::X);
        assert_eq!(propagate_layer(&x, &[inst(GateKind::S, &[q])]), SparsePauli::single(q, Pauli::Y));
        let y = SparsePauli::single(q, Pauli::Y);
        assert_eq!(propagate_layer(&y, &[inst(GateKind::S, &[q])]), SparsePauli::single(q, Pauli::X).negated());
        assert_eq!(
            propagate_layer(&x, &[inst(GateKind::CZ, &[q, r])]),
            SparsePauli::from_paulis([(q, Pauli::X), (r, Pauli::Z)])
        );
        assert_eq!(propagate_layer(&x, &[inst(GateKind::CX, &[q, r])]), SparsePauli::uniform([q, r], Pauli::X));
        let zt = SparsePauli::single(r, Pauli::Z);
        assert_eq!(propagate_layer(&zt, &[inst(GateKind::CX, &[q, r])]), SparsePauli::uniform([q, r], Pauli::Z));
        assert_eq!(propagate_layer(&y, &[inst(GateKind::H, &[q])]), y.clone().negated());
    }

    #[test]
    fn gates_preserve_products() {
        // Conjugation is a homomorphism, checked on all two-qubit Pauli pairs.
        let q = Coord::new(0, 0);
        let r = Coord::new(2, 0);
        for kind in [GateKind::CX, GateKind::CZ] {
            for a in Pauli::ALL {
                for b in Pauli::ALL {
                    for c in Pauli::ALL {
                        for e in Pauli::ALL {
                            let p1 = SparsePauli::from_paulis([(q, a), (r, b)]);
                            let p2 = SparsePauli::from_paulis([(q, c), (r, e)]);
                            let layer = [inst(kind, &[q, r])];
                            let lhs = propagate_layer(&(&p1 * &p2), &layer);
                            let rhs = &propagate_layer(&p1, &layer) * &propagate_layer(&p2, &layer);
                            assert_eq!(lhs, rhs);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn annihilation() {
        let mut s = SparsePauli::single(Coord::new(1, 1), Pauli::Z);
        let m = MeasurementLocation { basis: Pauli::X, coord: Coord::new(1, 1), round: 1 };
        assert_eq!(step_measure(&mut s, m, false), Err(m));
    }
}
