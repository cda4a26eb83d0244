//! Circuit-level noise: depolarizing gates, flipped resets and measurements,
//! and a depolarizing step on data at the start of every SE round.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateKind};
use crate::error::{Error, Result};
use crate::geometry::{Coord, MidCycleLabel, Pauli, SparsePauli, Timestamp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NoiseKind {
    Depolarize1,
    Depolarize2,
    FlipMeasure,
    FlipReset,
    PreRoundDepolarize1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseChannel {
    pub id: usize,
    pub kind: NoiseKind,
    pub probability: f64,
    pub targets: Vec<Coord>,
    pub timestamp: Timestamp,
    /// The fault acts on the state right after this layer.
    pub after_layer: usize,
    /// Pauli applied by flip channels; identity for depolarizing ones.
    pub flip: Pauli,
}

impl NoiseChannel {
    /// Pauli components with their individual probabilities.
    pub fn components(&self) -> Vec<(SparsePauli, f64)> {
        match self.kind {
            NoiseKind::Depolarize1 | NoiseKind::PreRoundDepolarize1 => [Pauli::X, Pauli::Y, Pauli::Z]
                .into_iter()
                .map(|p| (SparsePauli::single(self.targets[0], p), self.probability / 3.0))
                .collect(),
            NoiseKind::Depolarize2 => {
                let mut out = Vec::with_capacity(15);
                for a in Pauli::ALL {
                    for b in Pauli::ALL {
                        if a == Pauli::I && b == Pauli::I {
                            continue;
                        }
                        let f = SparsePauli::from_paulis([(self.targets[0], a), (self.targets[1], b)]);
                        out.push((f, self.probability / 15.0));
                    }
                }
                out
            }
            NoiseKind::FlipMeasure | NoiseKind::FlipReset => {
                vec![(SparsePauli::single(self.targets[0], self.flip), self.probability)]
            }
        }
    }

    pub fn component_count(&self) -> usize {
        match self.kind {
            NoiseKind::Depolarize1 | NoiseKind::PreRoundDepolarize1 => 3,
            NoiseKind::Depolarize2 => 15,
            _ => 1,
        }
    }
}

impl fmt::Display for NoiseChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NOISE {:?} {}", self.kind, self.probability)?;
        if matches!(self.kind, NoiseKind::FlipMeasure | NoiseKind::FlipReset) {
            write!(f, " {}", self.flip)?;
        }
        for t in &self.targets {
            write!(f, " {t}")?;
        }
        write!(f, " @ {}", self.timestamp)
    }
}

/// Attaches noise of strength `p` to every operation. Zero-probability
/// channels are left out.
pub fn apply_noise(circuit: &Circuit, p: f64) -> Result<Circuit> {
    if !(0.0..0.5).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability(p));
    }
    let mut out = circuit.clone();
    out.noise_strength = p;
    out.noise.clear();
    if p == 0.0 {
        return Ok(out);
    }
    let mut channels = Vec::new();
    let mut push = |kind, targets: Vec<Coord>, timestamp, after_layer, flip| {
        channels.push(NoiseChannel { id: 0, kind, probability: p, targets, timestamp, after_layer, flip });
    };
    for (li, layer) in circuit.layers.iter().enumerate() {
        let round = layer.timestamp.round;
        if layer.timestamp.label == MidCycleLabel::PostReset && circuit.round_kinds[round as usize].is_se() {
            for &q in &circuit.layout.data {
                push(NoiseKind::PreRoundDepolarize1, vec![q], layer.timestamp, li, Pauli::I);
            }
        }
        for inst in &layer.instructions {
            match inst.kind {
                GateKind::ResetX | GateKind::ResetZ => {
                    let flip = if inst.kind == GateKind::ResetX { Pauli::Z } else { Pauli::X };
                    push(NoiseKind::FlipReset, inst.targets.clone(), layer.timestamp, li, flip);
                }
                GateKind::MeasX | GateKind::MeasZ => {
                    let flip = if inst.kind == GateKind::MeasX { Pauli::Z } else { Pauli::X };
                    let t = Timestamp::new(round, MidCycleLabel::PreMeasure);
                    push(NoiseKind::FlipMeasure, inst.targets.clone(), t, li - 1, flip);
                }
                GateKind::CX | GateKind::CZ => {
                    push(NoiseKind::Depolarize2, inst.targets.clone(), layer.timestamp, li, Pauli::I);
                }
                _ => push(NoiseKind::Depolarize1, inst.targets.clone(), layer.timestamp, li, Pauli::I),
            }
        }
    }
    channels.sort_by(|a, b| {
        (a.after_layer, a.kind, &a.targets).cmp(&(b.after_layer, b.kind, &b.targets))
    });
    for (i, ch) in channels.iter_mut().enumerate() {
        ch.id = i;
    }
    out.noise = channels;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_x_memory;

    #[test]
    fn structural_count_one_round() {
        let c = build_x_memory(3, 1).unwrap();
        let noisy = apply_noise(&c, 1e-3).unwrap();
        let gates: usize = c
            .layers
            .iter()
            .filter(|l| l.is_unitary())
            .map(|l| l.instructions.len())
            .sum();
        // 9 data resets + 8 ancilla resets, 8 ancilla + 9 data measurements.
        assert_eq!(noisy.noise.len(), gates + 17 + 17 + 9);
    }

    #[test]
    fn dep2_components() {
        let c = build_x_memory(3, 1).unwrap();
        let noisy = apply_noise(&c, 0.015).unwrap();
        let ch = noisy.noise.iter().find(|c| c.kind == NoiseKind::Depolarize2).unwrap();
        let comps = ch.components();
        assert_eq!(comps.len(), 15);
        assert!(comps.iter().all(|(_, q)| (q - 0.001).abs() < 1e-15));
    }

    #[test]
    fn rejects_large_p() {
        let c = build_x_memory(3, 1).unwrap();
        assert!(apply_noise(&c, 0.5).is_err());
        assert!(apply_noise(&c, -0.1).is_err());
        assert!(apply_noise(&c, 0.0).unwrap().noise.is_empty());
    }
}
