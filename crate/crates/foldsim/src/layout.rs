//! Rotated surface code patch: qubit positions, CNOT schedule and the fold
//! used by the S-SE round.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{Coord, Pauli};

/// CNOT offsets (doubled) from an X ancilla to its data qubits, one per layer.
pub const X_ORDER: [(i32, i32); 4] = [(1, -1), (1, 1), (-1, -1), (-1, 1)];
/// CNOT offsets for Z ancillas. Layers 2 and 3 are swapped relative to X.
pub const Z_ORDER: [(i32, i32); 4] = [(1, -1), (-1, -1), (1, 1), (-1, 1)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhaseGate {
    S,
    Sdag,
}

#[derive(Clone, Debug)]
pub struct Layout {
    pub distance: usize,
    pub data: Vec<Coord>,
    pub ancilla_x: Vec<Coord>,
    pub ancilla_z: Vec<Coord>,
    /// Data qubits of each ancilla in CNOT order; `None` marks a layer the
    /// ancilla sits out (boundary plaquettes).
    pub stabilizer_support: BTreeMap<Coord, [Option<Coord>; 4]>,
    pub fold_phase_targets: Vec<(Coord, PhaseGate)>,
    pub fold_cz_pairs: Vec<(Coord, Coord)>,
}

/// Which phase gate the data qubits on the fold diagonal receive; the
/// diagonal ancillas get the other one. With this choice the fold realises
/// logical S rather than S†.
const DATA_DIAGONAL_GATE: PhaseGate = PhaseGate::S;

impl Layout {
    pub fn new(d: usize) -> Result<Self> {
        if d < 3 || d % 2 == 0 {
            return Err(Error::InvalidDistance(d));
        }
        let n = d as i32;
        let data: Vec<Coord> =
            (0..n).flat_map(|y| (0..n).map(move |x| Coord::new(2 * x, 2 * y))).collect();
        let is_data = |c: Coord| c.x2 >= 0 && c.y2 >= 0 && c.x2 <= 2 * (n - 1) && c.y2 <= 2 * (n - 1);

        let mut ancilla_x = Vec::new();
        let mut ancilla_z = Vec::new();
        for j in -1..n {
            for i in -1..n {
                let x_type = (i + j).rem_euclid(2) == 0;
                let bulk_i = (0..n - 1).contains(&i);
                let bulk_j = (0..n - 1).contains(&j);
                let keep = match (bulk_i, bulk_j) {
                    (true, true) => true,
                    (false, true) => x_type,
                    (true, false) => !x_type,
                    (false, false) => false,
                };
                if !keep {
                    continue;
                }
                let c = Coord::new(2 * i + 1, 2 * j + 1);
                if x_type {
                    ancilla_x.push(c);
                } else {
                    ancilla_z.push(c);
                }
            }
        }
        ancilla_x.sort();
        ancilla_z.sort();

        let mut stabilizer_support = BTreeMap::new();
        for (ancillas, order) in [(&ancilla_x, X_ORDER), (&ancilla_z, Z_ORDER)] {
            for &a in ancillas {
                let support = order.map(|(dx, dy)| Some(a.offset(dx, dy)).filter(|&q| is_data(q)));
                stabilizer_support.insert(a, support);
            }
        }

        let is_bulk_ancilla = |c: Coord| c.x2 > 0 && c.y2 > 0 && c.x2 < 2 * (n - 1) && c.y2 < 2 * (n - 1);
        let code_qubits: Vec<Coord> = data
            .iter()
            .copied()
            .chain(ancilla_x.iter().chain(&ancilla_z).copied().filter(|&c| is_bulk_ancilla(c)))
            .collect();
        let other = match DATA_DIAGONAL_GATE {
            PhaseGate::S => PhaseGate::Sdag,
            PhaseGate::Sdag => PhaseGate::S,
        };
        let mut fold_phase_targets: Vec<(Coord, PhaseGate)> = code_qubits
            .iter()
            .filter(|c| c.x2 == c.y2)
            .map(|&c| (c, if c.is_data() { DATA_DIAGONAL_GATE } else { other }))
            .collect();
        fold_phase_targets.sort();
        let mut fold_cz_pairs: Vec<(Coord, Coord)> =
            code_qubits.iter().filter(|c| c.x2 < c.y2).map(|&c| (c, c.transpose())).collect();
        fold_cz_pairs.sort();

        let mut data = data;
        data.sort();
        Ok(Self { distance: d, data, ancilla_x, ancilla_z, stabilizer_support, fold_phase_targets, fold_cz_pairs })
    }

    pub fn ancillas(&self) -> impl Iterator<Item = Coord> + '_ {
        self.ancilla_x.iter().chain(&self.ancilla_z).copied()
    }

    /// All qubits in sorted coordinate order.
    pub fn all_qubits(&self) -> Vec<Coord> {
        let mut all: Vec<Coord> = self.data.iter().copied().chain(self.ancillas()).collect();
        all.sort();
        all
    }

    pub fn is_x_ancilla(&self, c: Coord) -> bool {
        self.ancilla_x.binary_search(&c).is_ok()
    }

    pub fn is_z_ancilla(&self, c: Coord) -> bool {
        self.ancilla_z.binary_search(&c).is_ok()
    }

    /// Stabilizer basis measured by an ancilla.
    pub fn ancilla_basis(&self, c: Coord) -> Option<Pauli> {
        if self.is_x_ancilla(c) {
            Some(Pauli::X)
        } else if self.is_z_ancilla(c) {
            Some(Pauli::Z)
        } else {
            None
        }
    }

    /// Data qubits of the plaquette measured by `ancilla`.
    pub fn plaquette(&self, ancilla: Coord) -> Vec<Coord> {
        self.stabilizer_support
            .get(&ancilla)
            .map(|s| {
                let mut v: Vec<Coord> = s.iter().flatten().copied().collect();
                v.sort();
                v
            })
            .unwrap_or_default()
    }

    /// Ancillas whose plaquette is on the patch edge (weight two).
    pub fn is_boundary_ancilla(&self, c: Coord) -> bool {
        let hi = 2 * self.distance as i32 - 1;
        c.x2 == -1 || c.y2 == -1 || c.x2 == hi || c.y2 == hi
    }

    /// Logical X̄ representative: X on the data row y = 0.
    pub fn logical_x_row(&self) -> Vec<Coord> {
        self.data.iter().copied().filter(|c| c.y2 == 0).collect()
    }

    /// Logical Z̄ representative: Z on the data column x = 0.
    pub fn logical_z_column(&self) -> Vec<Coord> {
        self.data.iter().copied().filter(|c| c.x2 == 0).collect()
    }

    /// Qubits touched by the fold layer.
    pub fn fold_qubits(&self) -> Vec<Coord> {
        let mut v: Vec<Coord> = self
            .fold_phase_targets
            .iter()
            .map(|(c, _)| *c)
            .chain(self.fold_cz_pairs.iter().flat_map(|&(a, b)| [a, b]))
            .collect();
        v.sort();
        v
    }

    /// x2 − y2, constant along a diagonal line.
    pub fn diagonal(c: Coord) -> i32 {
        c.x2 - c.y2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        for d in [3usize, 5, 7, 9] {
            let l = Layout::new(d).unwrap();
            assert_eq!(l.data.len(), d * d);
            assert_eq!(l.ancilla_x.len() + l.ancilla_z.len(), d * d - 1);
            assert_eq!(l.ancilla_x.len(), l.ancilla_z.len());
            for a in l.ancillas() {
                let w = l.plaquette(a).len();
                assert_eq!(w, if l.is_boundary_ancilla(a) { 2 } else { 4 });
            }
        }
        assert!(Layout::new(4).is_err());
        assert!(Layout::new(1).is_err());
    }

    #[test]
    fn fold_shape_d3() {
        let l = Layout::new(3).unwrap();
        assert_eq!(l.fold_phase_targets.len(), 5);
        assert_eq!(l.fold_cz_pairs.len(), 4);
        assert_eq!(l.fold_qubits().len(), 13);
        for &(a, b) in &l.fold_cz_pairs {
            assert_eq!(a.transpose(), b);
        }
        assert!(l.fold_qubits().iter().all(|&c| !l.is_boundary_ancilla(c)));
    }

    #[test]
    fn stabilizers_commute() {
        let l = Layout::new(5).unwrap();
        for &x in &l.ancilla_x {
            for &z in &l.ancilla_z {
                let px = l.plaquette(x);
                let overlap = l.plaquette(z).iter().filter(|q| px.contains(q)).count();
                assert_eq!(overlap % 2, 0, "{x} {z}");
            }
        }
    }
}
