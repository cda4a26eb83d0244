//! Coordinates, single- and multi-qubit Paulis, and the mid-cycle clock.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// Qubit position in doubled coordinates. Data qubits sit on (even, even),
/// ancillas on (odd, odd).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub x2: i32,
    pub y2: i32,
}

impl Coord {
    pub const fn new(x2: i32, y2: i32) -> Self {
        Self { x2, y2 }
    }

    /// Shifted by a doubled-coordinate offset.
    pub fn offset(self, dx2: i32, dy2: i32) -> Self {
        Self::new(self.x2 + dx2, self.y2 + dy2)
    }

    pub fn is_data(self) -> bool {
        self.x2 % 2 == 0 && self.y2 % 2 == 0
    }

    pub fn is_ancilla(self) -> bool {
        self.x2.rem_euclid(2) == 1 && self.y2.rem_euclid(2) == 1
    }

    /// Mirror image about the main diagonal.
    pub fn transpose(self) -> Self {
        Self::new(self.y2, self.x2)
    }

    /// Undoubled position as floats.
    pub fn as_f64(self) -> (f64, f64) {
        (self.x2 as f64 / 2.0, self.y2 as f64 / 2.0)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x2, self.y2)
    }
}

impl FromStr for Coord {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| ParseError::new(format!("expected x2,y2 but got {s:?}")))?;
        let x2 = a.trim().parse().map_err(|_| ParseError::new(format!("bad x2 in {s:?}")))?;
        let y2 = b.trim().parse().map_err(|_| ParseError::new(format!("bad y2 in {s:?}")))?;
        Ok(Self::new(x2, y2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn x_bit(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn z_bit(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }

    pub fn anticommutes(self, other: Pauli) -> bool {
        self != Pauli::I && other != Pauli::I && self != other
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A power of i. `Phase(k)` is i^k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Product of two single-qubit Paulis: `a * b = phase * p`.
pub fn pauli_mul(a: Pauli, b: Pauli) -> (Pauli, Phase) {
    use Pauli::*;
    match (a, b) {
        (I, p) | (p, I) => (p, Phase::ONE),
        (X, X) | (Y, Y) | (Z, Z) => (I, Phase::ONE),
        (X, Y) => (Z, Phase::I),
        (Y, Z) => (X, Phase::I),
        (Z, X) => (Y, Phase::I),
        (Y, X) => (Z, Phase::MINUS_I),
        (Z, Y) => (X, Phase::MINUS_I),
        (X, Z) => (Y, Phase::MINUS_I),
    }
}

/// Multi-qubit Pauli keyed by coordinate.
///
/// The overall phase is kept as a power of i so products stay exact; every
/// Hermitian operator has a real phase and `sign` reports it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct SparsePauli {
    support: BTreeMap<Coord, Pauli>,
    phase: Phase,
}

impl SparsePauli {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(c: Coord, p: Pauli) -> Self {
        let mut out = Self::identity();
        out.set(c, p);
        out
    }

    pub fn from_paulis<I: IntoIterator<Item = (Coord, Pauli)>>(items: I) -> Self {
        let mut out = Self::identity();
        for (c, p) in items {
            out.mul_single(c, p);
        }
        out
    }

    /// The same Pauli on every listed coordinate.
    pub fn uniform<I: IntoIterator<Item = Coord>>(coords: I, p: Pauli) -> Self {
        Self::from_paulis(coords.into_iter().map(|c| (c, p)))
    }

    pub fn get(&self, c: Coord) -> Pauli {
        self.support.get(&c).copied().unwrap_or(Pauli::I)
    }

    /// Overwrites the Pauli at `c` without phase bookkeeping.
    pub fn set(&mut self, c: Coord, p: Pauli) {
        if p == Pauli::I {
            self.support.remove(&c);
        } else {
            self.support.insert(c, p);
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    /// +1 or −1 for Hermitian operators; `None` when the phase is ±i.
    pub fn sign(&self) -> Option<i8> {
        match self.phase.power() {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.phase == Phase::MINUS_ONE
    }

    pub fn negate(&mut self) {
        self.phase = self.phase * Phase::MINUS_ONE;
    }

    pub fn negated(mut self) -> Self {
        self.negate();
        self
    }

    /// Drops the phase.
    pub fn unsigned(&self) -> Self {
        Self { support: self.support.clone(), phase: Phase::ONE }
    }

    /// True when the support is empty, whatever the phase.
    pub fn is_identity(&self) -> bool {
        self.support.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coord, Pauli)> + '_ {
        self.support.iter().map(|(c, p)| (*c, *p))
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        self.support.keys().copied()
    }

    /// Left-multiplies in place by a single-qubit Pauli: `self <- P_c * self`.
    pub fn mul_single(&mut self, c: Coord, p: Pauli) {
        let (q, ph) = pauli_mul(p, self.get(c));
        self.phase = self.phase * ph;
        self.set(c, q);
    }

    /// Right-multiplies in place: `self <- self * other`.
    pub fn mul_assign_right(&mut self, other: &SparsePauli) {
        self.phase = self.phase * other.phase;
        for (c, p) in other.iter() {
            let (q, ph) = pauli_mul(self.get(c), p);
            self.phase = self.phase * ph;
            self.set(c, q);
        }
    }

    pub fn commutes(&self, other: &SparsePauli) -> bool {
        commutes(self, other)
    }

    /// X component (X where the entry has an X bit), unsigned.
    pub fn x_part(&self) -> SparsePauli {
        Self::uniform(self.iter().filter(|(_, p)| p.x_bit()).map(|(c, _)| c), Pauli::X)
    }

    /// Z component (Z where the entry has a Z bit), unsigned.
    pub fn z_part(&self) -> SparsePauli {
        Self::uniform(self.iter().filter(|(_, p)| p.z_bit()).map(|(c, _)| c), Pauli::Z)
    }

    pub fn restrict<F: Fn(Coord) -> bool>(&self, keep: F) -> SparsePauli {
        Self {
            support: self.support.iter().filter(|(c, _)| keep(**c)).map(|(c, p)| (*c, *p)).collect(),
            phase: self.phase,
        }
    }
}

impl Mul for &SparsePauli {
    type Output = SparsePauli;
    fn mul(self, rhs: &SparsePauli) -> SparsePauli {
        let mut out = self.clone();
        out.mul_assign_right(rhs);
        out
    }
}

impl Mul for SparsePauli {
    type Output = SparsePauli;
    fn mul(mut self, rhs: SparsePauli) -> SparsePauli {
        self.mul_assign_right(&rhs);
        self
    }
}

impl fmt::Display for SparsePauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.power() {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}")?;
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for (c, p) in self.iter() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{p}({c})")?;
        }
        Ok(())
    }
}

/// True iff `a` and `b` commute, i.e. they disagree non-trivially on an even
/// number of qubits.
pub fn commutes(a: &SparsePauli, b: &SparsePauli) -> bool {
    let (small, large) = if a.weight() <= b.weight() { (a, b) } else { (b, a) };
    small.iter().filter(|(c, p)| p.anticommutes(large.get(*c))).count() % 2 == 0
}

/// Checkpoints within one round, in circuit order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MidCycleLabel {
    PostReset,
    AfterLayer1,
    HalfCycle,
    PostS,
    WaningCrescent,
    PreMeasure,
    EndCycle,
}

impl MidCycleLabel {
    pub const ALL: [MidCycleLabel; 7] = [
        MidCycleLabel::PostReset,
        MidCycleLabel::AfterLayer1,
        MidCycleLabel::HalfCycle,
        MidCycleLabel::PostS,
        MidCycleLabel::WaningCrescent,
        MidCycleLabel::PreMeasure,
        MidCycleLabel::EndCycle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MidCycleLabel::PostReset => "post-reset",
            MidCycleLabel::AfterLayer1 => "after-layer-1",
            MidCycleLabel::HalfCycle => "half-cycle",
            MidCycleLabel::PostS => "post-s",
            MidCycleLabel::WaningCrescent => "waning-crescent",
            MidCycleLabel::PreMeasure => "pre-measure",
            MidCycleLabel::EndCycle => "end-cycle",
        }
    }
}

impl FromStr for MidCycleLabel {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MidCycleLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| ParseError::new(format!("unknown label {s:?}")))
    }
}

/// A point in circuit time. Ordered by round first, then label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp {
    pub round: u32,
    pub label: MidCycleLabel,
}

impl Timestamp {
    pub const fn new(round: u32, label: MidCycleLabel) -> Self {
        Self { round, label }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.label.name(), self.round)
    }
}

impl FromStr for Timestamp {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (l, r) = s
            .split_once(':')
            .ok_or_else(|| ParseError::new(format!("expected label:round, got {s:?}")))?;
        let round = r.parse().map_err(|_| ParseError::new(format!("bad round in {s:?}")))?;
        Ok(Self::new(round, l.parse()?))
    }
}

pub fn timestamp_before(a: Timestamp, b: Timestamp) -> bool {
    a < b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_products() {
        assert_eq!(pauli_mul(Pauli::X, Pauli::X), (Pauli::I, Phase::ONE));
        assert_eq!(pauli_mul(Pauli::X, Pauli::Z), (Pauli::Y, Phase::MINUS_I));
        assert_eq!(pauli_mul(Pauli::Z, Pauli::X), (Pauli::Y, Phase::I));
        assert_eq!(pauli_mul(Pauli::I, Pauli::Z), (Pauli::Z, Phase::ONE));
    }

    #[test]
    fn commutation_examples() {
        let a = Coord::new(0, 0);
        let b = Coord::new(1, 0);
        let x = SparsePauli::single(a, Pauli::X);
        assert!(!commutes(&x, &SparsePauli::single(a, Pauli::Z)));
        assert!(commutes(&SparsePauli::uniform([a, b], Pauli::X), &SparsePauli::uniform([a, b], Pauli::Z)));
        assert!(commutes(&x, &SparsePauli::single(Coord::new(2, 0), Pauli::Z)));
    }

    #[test]
    fn y_is_i_x_z() {
        let c = Coord::new(0, 0);
        let mut y = SparsePauli::single(c, Pauli::X) * SparsePauli::single(c, Pauli::Z);
        y.set_phase(y.phase() * Phase::I);
        assert_eq!(y, SparsePauli::single(c, Pauli::Y));
    }

    #[test]
    fn timestamp_order() {
        use MidCycleLabel::*;
        assert!(timestamp_before(Timestamp::new(3, HalfCycle), Timestamp::new(3, PostS)));
        assert!(timestamp_before(Timestamp::new(2, EndCycle), Timestamp::new(3, PostReset)));
        assert!(!timestamp_before(Timestamp::new(5, PreMeasure), Timestamp::new(5, PreMeasure)));
    }

    #[test]
    fn coord_roundtrip() {
        for x2 in -3..30 {
            for y2 in -3..30 {
                let c = Coord::new(x2, y2);
                assert_eq!(c.to_string().parse::<Coord>().unwrap(), c);
            }
        }
        let t = Timestamp::new(4, MidCycleLabel::WaningCrescent);
        assert_eq!(t.to_string().parse::<Timestamp>().unwrap(), t);
    }
}
