//! Stabilizer tableau simulator (Aaronson–Gottesman) used as a reference.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::geometry::{Pauli, SparsePauli, Timestamp};
use crate::program::{Op, Program};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub x: Vec<u64>,
    pub z: Vec<u64>,
    pub sign: bool,
}

impl Row {
    fn zeros(words: usize) -> Self {
        Self { x: vec![0; words], z: vec![0; words], sign: false }
    }

    fn x_bit(&self, q: usize) -> bool {
        self.x[q / 64] >> (q % 64) & 1 == 1
    }

    fn z_bit(&self, q: usize) -> bool {
        self.z[q / 64] >> (q % 64) & 1 == 1
    }

    fn set(&mut self, q: usize, x: bool, z: bool) {
        let (w, b) = (q / 64, q % 64);
        self.x[w] = self.x[w] & !(1 << b) | (x as u64) << b;
        self.z[w] = self.z[w] & !(1 << b) | (z as u64) << b;
    }

    pub fn pauli(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x_bit(q), self.z_bit(q))
    }

    fn anticommutes(&self, other: &Row) -> bool {
        let mut acc = 0u32;
        for k in 0..self.x.len() {
            acc ^= ((self.x[k] & other.z[k]) ^ (self.z[k] & other.x[k])).count_ones() & 1;
        }
        acc == 1
    }

    /// self <- self * rhs, returning the power of i left over (before signs).
    fn mul_assign(&mut self, rhs: &Row) -> u32 {
        let mut cnt1 = 0u64;
        let mut cnt2 = 0u64;
        for k in 0..self.x.len() {
            let (ox, oz) = (self.x[k], self.z[k]);
            let (x2, z2) = (rhs.x[k], rhs.z[k]);
            self.x[k] ^= x2;
            self.z[k] ^= z2;
            let x1z2 = ox & z2;
            let anti = (x2 & oz) ^ x1z2;
            cnt2 ^= (cnt1 ^ self.x[k] ^ self.z[k] ^ x1z2) & anti;
            cnt1 ^= anti;
        }
        (cnt1.count_ones() + 2 * cnt2.count_ones()) & 3
    }

    /// Product of two commuting Hermitian rows with the sign tracked.
    fn mul_hermitian(&mut self, rhs: &Row) {
        let log_i = self.mul_assign(rhs) + 2 * (self.sign as u32) + 2 * (rhs.sign as u32);
        debug_assert_eq!(log_i % 2, 0, "product of anticommuting rows");
        self.sign = log_i & 3 == 2;
    }

    fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    words: usize,
    /// Rows 0..n are destabilizers, n..2n stabilizers.
    rows: Vec<Row>,
}

impl Tableau {
    /// The all-|0⟩ state on `n` qubits.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        let mut rows = vec![Row::zeros(words); 2 * n];
        for q in 0..n {
            rows[q].set(q, true, false);
            rows[n + q].set(q, false, true);
        }
        Self { n, words, rows }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn stabilizers(&self) -> &[Row] {
        &self.rows[self.n..]
    }

    pub fn h(&mut self, q: usize) {
        for r in &mut self.rows {
            let (x, z) = (r.x_bit(q), r.z_bit(q));
            r.sign ^= x & z;
            r.set(q, z, x);
        }
    }

    pub fn s(&mut self, q: usize) {
        for r in &mut self.rows {
            let (x, z) = (r.x_bit(q), r.z_bit(q));
            r.sign ^= x & z;
            r.set(q, x, z ^ x);
        }
    }

    pub fn sdag(&mut self, q: usize) {
        for r in &mut self.rows {
            let (x, z) = (r.x_bit(q), r.z_bit(q));
            r.sign ^= x & !z;
            r.set(q, x, z ^ x);
        }
    }

    pub fn cx(&mut self, c: usize, t: usize) {
        for r in &mut self.rows {
            let (xc, zc, xt, zt) = (r.x_bit(c), r.z_bit(c), r.x_bit(t), r.z_bit(t));
            r.sign ^= xc & zt & !(xt ^ zc);
            r.set(t, xt ^ xc, zt);
            r.set(c, xc, zc ^ zt);
        }
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        self.h(b);
        self.cx(a, b);
        self.h(b);
    }

    /// Applies a Pauli operator to the state.
    pub fn apply_pauli(&mut self, bits: &[(u32, bool, bool)]) {
        let mut p = Row::zeros(self.words);
        for &(q, x, z) in bits {
            p.set(q as usize, x, z);
        }
        for r in &mut self.rows {
            r.sign ^= r.anticommutes(&p);
        }
    }

    /// Z measurement. `coin` supplies the outcome of a random measurement.
    /// Returns (outcome, was_random).
    pub fn measure_z(&mut self, q: usize, coin: &mut dyn FnMut() -> bool) -> (bool, bool) {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&i| self.rows[i].x_bit(q)) {
            let pivot = self.rows[p].clone();
            for i in 0..2 * n {
                if i != p && self.rows[i].x_bit(q) {
                    if i >= n {
                        self.rows[i].mul_hermitian(&pivot);
                    } else {
                        self.rows[i].mul_assign(&pivot);
                    }
                }
            }
            self.rows[p - n] = pivot;
            let outcome = coin();
            let mut row = Row::zeros(self.words);
            row.set(q, false, true);
            row.sign = outcome;
            self.rows[p] = row;
            (outcome, true)
        } else {
            let mut scratch = Row::zeros(self.words);
            for i in 0..n {
                if self.rows[i].x_bit(q) {
                    scratch.mul_hermitian(&self.rows[i + n]);
                }
            }
            (scratch.sign, false)
        }
    }

    pub fn measure_x(&mut self, q: usize, coin: &mut dyn FnMut() -> bool) -> (bool, bool) {
        self.h(q);
        let out = self.measure_z(q, coin);
        self.h(q);
        out
    }

    pub fn reset_z(&mut self, q: usize, coin: &mut dyn FnMut() -> bool) {
        let (outcome, _) = self.measure_z(q, coin);
        if outcome {
            self.apply_pauli(&[(q as u32, true, false)]);
        }
    }

    pub fn reset_x(&mut self, q: usize, coin: &mut dyn FnMut() -> bool) {
        self.h(q);
        self.reset_z(q, coin);
        self.h(q);
    }

    fn row_from(&self, bits: &[(u32, bool, bool)], negative: bool) -> Row {
        let mut p = Row::zeros(self.words);
        for &(q, x, z) in bits {
            p.set(q as usize, x, z);
        }
        p.sign = negative;
        p
    }

    /// `Some(v)` when the Hermitian Pauli `bits` (with sign `negative`) is a
    /// stabilizer up to sign, v being true iff its eigenvalue is −1.
    pub fn expectation(&self, bits: &[(u32, bool, bool)], negative: bool) -> Option<bool> {
        let p = self.row_from(bits, negative);
        if self.stabilizers().iter().any(|s| s.anticommutes(&p)) {
            return None;
        }
        let mut acc = Row::zeros(self.words);
        for i in 0..self.n {
            if self.rows[i].anticommutes(&p) {
                acc.mul_hermitian(&self.rows[i + self.n]);
            }
        }
        debug_assert!(acc.x == p.x && acc.z == p.z);
        Some(acc.sign ^ p.sign)
    }

    /// Relabels qubit `q` as `perm[q]`.
    pub fn permute(&mut self, perm: &[usize]) {
        for r in &mut self.rows {
            let mut nr = Row::zeros(self.words);
            nr.sign = r.sign;
            for (q, &to) in perm.iter().enumerate() {
                nr.set(to, r.x_bit(q), r.z_bit(q));
            }
            *r = nr;
        }
    }

    /// Row-reduced stabilizer generators; columns ordered qubit by qubit,
    /// X before Z. Each generator is rendered as a sign and a Pauli string.
    pub fn canonical_form(&self) -> Vec<String> {
        canonical_rows(self.stabilizers().to_vec(), self.n)
            .iter()
            .map(|r| render(r, self.n, true))
            .collect()
    }

    /// Canonical form with signs dropped.
    pub fn canonical_form_unsigned(&self) -> Vec<String> {
        canonical_rows(self.stabilizers().to_vec(), self.n)
            .iter()
            .map(|r| render(r, self.n, false))
            .collect()
    }

    /// Canonical generators of the subgroup supported only on `keep`.
    pub fn canonical_subgroup(&self, keep: &[bool], signed: bool) -> Vec<String> {
        // Eliminate the dropped qubits first; rows left with no pivot there
        // live on `keep` only.
        let order: Vec<usize> = (0..self.n).filter(|&q| !keep[q]).chain((0..self.n).filter(|&q| keep[q])).collect();
        let rows = reduce(self.stabilizers().to_vec(), &order);
        rows.iter()
            .filter(|r| (0..self.n).all(|q| keep[q] || (!r.x_bit(q) && !r.z_bit(q))))
            .map(|r| render(r, self.n, signed))
            .collect()
    }
}

fn reduce(mut rows: Vec<Row>, qubit_order: &[usize]) -> Vec<Row> {
    let mut pivot_row = 0;
    for &q in qubit_order {
        for which in 0..2 {
            let has = |r: &Row| if which == 0 { r.x_bit(q) } else { r.z_bit(q) };
            let Some(p) = (pivot_row..rows.len()).find(|&i| has(&rows[i])) else { continue };
            rows.swap(pivot_row, p);
            let pivot = rows[pivot_row].clone();
            for (i, r) in rows.iter_mut().enumerate() {
                if i != pivot_row && has(r) {
                    r.mul_hermitian(&pivot);
                }
            }
            pivot_row += 1;
        }
    }
    rows.retain(|r| !r.is_identity());
    rows
}

/// Unsigned canonical form of the group generated by Pauli products given
/// as `(qubit, Pauli)` lists; comparable with `canonical_form_unsigned`.
pub fn canonical_group(n: usize, generators: &[Vec<(usize, Pauli)>]) -> Vec<String> {
    let words = n.div_ceil(64).max(1);
    let rows = generators
        .iter()
        .map(|g| {
            let mut r = Row::zeros(words);
            for &(q, p) in g {
                r.set(q, r.x_bit(q) ^ p.x_bit(), r.z_bit(q) ^ p.z_bit());
            }
            r
        })
        .collect();
    canonical_rows(rows, n).iter().map(|r| render(r, n, false)).collect()
}

fn canonical_rows(rows: Vec<Row>, n: usize) -> Vec<Row> {
    let order: Vec<usize> = (0..n).collect();
    reduce(rows, &order)
}

fn render(r: &Row, n: usize, signed: bool) -> String {
    let mut s = String::with_capacity(n + 1);
    if signed {
        s.push(if r.sign { '-' } else { '+' });
    }
    s.extend((0..n).map(|q| r.pauli(q).symbol()));
    s
}

/// How random measurement outcomes are chosen.
#[derive(Clone, Copy, Debug)]
pub enum Outcomes {
    /// Every random outcome is 0.
    Zero,
    Seeded(u64),
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub snapshots: Vec<Timestamp>,
    /// Pauli faults applied right after the given layer.
    pub faults: Vec<(usize, SparsePauli)>,
}

#[derive(Clone, Debug)]
pub struct ReferenceRun {
    pub record: Vec<bool>,
    pub random: Vec<bool>,
    pub snapshots: BTreeMap<Timestamp, Tableau>,
    pub final_state: Tableau,
}

/// Runs the circuit on a tableau, ignoring its noise channels.
pub fn reference_run(circuit: &Circuit, outcomes: Outcomes, options: &RunOptions) -> Result<ReferenceRun> {
    let program = Program::new(circuit);
    run_program(&program, outcomes, options)
}

pub fn run_program(program: &Program, outcomes: Outcomes, options: &RunOptions) -> Result<ReferenceRun> {
    let mut t = Tableau::new(program.num_qubits());
    let mut rng = match outcomes {
        Outcomes::Zero => None,
        Outcomes::Seeded(s) => Some(ChaCha8Rng::seed_from_u64(s)),
    };
    let mut coin = move || rng.as_mut().map(|r| r.gen::<bool>()).unwrap_or(false);
    let mut record = vec![false; program.measurements.len()];
    let mut random = vec![false; program.measurements.len()];
    let mut snapshots = BTreeMap::new();
    for (li, ops) in program.layers.iter().enumerate() {
        for &op in ops {
            match op {
                Op::ResetX(q) => t.reset_x(q as usize, &mut coin),
                Op::ResetZ(q) => t.reset_z(q as usize, &mut coin),
                Op::MeasX(q, k) => {
                    let (o, r) = t.measure_x(q as usize, &mut coin);
                    record[k as usize] = o;
                    random[k as usize] = r;
                }
                Op::MeasZ(q, k) => {
                    let (o, r) = t.measure_z(q as usize, &mut coin);
                    record[k as usize] = o;
                    random[k as usize] = r;
                }
                Op::H(q) => t.h(q as usize),
                Op::S(q) => t.s(q as usize),
                Op::Sdag(q) => t.sdag(q as usize),
                Op::CX(a, b) => t.cx(a as usize, b as usize),
                Op::CZ(a, b) => t.cz(a as usize, b as usize),
            }
        }
        for (_, f) in options.faults.iter().filter(|(l, _)| *l == li) {
            t.apply_pauli(&program.pauli_bits(f));
        }
        let ts = program.timestamps[li];
        if options.snapshots.contains(&ts) {
            snapshots.insert(ts, t.clone());
        }
    }
    for s in &options.snapshots {
        if !snapshots.contains_key(s) {
            return Err(Error::Simulation(format!("no layer at snapshot time {s}")));
        }
    }
    Ok(ReferenceRun { record, random, snapshots, final_state: t })
}

/// Canonical generators of the state at `timestamp` in a noiseless run with
/// all random outcomes set to 0.
pub fn stabilizer_group_at(circuit: &Circuit, timestamp: Timestamp) -> Result<Vec<String>> {
    let run = reference_run(circuit, Outcomes::Zero, &RunOptions { snapshots: vec![timestamp], faults: vec![] })?;
    Ok(run.snapshots[&timestamp].canonical_form())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Coord;

    fn sp_row(p: &SparsePauli, n: usize) -> Row {
        let mut r = Row::zeros(n.div_ceil(64));
        for (c, q) in p.iter() {
            r.set(c.x2 as usize, q.x_bit(), q.z_bit());
        }
        r
    }

    #[test]
    fn row_product_matches_sparse() {
        let n = 3;
        let coords: Vec<Coord> = (0..n).map(|i| Coord::new(i as i32, 0)).collect();
        let all: Vec<SparsePauli> = (0..64)
            .map(|k| SparsePauli::from_paulis(coords.iter().enumerate().map(|(i, &c)| (c, Pauli::ALL[(k >> (2 * i)) & 3]))))
            .collect();
        for a in &all {
            for b in &all {
                let prod = a * b;
                let mut ra = sp_row(a, n);
                let log_i = ra.mul_assign(&sp_row(b, n));
                assert_eq!(ra, sp_row(&prod, n));
                assert_eq!(log_i as u8, prod.phase().power());
            }
        }
    }

    #[test]
    fn bell_state() {
        let mut t = Tableau::new(2);
        let mut coin = || false;
        t.h(0);
        t.cx(0, 1);
        assert_eq!(t.expectation(&[(0, true, false), (1, true, false)], false), Some(false));
        assert_eq!(t.expectation(&[(0, false, true), (1, false, true)], false), Some(false));
        assert_eq!(t.expectation(&[(0, true, true), (1, true, true)], false), Some(true));
        assert_eq!(t.expectation(&[(0, false, true)], false), None);
        let (a, r) = t.measure_z(0, &mut coin);
        assert!(r);
        assert_eq!(t.measure_z(1, &mut coin), (a, false));
    }

    #[test]
    fn s_squares_to_z() {
        let mut t = Tableau::new(1);
        t.h(0);
        t.s(0);
        assert_eq!(t.expectation(&[(0, true, true)], false), Some(false));
        t.s(0);
        assert_eq!(t.expectation(&[(0, true, false)], false), Some(true));
        t.sdag(0);
        t.sdag(0);
        assert_eq!(t.expectation(&[(0, true, false)], false), Some(false));
    }
}
