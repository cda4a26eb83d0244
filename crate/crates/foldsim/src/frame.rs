//! Pauli-frame sampling, 64 shots per pass (one per bit lane).

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::Circuit;
use crate::detectors::DetectorSet;
use crate::error::{ParseError, Result};
use crate::geometry::SparsePauli;
use crate::gf2::BitVec;
use crate::program::{Op, Program};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShotRecord {
    /// Bit i is set when detector i fired.
    pub detector_bits: BitVec,
    /// Observed logical measurement outcome.
    pub logical_bit: bool,
}

type PauliBits = Vec<(u32, bool, bool)>;

#[derive(Clone, Debug)]
struct CompiledChannel {
    total: f64,
    /// Cumulative probabilities (normalised to 1) and the Pauli of each component.
    components: Vec<(f64, PauliBits)>,
}

/// Per-qubit X and Z flips, one shot per bit.
#[derive(Clone, Debug)]
pub struct PauliFrame {
    pub x: Vec<u64>,
    pub z: Vec<u64>,
    pub measurement_flips: Vec<u64>,
}

impl PauliFrame {
    fn new(qubits: usize, measurements: usize) -> Self {
        Self { x: vec![0; qubits], z: vec![0; qubits], measurement_flips: vec![0; measurements] }
    }

    fn apply(&mut self, bits: &[(u32, bool, bool)], lanes: u64) {
        for &(q, x, z) in bits {
            if x {
                self.x[q as usize] ^= lanes;
            }
            if z {
                self.z[q as usize] ^= lanes;
            }
        }
    }

    fn step(&mut self, op: Op, gauge: &mut dyn FnMut() -> u64) {
        match op {
            Op::ResetX(q) => {
                self.z[q as usize] = 0;
                self.x[q as usize] = gauge();
            }
            Op::ResetZ(q) => {
                self.x[q as usize] = 0;
                self.z[q as usize] = gauge();
            }
            Op::MeasX(q, k) => {
                self.measurement_flips[k as usize] = self.z[q as usize];
                self.x[q as usize] ^= gauge();
            }
            Op::MeasZ(q, k) => {
                self.measurement_flips[k as usize] = self.x[q as usize];
                self.z[q as usize] ^= gauge();
            }
            Op::H(q) => {
                let q = q as usize;
                std::mem::swap(&mut self.x[q], &mut self.z[q]);
            }
            Op::S(q) | Op::Sdag(q) => self.z[q as usize] ^= self.x[q as usize],
            Op::CX(c, t) => {
                let (c, t) = (c as usize, t as usize);
                self.x[t] ^= self.x[c];
                self.z[c] ^= self.z[t];
            }
            Op::CZ(a, b) => {
                let (a, b) = (a as usize, b as usize);
                self.z[a] ^= self.x[b];
                self.z[b] ^= self.x[a];
            }
        }
    }
}

/// Compiled noisy circuit plus detector definitions, read-only once built.
#[derive(Clone, Debug)]
pub struct FrameSampler {
    program: Program,
    detectors: Vec<Vec<u32>>,
    observable: Vec<u32>,
    reference_value: bool,
    channels: Vec<CompiledChannel>,
    /// Channel indices applied after each layer.
    by_layer: Vec<Vec<usize>>,
    /// Channels grouped by total probability, for skip sampling.
    groups: Vec<(f64, Vec<usize>)>,
}

impl FrameSampler {
    pub fn new(circuit: &Circuit, detectors: &DetectorSet) -> Self {
        let program = Program::new(circuit);
        let (dets, obs) = program.detector_measurements(detectors);
        let mut channels = Vec::with_capacity(circuit.noise.len());
        let mut by_layer = vec![Vec::new(); program.layers.len()];
        for ch in &circuit.noise {
            let comps = ch.components();
            let total: f64 = comps.iter().map(|(_, p)| p).sum();
            let mut acc = 0.0;
            let components = comps
                .iter()
                .map(|(f, p)| {
                    acc += p / total;
                    (acc, program.pauli_bits(f))
                })
                .collect();
            by_layer[ch.after_layer].push(channels.len());
            channels.push(CompiledChannel { total, components });
        }
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (i, ch) in channels.iter().enumerate() {
            match groups.iter_mut().find(|(p, _)| *p == ch.total) {
                Some((_, v)) => v.push(i),
                None => groups.push((ch.total, vec![i])),
            }
        }
        Self {
            program,
            detectors: dets,
            observable: obs,
            reference_value: detectors.logical.reference_value,
            channels,
            by_layer,
            groups,
        }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn reference_value(&self) -> bool {
        self.reference_value
    }

    /// Per-channel lane masks and component choices for one batch.
    fn draw_faults(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<(u64, usize)>> {
        let mut hits: Vec<Vec<(u64, usize)>> = vec![Vec::new(); self.channels.len()];
        for (p, members) in &self.groups {
            let slots = members.len() * 64;
            let ln_q = (1.0 - p).ln();
            let mut pos = 0usize;
            loop {
                let u: f64 = rng.gen();
                // Geometric skip to the next faulty (channel, lane) slot.
                let skip = ((1.0 - u).ln() / ln_q).floor();
                if !skip.is_finite() || skip >= (slots - pos) as f64 {
                    break;
                }
                pos += skip as usize;
                let ch = members[pos / 64];
                let lane = pos % 64;
                let r: f64 = rng.gen();
                let comps = &self.channels[ch].components;
                let c = comps.iter().position(|(cum, _)| r < *cum).unwrap_or(comps.len() - 1);
                hits[ch].push((1u64 << lane, c));
                pos += 1;
            }
        }
        hits
    }

    fn simulate(
        &self,
        rng: &mut ChaCha8Rng,
        hits: &[Vec<(u64, usize)>],
        injected: &[(usize, PauliBits, u64)],
        gauge: bool,
    ) -> PauliFrame {
        let mut frame = PauliFrame::new(self.program.num_qubits(), self.program.measurements.len());
        let mut gauge_fn = || if gauge { rng.gen::<u64>() } else { 0 };
        for (li, ops) in self.program.layers.iter().enumerate() {
            for &op in ops {
                frame.step(op, &mut gauge_fn);
            }
            for &ch in self.by_layer[li].iter().filter(|&&ch| ch < hits.len()) {
                for &(lanes, c) in &hits[ch] {
                    frame.apply(&self.channels[ch].components[c].1, lanes);
                }
            }
            for (_, bits, lanes) in injected.iter().filter(|(l, _, _)| *l == li) {
                frame.apply(bits, *lanes);
            }
        }
        frame
    }

    fn parity(&self, frame: &PauliFrame, idx: &[u32]) -> u64 {
        idx.iter().fold(0, |acc, &k| acc ^ frame.measurement_flips[k as usize])
    }

    fn records(&self, frame: &PauliFrame, lanes: usize) -> Vec<ShotRecord> {
        let det_words: Vec<u64> = self.detectors.iter().map(|d| self.parity(frame, d)).collect();
        let obs = self.parity(frame, &self.observable);
        (0..lanes)
            .map(|lane| {
                let bits = BitVec::from_indices(
                    det_words.len(),
                    det_words.iter().enumerate().filter(|(_, w)| *w >> lane & 1 == 1).map(|(i, _)| i),
                );
                ShotRecord { detector_bits: bits, logical_bit: self.reference_value ^ (obs >> lane & 1 == 1) }
            })
            .collect()
    }

    fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch);
        rng
    }

    /// Shots `start..start + n`. Shot k always comes out the same for a given
    /// seed, however the range is split.
    pub fn sample_range(&self, start: u64, n: usize, seed: u64) -> Vec<ShotRecord> {
        if n == 0 {
            return Vec::new();
        }
        let end = start + n as u64;
        let first = start / 64;
        let last = (end - 1) / 64;
        let batches: Vec<Vec<ShotRecord>> = (first..=last)
            .into_par_iter()
            .map(|b| {
                let mut rng = Self::batch_rng(seed, b);
                let hits = self.draw_faults(&mut rng);
                let frame = self.simulate(&mut rng, &hits, &[], true);
                let lo = (b * 64).max(start) - b * 64;
                let hi = ((b + 1) * 64).min(end) - b * 64;
                self.records(&frame, hi as usize).split_off(lo as usize)
            })
            .collect();
        batches.into_iter().flatten().collect()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<ShotRecord> {
        self.sample_range(0, n, seed)
    }

    /// Detector bits and observable flip caused by each single fault, given
    /// as (layer after which it acts, Pauli).
    pub fn effects(&self, faults: &[(usize, SparsePauli)]) -> Vec<(BitVec, bool)> {
        faults
            .par_chunks(64)
            .flat_map_iter(|chunk| {
                let injected: Vec<_> = chunk
                    .iter()
                    .enumerate()
                    .map(|(lane, (l, p))| (*l, self.program.pauli_bits(p), 1u64 << lane))
                    .collect();
                let mut rng = Self::batch_rng(0, 0);
                let frame = self.simulate(&mut rng, &[], &injected, false);
                self.records(&frame, chunk.len())
                    .into_iter()
                    .map(|r| (r.detector_bits, r.logical_bit ^ self.reference_value))
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Convenience wrapper: sample `n_shots` shots of a noisy circuit.
pub fn sample_shots(circuit: &Circuit, detectors: &DetectorSet, n_shots: usize, seed: u64) -> Vec<ShotRecord> {
    FrameSampler::new(circuit, detectors).sample(n_shots, seed)
}

/// Detector flips of a single fault injected after `layer`.
pub fn effect_via_frame(circuit: &Circuit, detectors: &DetectorSet, layer: usize, fault: &SparsePauli) -> (BitVec, bool) {
    FrameSampler::new(circuit, detectors).effects(&[(layer, fault.clone())]).remove(0)
}

const MIN_ZERO_RUN: usize = 3;

/// Hex nibbles (detectors 4k..4k+3 in nibble k, low bit first) with runs of
/// zero nibbles written as `z<count>.`, then a space and the logical bit.
pub fn encode_shot(shot: &ShotRecord) -> String {
    let n = shot.detector_bits.len();
    let nibbles: Vec<u8> = (0..n.div_ceil(4))
        .map(|k| (0..4).filter(|b| 4 * k + b < n && shot.detector_bits.get(4 * k + b)).map(|b| 1u8 << b).sum())
        .collect();
    let mut out = String::new();
    let mut i = 0;
    while i < nibbles.len() {
        let run = nibbles[i..].iter().take_while(|&&v| v == 0).count();
        if run >= MIN_ZERO_RUN {
            let _ = write!(out, "z{run}.");
            i += run;
        } else {
            let _ = write!(out, "{:x}", nibbles[i]);
            i += 1;
        }
    }
    let _ = write!(out, " {}", shot.logical_bit as u8);
    out
}

pub fn decode_shot(line: &str, num_detectors: usize) -> std::result::Result<ShotRecord, ParseError> {
    let bad = || ParseError::new(format!("malformed shot line {line:?}"));
    let (body, logical) = line.trim().rsplit_once(' ').ok_or_else(bad)?;
    let logical_bit = match logical {
        "0" => false,
        "1" => true,
        _ => return Err(bad()),
    };
    let mut bits = BitVec::zeros(num_detectors);
    let mut nibble = 0usize;
    let mut chars = body.chars().peekable();
    while let Some(ch) = chars.next() {
        if ch == 'z' {
            let mut digits = String::new();
            for c in chars.by_ref() {
                if c == '.' {
                    break;
                }
                digits.push(c);
            }
            nibble += digits.parse::<usize>().map_err(|_| bad())?;
            continue;
        }
        let v = ch.to_digit(16).ok_or_else(bad)? as usize;
        for b in 0..4 {
            if v >> b & 1 == 1 {
                let i = 4 * nibble + b;
                if i >= num_detectors {
                    return Err(bad());
                }
                bits.set(i, true);
            }
        }
        nibble += 1;
    }
    if nibble != num_detectors.div_ceil(4) {
        return Err(bad());
    }
    Ok(ShotRecord { detector_bits: bits, logical_bit })
}

pub fn write_shot_dump(circuit_hash: &str, seed: u64, num_detectors: usize, shots: &[ShotRecord]) -> String {
    let mut out = format!("# circuit {circuit_hash}\n# seed {seed}\n# detectors {num_detectors}\n");
    for s in shots {
        out.push_str(&encode_shot(s));
        out.push('\n');
    }
    out
}

/// Parses a dump back into (circuit hash, seed, shots).
pub fn read_shot_dump(text: &str) -> Result<(String, u64, Vec<ShotRecord>)> {
    let mut hash = None;
    let mut seed = None;
    let mut dets = None;
    let mut shots = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        if let Some(h) = line.strip_prefix("# ") {
            let (k, v) = h.split_once(' ').ok_or_else(|| ParseError::new(format!("bad header {line:?}")))?;
            match k {
                "circuit" => hash = Some(v.to_string()),
                "seed" => seed = Some(v.parse().map_err(|_| ParseError::new("bad seed"))?),
                "detectors" => dets = Some(v.parse().map_err(|_| ParseError::new("bad detector count"))?),
                _ => {}
            }
            continue;
        }
        let n = dets.ok_or_else(|| ParseError::new("detector count missing from header"))?;
        shots.push(decode_shot(line, n)?);
    }
    let hash = hash.ok_or_else(|| ParseError::new("circuit hash missing from header"))?;
    let seed = seed.ok_or_else(|| ParseError::new("seed missing from header"))?;
    Ok((hash, seed, shots))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shot_line_roundtrip() {
        for pattern in [vec![], vec![0], vec![5, 6, 40, 41, 99], (0..101).collect()] {
            let shot = ShotRecord { detector_bits: BitVec::from_indices(101, pattern), logical_bit: true };
            let line = encode_shot(&shot);
            assert_eq!(decode_shot(&line, 101).unwrap(), shot, "{line}");
        }
        assert_eq!(encode_shot(&ShotRecord { detector_bits: BitVec::zeros(24), logical_bit: false }), "z6. 0");
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode_shot("zz 1", 8).is_err());
        assert!(decode_shot("00 2", 8).is_err());
        assert!(decode_shot("000 1", 8).is_err());
    }
}
