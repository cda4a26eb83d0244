//! Monte Carlo experiments: one spec per logical error rate estimate,
//! sweeps over many with reproducible seeds and incremental CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{build_s2, build_x_memory, s2_round_count, Circuit};
use crate::dem::{build_hypergraph, DecodingHypergraph};
use crate::detectors::{enumerate_detectors, DetectorSet};
use crate::error::{Error, ParseError, Result};
use crate::frame::{FrameSampler, ShotRecord};
use crate::noise::apply_noise;
use crate::pipeline::{Decoder, DecoderConfig, DecoderMode};
use crate::stats::estimate;

/// Shots sampled and decoded between early-stop checks.
pub const CHUNK: u64 = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    XMemory,
    S2,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::XMemory => "x-memory",
            Family::S2 => "s2",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = ParseError;
    fn from_str(s: &str) -> std::result::Result<Self, ParseError> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "x-memory" | "memory" => Ok(Family::XMemory),
            "s2" | "s-2" => Ok(Family::S2),
            _ => Err(ParseError::new(format!("unknown family {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    pub d: usize,
    pub p: f64,
    /// Syndrome-extraction rounds of a memory experiment.
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default)]
    pub n_pad: Option<usize>,
    #[serde(default)]
    pub n_m: Option<usize>,
    pub decoder: DecoderMode,
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_errors: Option<u64>,
}

impl ExperimentSpec {
    pub fn memory(d: usize, rounds: usize, p: f64, decoder: DecoderMode, shots: u64) -> Self {
        Self { family: Family::XMemory, d, p, rounds: Some(rounds), n_pad: None, n_m: None, decoder, shots, seed: 0, max_errors: None }
    }

    pub fn s2(d: usize, n_pad: usize, n_m: usize, p: f64, decoder: DecoderMode, shots: u64) -> Self {
        Self { family: Family::S2, d, p, rounds: None, n_pad: Some(n_pad), n_m: Some(n_m), decoder, shots, seed: 0, max_errors: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_errors(mut self, max_errors: u64) -> Self {
        self.max_errors = Some(max_errors);
        self
    }

    /// Syndrome-extraction rounds of the circuit.
    pub fn se_rounds(&self) -> Result<usize> {
        match self.family {
            Family::XMemory => self.rounds.ok_or_else(|| missing("rounds")),
            Family::S2 => Ok(s2_round_count(self.n_pad.ok_or_else(|| missing("n_pad"))?, self.n_m.ok_or_else(|| missing("n_m"))?)),
        }
    }

    pub fn circuit(&self) -> Result<Circuit> {
        match self.family {
            Family::XMemory => build_x_memory(self.d, self.se_rounds()?),
            Family::S2 => build_s2(self.d, self.n_pad.ok_or_else(|| missing("n_pad"))?, self.n_m.ok_or_else(|| missing("n_m"))?),
        }
    }

    /// Seed for this spec under a master seed. The decoder, shot budget and
    /// stopping rule are left out, so decoders compared on one circuit see
    /// the same shots.
    pub fn derive_seed(&self, master: u64) -> u64 {
        let key = format!(
            "{master}|{}|{}|{:e}|{:?}|{:?}|{:?}",
            self.family, self.d, self.p, self.rounds, self.n_pad, self.n_m
        );
        let digest = Sha256::digest(key.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }
}

fn missing(field: &str) -> Error {
    Error::InvalidParameters(format!("{field} is required for this family"))
}

/// Sampler and decoding hypergraph of one noisy circuit, shared by all
/// decoders run on it.
pub struct Workload {
    pub circuit: Circuit,
    pub detectors: DetectorSet,
    pub sampler: FrameSampler,
    pub hypergraph: DecodingHypergraph,
}

impl Workload {
    pub fn build(spec: &ExperimentSpec) -> Result<Self> {
        let context = |e: Error| Error::InvalidParameters(format!("{} d={} p={}: {e}", spec.family, spec.d, spec.p));
        let circuit = apply_noise(&spec.circuit()?, spec.p)?;
        let detectors = enumerate_detectors(&circuit).map_err(context)?;
        let hypergraph = build_hypergraph(&circuit, &detectors).map_err(context)?;
        let sampler = FrameSampler::new(&circuit, &detectors);
        Ok(Self { circuit, detectors, sampler, hypergraph })
    }

    pub fn decoder(&self, mode: DecoderMode) -> Result<Decoder> {
        Decoder::new(&self.hypergraph, DecoderConfig { mode })
    }

    /// True when the decoder's correction disagrees with the observed flip.
    pub fn is_failure(&self, decoder: &Decoder, shot: &ShotRecord) -> Result<bool> {
        let flipped = shot.logical_bit != self.sampler.reference_value();
        if shot.detector_bits.is_zero() {
            return Ok(flipped);
        }
        Ok(decoder.decode(shot)?.logical_correction != flipped)
    }

    /// Samples in chunks until the shot budget or error cap is reached.
    pub fn count_failures(&self, decoder: &Decoder, shots: u64, seed: u64, max_errors: Option<u64>) -> Result<(u64, u64)> {
        let (mut taken, mut errors) = (0u64, 0u64);
        while taken < shots && max_errors.map_or(true, |m| errors < m) {
            let n = CHUNK.min(shots - taken);
            let batch = self.sampler.sample_range(taken, n as usize, seed);
            let failed: Vec<bool> = batch.par_iter().map(|s| self.is_failure(decoder, s)).collect::<Result<_>>()?;
            errors += failed.iter().filter(|&&f| f).count() as u64;
            taken += n;
        }
        Ok((taken, errors))
    }

    pub fn run(&self, spec: &ExperimentSpec) -> Result<ResultRow> {
        let start = Instant::now();
        let decoder = self.decoder(spec.decoder)?;
        let (shots, errors) = self.count_failures(&decoder, spec.shots, spec.seed, spec.max_errors)?;
        ResultRow::new(spec, shots, errors, start.elapsed().as_secs_f64())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub family: Family,
    pub d: usize,
    pub p: f64,
    pub n_pad: Option<usize>,
    pub n_m: Option<usize>,
    pub rounds: usize,
    pub decoder: DecoderMode,
    pub shots: u64,
    pub errors: u64,
    pub ler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub wall_seconds: f64,
}

impl ResultRow {
    pub fn new(spec: &ExperimentSpec, shots: u64, errors: u64, wall_seconds: f64) -> Result<Self> {
        let e = estimate(errors, shots);
        Ok(Self {
            family: spec.family,
            d: spec.d,
            p: spec.p,
            n_pad: spec.n_pad,
            n_m: spec.n_m,
            rounds: spec.se_rounds()?,
            decoder: spec.decoder,
            shots,
            errors,
            ler: e.ler,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            seed: spec.seed,
            wall_seconds,
        })
    }

    pub fn estimate(&self) -> crate::stats::LerEstimate {
        crate::stats::LerEstimate { ler: self.ler, ci_low: self.ci_low, ci_high: self.ci_high }
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultRow> {
    Workload::build(spec)?.run(spec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub master_seed: u64,
    pub experiments: Vec<ExperimentSpec>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Runs every spec with a seed derived from `master_seed`, writing each row
/// as soon as it finishes. A failing spec yields an error in its slot and
/// the sweep moves on.
pub fn sweep<W: Write>(config: &SweepConfig, out: Option<&mut csv::Writer<W>>) -> Vec<Result<ResultRow>> {
    let mut out = out;
    let mut rows = Vec::with_capacity(config.experiments.len());
    for spec in &config.experiments {
        let spec = spec.clone().with_seed(spec.derive_seed(config.master_seed));
        let row = run_experiment(&spec);
        if let (Ok(r), Some(w)) = (&row, out.as_deref_mut()) {
            let written = w.serialize(r).map_err(Error::from).and_then(|_| w.flush().map_err(Error::from));
            if let Err(e) = written {
                rows.push(Err(e));
                continue;
            }
        }
        rows.push(row);
    }
    rows
}
