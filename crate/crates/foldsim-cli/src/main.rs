use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use foldsim::aod::{check_diagonal_addressing, parse_batches, plan_reflection, plan_rotation, verify_plan, Axis, Orientation, RearrangementPlan};
use foldsim::checks::{noiseless_violations, oracle_mismatches, sampling_is_reproducible};
use foldsim::detectors::enumerate_detectors;
use foldsim::experiment::{sweep, ExperimentSpec, Family, SweepConfig, Workload};
use foldsim::frame::{read_shot_dump, write_shot_dump};
use foldsim::layout::Layout;
use foldsim::noise::apply_noise;
use foldsim::pipeline::DecoderMode;

#[derive(Parser)]
#[command(name = "foldsim", version, about = "Surface code circuits with fold-transversal S gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CircuitArgs {
    #[arg(long, default_value = "x-memory")]
    family: Family,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Rounds of a memory experiment; defaults to 2d.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    n_pad: Option<usize>,
    #[arg(long)]
    n_m: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    p: f64,
}

impl CircuitArgs {
    fn spec(&self, decoder: DecoderMode, shots: u64, seed: u64) -> ExperimentSpec {
        let mut spec = match self.family {
            Family::XMemory => ExperimentSpec::memory(self.d, self.rounds.unwrap_or(2 * self.d), self.p, decoder, shots),
            Family::S2 => ExperimentSpec::s2(
                self.d,
                self.n_pad.unwrap_or(self.d.div_ceil(2)),
                self.n_m.unwrap_or(self.d + 1),
                self.p,
                decoder,
                shots,
            ),
        };
        spec.seed = seed;
        spec
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanKind {
    Rotation,
    ReflectHorizontal,
    ReflectDiagonal,
}

#[derive(Subcommand)]
enum Command {
    /// Print the noisy circuit.
    Build {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the detectors and the logical observable.
    Detectors {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the decoding hypergraph.
    Dem {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample shots into a dump file.
    Sample {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a shot dump and report the logical error rate.
    Decode {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "plain")]
        decoder: DecoderMode,
        /// Also print one line per shot.
        #[arg(long)]
        per_shot: bool,
    },
    /// Run a JSON-configured sweep, writing CSV rows as they finish.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the master seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print an AOD rearrangement plan for a patch.
    AodPlan {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, value_enum, default_value = "rotation")]
        kind: PlanKind,
        /// Print the ancilla addressing report instead.
        #[arg(long)]
        addressing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the self-checks, or replay a plan file against a patch rotation.
    Verify {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn plan_for(d: usize, kind: PlanKind) -> Result<(Vec<foldsim::geometry::Coord>, RearrangementPlan)> {
    let sites = Layout::new(d)?.all_qubits();
    let reflect = |o| {
        let axis = Axis::centered(&sites, o).expect("patch is not empty");
        plan_reflection(&sites, axis, o)
    };
    let plan = match kind {
        PlanKind::Rotation => plan_rotation(&sites)?,
        PlanKind::ReflectHorizontal => reflect(Orientation::Horizontal)?,
        PlanKind::ReflectDiagonal => reflect(Orientation::Diagonal)?,
    };
    Ok((sites, plan))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Build { circuit, out } => {
            let c = apply_noise(&circuit.spec(DecoderMode::Plain, 0, 0).circuit()?, circuit.p)?;
            emit(out.as_ref(), &c.to_text())?;
        }
        Command::Detectors { circuit, out } => {
            let c = apply_noise(&circuit.spec(DecoderMode::Plain, 0, 0).circuit()?, circuit.p)?;
            emit(out.as_ref(), &enumerate_detectors(&c)?.to_text())?;
        }
        Command::Dem { circuit, out } => {
            let work = Workload::build(&circuit.spec(DecoderMode::Plain, 0, 0))?;
            emit(out.as_ref(), &work.hypergraph.to_text())?;
        }
        Command::Sample { circuit, shots, seed, out } => {
            let work = Workload::build(&circuit.spec(DecoderMode::Plain, shots, seed))?;
            let records = work.sampler.sample(shots as usize, seed);
            let dump = write_shot_dump(&work.circuit.content_hash(), seed, work.detectors.len(), &records);
            emit(out.as_ref(), &dump)?;
        }
        Command::Decode { circuit, input, decoder, per_shot } => {
            let work = Workload::build(&circuit.spec(decoder, 0, 0))?;
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let (hash, seed, shots) = read_shot_dump(&text)?;
            if hash != work.circuit.content_hash() {
                bail!("shot dump was sampled from a different circuit");
            }
            let dec = work.decoder(decoder)?;
            let mut errors = 0u64;
            for (i, shot) in shots.iter().enumerate() {
                let failed = work.is_failure(&dec, shot)?;
                errors += failed as u64;
                if per_shot {
                    println!("{i} {}", if failed { "fail" } else { "ok" });
                }
            }
            let est = foldsim::stats::estimate(errors, shots.len() as u64);
            println!(
                "decoder={decoder} seed={seed} shots={} errors={errors} ler={:.6e} ci=[{:.6e}, {:.6e}]",
                shots.len(),
                est.ler,
                est.ci_low,
                est.ci_high
            );
        }
        Command::Sweep { config, seed, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = SweepConfig::from_json(&text)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let sink: Box<dyn Write> = match &out {
                Some(path) => Box::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?),
                None => Box::new(io::stdout()),
            };
            let mut writer = csv::Writer::from_writer(sink);
            let rows = sweep(&cfg, Some(&mut writer));
            let mut ok = true;
            for (spec, row) in cfg.experiments.iter().zip(&rows) {
                if let Err(e) = row {
                    eprintln!("{} d={} p={}: {e}", spec.family, spec.d, spec.p);
                    ok = false;
                }
            }
            return Ok(ok);
        }
        Command::AodPlan { d, kind, addressing, out } => {
            if addressing {
                let r = check_diagonal_addressing(&Layout::new(d)?);
                let list = |s: &std::collections::BTreeSet<i32>| s.iter().map(i32::to_string).collect::<Vec<_>>().join(",");
                let text = format!(
                    "x_diagonals: [{}]\nz_diagonals: [{}]\ndisjoint: {}\ndiagonal_spill: {}\nhorizontal_spill: {}\n",
                    list(&r.x_diagonals),
                    list(&r.z_diagonals),
                    r.diagonals_disjoint(),
                    r.diagonal_spill.len(),
                    r.horizontal_spill.len()
                );
                emit(out.as_ref(), &text)?;
                return Ok(r.diagonals_disjoint());
            }
            let (_, plan) = plan_for(d, kind)?;
            emit(out.as_ref(), &plan.to_string())?;
        }
        Command::Verify { circuit, shots, seed, plan } => {
            if let Some(path) = plan {
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let (sites, mut expected) = plan_for(circuit.d, PlanKind::Rotation)?;
                expected.batches = parse_batches(&text)?;
                let report = verify_plan(&expected, &sites);
                for v in &report.violations {
                    println!("violation: {v}");
                }
                println!("permutation {}", if report.matches_target { "matches rotation" } else { "differs from rotation" });
                return Ok(report.is_clean());
            }
            let spec = circuit.spec(DecoderMode::Plain, shots, seed);
            let clean = spec.circuit()?;
            let noisy = apply_noise(&clean, circuit.p)?;
            let set = enumerate_detectors(&noisy)?;
            let checks = [
                ("noiseless determinism", noiseless_violations(&clean, shots as usize, seed)? == 0),
                ("region/frame oracle equivalence", oracle_mismatches(&noisy, &set).is_empty()),
                ("sampling reproducibility", sampling_is_reproducible(&noisy, &set, shots as usize, seed)),
            ];
            for (name, ok) in &checks {
                println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
            }
            return Ok(checks.iter().all(|c| c.1));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
