//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero when a criterion outside `KNOWN_FAILURES` fails.
//!
//! `ACCEPTANCE_ONLY=3,11` restricts the run to the listed criteria.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use foldsim::aod::{check_diagonal_addressing, plan_rotation, verify_plan};
use foldsim::checks::{noiseless_violations, oracle_mismatches};
use foldsim::circuit::{build_s2, build_x_memory, Circuit, RoundKind};
use foldsim::dem::build_hypergraph;
use foldsim::detectors::enumerate_detectors;
use foldsim::experiment::{ExperimentSpec, ResultRow, Workload};
use foldsim::frame::ShotRecord;
use foldsim::geometry::{Coord, MidCycleLabel, Pauli, SparsePauli, Timestamp};
use foldsim::gf2::BitVec;
use foldsim::layout::Layout;
use foldsim::noise::apply_noise;
use foldsim::pipeline::{Decoder, DecoderConfig, DecoderMode};
use foldsim::program::Program;
use foldsim::stats::standard_error;
use foldsim::tableau::{reference_run, Outcomes, RunOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail with the decoder as specified; the run reports them
/// but does not treat them as regressions.
const KNOWN_FAILURES: &[u8] = &[5];

const MASTER_SEED: u64 = 20_241_015;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn s2_variants(d: usize) -> Vec<(usize, usize)> {
    let pads: BTreeSet<usize> = [2, d.div_ceil(2)].into();
    pads.iter().flat_map(|&p| [(p, 2), (p, d + 1)]).collect()
}

fn noiseless_determinism() -> Verdict {
    let mut checked = 0;
    for d in [3usize, 5, 7] {
        let mut circuits = vec![build_x_memory(d, 2 * d).unwrap()];
        circuits.extend(s2_variants(d).into_iter().map(|(a, b)| build_s2(d, a, b).unwrap()));
        for c in &circuits {
            let bad = noiseless_violations(c, 10_000, MASTER_SEED).unwrap();
            if bad > 0 {
                return Verdict::new(false, format!("d={d} rounds={}: {bad} of 10000 shots disagree", c.rounds()));
            }
            checked += 1;
        }
    }
    Verdict::new(true, format!("{checked} circuits x 10000 shots quiet"))
}

fn morphing_oracle() -> Verdict {
    let mut notes = Vec::new();
    for d in [3usize, 5] {
        let c = build_x_memory(d, 3).unwrap();
        let got = common::snapshot(&c, Timestamp::new(2, MidCycleLabel::HalfCycle)).canonical_form_unsigned();
        let hits = [true, false].iter().filter(|&&o| common::half_cycle_oracle(&c, o) == got).count();
        if hits != 1 {
            return Verdict::new(false, format!("d={d}: half-cycle group matches {hits} oracle orientations"));
        }
        notes.push(format!("d={d} ok"));
    }
    Verdict::new(true, notes.join(", "))
}

fn logical_x(d: i32) -> SparsePauli {
    SparsePauli::uniform((0..d).map(|x| Coord::new(2 * x, 0)), Pauli::X)
}

fn logical_action() -> Verdict {
    let d = 3;
    let read = |rounds: &[RoundKind], outcomes: Outcomes| {
        let c = Circuit::from_se_rounds(d, rounds).unwrap();
        let ts = Timestamp::new(rounds.len() as u32, MidCycleLabel::EndCycle);
        let run = reference_run(&c, outcomes, &RunOptions { snapshots: vec![ts], faults: vec![] }).unwrap();
        let prog = Program::new(&c);
        let tab = &run.snapshots[&ts];
        let x = tab.expectation(&prog.pauli_bits(&logical_x(d as i32)), false);
        let y = tab.expectation(&prog.pauli_bits(&common::logical_y(d as i32)), false);
        (x, y)
    };
    use RoundKind::{ISE, SSE};
    for outcomes in [Outcomes::Zero, Outcomes::Seeded(1), Outcomes::Seeded(2)] {
        let (x1, y1) = read(&[ISE, SSE, ISE], outcomes);
        if x1.is_some() || y1.is_none() {
            return Verdict::new(false, format!("one fold round: X {x1:?}, Y {y1:?}"));
        }
        let (x2, y2) = read(&[ISE, SSE, ISE, SSE, ISE], outcomes);
        if x2 != Some(true) || y2.is_some() {
            return Verdict::new(false, format!("two fold rounds: X {x2:?}, Y {y2:?}"));
        }
    }
    Verdict::new(true, "X -> +-Y after one fold round, X -> -X after two")
}

fn oracle_equivalence() -> Verdict {
    let mut locations = 0;
    for d in [3usize, 5] {
        let mut circuits = vec![build_x_memory(d, 2 * d).unwrap()];
        circuits.extend(s2_variants(d).into_iter().map(|(a, b)| build_s2(d, a, b).unwrap()));
        for c in circuits {
            let noisy = apply_noise(&c, 1e-3).unwrap();
            let set = enumerate_detectors(&noisy).unwrap();
            let bad = oracle_mismatches(&noisy, &set);
            if !bad.is_empty() {
                return Verdict::new(false, format!("d={d} rounds={}: {} mismatches", c.rounds(), bad.len()));
            }
            locations += foldsim::dem::error_locations(&noisy).len();
        }
    }
    Verdict::new(true, format!("{locations} error locations agree"))
}

fn single_fault_tolerance() -> Verdict {
    let mut parts = Vec::new();
    let mut missed_total = 0;
    let circuits = [
        ("memory", build_x_memory(3, 6).unwrap()),
        ("s2 2/2", build_s2(3, 2, 2).unwrap()),
        ("s2 2/4", build_s2(3, 2, 4).unwrap()),
    ];
    for (name, c) in circuits {
        let noisy = apply_noise(&c, 1e-3).unwrap();
        let set = enumerate_detectors(&noisy).unwrap();
        let hg = build_hypergraph(&noisy, &set).unwrap();
        let dec = Decoder::new(&hg, DecoderConfig { mode: DecoderMode::Plain }).unwrap();
        let (mut tried, mut missed) = (0, 0);
        for eff in hg.effects.iter().filter(|e| !e.is_trivial()) {
            let shot = ShotRecord {
                detector_bits: BitVec::from_indices(hg.num_detectors(), eff.detectors()),
                logical_bit: eff.logical_flip,
            };
            tried += 1;
            if dec.decode(&shot).unwrap().logical_correction != eff.logical_flip {
                missed += 1;
            }
        }
        missed_total += missed;
        parts.push(format!("{name}: {missed}/{tried} mis-corrected"));
    }
    Verdict::new(missed_total == 0, parts.join(", "))
}

fn matcher_optimality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    for trial in 0..1000 {
        let n = rng.gen_range(6..=30);
        let g = common::random_graph(&mut rng, n, 0.12);
        let k = rng.gen_range(1..=n.min(10));
        let mut nodes: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = rng.gen_range(i..n);
            nodes.swap(i, j);
        }
        let got = g.decode(&nodes[..k]).unwrap().total_weight;
        let best = common::brute_force(&g, &nodes[..k]);
        if (got - best).abs() > 1e-6 * best.max(1.0) {
            return Verdict::new(false, format!("trial {trial}: {got} vs brute force {best}"));
        }
    }
    Verdict::new(true, "1000 instances equal brute-force pairing")
}

fn run(spec: ExperimentSpec) -> ResultRow {
    let spec = spec.clone().with_seed(spec.derive_seed(MASTER_SEED));
    Workload::build(&spec).unwrap().run(&spec).unwrap()
}

fn fmt_row(r: &ResultRow) -> String {
    format!("{:.2e} ({}/{})", r.ler, r.errors, r.shots)
}

fn threshold_ballpark() -> Verdict {
    let ps = [0.004, 0.006, 0.008, 0.010, 0.014, 0.020];
    let curve = |d: usize| -> Vec<ResultRow> {
        ps.iter()
            .map(|&p| run(ExperimentSpec::memory(d, d, p, DecoderMode::Plain, 100_000).with_max_errors(10_000)))
            .collect()
    };
    let (small, large) = (curve(3), curve(5));
    let gap: Vec<f64> = small.iter().zip(&large).map(|(a, b)| (b.ler / a.ler).ln()).collect();
    let table: Vec<String> =
        ps.iter().zip(small.iter().zip(&large)).map(|(p, (a, b))| format!("p={p}: {:.2e}/{:.2e}", a.ler, b.ler)).collect();
    let crossing = gap.windows(2).zip(ps.windows(2)).find(|(g, _)| g[0] < 0.0 && g[1] >= 0.0).map(|(g, p)| {
        let t = g[0] / (g[0] - g[1]);
        (p[0].ln() + t * (p[1].ln() - p[0].ln())).exp()
    });
    match crossing {
        Some(pc) => Verdict::new((0.005..=0.02).contains(&pc), format!("crossing at p = {pc:.4}; {}", table.join(", "))),
        None => Verdict::new(false, format!("no crossing; {}", table.join(", "))),
    }
}

fn s2_memory_ratio() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for d in [3usize, 5] {
        let (n_pad, n_m) = (d.div_ceil(2), d + 1);
        let rounds = foldsim::circuit::s2_round_count(n_pad, n_m);
        let s2 = run(ExperimentSpec::s2(d, n_pad, n_m, 1e-3, DecoderMode::VtbFr, 1_000_000).with_max_errors(100));
        let mem = run(ExperimentSpec::memory(d, rounds, 1e-3, DecoderMode::Plain, 1_000_000).with_max_errors(100));
        let ratio = s2.ler / mem.ler;
        pass &= (1.0..=5.0).contains(&ratio);
        notes.push(format!("d={d}: S-2 {} / memory {} = {ratio:.2}", fmt_row(&s2), fmt_row(&mem)));
    }
    Verdict::new(pass, notes.join("; "))
}

fn short_gap_does_not_degrade() -> Verdict {
    let d = 5;
    let at = |n_m| run(ExperimentSpec::s2(d, d.div_ceil(2), n_m, 1e-3, DecoderMode::VtbFr, 1_000_000).with_max_errors(100));
    let (short, long) = (at(2), at(d + 1));
    let sigma = standard_error(short.errors, short.shots).hypot(standard_error(long.errors, long.shots));
    Verdict::new(
        short.ler <= long.ler + 2.0 * sigma,
        format!("n_m=2 {} vs n_m={} {} (2 sigma = {:.1e})", fmt_row(&short), d + 1, fmt_row(&long), 2.0 * sigma),
    )
}

fn refinement_ordering() -> Verdict {
    let at = |mode| run(ExperimentSpec::s2(5, 2, 6, 2e-3, mode, 200_000).with_max_errors(200));
    let (fr, pr, plain) = (at(DecoderMode::VtbFr), at(DecoderMode::VtbPr), at(DecoderMode::Plain));
    // An inversion counts only when the two intervals are disjoint.
    let inverted = |better: &ResultRow, worse: &ResultRow| better.ci_low > worse.ci_high;
    Verdict::new(
        !inverted(&fr, &pr) && !inverted(&pr, &plain),
        format!("VTB-FR {}, VTB-PR {}, Plain {}", fmt_row(&fr), fmt_row(&pr), fmt_row(&plain)),
    )
}

fn rotation_correctness() -> Verdict {
    for d in [3usize, 5, 7] {
        let sites = Layout::new(d).unwrap().all_qubits();
        let plan = plan_rotation(&sites).unwrap();
        let c = 2 * (d as i32 - 1);
        let expect: BTreeMap<Coord, Coord> = sites.iter().map(|s| (*s, Coord::new(s.y2, c - s.x2))).collect();
        if plan.target != expect {
            return Verdict::new(false, format!("d={d}: composed map is not the quarter turn"));
        }
        let report = verify_plan(&plan, &sites);
        if !report.is_clean() {
            return Verdict::new(false, format!("d={d}: {} violations", report.violations.len()));
        }
        if d == 3 && !common::hadamard_then_move_preserves_code(d, &plan.target) {
            return Verdict::new(false, "H + rotation changes the stabilizer layout");
        }
    }
    Verdict::new(true, "exact quarter turn and clean replay for d=3,5,7; H + rotation restores d=3 layout")
}

fn diagonal_addressing() -> Verdict {
    for d in (3..=13).step_by(2) {
        let layout = Layout::new(d).unwrap();
        let diag = |v: &[Coord]| v.iter().map(|c| c.x2 - c.y2).collect::<BTreeSet<i32>>();
        let (xs, zs) = (diag(&layout.ancilla_x), diag(&layout.ancilla_z));
        let report = check_diagonal_addressing(&layout);
        if !xs.is_disjoint(&zs) || report.x_diagonals != xs || report.z_diagonals != zs {
            return Verdict::new(false, format!("d={d}: X and Z ancillas share a diagonal"));
        }
    }
    Verdict::new(true, "disjoint for every odd d from 3 to 13")
}

fn main() -> ExitCode {
    let criteria: [(u8, &str, fn() -> Verdict); 12] = [
        (1, "noiseless determinism", noiseless_determinism),
        (2, "morphing oracle", morphing_oracle),
        (3, "logical action", logical_action),
        (4, "detector/effect oracle equivalence", oracle_equivalence),
        (5, "fault tolerance at d=3", single_fault_tolerance),
        (6, "matcher optimality", matcher_optimality),
        (7, "threshold ballpark", threshold_ballpark),
        (8, "S-2 vs memory ratio", s2_memory_ratio),
        (9, "n_m=2 non-degradation", short_gap_does_not_degrade),
        (10, "refinement ordering", refinement_ordering),
        (11, "AOD rotation correctness", rotation_correctness),
        (12, "diagonal addressing", diagonal_addressing),
    ];
    let only: Option<BTreeSet<u8>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let known = !v.pass && KNOWN_FAILURES.contains(&id);
        println!(
            "{tag} {id:>2} {name}: {}{} [{:.1}s]",
            v.detail,
            if known { " (known failure)" } else { "" },
            start.elapsed().as_secs_f64()
        );
        std::io::stdout().flush().ok();
        if !v.pass && !known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
