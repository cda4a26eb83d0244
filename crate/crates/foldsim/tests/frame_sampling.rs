use foldsim::circuit::{build_s2, build_x_memory, Circuit};
use foldsim::detectors::enumerate_detectors;
use foldsim::frame::{read_shot_dump, write_shot_dump, FrameSampler};
use foldsim::geometry::{Pauli, SparsePauli};
use foldsim::noise::apply_noise;
use foldsim::program::Program;
use foldsim::tableau::{reference_run, Outcomes, RunOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn parity(record: &[bool], idx: &[u32]) -> bool {
    idx.iter().fold(false, |acc, &k| acc ^ record[k as usize])
}

#[test]
fn noiseless_shots_are_quiet() {
    for c in [build_x_memory(3, 3).unwrap(), build_s2(3, 1, 2).unwrap()] {
        let set = enumerate_detectors(&c).unwrap();
        let sampler = FrameSampler::new(&c, &set);
        for shot in sampler.sample(200, 9) {
            assert!(shot.detector_bits.is_zero());
            assert_eq!(shot.logical_bit, set.logical.reference_value);
        }
    }
}

fn random_faults(c: &Circuit, n: usize, seed: u64) -> Vec<(usize, SparsePauli)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qubits = c.layout.all_qubits();
    (0..n)
        .map(|_| {
            let layer = rng.gen_range(0..c.layers.len());
            let mut f = SparsePauli::identity();
            for _ in 0..rng.gen_range(1..=2) {
                f.set(qubits[rng.gen_range(0..qubits.len())], Pauli::ALL[rng.gen_range(1..4)]);
            }
            (layer, f)
        })
        .filter(|(_, f)| !f.is_identity())
        .collect()
}

fn frame_matches_tableau(c: &Circuit, n: usize) {
    let set = enumerate_detectors(c).unwrap();
    let prog = Program::new(c);
    let (dets, obs) = prog.detector_measurements(&set);
    let clean = reference_run(c, Outcomes::Zero, &RunOptions::default()).unwrap().record;
    let faults = random_faults(c, n, 3);
    let effects = FrameSampler::new(c, &set).effects(&faults);
    for ((layer, f), (bits, flip)) in faults.iter().zip(effects) {
        let opts = RunOptions { snapshots: vec![], faults: vec![(*layer, f.clone())] };
        let rec = reference_run(c, Outcomes::Zero, &opts).unwrap().record;
        for (i, idx) in dets.iter().enumerate() {
            assert_eq!(bits.get(i), parity(&rec, idx) ^ parity(&clean, idx), "fault {f} after layer {layer}, detector {i}");
        }
        assert_eq!(flip, parity(&rec, &obs) ^ parity(&clean, &obs), "fault {f} after layer {layer}, observable");
    }
}

#[test]
fn frame_agrees_with_tableau_on_single_faults() {
    frame_matches_tableau(&build_s2(3, 1, 2).unwrap(), 1000);
    frame_matches_tableau(&build_x_memory(3, 3).unwrap(), 300);
}

#[test]
fn shots_depend_only_on_seed_and_index() {
    let c = apply_noise(&build_s2(3, 1, 1).unwrap(), 0.01).unwrap();
    let set = enumerate_detectors(&c).unwrap();
    let sampler = FrameSampler::new(&c, &set);
    let all = sampler.sample(300, 77);
    assert_eq!(sampler.sample_range(133, 50, 77), all[133..183].to_vec());
    assert_eq!(sampler.sample(300, 77), all);
    assert_ne!(sampler.sample(300, 78), all);
    assert!(all.iter().any(|s| !s.detector_bits.is_zero()));
}

#[test]
fn shot_dump_roundtrip() {
    let c = apply_noise(&build_x_memory(3, 2).unwrap(), 0.02).unwrap();
    let set = enumerate_detectors(&c).unwrap();
    let shots = FrameSampler::new(&c, &set).sample(100, 5);
    let text = write_shot_dump(&c.content_hash(), 5, set.len(), &shots);
    let (hash, seed, back) = read_shot_dump(&text).unwrap();
    assert_eq!((hash, seed), (c.content_hash(), 5));
    assert_eq!(back, shots);
}

#[test]
fn bulk_trigger_rate_matches_the_error_model() {
    let p = 1e-3;
    let c = apply_noise(&build_x_memory(3, 4).unwrap(), p).unwrap();
    let set = enumerate_detectors(&c).unwrap();
    let hg = foldsim::dem::build_hypergraph(&c, &set).unwrap();
    let n = 100_000;
    let shots = FrameSampler::new(&c, &set).sample(n, 21);
    let bulk: Vec<usize> = set
        .detectors
        .iter()
        .filter(|d| {
            let (x, y, t) = d.coordinate;
            x > 0 && y > 0 && x < 4 && y < 4 && t == 5
        })
        .map(|d| d.id)
        .collect();
    assert!(!bulk.is_empty());
    for det in bulk {
        // Components of one channel are exclusive; channels are independent.
        let mut per_channel: std::collections::HashMap<usize, f64> = Default::default();
        for (loc, eff) in hg.locations.iter().zip(&hg.effects) {
            if eff.detectors().contains(&det) {
                *per_channel.entry(loc.parent_channel).or_default() += loc.probability;
            }
        }
        let expected = (1.0 - per_channel.values().map(|r| 1.0 - 2.0 * r).product::<f64>()) / 2.0;
        let seen = shots.iter().filter(|s| s.detector_bits.get(det)).count() as f64 / n as f64;
        let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((seen - expected).abs() < 5.0 * sigma, "detector {det}: {seen} vs {expected}");
    }
}
