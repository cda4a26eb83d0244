use std::collections::HashMap;

use foldsim::circuit::{build_s2, build_x_memory, Circuit};
use foldsim::dem::{build_hypergraph, DecodingHypergraph, ErrorEffect};
use foldsim::detectors::enumerate_detectors;
use foldsim::frame::ShotRecord;
use foldsim::geometry::MidCycleLabel;
use foldsim::gf2::BitVec;
use foldsim::noise::apply_noise;
use foldsim::pipeline::{Decoder, DecoderConfig, DecoderMode, InferenceState};

fn setup(c: Circuit) -> DecodingHypergraph {
    let c = apply_noise(&c, 1e-3).unwrap();
    let set = enumerate_detectors(&c).unwrap();
    build_hypergraph(&c, &set).unwrap()
}

fn shot_of(hg: &DecodingHypergraph, eff: &ErrorEffect) -> ShotRecord {
    ShotRecord { detector_bits: BitVec::from_indices(hg.num_detectors(), eff.detectors()), logical_bit: eff.logical_flip }
}

fn decoders(hg: &DecodingHypergraph) -> Vec<Decoder> {
    DecoderMode::ALL.iter().map(|&mode| Decoder::new(hg, DecoderConfig { mode }).unwrap()).collect()
}

#[test]
fn quiet_shot_needs_no_correction() {
    let hg = setup(build_s2(3, 1, 2).unwrap());
    let shot = ShotRecord { detector_bits: BitVec::zeros(hg.num_detectors()), logical_bit: false };
    for dec in decoders(&hg) {
        let out = dec.decode(&shot).unwrap();
        assert!(!out.logical_correction);
        assert_eq!(out.total_weight, 0.0);
        if dec.config.mode.uses_vtb() {
            assert_eq!(out.condition, Some((false, false)));
        }
    }
}

/// Decodes every single fault; returns the locations whose logical
/// correction was wrong. Every correction must reproduce the syndrome.
fn single_fault_misses(hg: &DecodingHypergraph, dec: &Decoder) -> Vec<usize> {
    let mut misses = Vec::new();
    for (loc, eff) in hg.effects.iter().enumerate() {
        if eff.is_trivial() {
            continue;
        }
        let out = dec.decode(&shot_of(hg, eff)).unwrap();
        let mut parts = out.z_edges.clone();
        parts.extend(&out.x_edges);
        assert_eq!(hg.combined_effect(&parts).detectors(), eff.detectors());
        if out.logical_correction != eff.logical_flip {
            misses.push(loc);
        }
    }
    misses
}

#[test]
fn every_single_fault_is_corrected_memory() {
    let hg = setup(build_x_memory(3, 3).unwrap());
    for dec in decoders(&hg) {
        assert!(single_fault_misses(&hg, &dec).is_empty(), "{}", dec.config.mode);
    }
}

#[test]
fn plain_misses_only_fold_pair_faults() {
    for c in [build_s2(3, 1, 2).unwrap(), build_s2(3, 2, 4).unwrap()] {
        let hg = setup(c);
        let dec = Decoder::new(&hg, DecoderConfig { mode: DecoderMode::Plain }).unwrap();
        for loc in single_fault_misses(&hg, &dec) {
            let l = &hg.locations[loc];
            assert_eq!(l.timestamp.label, MidCycleLabel::PostS, "{} @ {}", l.fault, l.timestamp);
            assert_eq!(l.fault.weight(), 2, "{} @ {}", l.fault, l.timestamp);
        }
    }
}

#[test]
fn vtb_corrections_match_syndrome() {
    let hg = setup(build_s2(3, 1, 2).unwrap());
    for dec in &decoders(&hg)[1..] {
        single_fault_misses(&hg, dec);
    }
}

#[test]
fn ambiguous_footprints_resolve_through_x_step() {
    let hg = setup(build_s2(3, 1, 2).unwrap());
    let dec = Decoder::new(&hg, DecoderConfig { mode: DecoderMode::Plain }).unwrap();
    let mut checked = 0;
    for swaps in &dec.swaps {
        for s in swaps {
            let out = dec.decode(&shot_of(&hg, &hg.edges[s.to].effect)).unwrap();
            assert_eq!(out.z_edges, vec![s.to]);
            assert!(out.x_edges.is_empty());
            assert_eq!(out.logical_correction, hg.edges[s.to].effect.logical_flip);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn mixed_fault_clears_x_syndrome_in_z_step() {
    let hg = setup(build_s2(3, 1, 2).unwrap());
    let dec = Decoder::new(&hg, DecoderConfig { mode: DecoderMode::Plain }).unwrap();
    let mut checked = 0;
    for &m in &hg.partition.mixed {
        let out = dec.decode(&shot_of(&hg, &hg.edges[m].effect)).unwrap();
        if out.z_edges == vec![m] {
            assert!(out.x_edges.is_empty());
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn inference_rules() {
    let hg = setup(build_s2(3, 1, 2).unwrap());
    let inf = InferenceState::new(&hg);
    assert!(inf.infer(&[]).is_empty());
    let e = (0..hg.edges.len()).max_by_key(|&e| inf.neighborhoods[e].len()).unwrap();
    let n = inf.neighborhoods[e].len();
    assert!(n > 1);
    let po = inf.infer(&[e]);
    assert_eq!(po.len(), n);
    assert!(po.values().all(|&p| (p - 1.0 / n as f64).abs() < 1e-12));
    let both = inf.infer(&[e, e]);
    assert!(both.values().all(|&p| (p - 2.0 / n as f64).abs() < 1e-12));
    for (ex, p) in inf.reweight(&po) {
        let expect: f64 = inf.neighborhoods[ex].iter().map(|l| po.get(l).copied().unwrap_or(inf.base[*l])).sum();
        assert!((p - expect).abs() < 1e-12);
    }
}

#[test]
fn reweighting_is_idle_without_z_errors() {
    let hg = setup(build_s2(3, 1, 2).unwrap());
    let ds = decoders(&hg);
    for &x in &hg.partition.x {
        let shot = shot_of(&hg, &hg.edges[x].effect);
        let outs: Vec<_> = ds[1..].iter().map(|d| d.decode(&shot).unwrap()).collect();
        if outs[0].z_edges.is_empty() {
            assert_eq!(outs[0], outs[1]);
            assert_eq!(outs[0], outs[2]);
        }
    }
}

#[test]
fn vtb_picks_lowest_weight_condition() {
    let hg = setup(build_s2(3, 1, 1).unwrap());
    let dec = Decoder::new(&hg, DecoderConfig { mode: DecoderMode::Vtb }).unwrap();
    for (a, b) in hg.effects.iter().zip(hg.effects.iter().skip(7)).step_by(13) {
        let shot = shot_of(&hg, &a.xor(b));
        let best = dec.decode(&shot).unwrap();
        for o in dec.decode_all_conditions(&shot).into_iter().flatten() {
            assert!(best.total_weight <= o.total_weight);
        }
    }
}

#[test]
fn reweighting_sums_inferred_neighbours() {
    let hg = setup(build_s2(3, 1, 2).unwrap());
    let inf = InferenceState::new(&hg);
    let ex = hg.partition.x.iter().copied().find(|&e| inf.neighborhoods[e].len() >= 2).unwrap();
    let n = &inf.neighborhoods[ex];
    let po: HashMap<usize, f64> = n.iter().enumerate().map(|(i, &l)| (l, [0.5, 0.25].get(i).copied().unwrap_or(0.0))).collect();
    let p = inf.reweight(&po)[&ex];
    assert!((p - 0.75).abs() < 1e-12);
}

#[test]
fn reweighting_can_flip_the_boundary_condition() {
    let hg = setup(build_s2(3, 1, 1).unwrap());
    let ds = decoders(&hg);
    let (plain, vtb, pr) = (&ds[0], &ds[1], &ds[2]);
    let hit = hg.partition.mixed.iter().find_map(|&m| {
        (0..hg.edges.len()).find_map(|e| {
            let shot = shot_of(&hg, &hg.edges[m].effect.xor(&hg.edges[e].effect));
            let (a, b, c) = (plain.decode(&shot).unwrap(), vtb.decode(&shot).unwrap(), pr.decode(&shot).unwrap());
            (b.condition != c.condition && a.logical_correction != c.logical_correction).then_some((b, c))
        })
    });
    let (b, c) = hit.expect("no instance where reweighting changes the winner");
    assert_ne!(b.condition, c.condition);
}
