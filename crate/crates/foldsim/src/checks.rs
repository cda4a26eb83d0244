//! Self-checks shared by the command line `verify` and the test suites.

use crate::circuit::Circuit;
use crate::dem::{error_locations, ErrorEffect, RegionIndex};
use crate::detectors::{enumerate_detectors, DetectorClass, DetectorSet};
use crate::error::Result;
use crate::frame::FrameSampler;

/// Error locations whose region-derived footprint differs from the one
/// found by propagating the fault through the frame simulator.
pub fn oracle_mismatches(noisy: &Circuit, set: &DetectorSet) -> Vec<usize> {
    let index = RegionIndex::new(noisy, set);
    let locs = error_locations(noisy);
    let faults: Vec<_> = locs.iter().map(|l| (l.after_layer, l.fault.clone())).collect();
    let frame = FrameSampler::new(noisy, set).effects(&faults);
    locs.iter()
        .zip(frame)
        .filter(|(loc, (bits, flip))| {
            let mut expect = ErrorEffect { logical_flip: *flip, ..Default::default() };
            for i in bits.ones() {
                match set.detectors[i].basis_class {
                    DetectorClass::ZDet => expect.dz.push(i),
                    DetectorClass::XDet => expect.dx.push(i),
                }
            }
            index.effect(loc.after_layer, &loc.fault) != expect
        })
        .map(|(loc, _)| loc.id)
        .collect()
}

/// Noiseless shots with a fired detector or an unexpected logical value.
pub fn noiseless_violations(circuit: &Circuit, shots: usize, seed: u64) -> Result<usize> {
    let set = enumerate_detectors(circuit)?;
    let sampler = FrameSampler::new(circuit, &set);
    Ok(sampler
        .sample(shots, seed)
        .iter()
        .filter(|s| !s.detector_bits.is_zero() || s.logical_bit != set.logical.reference_value)
        .count())
}

/// Whether sampling is reproducible: the same seed twice, and the same
/// shots when the range is split in two at an unaligned point.
pub fn sampling_is_reproducible(noisy: &Circuit, set: &DetectorSet, shots: usize, seed: u64) -> bool {
    let sampler = FrameSampler::new(noisy, set);
    let whole = sampler.sample(shots, seed);
    let cut = shots / 3 + 1;
    let mut split = sampler.sample_range(0, cut.min(shots), seed);
    split.extend(sampler.sample_range(cut.min(shots) as u64, shots - cut.min(shots), seed));
    whole == sampler.sample(shots, seed) && whole == split
}
