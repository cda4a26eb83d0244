//! Detector enumeration from stabilizer trajectories.
//!
//! Z detectors pair consecutive Z-ancilla resets. X detectors start from a
//! pair of X-ancilla resets (or the data resets of round 0, or the final data
//! readout); whenever the propagated stabilizer leaves a Z residue on data at
//! the end of a round, matching Z-plaquette resets of that round are added so
//! it is absorbed, and any complete Z-detector pair picked up this way is
//! divided out again.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::circuit::{Circuit, MeasurementLocation, ResetLocation};
use crate::error::{Error, Result};
use crate::geometry::{Coord, Pauli, SparsePauli};
use crate::gf2::{BitVec, Gf2Basis};
use crate::trajectory::{propagate, StabilizerTrajectory, TrajectoryStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DetectorClass {
    ZDet,
    XDet,
}

#[derive(Clone, Debug)]
pub struct Detector {
    pub id: usize,
    pub measurements: Vec<MeasurementLocation>,
    /// (x2, y2, t2) with t2 = 2i + 1 for a detector between rounds i and i+1.
    pub coordinate: (i32, i32, i32),
    pub basis_class: DetectorClass,
    pub generating_resets: Vec<ResetLocation>,
    /// Outcome parity of the measurements in a noiseless run.
    pub reference_parity: bool,
}

#[derive(Clone, Debug)]
pub struct LogicalObservable {
    pub measurements: Vec<MeasurementLocation>,
    pub generating_resets: Vec<ResetLocation>,
    pub reference_value: bool,
}

#[derive(Clone, Debug)]
pub struct DetectorSet {
    pub detectors: Vec<Detector>,
    pub regions: Vec<StabilizerTrajectory>,
    pub logical: LogicalObservable,
    pub logical_region: StabilizerTrajectory,
}

impl DetectorSet {
    pub fn len(&self) -> usize {
        self.detectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty()
    }

    pub fn ids_of(&self, class: DetectorClass) -> Vec<usize> {
        self.detectors.iter().filter(|d| d.basis_class == class).map(|d| d.id).collect()
    }

    /// One line per detector, sorted by coordinate.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for d in &self.detectors {
            let (x, y, t) = d.coordinate;
            let _ = write!(out, "DET {x} {y} {t} :");
            for m in &d.measurements {
                let _ = write!(out, " M {} {}@{}", m.basis, m.coord, m.round);
            }
            let _ = writeln!(out);
        }
        let _ = write!(out, "OBS :");
        for m in &self.logical.measurements {
            let _ = write!(out, " M {} {}@{}", m.basis, m.coord, m.round);
        }
        let _ = writeln!(out);
        out
    }
}

struct Builder<'a> {
    circuit: &'a Circuit,
    end_of_round: Vec<usize>,
    data_index: HashMap<Coord, usize>,
    plaquettes: Gf2Basis,
    plaquette_ancillas: Vec<Coord>,
    se_rounds: BTreeSet<u32>,
}

impl<'a> Builder<'a> {
    fn new(circuit: &'a Circuit, with_logical: bool) -> Self {
        let layout = &circuit.layout;
        let data_index: HashMap<Coord, usize> = layout.data.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let n = layout.data.len();
        let mut plaquettes = Gf2Basis::new(layout.ancilla_z.len() + 1);
        for &b in &layout.ancilla_z {
            plaquettes.insert(&BitVec::from_indices(n, layout.plaquette(b).iter().map(|c| data_index[c])));
        }
        if with_logical {
            plaquettes.insert(&BitVec::from_indices(n, layout.logical_z_column().iter().map(|c| data_index[c])));
        }
        let mut end_of_round = vec![0; circuit.rounds()];
        for (li, l) in circuit.layers.iter().enumerate() {
            end_of_round[l.timestamp.round as usize] = li;
        }
        Self {
            circuit,
            end_of_round,
            data_index,
            plaquettes,
            plaquette_ancillas: layout.ancilla_z.clone(),
            se_rounds: circuit.se_rounds().into_iter().collect(),
        }
    }

    /// Z-plaquette resets in `round` that cancel the Z residue on data.
    /// With the logical column in the basis, its component is left alone.
    fn cancel_z(&self, residual: &SparsePauli, round: u32) -> Result<Vec<ResetLocation>> {
        let z = residual.z_part();
        if z.is_identity() {
            return Ok(Vec::new());
        }
        if z.coords().any(|c| !self.data_index.contains_key(&c)) {
            return Err(Error::Detector(format!("Z residue on ancillas after round {round}: {residual}")));
        }
        let target = BitVec::from_indices(self.data_index.len(), z.coords().map(|c| self.data_index[&c]));
        let combo = self
            .plaquettes
            .solve(&target)
            .ok_or_else(|| Error::Detector(format!("Z residue after round {round} is not a stabilizer: {residual}")))?;
        Ok(combo
            .into_iter()
            .filter(|&k| k < self.plaquette_ancillas.len())
            .map(|k| ResetLocation { basis: Pauli::Z, coord: self.plaquette_ancillas[k], round })
            .collect())
    }

    fn toggle(set: &mut BTreeSet<ResetLocation>, r: ResetLocation) {
        if !set.remove(&r) {
            set.insert(r);
        }
    }

    /// Completes an X-type stabilizer: cancel the Z residue at the end of
    /// `cancel_round`, propagate to `end_layer`, then divide out Z detectors.
    fn close_x(&self, seeds: Vec<ResetLocation>, cancel_round: u32, end_layer: usize) -> Result<StabilizerTrajectory> {
        let mut origin: BTreeSet<ResetLocation> = seeds.into_iter().collect();
        let first = propagate(self.circuit, &origin.iter().copied().collect::<Vec<_>>(), self.end_of_round[cancel_round as usize])?;
        if let TrajectoryStatus::Annihilated { at } = first.status {
            return Err(Error::Detector(format!("stabilizer annihilated at {at} before round {cancel_round} ended")));
        }
        for r in self.cancel_z(&first.residual, cancel_round)? {
            Self::toggle(&mut origin, r);
        }
        loop {
            let traj = propagate(self.circuit, &origin.iter().copied().collect::<Vec<_>>(), end_layer)?;
            if traj.status != TrajectoryStatus::FullyAbsorbed {
                return Err(Error::Detector(format!(
                    "stabilizer from {} not absorbed: {:?}, residual {}",
                    origin.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" "),
                    traj.status,
                    traj.residual
                )));
            }
            let zs: BTreeSet<(Coord, u32)> =
                traj.absorbed_by.iter().filter(|m| m.basis == Pauli::Z).map(|m| (m.coord, m.round)).collect();
            let pair = zs.iter().find(|(c, r)| {
                self.se_rounds.contains(r) && self.se_rounds.contains(&(r + 1)) && zs.contains(&(*c, r + 1))
            });
            match pair {
                None => return Ok(traj),
                Some(&(c, r)) => {
                    Self::toggle(&mut origin, ResetLocation { basis: Pauli::Z, coord: c, round: r });
                    Self::toggle(&mut origin, ResetLocation { basis: Pauli::Z, coord: c, round: r + 1 });
                }
            }
        }
    }
}

fn finish(traj: StabilizerTrajectory, coordinate: (i32, i32, i32), basis_class: DetectorClass) -> (Detector, StabilizerTrajectory) {
    let mut measurements = traj.absorbed_by.clone();
    measurements.sort();
    let det = Detector {
        id: 0,
        measurements,
        coordinate,
        basis_class,
        generating_resets: traj.origin.clone(),
        reference_parity: traj.reference_parity(),
    };
    (det, traj)
}

/// The logical observable: X̄ on the first data row, prepared in round 0 and
/// read out at the end, with Z-plaquette corrections wherever a fold leaves a
/// Z residue that is not the logical Z̄.
pub fn logical_observable(circuit: &Circuit) -> Result<(LogicalObservable, StabilizerTrajectory)> {
    let b = Builder::new(circuit, true);
    let mut origin: BTreeSet<ResetLocation> = circuit
        .observable
        .iter()
        .map(|&c| ResetLocation { basis: Pauli::X, coord: c, round: 0 })
        .collect();
    for &r in &b.se_rounds {
        let traj = propagate(circuit, &origin.iter().copied().collect::<Vec<_>>(), b.end_of_round[r as usize])?;
        if let TrajectoryStatus::Annihilated { at } = traj.status {
            return Err(Error::Detector(format!("logical observable annihilated at {at}")));
        }
        for reset in b.cancel_z(&traj.residual, r)? {
            Builder::toggle(&mut origin, reset);
        }
    }
    let traj = propagate(circuit, &origin.iter().copied().collect::<Vec<_>>(), circuit.layers.len() - 1)?;
    if traj.status != TrajectoryStatus::FullyAbsorbed {
        return Err(Error::Detector(format!("logical observable not absorbed: {:?} {}", traj.status, traj.residual)));
    }
    let mut measurements = traj.absorbed_by.clone();
    measurements.sort();
    Ok((
        LogicalObservable { measurements, generating_resets: traj.origin.clone(), reference_value: traj.reference_parity() },
        traj,
    ))
}

/// Enumerates all detectors of a circuit with their detecting regions.
pub fn enumerate_detectors(circuit: &Circuit) -> Result<DetectorSet> {
    let b = Builder::new(circuit, false);
    let layout = &circuit.layout;
    let se: Vec<u32> = b.se_rounds.iter().copied().collect();
    let last_layer = circuit.layers.len() - 1;

    enum Job {
        Z(Coord, u32),
        XPair(Coord, u32),
        XInit(Coord),
        XFinal(Coord),
    }
    let mut jobs = Vec::new();
    for w in se.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(Error::Detector("syndrome-extraction rounds must be consecutive".into()));
        }
        jobs.extend(layout.ancilla_z.iter().map(|&a| Job::Z(a, w[0])));
        jobs.extend(layout.ancilla_x.iter().map(|&a| Job::XPair(a, w[0])));
    }
    jobs.extend(layout.ancilla_x.iter().map(|&a| Job::XInit(a)));
    jobs.extend(layout.ancilla_x.iter().map(|&a| Job::XFinal(a)));

    let first_se = *se.first().ok_or_else(|| Error::Detector("no syndrome-extraction rounds".into()))?;
    let last_se = *se.last().expect("non-empty");
    let built: Vec<(Detector, StabilizerTrajectory)> = jobs
        .par_iter()
        .map(|job| -> Result<(Detector, StabilizerTrajectory)> {
            match *job {
                Job::Z(a, r) => {
                    let origin = [
                        ResetLocation { basis: Pauli::Z, coord: a, round: r },
                        ResetLocation { basis: Pauli::Z, coord: a, round: r + 1 },
                    ];
                    let traj = propagate(circuit, &origin, b.end_of_round[r as usize + 1])?;
                    if traj.status != TrajectoryStatus::FullyAbsorbed {
                        return Err(Error::Detector(format!("Z detector at {a} round {r} not absorbed: {:?}", traj.status)));
                    }
                    Ok(finish(traj, (a.x2, a.y2, 2 * r as i32 + 1), DetectorClass::ZDet))
                }
                Job::XPair(a, r) => {
                    let seeds = vec![
                        ResetLocation { basis: Pauli::X, coord: a, round: r },
                        ResetLocation { basis: Pauli::X, coord: a, round: r + 1 },
                    ];
                    let traj = b.close_x(seeds, r + 1, b.end_of_round[r as usize + 1])?;
                    Ok(finish(traj, (a.x2, a.y2, 2 * r as i32 + 1), DetectorClass::XDet))
                }
                Job::XInit(a) => {
                    let mut seeds: Vec<ResetLocation> = layout
                        .plaquette(a)
                        .into_iter()
                        .map(|q| ResetLocation { basis: Pauli::X, coord: q, round: 0 })
                        .collect();
                    seeds.push(ResetLocation { basis: Pauli::X, coord: a, round: first_se });
                    let traj = b.close_x(seeds, first_se, b.end_of_round[first_se as usize])?;
                    Ok(finish(traj, (a.x2, a.y2, 2 * first_se as i32 - 1), DetectorClass::XDet))
                }
                Job::XFinal(a) => {
                    let seeds = vec![ResetLocation { basis: Pauli::X, coord: a, round: last_se }];
                    let traj = b.close_x(seeds, last_se, last_layer)?;
                    Ok(finish(traj, (a.x2, a.y2, 2 * last_se as i32 + 1), DetectorClass::XDet))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut built = built;
    built.sort_by_key(|(d, _)| (d.coordinate.2, d.coordinate.1, d.coordinate.0));
    let (mut detectors, regions): (Vec<Detector>, Vec<StabilizerTrajectory>) = built.into_iter().unzip();
    for (i, d) in detectors.iter_mut().enumerate() {
        d.id = i;
    }
    let (logical, logical_region) = logical_observable(circuit)?;
    Ok(DetectorSet { detectors, regions, logical, logical_region })
}

/// Detecting region of a detector, recomputed from its generating resets.
pub fn detecting_region(circuit: &Circuit, detector: &Detector) -> Result<StabilizerTrajectory> {
    propagate(circuit, &detector.generating_resets, circuit.layers.len() - 1)
}

/// Detector-by-measurement incidence rank; equals the detector count when the
/// set is linearly independent.
pub fn detector_rank(circuit: &Circuit, set: &DetectorSet) -> usize {
    let ms = circuit.measurements();
    let index: BTreeMap<MeasurementLocation, usize> = ms.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let vecs: Vec<BitVec> = set
        .detectors
        .iter()
        .map(|d| BitVec::from_indices(ms.len(), d.measurements.iter().map(|m| index[m])))
        .collect();
    crate::gf2::rank(&vecs)
}
