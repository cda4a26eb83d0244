//! Oracles built independently of the library's own constructions.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use foldsim::circuit::Circuit;
use foldsim::geometry::{Coord, Pauli, SparsePauli, Timestamp};
use foldsim::layout::Layout;
use foldsim::matching::{MatchingGraph, RawEdge};
use foldsim::program::Program;
use foldsim::tableau::{canonical_group, reference_run, Outcomes, RunOptions, Tableau};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Generator = Vec<(usize, Pauli)>;

pub fn snapshot(c: &Circuit, ts: Timestamp) -> Tableau {
    let run = reference_run(c, Outcomes::Zero, &RunOptions { snapshots: vec![ts], faults: vec![] }).unwrap();
    run.snapshots[&ts].clone()
}

/// X-type masks spanning the kernel of `checks` over `n` bits.
pub fn kernel(checks: &[u64], n: usize) -> Vec<u64> {
    let mut rows: Vec<u64> = checks.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| rows[i] >> col & 1 == 1) else { continue };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && rows[i] >> col & 1 == 1 {
                rows[i] ^= rows[r];
            }
        }
        pivots.push(col);
        r += 1;
    }
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = 1u64 << free;
            for (i, &pc) in pivots.iter().enumerate() {
                if rows[i] >> free & 1 == 1 {
                    v |= 1 << pc;
                }
            }
            v
        })
        .collect()
}

pub fn rank(vs: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for &v in vs {
        let r = basis.iter().fold(v, |acc, &b| acc.min(acc ^ b));
        if r != 0 {
            basis.push(r);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Unrotated distance-d surface code on the data qubits and the bulk
/// ancilla positions. Check sites sit at mixed-parity points; `x_on_even_x`
/// picks which family carries X checks. Returns the checks of each type as
/// coordinate lists, plus an X logical.
pub fn unrotated_code(d: i32, x_on_even_x: bool) -> (Vec<Vec<Coord>>, Vec<Vec<Coord>>, Vec<Coord>) {
    let m = 2 * (d - 1);
    let qubits: Vec<Coord> =
        (0..=m).flat_map(|y| (0..=m).map(move |x| Coord::new(x, y))).filter(|c| (c.x2 + c.y2) % 2 == 0).collect();
    let pos: HashMap<Coord, usize> = qubits.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let (mut xs, mut zs) = (Vec::new(), Vec::new());
    for y in 0..=m {
        for x in 0..=m {
            if (x + y) % 2 == 0 {
                continue;
            }
            let tile: Vec<Coord> = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .map(|&(dx, dy)| Coord::new(x + dx, y + dy))
                .filter(|c| pos.contains_key(c))
                .collect();
            if (x % 2 == 0) == x_on_even_x {
                xs.push(tile);
            } else {
                zs.push(tile);
            }
        }
    }
    let mask = |t: &Vec<Coord>| t.iter().fold(0u64, |m, c| m | 1 << pos[c]);
    let zm: Vec<u64> = zs.iter().map(mask).collect();
    let xm: Vec<u64> = xs.iter().map(mask).collect();
    let logical = kernel(&zm, qubits.len())
        .into_iter()
        .find(|&v| {
            let mut with = xm.clone();
            with.push(v);
            rank(&with) > rank(&xm)
        })
        .unwrap();
    let lx = qubits.iter().enumerate().filter(|(i, _)| logical >> i & 1 == 1).map(|(_, c)| *c).collect();
    (xs, zs, lx)
}

pub fn on(prog: &Program, qubits: &[Coord], p: Pauli) -> Generator {
    qubits.iter().map(|c| (prog.index[c] as usize, p)).collect()
}

/// Canonical form of the unrotated code plus single-qubit X (Z) on the
/// boundary X (Z) ancillas.
pub fn half_cycle_oracle(c: &Circuit, x_on_even_x: bool) -> Vec<String> {
    let prog = Program::new(c);
    let d = c.distance() as i32;
    let (xs, zs, lx) = unrotated_code(d, x_on_even_x);
    let mut gens: Vec<Generator> = xs.iter().map(|t| on(&prog, t, Pauli::X)).collect();
    gens.extend(zs.iter().map(|t| on(&prog, t, Pauli::Z)));
    gens.push(on(&prog, &lx, Pauli::X));
    let bulk = |a: &Coord| a.x2 > 0 && a.y2 > 0 && a.x2 < 2 * (d - 1) && a.y2 < 2 * (d - 1);
    for a in c.layout.ancilla_x.iter().filter(|a| !bulk(a)) {
        gens.push(on(&prog, &[*a], Pauli::X));
    }
    for a in c.layout.ancilla_z.iter().filter(|a| !bulk(a)) {
        gens.push(on(&prog, &[*a], Pauli::Z));
    }
    assert_eq!(gens.len(), prog.qubits.len());
    canonical_group(prog.qubits.len(), &gens)
}

/// Rotated code checks built from plaquette geometry alone.
pub fn rotated_checks(d: i32) -> Vec<(Vec<Coord>, Pauli)> {
    let mut out = Vec::new();
    for j in -1..d {
        for i in -1..d {
            let x_type = (i + j).rem_euclid(2) == 0;
            let (side_i, side_j) = (i < 0 || i >= d - 1, j < 0 || j >= d - 1);
            if (side_i && side_j) || (side_i && !x_type) || (side_j && x_type) {
                continue;
            }
            let tile: Vec<Coord> = [(0, 0), (1, 0), (0, 1), (1, 1)]
                .iter()
                .map(|&(a, b)| (i + a, j + b))
                .filter(|&(a, b)| (0..d).contains(&a) && (0..d).contains(&b))
                .map(|(a, b)| Coord::new(2 * a, 2 * b))
                .collect();
            out.push((tile, if x_type { Pauli::X } else { Pauli::Z }));
        }
    }
    out
}

/// Whether transversal H followed by moving each data qubit along `map`
/// leaves the rotated code's stabilizer group unchanged.
pub fn hadamard_then_move_preserves_code(d: usize, map: &BTreeMap<Coord, Coord>) -> bool {
    let data = Layout::new(d).unwrap().data;
    let index: BTreeMap<Coord, usize> = data.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let swap = |p: Pauli| if p == Pauli::X { Pauli::Z } else { Pauli::X };
    let checks = rotated_checks(d as i32);
    let group = |moved: bool| {
        let gens: Vec<Generator> = checks
            .iter()
            .map(|(support, p)| {
                support
                    .iter()
                    .map(|c| if moved { (index[&map[c]], swap(*p)) } else { (index[c], *p) })
                    .collect()
            })
            .collect();
        canonical_group(data.len(), &gens)
    };
    group(false) == group(true)
}

pub fn graph(n: usize, edges: &[(usize, usize, f64)]) -> MatchingGraph {
    // Node n is the boundary; probabilities chosen so weight = w.
    let raw: Vec<RawEdge> = edges
        .iter()
        .enumerate()
        .map(|(i, &(u, v, w))| RawEdge { u, v, probability: 1.0 / (1.0 + w.exp()), member: i, logical_flip: i % 3 == 0 })
        .collect();
    let mut nodes: Vec<Option<usize>> = (0..n).map(Some).collect();
    nodes.push(None);
    MatchingGraph::build(nodes, n, &raw)
}

/// Shortest paths that never pass through the boundary, then exhaustive
/// pairing of defects with each other or the boundary.
pub fn brute_force(g: &MatchingGraph, defects: &[usize]) -> f64 {
    let n = g.num_nodes();
    let b = g.boundary;
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
    }
    for e in &g.edges {
        d[e.u][e.v] = d[e.u][e.v].min(e.weight);
        d[e.v][e.u] = d[e.v][e.u].min(e.weight);
    }
    for k in (0..n).filter(|&k| k != b) {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    fn rec(rest: &[usize], d: &[Vec<f64>], b: usize) -> f64 {
        let Some((&first, tail)) = rest.split_first() else { return 0.0 };
        let mut best = d[first][b] + rec(tail, d, b);
        for (i, &other) in tail.iter().enumerate() {
            let mut left = tail.to_vec();
            left.remove(i);
            best = best.min(d[first][other] + rec(&left, d, b));
        }
        best
    }
    rec(defects, &d, b)
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> MatchingGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        // A spanning path keeps everything reachable.
        edges.push((u, u + 1, rng.gen_range(0.5..8.0)));
        for v in u + 2..=n {
            if rng.gen_bool(density) {
                edges.push((u, v, rng.gen_range(0.5..8.0)));
            }
        }
    }
    graph(n, &edges)
}

/// Y-bar = i X-bar Z-bar with X-bar along the bottom row and Z-bar along the left column.
pub fn logical_y(d: i32) -> SparsePauli {
    let mut q = SparsePauli::single(Coord::new(0, 0), Pauli::Y);
    for x in 1..d {
        q.set(Coord::new(2 * x, 0), Pauli::X);
    }
    for y in 1..d {
        q.set(Coord::new(0, 2 * y), Pauli::Z);
    }
    q
}
