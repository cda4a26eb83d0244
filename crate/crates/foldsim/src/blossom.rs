//! Maximum-weight general matching (Edmonds' blossom algorithm with dual
//! variables, O(n³)), following Van Rantwijk's formulation. Integer weights
//! keep all dual updates exact.

#[derive(Clone, Debug)]
struct Blossom {
    nvertex: usize,
    edges: Vec<(usize, usize, i64)>,
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<Option<usize>>,
    label: Vec<u8>,
    labelend: Vec<Option<usize>>,
    inblossom: Vec<usize>,
    blossomparent: Vec<Option<usize>>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<Option<usize>>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<Option<usize>>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<i64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

fn wrap(j: isize, len: usize) -> usize {
    j.rem_euclid(len as isize) as usize
}

impl Blossom {
    fn new(nvertex: usize, edges: Vec<(usize, usize, i64)>) -> Self {
        let nedge = edges.len();
        let maxweight = edges.iter().map(|e| e.2).max().unwrap_or(0).max(0);
        let endpoint = (0..2 * nedge).map(|p| if p % 2 == 0 { edges[p / 2].0 } else { edges[p / 2].1 }).collect();
        let mut neighbend = vec![Vec::new(); nvertex];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut dualvar = vec![maxweight; nvertex];
        dualvar.extend(std::iter::repeat(0).take(nvertex));
        Self {
            nvertex,
            endpoint,
            neighbend,
            mate: vec![None; nvertex],
            label: vec![0; 2 * nvertex],
            labelend: vec![None; 2 * nvertex],
            inblossom: (0..nvertex).collect(),
            blossomparent: vec![None; 2 * nvertex],
            blossomchilds: vec![Vec::new(); 2 * nvertex],
            blossombase: (0..nvertex).map(Some).chain(std::iter::repeat(None).take(nvertex)).collect(),
            blossomendps: vec![Vec::new(); 2 * nvertex],
            bestedge: vec![None; 2 * nvertex],
            blossombestedges: vec![None; 2 * nvertex],
            unusedblossoms: (nvertex..2 * nvertex).collect(),
            dualvar,
            allowedge: vec![false; nedge],
            queue: Vec::new(),
            edges,
        }
    }

    fn slack(&self, k: usize) -> i64 {
        let (i, j, wt) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2 * wt
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(t) = stack.pop() {
            if t < self.nvertex {
                out.push(t);
            } else {
                stack.extend(self.blossomchilds[t].iter().rev());
            }
        }
        out
    }

    fn assign_label(&mut self, w: usize, t: u8, p: Option<usize>) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = None;
        self.bestedge[b] = None;
        if t == 1 {
            let leaves = self.leaves(b);
            self.queue.extend(leaves);
        } else if t == 2 {
            let base = self.blossombase[b].expect("labelled blossom has a base");
            let mb = self.mate[base].expect("T-blossom base is matched");
            self.assign_label(self.endpoint[mb], 1, Some(mb ^ 1));
        }
    }

    fn scan_blossom(&mut self, v: usize, w: usize) -> Option<usize> {
        let mut path = Vec::new();
        let mut base = None;
        let (mut v, mut w) = (Some(v), Some(w));
        while let Some(vv) = v {
            let mut b = self.inblossom[vv];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            debug_assert_eq!(self.label[b], 1);
            path.push(b);
            self.label[b] = 5;
            match self.labelend[b] {
                None => v = None,
                Some(le) => {
                    let x = self.endpoint[le];
                    b = self.inblossom[x];
                    debug_assert_eq!(self.label[b], 2);
                    v = Some(self.endpoint[self.labelend[b].expect("T-blossom has a label end")]);
                }
            }
            if w.is_some() {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("free blossom slot");
        self.blossombase[b] = Some(base);
        self.blossomparent[b] = None;
        self.blossomparent[bb] = Some(b);
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = Some(b);
            path.push(bv);
            let le = self.labelend[bv].expect("label end on blossom path");
            endps.push(le);
            v = self.endpoint[le];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = Some(b);
            path.push(bw);
            let le = self.labelend[bw].expect("label end on blossom path");
            endps.push(le ^ 1);
            w = self.endpoint[le];
            bw = self.inblossom[w];
        }
        debug_assert_eq!(self.label[bb], 1);
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0;
        for v in self.leaves_of_path(&path) {
            if self.label[self.inblossom[v]] == 2 {
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }
        let mut bestedgeto: Vec<Option<usize>> = vec![None; 2 * self.nvertex];
        for &bv in &path {
            let nblists: Vec<Vec<usize>> = match self.blossombestedges[bv].take() {
                None => self.leaves(bv).iter().map(|&v| self.neighbend[v].iter().map(|p| p / 2).collect()).collect(),
                Some(list) => vec![list],
            };
            for nblist in nblists {
                for k in nblist {
                    let (i, j, _) = self.edges[k];
                    let j = if self.inblossom[j] == b { i } else { j };
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && bestedgeto[bj].map_or(true, |e| self.slack(k) < self.slack(e))
                    {
                        bestedgeto[bj] = Some(k);
                    }
                }
            }
            self.bestedge[bv] = None;
        }
        let list: Vec<usize> = bestedgeto.into_iter().flatten().collect();
        let mut best = None;
        for &k in &list {
            if best.map_or(true, |e| self.slack(k) < self.slack(e)) {
                best = Some(k);
            }
        }
        self.blossombestedges[b] = Some(list);
        self.bestedge[b] = best;
        self.blossomchilds[b] = path;
        self.blossomendps[b] = endps;
    }

    fn leaves_of_path(&self, path: &[usize]) -> Vec<usize> {
        path.iter().flat_map(|&p| self.leaves(p)).collect()
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.blossomchilds[b].clone();
        for &s in &childs {
            self.blossomparent[s] = None;
            if s < self.nvertex {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            let len = childs.len();
            let lb = self.labelend[b].expect("T-blossom has a label end");
            let entrychild = self.inblossom[self.endpoint[lb ^ 1]];
            let mut j = childs.iter().position(|&c| c == entrychild).expect("entry child") as isize;
            let (jstep, endptrick): (isize, isize) = if j & 1 == 1 {
                j -= len as isize;
                (1, 0)
            } else {
                (-1, 1)
            };
            let endps = self.blossomendps[b].clone();
            let ep = |j: isize| endps[wrap(j - endptrick, len)];
            let mut p = lb;
            while j != 0 {
                self.label[self.endpoint[p ^ 1]] = 0;
                let q = ep(j) ^ (endptrick as usize) ^ 1;
                self.label[self.endpoint[q]] = 0;
                self.assign_label(self.endpoint[p ^ 1], 2, Some(p));
                self.allowedge[ep(j) / 2] = true;
                j += jstep;
                p = ep(j) ^ (endptrick as usize);
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            let bv = childs[wrap(j, len)];
            let x = self.endpoint[p ^ 1];
            self.label[x] = 2;
            self.label[bv] = 2;
            self.labelend[x] = Some(p);
            self.labelend[bv] = Some(p);
            self.bestedge[bv] = None;
            j += jstep;
            while childs[wrap(j, len)] != entrychild {
                let bv = childs[wrap(j, len)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let leaves = self.leaves(bv);
                if let Some(&v) = leaves.iter().find(|&&v| self.label[v] != 0) {
                    debug_assert_eq!(self.label[v], 2);
                    debug_assert_eq!(self.inblossom[v], bv);
                    self.label[v] = 0;
                    let base = self.blossombase[bv].expect("sub-blossom base");
                    let mb = self.mate[base].expect("sub-blossom base is matched");
                    self.label[self.endpoint[mb]] = 0;
                    let le = self.labelend[v];
                    self.assign_label(v, 2, le);
                }
                j += jstep;
            }
        }
        self.label[b] = u8::MAX;
        self.labelend[b] = None;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = None;
        self.blossombestedges[b] = None;
        self.bestedge[b] = None;
        self.unusedblossoms.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != Some(b) {
            t = self.blossomparent[t].expect("vertex inside blossom");
        }
        if t >= self.nvertex {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len();
        let i = self.blossomchilds[b].iter().position(|&c| c == t).expect("child in blossom");
        let mut j = i as isize;
        let (jstep, endptrick): (isize, isize) = if i & 1 == 1 {
            j -= len as isize;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t = self.blossomchilds[b][wrap(j, len)];
            let p = self.blossomendps[b][wrap(j - endptrick, len)] ^ (endptrick as usize);
            if t >= self.nvertex {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            let t = self.blossomchilds[b][wrap(j, len)];
            if t >= self.nvertex {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = Some(p ^ 1);
            self.mate[self.endpoint[p ^ 1]] = Some(p);
        }
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], Some(v));
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                debug_assert_eq!(self.label[bs], 1);
                if bs >= self.nvertex {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = Some(p);
                let Some(le) = self.labelend[bs] else { break };
                let t = self.endpoint[le];
                let bt = self.inblossom[t];
                debug_assert_eq!(self.label[bt], 2);
                let lbt = self.labelend[bt].expect("T-blossom has a label end");
                s = self.endpoint[lbt];
                let j = self.endpoint[lbt ^ 1];
                if bt >= self.nvertex {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = Some(lbt);
                p = lbt ^ 1;
            }
        }
    }

    fn solve(mut self, maxcardinality: bool) -> Vec<Option<usize>> {
        let n = self.nvertex;
        for _ in 0..n {
            self.label.iter_mut().for_each(|l| *l = 0);
            self.bestedge.iter_mut().for_each(|e| *e = None);
            for b in n..2 * n {
                self.blossombestedges[b] = None;
            }
            self.allowedge.iter_mut().for_each(|a| *a = false);
            self.queue.clear();
            for v in 0..n {
                if self.mate[v].is_none() && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, None);
                }
            }
            let mut augmented = false;
            loop {
                while let Some(v) = if augmented { None } else { self.queue.pop() } {
                    debug_assert_eq!(self.label[self.inblossom[v]], 1);
                    for idx in 0..self.neighbend[v].len() {
                        let p = self.neighbend[v][idx];
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, Some(p ^ 1));
                            } else if self.label[self.inblossom[w]] == 1 {
                                match self.scan_blossom(v, w) {
                                    Some(base) => self.add_blossom(base, k),
                                    None => {
                                        self.augment_matching(k);
                                        augmented = true;
                                        break;
                                    }
                                }
                            } else if self.label[w] == 0 {
                                debug_assert_eq!(self.label[self.inblossom[w]], 2);
                                self.label[w] = 2;
                                self.labelend[w] = Some(p ^ 1);
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b].map_or(true, |e| kslack < self.slack(e)) {
                                self.bestedge[b] = Some(k);
                            }
                        } else if self.label[w] == 0 && self.bestedge[w].map_or(true, |e| kslack < self.slack(e)) {
                            self.bestedge[w] = Some(k);
                        }
                    }
                }
                if augmented {
                    break;
                }

                // Dual adjustment.
                let mut deltatype = 0u8;
                let mut delta = 0i64;
                let mut deltaedge = None;
                let mut deltablossom = None;
                if !maxcardinality {
                    deltatype = 1;
                    delta = *self.dualvar[..n].iter().min().unwrap_or(&0);
                }
                for v in 0..n {
                    if self.label[self.inblossom[v]] == 0 {
                        if let Some(e) = self.bestedge[v] {
                            let d = self.slack(e);
                            if deltatype == 0 || d < delta {
                                delta = d;
                                deltatype = 2;
                                deltaedge = Some(e);
                            }
                        }
                    }
                }
                for b in 0..2 * n {
                    if self.blossomparent[b].is_none() && self.label[b] == 1 {
                        if let Some(e) = self.bestedge[b] {
                            let kslack = self.slack(e);
                            debug_assert_eq!(kslack % 2, 0);
                            let d = kslack / 2;
                            if deltatype == 0 || d < delta {
                                delta = d;
                                deltatype = 3;
                                deltaedge = Some(e);
                            }
                        }
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b].is_some()
                        && self.blossomparent[b].is_none()
                        && self.label[b] == 2
                        && (deltatype == 0 || self.dualvar[b] < delta)
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = Some(b);
                    }
                }
                if deltatype == 0 {
                    deltatype = 1;
                    delta = (*self.dualvar[..n].iter().min().unwrap_or(&0)).max(0);
                }
                for v in 0..n {
                    match self.label[self.inblossom[v]] {
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => {}
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b].is_some() && self.blossomparent[b].is_none() {
                        match self.label[b] {
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => {}
                        }
                    }
                }
                match deltatype {
                    1 => break,
                    2 => {
                        let e = deltaedge.expect("delta edge");
                        self.allowedge[e] = true;
                        let (mut i, j, _) = self.edges[e];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        self.queue.push(i);
                    }
                    3 => {
                        let e = deltaedge.expect("delta edge");
                        self.allowedge[e] = true;
                        self.queue.push(self.edges[e].0);
                    }
                    _ => self.expand_blossom(deltablossom.expect("delta blossom"), false),
                }
            }
            if !augmented {
                break;
            }
            for b in n..2 * n {
                if self.blossomparent[b].is_none()
                    && self.blossombase[b].is_some()
                    && self.label[b] == 1
                    && self.dualvar[b] == 0
                {
                    self.expand_blossom(b, true);
                }
            }
        }
        (0..n).map(|v| self.mate[v].map(|p| self.endpoint[p])).collect()
    }
}

/// Maximum-weight matching on `n` vertices. With `maxcardinality`, the
/// heaviest among maximum-cardinality matchings. Returns each vertex's mate.
pub fn max_weight_matching(n: usize, edges: &[(usize, usize, i64)], maxcardinality: bool) -> Vec<Option<usize>> {
    if n == 0 {
        return Vec::new();
    }
    let edges: Vec<(usize, usize, i64)> = edges.iter().copied().filter(|&(i, j, _)| i != j).collect();
    if edges.is_empty() {
        return vec![None; n];
    }
    Blossom::new(n, edges).solve(maxcardinality)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(max_weight_matching(2, &[(0, 1, 1)], false), vec![Some(1), Some(0)]);
        assert_eq!(max_weight_matching(3, &[(0, 1, 10), (1, 2, 11)], false), vec![None, Some(2), Some(1)]);
        let m = max_weight_matching(4, &[(0, 1, 2), (0, 2, -2), (1, 2, 1), (1, 3, -1), (2, 3, -6)], false);
        assert_eq!(m, vec![Some(1), Some(0), None, None]);
        let m = max_weight_matching(4, &[(0, 1, 2), (0, 2, -2), (1, 2, 1), (1, 3, -1), (2, 3, -6)], true);
        assert_eq!(m, vec![Some(2), Some(3), Some(0), Some(1)]);
    }

    fn brute(n: usize, edges: &[(usize, usize, i64)], maxcard: bool) -> (usize, i64) {
        fn rec(v: usize, used: &mut Vec<bool>, n: usize, edges: &[(usize, usize, i64)], card: usize, w: i64, best: &mut (usize, i64), maxcard: bool) {
            if v == n {
                let better = if maxcard { (card, w) > *best } else { w > best.1 };
                if better {
                    *best = (card, w);
                }
                return;
            }
            if used[v] {
                return rec(v + 1, used, n, edges, card, w, best, maxcard);
            }
            rec(v + 1, used, n, edges, card, w, best, maxcard);
            for &(a, b, wt) in edges {
                let u = if a == v { b } else if b == v { a } else { continue };
                if u > v && !used[u] {
                    used[v] = true;
                    used[u] = true;
                    rec(v + 1, used, n, edges, card + 1, w + wt, best, maxcard);
                    used[v] = false;
                    used[u] = false;
                }
            }
        }
        let mut best = (0, 0);
        rec(0, &mut vec![false; n], n, edges, 0, 0, &mut best, maxcard);
        best
    }

    #[test]
    fn random_graphs_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..3000 {
            let n = rng.gen_range(1..=9);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(0.5) {
                        edges.push((i, j, rng.gen_range(-5..30)));
                    }
                }
            }
            for maxcard in [false, true] {
                let mate = max_weight_matching(n, &edges, maxcard);
                let mut card = 0;
                let mut w = 0;
                for &(i, j, wt) in &edges {
                    if mate[i] == Some(j) {
                        assert_eq!(mate[j], Some(i));
                        card += 1;
                        w += wt;
                    }
                }
                let (bc, bw) = brute(n, &edges, maxcard);
                if maxcard {
                    assert_eq!((card, w), (bc, bw), "trial {trial} {edges:?}");
                } else {
                    assert_eq!(w, bw, "trial {trial} {edges:?}");
                }
            }
        }
    }
}
