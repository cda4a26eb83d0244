//! Dense bit vectors and linear algebra over GF(2).

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, idx: I) -> Self {
        let mut v = Self::zeros(len);
        for i in idx {
            v.toggle(i);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        if self.get(i) != v {
            self.toggle(i);
        }
    }

    pub fn toggle(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn xor_with(&mut self, other: &BitVec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Incrementally reduced basis that remembers how each reduced row is
/// composed from the original vectors.
#[derive(Clone, Debug)]
pub struct Gf2Basis {
    rows: Vec<(usize, BitVec, BitVec)>,
    inputs: usize,
    cap: usize,
}

impl Gf2Basis {
    /// `cap` bounds the number of vectors that will be inserted.
    pub fn new(cap: usize) -> Self {
        Self { rows: Vec::new(), inputs: 0, cap }
    }

    fn reduce(&self, v: &BitVec) -> (BitVec, BitVec) {
        let mut v = v.clone();
        let mut combo = BitVec::zeros(self.cap);
        for (pivot, row, rc) in &self.rows {
            if v.get(*pivot) {
                v.xor_with(row);
                combo.xor_with(rc);
            }
        }
        (v, combo)
    }

    /// Inserts vector number `self.inputs`; returns false if it was dependent.
    pub fn insert(&mut self, v: &BitVec) -> bool {
        let idx = self.inputs;
        self.inputs += 1;
        let (r, mut combo) = self.reduce(v);
        combo.toggle(idx);
        match r.first_one() {
            None => false,
            Some(p) => {
                for (_, row, rc) in self.rows.iter_mut() {
                    if row.get(p) {
                        row.xor_with(&r);
                        rc.xor_with(&combo);
                    }
                }
                self.rows.push((p, r, combo));
                true
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Indices of inserted vectors summing to `target`, if it lies in the span.
    pub fn solve(&self, target: &BitVec) -> Option<Vec<usize>> {
        let (r, combo) = self.reduce(target);
        r.is_zero().then(|| combo.ones().collect())
    }
}

/// Rank of a set of vectors.
pub fn rank(vectors: &[BitVec]) -> usize {
    let mut b = Gf2Basis::new(vectors.len());
    vectors.iter().filter(|v| b.insert(v)).count()
}
