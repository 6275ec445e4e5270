use serde::{Deserialize, Serialize};

use crate::Q;

/// A subset of a finite group, stored as a bitmask over element indices.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subset {
    n: usize,
    words: Vec<u64>,
    count: usize,
}

impl std::fmt::Debug for Subset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Subset(n={}, {:?})", self.n, self.indices())
    }
}

impl Subset {
    pub fn empty(n: usize) -> Self {
        Subset { n, words: vec![0; n.div_ceil(64)], count: 0 }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Subset::empty(n);
        for w in s.words.iter_mut() {
            *w = !0;
        }
        s.trim();
        s.count = n;
        s
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, it: I) -> Self {
        let mut s = Subset::empty(n);
        for i in it {
            s.insert(i);
        }
        s
    }

    pub fn from_words(n: usize, mut words: Vec<u64>) -> Self {
        words.resize(n.div_ceil(64), 0);
        let mut s = Subset { n, words, count: 0 };
        s.trim();
        s.recount();
        s
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        Subset::from_indices(n, (0..n).filter(|&i| f(i)).collect::<Vec<_>>())
    }

    /// Size of the ambient group.
    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn measure(&self) -> Q {
        Q::new(self.count as i64, self.n as i64)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) -> bool {
        assert!(i < self.n, "index {i} out of range for universe {}", self.n);
        let (w, b) = (i / 64, i % 64);
        let fresh = self.words[w] >> b & 1 == 0;
        if fresh {
            self.words[w] |= 1 << b;
            self.count += 1;
        }
        fresh
    }

    pub fn remove(&mut self, i: usize) -> bool {
        assert!(i < self.n, "index {i} out of range for universe {}", self.n);
        let (w, b) = (i / 64, i % 64);
        let present = self.words[w] >> b & 1 == 1;
        if present {
            self.words[w] &= !(1 << b);
            self.count -= 1;
        }
        present
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn union(&self, other: &Subset) -> Subset {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        self.zip(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Subset) -> Subset {
        self.zip(other, |a, b| a & !b)
    }

    pub fn symmetric_difference(&self, other: &Subset) -> Subset {
        self.zip(other, |a, b| a ^ b)
    }

    pub fn complement(&self) -> Subset {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(self.n);
        }
        Subset { n: self.n, words, count: self.n - self.count }
    }

    pub fn intersection_len(&self, other: &Subset) -> usize {
        assert_eq!(self.n, other.n);
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &Subset) -> bool {
        self.intersection_len(other) == self.count
    }

    pub fn union_with(&mut self, other: &Subset) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        self.recount();
    }

    /// Hex mask, least significant bit = index 0.
    pub fn to_hex(&self) -> String {
        let mut s = String::from("0x");
        let mut started = false;
        for w in self.words.iter().rev() {
            if started {
                s.push_str(&format!("{w:016x}"));
            } else if *w != 0 {
                s.push_str(&format!("{w:x}"));
                started = true;
            }
        }
        if !started {
            s.push('0');
        }
        s
    }

    pub fn from_hex(n: usize, hex: &str) -> Option<Subset> {
        let digits = hex.trim().trim_start_matches("0x").trim_start_matches("0X");
        if digits.is_empty() {
            return None;
        }
        let mut words = vec![0u64; n.div_ceil(64)];
        for (pos, ch) in digits.chars().rev().enumerate() {
            let v = ch.to_digit(16)? as u64;
            if v == 0 {
                continue;
            }
            let bit = pos * 4;
            if bit >= n {
                return None;
            }
            words[bit / 64] |= v << (bit % 64);
        }
        let s = Subset::from_words(n, words.clone());
        (s.words == words).then_some(s)
    }

    pub(crate) fn recount(&mut self) {
        self.count = self.words.iter().map(|w| w.count_ones() as usize).sum();
    }

    fn trim(&mut self) {
        let m = tail_mask(self.n);
        if let Some(last) = self.words.last_mut() {
            *last &= m;
        }
    }

    fn zip(&self, other: &Subset, f: impl Fn(u64, u64) -> u64) -> Subset {
        assert_eq!(self.n, other.n, "subsets over different universes");
        let words = self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect();
        let mut s = Subset { n: self.n, words, count: 0 };
        s.trim();
        s.recount();
        s
    }
}

fn tail_mask(n: usize) -> u64 {
    match n % 64 {
        0 => !0,
        r => (1u64 << r) - 1,
    }
}

/// Rotate an `n`-bit cyclic bitmask so that bit `i` moves to `(i + k) mod n`.
pub(crate) fn rotate_words(src: &[u64], n: usize, k: usize, out: &mut [u64]) {
    out.iter_mut().for_each(|w| *w = 0);
    if n == 0 {
        return;
    }
    let k = k % n;
    if n % 64 == 0 {
        let nw = n / 64;
        let (ws, bs) = (k / 64, k % 64);
        for i in 0..nw {
            let lo = src[(i + nw - ws) % nw];
            let v = if bs == 0 {
                lo
            } else {
                let prev = src[(i + 2 * nw - ws - 1) % nw];
                (lo << bs) | (prev >> (64 - bs))
            };
            out[i] = v;
        }
        return;
    }
    for (wi, &w) in src.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            let j = (wi * 64 + b + k) % n;
            out[j / 64] |= 1 << (j % 64);
        }
    }
}
