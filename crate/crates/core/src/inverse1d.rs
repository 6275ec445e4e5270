//! One-dimensional inverse theorems: Freiman's 3k−4 on ℤ, the circle
//! version on Z_n via dilations, and the real-line version on integer sets.

use std::collections::BTreeSet;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::serde_q;
use crate::subset::Subset;
use crate::Q;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Freiman {
    /// `A ⊆ {start, start+step, ..., start+(length−1)·step}`.
    Interval { start: i64, step: i64, length: usize },
    NotApplicable,
}

fn sumset_len(a: &[i64], b: &[i64]) -> usize {
    let s: BTreeSet<i64> = a.iter().flat_map(|&x| b.iter().map(move |&y| x + y)).collect();
    s.len()
}

pub fn freiman_3k4(a: &[i64]) -> Result<Freiman> {
    let set: BTreeSet<i64> = a.iter().copied().collect();
    if set.len() < 2 {
        return Err(Error::pre("need at least two distinct integers"));
    }
    let v: Vec<i64> = set.into_iter().collect();
    let lo = v[0];
    let step = v.iter().fold(0i64, |acc, &x| acc.gcd(&(x - lo)));
    let red: Vec<i64> = v.iter().map(|&x| (x - lo) / step).collect();
    let k = red.len();
    let ss = sumset_len(&red, &red);
    if ss > 3 * k - 4 {
        return Ok(Freiman::NotApplicable);
    }
    let length = (red[k - 1] + 1) as usize;
    if length > ss - k + 1 {
        return Err(Error::InverseViolated(format!("3k−4 on {a:?}: span {length} exceeds {}", ss - k + 1)));
    }
    Ok(Freiman::Interval { start: lo, step, length })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusConfig {
    #[serde(with = "serde_q")]
    pub tau: Q,
    /// Largest admissible `μ(A)`; the theorem's constant is not explicit.
    #[serde(with = "serde_q")]
    pub size_cap: Q,
}

impl Default for TorusConfig {
    fn default() -> Self {
        TorusConfig { tau: Q::from_integer(4), size_cap: Q::new(1, 12) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TorusOutcome {
    Escape,
    /// `c·A ⊆ [start_a, start_a + len_a)` and `c·B ⊆ [start_b, start_b + len_b)`.
    Structured { dilation: usize, start_a: usize, len_a: usize, start_b: usize, len_b: usize },
}

/// Shortest cyclic arc covering `s`: `(start, length)`.
pub fn covering_arc(n: usize, s: &[usize]) -> (usize, usize) {
    let mut v: Vec<usize> = s.iter().map(|&x| x % n).collect();
    v.sort_unstable();
    v.dedup();
    if v.is_empty() {
        return (0, 0);
    }
    // The arc starts right after the widest gap.
    let mut best = (n + v[0] - v[v.len() - 1], v[0]);
    for w in v.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[1]);
        }
    }
    (best.1, n - best.0 + 1)
}

pub fn cyclic_sumset(n: usize, a: &Subset, b: &Subset) -> Subset {
    let mut out = Subset::empty(n);
    for x in a.iter() {
        for y in b.iter() {
            out.insert((x + y) % n);
        }
    }
    out
}

pub fn torus_inverse(n: usize, a: &Subset, b: &Subset, cfg: &TorusConfig) -> Result<TorusOutcome> {
    if a.universe() != n || b.universe() != n {
        return Err(Error::ParentMismatch { expected: n, got: a.universe().max(b.universe()) });
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (ma, mb) = (a.measure(), b.measure());
    if !(ma / cfg.tau <= mb && mb <= ma && ma <= cfg.size_cap) {
        return Err(Error::pre(format!("need μA/τ ≤ μB ≤ μA ≤ {}, got μA = {ma}, μB = {mb}", cfg.size_cap)));
    }
    let s = cyclic_sumset(n, a, b).len();
    // A saturated sumset carries no growth information.
    if s >= a.len() + 2 * b.len() || s == n {
        return Ok(TorusOutcome::Escape);
    }
    let len_a = s - b.len() + 1;
    let len_b = s - a.len() + 1;
    let (ai, bi) = (a.indices(), b.indices());
    let found = (1..n.max(2)).into_par_iter().filter(|c| c.gcd(&n) == 1).find_map_first(|c| {
        let da: Vec<usize> = ai.iter().map(|&x| x * c % n).collect();
        let db: Vec<usize> = bi.iter().map(|&x| x * c % n).collect();
        let (sa, la) = covering_arc(n, &da);
        let (sb, lb) = covering_arc(n, &db);
        (la <= len_a && lb <= len_b).then_some(TorusOutcome::Structured { dilation: c, start_a: sa, len_a, start_b: sb, len_b })
    });
    found.ok_or(Error::NoStructureFound)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RealOutcome {
    Escape,
    /// Integer intervals `[start, start + len)`.
    Structured { start_i: i64, len_i: usize, start_j: i64, len_j: usize },
}

/// Each integer is read as the unit cell `[x, x+1]`, so the sumset has
/// measure `|A + B + {0, 1}|`.
pub fn real_inverse(a: &[i64], b: &[i64]) -> Result<RealOutcome> {
    let a: Vec<i64> = a.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let b: Vec<i64> = b.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if b.is_empty() || a.len() < b.len() {
        return Err(Error::pre("need |A| ≥ |B| ≥ 1"));
    }
    let thick: BTreeSet<i64> = a.iter().flat_map(|&x| b.iter().flat_map(move |&y| [x + y, x + y + 1])).collect();
    let s = thick.len();
    if s >= a.len() + 2 * b.len() {
        return Ok(RealOutcome::Escape);
    }
    let (len_i, len_j) = (s - b.len(), s - a.len());
    let span = |v: &[i64]| (v[v.len() - 1] - v[0] + 1) as usize;
    if span(&a) > len_i || span(&b) > len_j {
        return Err(Error::InverseViolated(format!("real inverse on {a:?}, {b:?}")));
    }
    Ok(RealOutcome::Structured { start_i: a[0], len_i, start_j: b[0], len_j })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(n: usize, v: &[usize]) -> Subset {
        Subset::from_indices(n, v.iter().copied())
    }

    #[test]
    fn freiman_examples() {
        assert_eq!(freiman_3k4(&[0, 1, 2, 5]).unwrap(), Freiman::NotApplicable);
        assert_eq!(freiman_3k4(&[0, 1, 2, 3]).unwrap(), Freiman::Interval { start: 0, step: 1, length: 4 });
        assert_eq!(freiman_3k4(&[0, 2, 4]).unwrap(), Freiman::Interval { start: 0, step: 2, length: 3 });
        assert!(freiman_3k4(&[7]).is_err());
    }

    #[test]
    fn torus_examples() {
        let wide = TorusConfig { tau: Q::from_integer(4), size_cap: Q::from_integer(1) };
        let a = z(13, &[0, 2, 4, 6]);
        match torus_inverse(13, &a, &a, &wide).unwrap() {
            TorusOutcome::Structured { dilation, start_a, len_a, .. } => {
                // 6 = −7 mod 13; it maps A onto {10, 11, 12, 0}
                assert_eq!((dilation, start_a, len_a), (6, 10, 4));
            }
            e => panic!("{e:?}"),
        }
        let arc = z(13, &[3, 4, 5]);
        assert!(matches!(torus_inverse(13, &arc, &arc, &wide).unwrap(), TorusOutcome::Structured { dilation: 1, .. }));
        let full = Subset::full(13);
        assert_eq!(torus_inverse(13, &full, &full, &wide).unwrap(), TorusOutcome::Escape);
        assert!(torus_inverse(13, &a, &a, &TorusConfig::default()).is_err());
    }

    #[test]
    fn real_examples() {
        let r = real_inverse(&[0, 1, 2, 3], &[0, 1, 2]).unwrap();
        assert_eq!(r, RealOutcome::Structured { start_i: 0, len_i: 4, start_j: 0, len_j: 3 });
        assert_eq!(real_inverse(&[0, 1, 2, 3], &[5]).unwrap(), RealOutcome::Structured { start_i: 0, len_i: 4, start_j: 5, len_j: 1 });
        assert_eq!(real_inverse(&[0, 10], &[0, 10]).unwrap(), RealOutcome::Escape);
    }

    #[test]
    fn covering_arcs() {
        assert_eq!(covering_arc(13, &[10, 11, 12, 0]), (10, 4));
        assert_eq!(covering_arc(13, &[5]), (5, 1));
        assert_eq!(covering_arc(5, &[0, 1, 2, 3, 4]), (0, 5));
    }

    proptest! {
        #[test]
        fn real_inverse_contains(a in prop::collection::btree_set(-20i64..20, 1..8), b in prop::collection::btree_set(-20i64..20, 1..8)) {
            let (a, b): (Vec<i64>, Vec<i64>) = (a.into_iter().collect(), b.into_iter().collect());
            let (a, b) = if a.len() >= b.len() { (a, b) } else { (b, a) };
            if let RealOutcome::Structured { start_i, len_i, start_j, len_j } = real_inverse(&a, &b).unwrap() {
                prop_assert!(a.iter().all(|&x| x >= start_i && x < start_i + len_i as i64));
                prop_assert!(b.iter().all(|&x| x >= start_j && x < start_j + len_j as i64));
            }
        }

        #[test]
        fn freiman_cover(a in prop::collection::btree_set(0i64..40, 2..10)) {
            let v: Vec<i64> = a.into_iter().collect();
            if let Freiman::Interval { start, step, length } = freiman_3k4(&v).unwrap() {
                prop_assert!(v.iter().all(|&x| (x - start) % step == 0 && ((x - start) / step) < length as i64));
            }
        }
    }
}
