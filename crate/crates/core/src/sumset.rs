//! Product sets, translate overlaps and the cell-lift measure.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::group::GroupModel;
use crate::subset::{rotate_words, Subset};
use crate::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Cyclic orders at or above this use the FFT path.
const FFT_THRESHOLD: usize = 4096;

/// Which kernel `fast_product_set` picked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    Fft,
    Walsh,
    BlockRotation,
    RowOr,
}

/// Reference implementation: the naive double loop.
pub fn product_set(g: &GroupModel, a: &Subset, b: &Subset) -> Result<Subset> {
    g.check_subset(a)?;
    g.check_subset(b)?;
    let mut out = Subset::empty(g.order());
    for x in a.iter() {
        for y in b.iter() {
            out.insert(g.mul(x, y));
        }
    }
    Ok(out)
}

pub fn kernel_for(g: &GroupModel) -> Kernel {
    match g.torus_factors() {
        Some(f) if f.len() == 1 && f[0] >= FFT_THRESHOLD => Kernel::Fft,
        Some(f) if f.len() > 1 && f.iter().all(|&d| d == 2) => Kernel::Walsh,
        Some(_) => Kernel::BlockRotation,
        None => Kernel::RowOr,
    }
}

pub fn fast_product_set(g: &GroupModel, a: &Subset, b: &Subset) -> Result<Subset> {
    g.check_subset(a)?;
    g.check_subset(b)?;
    if a.is_empty() || b.is_empty() {
        return Ok(Subset::empty(g.order()));
    }
    Ok(match kernel_for(g) {
        Kernel::Fft => fft_cyclic(a, b).unwrap_or_else(|| torus_rows(g, &[g.order()], a, b)),
        Kernel::Walsh => walsh(a, b),
        Kernel::BlockRotation => torus_rows(g, &g.torus_factors().unwrap(), a, b),
        Kernel::RowOr => row_or(g, a, b),
    })
}

/// Cyclic convolution by floating FFT. Returns `None` when any bin lands in
/// the ambiguous band `(0.25, 0.75)` so the caller can redo it exactly.
fn fft_cyclic(a: &Subset, b: &Subset) -> Option<Subset> {
    let n = a.universe();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let load = |s: &Subset| {
        let mut v = vec![Complex::new(0.0, 0.0); n];
        for i in s.iter() {
            v[i].re = 1.0;
        }
        v
    };
    let mut fa = load(a);
    let mut fb = load(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    let mut out = Subset::empty(n);
    for (i, c) in fa.iter().enumerate() {
        let v = c.re * scale;
        if v > 0.25 && v < 0.75 {
            return None;
        }
        if v >= 0.75 {
            out.insert(i);
        }
    }
    Some(out)
}

/// XOR convolution for products of `Z_2`, exact over the integers.
fn walsh(a: &Subset, b: &Subset) -> Subset {
    let n = a.universe();
    let load = |s: &Subset| {
        let mut v = vec![0i64; n];
        for i in s.iter() {
            v[i] = 1;
        }
        v
    };
    let mut fa = load(a);
    let mut fb = load(b);
    wht(&mut fa);
    wht(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    wht(&mut fa);
    Subset::from_fn(n, |i| fa[i] != 0)
}

fn wht(v: &mut [i64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (x, y) = (v[j], v[j + h]);
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
        h *= 2;
    }
}

/// Torus models: split `G = Z_{n1} x R`. Elements of `A` are grouped by their
/// `R` component `r`; `B` is shifted by `r` inside every block once, then each
/// first-coordinate shift is a rotation of the whole mask by a multiple of `|R|`.
fn torus_rows(g: &GroupModel, dims: &[usize], a: &Subset, b: &Subset) -> Subset {
    let n = g.order();
    let m = n / dims[0];
    let rest = &dims[1..];
    let mut by_r: Vec<Vec<usize>> = vec![Vec::new(); m];
    for x in a.iter() {
        by_r[x % m].push(x / m);
    }
    let nw = n.div_ceil(64);
    let words = by_r
        .par_iter()
        .enumerate()
        .filter(|(_, firsts)| !firsts.is_empty())
        .map(|(r, firsts)| {
            let shifted = Subset::from_indices(n, b.iter().map(|y| (y / m) * m + add_mixed(rest, r, y % m)));
            let mut acc = vec![0u64; nw];
            let mut tmp = vec![0u64; nw];
            for &f in firsts {
                rotate_words(shifted.words(), n, f * m, &mut tmp);
                for (w, t) in acc.iter_mut().zip(&tmp) {
                    *w |= t;
                }
            }
            acc
        })
        .reduce(
            || vec![0u64; nw],
            |mut x, y| {
                for (w, t) in x.iter_mut().zip(&y) {
                    *w |= t;
                }
                x
            },
        );
    Subset::from_words(n, words)
}

/// Add two mixed-radix indices coordinatewise.
fn add_mixed(dims: &[usize], x: usize, y: usize) -> usize {
    let (mut x, mut y) = (x, y);
    let mut out = 0;
    let mut place = 1;
    for &d in dims.iter().rev() {
        out += ((x % d + y % d) % d) * place;
        place *= d;
        x /= d;
        y /= d;
    }
    out
}

/// General groups: OR together the left translates `aB`, each built from the
/// multiplication table, in parallel chunks.
fn row_or(g: &GroupModel, a: &Subset, b: &Subset) -> Subset {
    g.warm();
    let n = g.order();
    let nw = n.div_ceil(64);
    let bs = b.indices();
    let words = a
        .indices()
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = vec![0u64; nw];
            for &x in chunk {
                for &y in &bs {
                    let z = g.mul(x, y);
                    acc[z / 64] |= 1 << (z % 64);
                }
            }
            acc
        })
        .reduce(
            || vec![0u64; nw],
            |mut x, y| {
                for (w, t) in x.iter_mut().zip(&y) {
                    *w |= t;
                }
                x
            },
        );
    Subset::from_words(n, words)
}

pub fn translate(g: &GroupModel, s: &Subset, x: usize, side: Side) -> Subset {
    match side {
        Side::Left => g.left_translate(x, s),
        Side::Right => g.right_translate(s, x),
    }
}

/// `|A ∩ gA|` (left) or `|A ∩ Ag|` (right), as a count.
pub fn overlap_count(g: &GroupModel, a: &Subset, x: usize, side: Side) -> usize {
    a.iter()
        .filter(|&y| {
            // y ∈ gA  <=>  g⁻¹y ∈ A
            let pre = match side {
                Side::Left => g.mul(g.inv(x), y),
                Side::Right => g.mul(y, g.inv(x)),
            };
            a.contains(pre)
        })
        .count()
}

pub fn translate_overlap(g: &GroupModel, a: &Subset, x: usize, side: Side) -> Result<Q> {
    g.check_subset(a)?;
    Ok(Q::new(overlap_count(g, a, x, side) as i64, g.order() as i64))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlapProfile {
    pub side: Side,
    pub n: usize,
    /// `|A ∩ gA|` per element; divide by `n` for the measure.
    pub counts: Vec<usize>,
}

impl OverlapProfile {
    pub fn value(&self, g: usize) -> Q {
        Q::new(self.counts[g] as i64, self.n as i64)
    }

    /// `(1/N) Σ_g μ(A ∩ gA)`.
    pub fn mean(&self) -> Q {
        let total: usize = self.counts.iter().sum();
        Q::new(total as i64, (self.n * self.n) as i64)
    }
}

pub fn overlap_profile(g: &GroupModel, a: &Subset, side: Side) -> Result<OverlapProfile> {
    g.check_subset(a)?;
    g.warm();
    let counts = (0..g.order()).into_par_iter().map(|x| overlap_count(g, a, x, side)).collect();
    Ok(OverlapProfile { side, n: g.order(), counts })
}

/// The set thickened by one grid cell in every coordinate direction,
/// `S + {0,1}^k`, on torus models. Other models get `S` back unchanged.
///
/// Treating each grid point as a half-open cell, the continuum sumset of two
/// cell unions is exactly the thickened grid sumset. Its measure obeys the
/// continuum inequality `μ ≥ μA + μB` with no `-1/N` slack.
pub fn cell_lift(g: &GroupModel, s: &Subset) -> Subset {
    let Some(dims) = g.torus_factors() else {
        return s.clone();
    };
    let mut cur = s.clone();
    let mut place = g.order();
    for &d in &dims {
        place /= d;
        if d == 1 {
            continue;
        }
        let step = place;
        let shifted = Subset::from_indices(
            g.order(),
            cur.iter().map(|x| {
                let c = (x / step) % d;
                if c + 1 == d {
                    x + step - d * step
                } else {
                    x + step
                }
            }),
        );
        cur.union_with(&shifted);
    }
    cur
}

/// Measure of the thickened product set.
pub fn lifted_product_measure(g: &GroupModel, a: &Subset, b: &Subset) -> Result<Q> {
    let ab = fast_product_set(g, a, b)?;
    Ok(cell_lift(g, &ab).measure())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_cyclic, make_s3, make_torus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_subset(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Subset {
        Subset::from_indices(n, (0..n).filter(|_| rng.gen_bool(p)).collect::<Vec<_>>())
    }

    #[test]
    fn small_examples() {
        let z12 = make_cyclic(12);
        let a = Subset::from_indices(12, 0..3);
        let b = Subset::from_indices(12, 0..4);
        let ab = product_set(&z12, &a, &b).unwrap();
        assert_eq!(ab.indices(), (0..6).collect::<Vec<_>>());
        assert_eq!(ab.measure(), Q::new(1, 2));
        let z5 = make_cyclic(5);
        let s = Subset::from_indices(5, [0, 2]);
        assert_eq!(product_set(&z5, &s, &s).unwrap().indices(), vec![0, 2, 4]);
        let e = Subset::from_indices(12, [0]);
        assert_eq!(product_set(&z12, &e, &b).unwrap(), b);
    }

    #[test]
    fn kernels_agree_with_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let groups = vec![
            make_cyclic(1024),
            make_cyclic(5000),
            make_torus(&[2; 8]).unwrap(),
            make_torus(&[12, 4]).unwrap(),
            make_torus(&[6, 5, 3]).unwrap(),
            crate::group::make_product(&make_s3(), &make_cyclic(20)).unwrap(),
        ];
        for g in &groups {
            for p in [0.01, 0.1, 0.5] {
                let a = random_subset(&mut rng, g.order(), p);
                let b = random_subset(&mut rng, g.order(), p);
                assert_eq!(fast_product_set(g, &a, &b).unwrap(), product_set(g, &a, &b).unwrap(), "{}", g.label());
            }
            let full = Subset::full(g.order());
            assert_eq!(fast_product_set(g, &full, &full).unwrap(), full);
        }
    }

    #[test]
    fn overlap_on_arc() {
        let z = make_cyclic(360);
        let a = Subset::from_indices(360, 0..40);
        assert_eq!(translate_overlap(&z, &a, 7, Side::Left).unwrap(), Q::new(33, 360));
        assert_eq!(translate_overlap(&z, &a, 0, Side::Left).unwrap(), a.measure());
        assert_eq!(translate_overlap(&z, &a, 100, Side::Left).unwrap(), Q::from_integer(0));
        let prof = overlap_profile(&z, &a, Side::Left).unwrap();
        assert_eq!(prof.mean(), a.measure() * a.measure());
        for g in 0..360usize {
            let dist = g.min(360 - g);
            assert_eq!(prof.counts[g], 40usize.saturating_sub(dist));
        }
    }

    #[test]
    fn lift_thickens_by_one_cell() {
        let g = make_torus(&[48, 5]).unwrap();
        let chi = crate::group::first_projection(&g).unwrap();
        let a = crate::group::bohr_preimage(&g, &chi, &crate::group::Arc::new(48, 0, 10)).unwrap();
        assert_eq!(cell_lift(&g, &a).len(), 55);
        let z = make_cyclic(13);
        let s = Subset::from_indices(13, [12]);
        assert_eq!(cell_lift(&z, &s).indices(), vec![0, 12]);
    }
}
