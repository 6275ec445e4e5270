//! Deficits, translate overlaps, submodularity, shrinking, and toric
//! expansion probes.

use std::collections::HashSet;

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{cyclic_subgroup, generated_subgroup, stabilizer, GroupModel, Subgroup};
use crate::rational::serde_q;
use crate::subset::Subset;
use crate::sumset::{cell_lift, fast_product_set, overlap_profile, translate, Side};
use crate::Q;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    #[serde(with = "serde_q")]
    pub mu_a: Q,
    #[serde(with = "serde_q")]
    pub mu_b: Q,
    #[serde(with = "serde_q")]
    pub mu_ab: Q,
    /// `μAB − min(μA + μB, 1)`.
    #[serde(with = "serde_q")]
    pub deficit: Q,
    #[serde(with = "serde_q")]
    pub slack: Q,
    /// Measure of the cell-thickened product set (equals `mu_ab` off torus models).
    #[serde(with = "serde_q")]
    pub mu_ab_lifted: Q,
    /// `mu_ab_lifted − μA − μB`: the additive excess over the continuum bound.
    #[serde(with = "serde_q")]
    pub excess: Q,
    pub lifted: bool,
}

impl DeficitReport {
    pub fn min_measure(&self) -> Q {
        self.mu_a.min(self.mu_b)
    }

    /// The discrete nearly-minimal predicate.
    pub fn nearly_minimal(&self, delta: Q) -> bool {
        let bound = self.mu_a + self.mu_b + delta * self.min_measure();
        self.mu_a > Q::zero() && self.mu_b > Q::zero() && self.mu_ab < bound && bound < Q::from_integer(1)
    }

    /// Smallest multiplicative `δ` for which the lifted pair sits inside the
    /// nearly-minimal window (zero when the excess is non-positive).
    pub fn lifted_delta(&self) -> Q {
        if self.excess.is_positive() {
            self.excess / self.min_measure()
        } else {
            Q::zero()
        }
    }
}

pub fn deficit(g: &GroupModel, a: &Subset, b: &Subset) -> Result<DeficitReport> {
    g.check_subset(a)?;
    g.check_subset(b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ab = fast_product_set(g, a, b)?;
    let (mu_a, mu_b, mu_ab) = (a.measure(), b.measure(), ab.measure());
    let lifted = g.torus_factors().is_some();
    let mu_ab_lifted = if lifted { cell_lift(g, &ab).measure() } else { mu_ab };
    Ok(DeficitReport {
        mu_a,
        mu_b,
        mu_ab,
        deficit: mu_ab - (mu_a + mu_b).min(Q::from_integer(1)),
        slack: Q::new(1, g.order() as i64),
        mu_ab_lifted,
        excess: mu_ab_lifted - mu_a - mu_b,
        lifted,
    })
}

pub fn is_nearly_minimal(g: &GroupModel, a: &Subset, b: &Subset, delta: Q) -> Result<bool> {
    if delta.is_negative() {
        return Err(Error::pre("delta must be non-negative"));
    }
    if a.is_empty() || b.is_empty() {
        return Ok(false);
    }
    Ok(deficit(g, a, b)?.nearly_minimal(delta))
}

/// Element whose translate overlap is closest to `t`, smallest index on ties.
pub fn find_translate_overlap(g: &GroupModel, a: &Subset, t: Q, side: Side) -> Result<(usize, Q)> {
    let mu = a.measure();
    if t < mu * mu || t > mu {
        return Err(Error::OutOfRange(format!("overlap target {t} outside [μ(A)², μ(A)]")));
    }
    let prof = overlap_profile(g, a, side)?;
    let best = (0..g.order()).min_by_key(|&x| ((prof.value(x) - t).abs(), x)).unwrap();
    Ok((best, prof.value(best)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubmodularReport {
    #[serde(with = "serde_q")]
    pub ab1: Q,
    #[serde(with = "serde_q")]
    pub ab2: Q,
    #[serde(with = "serde_q")]
    pub ab_cap: Q,
    #[serde(with = "serde_q")]
    pub ab_cup: Q,
    pub holds: bool,
}

pub fn submodular_check(g: &GroupModel, a: &Subset, b1: &Subset, b2: &Subset) -> Result<SubmodularReport> {
    let m = |b: &Subset| fast_product_set(g, a, b).map(|s| s.measure());
    let ab1 = m(b1)?;
    let ab2 = m(b2)?;
    let ab_cap = m(&b1.intersection(b2))?;
    let ab_cup = m(&b1.union(b2))?;
    Ok(SubmodularReport { ab1, ab2, ab_cap, ab_cup, holds: ab1 + ab2 >= ab_cap + ab_cup })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkResult {
    pub a: Subset,
    pub b: Subset,
    /// Additive expansion bound for `(A', B)`.
    #[serde(with = "serde_q")]
    pub gamma_a: Q,
    /// Additive expansion bound for `(A, B')`.
    #[serde(with = "serde_q")]
    pub gamma_b: Q,
    /// Additive expansion bound for `(A', B')`.
    #[serde(with = "serde_q")]
    pub gamma_bound: Q,
    pub steps_a: usize,
    pub steps_b: usize,
    /// Set when the union guard stopped the iteration early.
    pub halted: Option<String>,
    #[serde(with = "serde_q")]
    pub residual_a: Q,
    #[serde(with = "serde_q")]
    pub residual_b: Q,
}

/// Measure used for expansion bounds: the cell-lifted product measure on
/// torus models, the raw one elsewhere.
pub fn lifted_excess(g: &GroupModel, a: &Subset, b: &Subset) -> Result<Q> {
    Ok(deficit(g, a, b)?.excess)
}

/// Drive `μ(A)` and `μ(B)` to `d` by intersecting (or uniting) with translates.
///
/// `A` moves by left translates and `B` by right translates, so the partner
/// set's product is just translated. Every step at most doubles the additive
/// expansion bound, which starts at the measured excess of the input pair.
pub fn shrink_to_size(g: &GroupModel, a: &Subset, b: &Subset, d: Q, delta: Q) -> Result<ShrinkResult> {
    if !(d.is_positive() && d < Q::new(1, 4)) {
        return Err(Error::Infeasible(format!("target {d} outside (0, 1/4)")));
    }
    let rep = deficit(g, a, b)?;
    if !rep.nearly_minimal(delta) && !(rep.lifted && rep.lifted_delta() <= delta && rep.mu_a + rep.mu_b < Q::from_integer(1)) {
        return Err(Error::pre(format!("pair is not {delta}-nearly minimal")));
    }
    let gamma0 = rep.excess.max(Q::zero());
    let one_cell = Q::new(1, g.order() as i64);
    let mut halted = None;

    let (a2, steps_a) = shrink_one(g, a, b.measure(), d, Side::Left, &mut halted)?;
    let (b2, steps_b) = shrink_one(g, b, a2.measure(), d, Side::Right, &mut halted)?;
    let pow = |k: usize| Q::from_integer(1i64 << k.min(60));
    let res = ShrinkResult {
        residual_a: (a2.measure() - d).abs(),
        residual_b: (b2.measure() - d).abs(),
        a: a2,
        b: b2,
        gamma_a: gamma0 * pow(steps_a),
        gamma_b: gamma0 * pow(steps_b),
        gamma_bound: gamma0 * pow(steps_a + steps_b),
        steps_a,
        steps_b,
        halted,
    };
    debug_assert!(res.residual_a <= one_cell || res.halted.is_some());
    Ok(res)
}

fn shrink_one(
    g: &GroupModel,
    s: &Subset,
    partner: Q,
    d: Q,
    side: Side,
    halted: &mut Option<String>,
) -> Result<(Subset, usize)> {
    let one = Q::from_integer(1);
    let cell = Q::new(1, g.order() as i64);
    let mut cur = s.clone();
    let mut steps = 0;
    while (cur.measure() - d).abs() > cell {
        let mu = cur.measure();
        let shrinking = mu > d;
        let target = if shrinking {
            d.max(mu * mu).max(mu * 2 + partner - one + cell)
        } else {
            (mu * 2 - d).max(mu * mu)
        };
        if target > mu {
            *halted = Some(format!("union guard blocks shrinking at measure {mu}"));
            break;
        }
        let (x, got) = find_translate_overlap(g, &cur, target, side)?;
        let moved = translate(g, &cur, x, side);
        let next = if shrinking { cur.intersection(&moved) } else { cur.union(&moved) };
        let union_measure = mu * 2 - got;
        if union_measure + partner >= one {
            *halted = Some(format!("union guard fails at measure {mu}"));
            break;
        }
        if next.measure() == mu {
            *halted = Some(format!("no translate changes the measure at {mu}"));
            break;
        }
        cur = next;
        steps += 1;
    }
    Ok((cur, steps))
}

/// One cyclic subgroup with its left-coset labelling, for fast `AH` counts.
#[derive(Clone, Debug)]
pub struct TorusIndex {
    pub generator: usize,
    pub order: usize,
    pub coset: Vec<u32>,
    pub cosets: usize,
}

/// Distinct nontrivial cyclic subgroups in generator-index order.
pub fn distinct_cyclic_subgroups(g: &GroupModel) -> Vec<Subgroup> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for x in 0..g.order() {
        if x == g.identity() {
            continue;
        }
        let h = cyclic_subgroup(g, x);
        if seen.insert(h.members.clone()) {
            out.push(h);
        }
    }
    out
}

pub fn torus_indices(g: &GroupModel) -> Vec<TorusIndex> {
    distinct_cyclic_subgroups(g)
        .into_par_iter()
        .map(|h| {
            let mut coset = vec![u32::MAX; g.order()];
            let mut k = 0u32;
            let members = h.members.indices();
            for x in 0..g.order() {
                if coset[x] == u32::MAX {
                    for &y in &members {
                        coset[g.mul(x, y)] = k;
                    }
                    k += 1;
                }
            }
            TorusIndex { generator: h.generator.unwrap(), order: h.order(), coset, cosets: k as usize }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToricReport {
    /// `(generator, μ(AH)/μ(A))` per distinct cyclic subgroup.
    #[serde(with = "crate::rational::serde_q_pairs")]
    pub ratios: Vec<(usize, Q)>,
    #[serde(with = "serde_q")]
    pub max_ratio: Q,
    pub argmax: usize,
}

fn ratios_with(idx: &[TorusIndex], a: &Subset) -> Vec<(usize, Q)> {
    idx.iter()
        .map(|t| {
            let mut hit = vec![false; t.cosets];
            for x in a.iter() {
                hit[t.coset[x] as usize] = true;
            }
            let nz = hit.iter().filter(|&&h| h).count();
            (t.generator, Q::new((nz * t.order) as i64, a.len() as i64))
        })
        .collect()
}

pub fn toric_expansion_ratios(g: &GroupModel, a: &Subset) -> Result<ToricReport> {
    g.check_subset(a)?;
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ratios = ratios_with(&torus_indices(g), a);
    let (argmax, max_ratio) = ratios
        .iter()
        .fold((g.identity(), Q::from_integer(1)), |(ag, am), &(x, r)| if r > am { (x, r) } else { (ag, am) });
    Ok(ToricReport { ratios, max_ratio, argmax })
}

/// Greedy first-fit: walk the distinct cyclic subgroups in generator order
/// and keep each one that enlarges the running product set.
pub fn covering_tori(g: &GroupModel) -> Vec<Subgroup> {
    let mut cur = Subset::from_indices(g.order(), [g.identity()]);
    let mut out = Vec::new();
    for h in distinct_cyclic_subgroups(g) {
        if cur.len() == g.order() {
            break;
        }
        let next = fast_product_set(g, &cur, &h.members).expect("same group");
        if next.len() > cur.len() {
            cur = next;
            out.push(h);
        }
    }
    out
}

/// Greedy cover of `AH` by right translates `Ah`, `h ∈ H`.
pub fn translation_cover(g: &GroupModel, a: &Subset, h: &Subgroup) -> Result<Vec<usize>> {
    let target = fast_product_set(g, a, &h.members)?;
    let mut covered = Subset::empty(g.order());
    let mut picks = Vec::new();
    while covered.len() < target.len() {
        let (best, gain) = h
            .members
            .iter()
            .map(|y| (y, g.right_translate(a, y).difference(&covered).len()))
            .max_by_key(|&(y, gain)| (gain, std::cmp::Reverse(y)))
            .unwrap();
        if gain == 0 {
            break;
        }
        covered.union_with(&g.right_translate(a, best));
        picks.push(best);
    }
    Ok(picks)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    #[serde(with = "serde_q")]
    pub k: Q,
    #[serde(with = "serde_q")]
    pub best_measure: Q,
    pub best_set: Subset,
    #[serde(with = "serde_q")]
    pub best_max_ratio: Q,
    pub best_restart: usize,
    pub restarts: usize,
    pub moves: usize,
    pub seed: u64,
    /// Translates of the best set needed to cover `AH` for its worst torus.
    pub cover_size: usize,
}

/// Incremental toric ratio tracker: per torus, how many points of `A` lie in
/// each coset, and how many cosets are hit.
struct Tracker<'a> {
    idx: &'a [TorusIndex],
    counts: Vec<Vec<u32>>,
    hit: Vec<usize>,
    size: usize,
}

impl<'a> Tracker<'a> {
    fn new(idx: &'a [TorusIndex], a: &Subset) -> Self {
        let mut counts: Vec<Vec<u32>> = idx.iter().map(|t| vec![0; t.cosets]).collect();
        for (t, c) in idx.iter().zip(counts.iter_mut()) {
            for x in a.iter() {
                c[t.coset[x] as usize] += 1;
            }
        }
        let hit = counts.iter().map(|c| c.iter().filter(|&&v| v > 0).count()).collect();
        Tracker { idx, counts, hit, size: a.len() }
    }

    /// Max ratio after removing `x`, without committing.
    fn ratio_without(&self, x: usize) -> Q {
        let size = self.size - 1;
        if size == 0 {
            return Q::from_integer(i64::MAX);
        }
        let worst = self
            .idx
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let drop = (self.counts[i][t.coset[x] as usize] == 1) as usize;
                (self.hit[i] - drop) * t.order
            })
            .max()
            .unwrap_or(size);
        Q::new(worst as i64, size as i64)
    }

    fn remove(&mut self, x: usize) {
        for (i, t) in self.idx.iter().enumerate() {
            let c = &mut self.counts[i][t.coset[x] as usize];
            *c -= 1;
            if *c == 0 {
                self.hit[i] -= 1;
            }
        }
        self.size -= 1;
    }

    fn max_ratio(&self) -> Q {
        let worst = self.idx.iter().enumerate().map(|(i, t)| self.hit[i] * t.order).max().unwrap_or(self.size);
        Q::new(worst as i64, self.size as i64).max(Q::from_integer(1))
    }
}

/// Randomized greedy search for a small toric `K`-nonexpander.
///
/// Each restart starts from a seed set (the whole group, or a subgroup
/// generated by two random elements whose index keeps it within reach of
/// `K`) and removes random points while every torus ratio stays `≤ K`.
/// `budget` caps the total number of attempted removals. Exploratory only.
pub fn nonexpander_probe(g: &GroupModel, k: Q, budget: usize, seed: u64) -> Result<ProbeReport> {
    if k <= Q::from_integer(1) {
        return Err(Error::pre("K must exceed 1"));
    }
    let idx = torus_indices(g);
    let restarts = 8usize;
    let per = (budget / restarts).max(1);
    let runs: Vec<(Q, usize, Subset, Q, usize)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let start = if r == 0 {
                Subset::full(g.order())
            } else {
                let x = rng.gen_range(0..g.order());
                let y = rng.gen_range(0..g.order());
                let h = generated_subgroup(g, &[x, y]).members;
                let tr = Tracker::new(&idx, &h);
                if tr.max_ratio() <= k {
                    h
                } else {
                    Subset::full(g.order())
                }
            };
            let mut cur = start;
            let mut tr = Tracker::new(&idx, &cur);
            let mut moves = 0;
            let mut order = cur.indices();
            order.shuffle(&mut rng);
            let mut stalled = false;
            while moves < per && !stalled {
                stalled = true;
                for &x in &order {
                    if moves >= per {
                        break;
                    }
                    if !cur.contains(x) {
                        continue;
                    }
                    moves += 1;
                    if tr.ratio_without(x) <= k {
                        tr.remove(x);
                        cur.remove(x);
                        stalled = false;
                    }
                }
                order.shuffle(&mut rng);
            }
            (cur.measure(), r, cur, tr.max_ratio(), moves)
        })
        .collect();
    let moves = runs.iter().map(|r| r.4).sum();
    let (best_measure, best_restart, best_set, best_max_ratio, _) =
        runs.into_iter().min_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1))).unwrap();
    let cover_size = match toric_expansion_ratios(g, &best_set) {
        Ok(rep) if rep.argmax != g.identity() => translation_cover(g, &best_set, &cyclic_subgroup(g, rep.argmax))?.len(),
        _ => 1,
    };
    Ok(ProbeReport { k, best_measure, best_set, best_max_ratio, best_restart, restarts, moves, seed, cover_size })
}

/// Kneser-style report: when `|AB| < |A| + |B| − 1`, the stabilizer of `AB`
/// must be nontrivial. Returns the stabilizer in that case.
pub fn kneser_stabilizer(g: &GroupModel, a: &Subset, b: &Subset) -> Result<Option<Subgroup>> {
    let ab = fast_product_set(g, a, b)?;
    if a.is_empty() || b.is_empty() || ab.len() + 1 >= a.len() + b.len() {
        return Ok(None);
    }
    Ok(Some(stabilizer(g, &ab)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{bohr_preimage, first_projection, make_cyclic, make_s3, make_torus, Arc};

    fn planted(dims: &[usize], la: usize, lb: usize) -> (GroupModel, Subset, Subset) {
        let g = make_torus(dims).unwrap();
        let chi = first_projection(&g).unwrap();
        let a = bohr_preimage(&g, &chi, &Arc::new(dims[0], 0, la)).unwrap();
        let b = bohr_preimage(&g, &chi, &Arc::new(dims[0], 0, lb)).unwrap();
        (g, a, b)
    }

    #[test]
    fn deficit_examples() {
        let z13 = make_cyclic(13);
        let a = Subset::from_indices(13, 0..4);
        let r = deficit(&z13, &a, &a).unwrap();
        assert_eq!(r.mu_ab, Q::new(7, 13));
        assert_eq!(r.deficit, Q::new(-1, 13));
        assert!(!r.nearly_minimal(Q::from_integer(2)));
        let full = Subset::full(13);
        let r = deficit(&z13, &full, &full).unwrap();
        assert_eq!(r.deficit, Q::zero());
        assert!(!r.nearly_minimal(Q::zero()));
        let (g, a, b) = planted(&[48, 5], 10, 12);
        let r = deficit(&g, &a, &b).unwrap();
        assert_eq!(r.mu_ab, Q::new(21, 48));
        assert_eq!(r.deficit, Q::new(-1, 48));
        assert_eq!(r.excess, Q::zero());
        assert!(r.nearly_minimal(Q::zero()));
        assert!(matches!(deficit(&g, &Subset::empty(240), &b), Err(Error::EmptyInput)));
    }

    #[test]
    fn translate_finder() {
        let z = make_cyclic(360);
        let a = Subset::from_indices(360, 0..40);
        assert_eq!(find_translate_overlap(&z, &a, a.measure(), Side::Left).unwrap(), (0, a.measure()));
        assert_eq!(find_translate_overlap(&z, &a, Q::new(30, 360), Side::Left).unwrap(), (10, Q::new(30, 360)));
        let t = a.measure() * a.measure();
        let (_, got) = find_translate_overlap(&z, &a, t, Side::Left).unwrap();
        assert!((got - t).abs() <= Q::new(1, 360));
        assert!(find_translate_overlap(&z, &a, Q::new(1, 2), Side::Left).is_err());
    }

    #[test]
    fn submodular_degenerate() {
        let z = make_cyclic(60);
        let a = Subset::from_indices(60, [0, 3, 7]);
        let b = Subset::from_indices(60, [1, 2, 9]);
        let r = submodular_check(&z, &a, &b, &b).unwrap();
        assert_eq!(r.ab1 + r.ab2, r.ab_cap + r.ab_cup);
        let c = Subset::from_indices(60, [20, 40]);
        let r = submodular_check(&z, &a, &b, &c).unwrap();
        assert_eq!(r.ab_cap, Q::zero());
        assert!(r.holds);
    }

    #[test]
    fn shrink_planted() {
        let (g, a, b) = planted(&[240, 5], 80, 60);
        let d = Q::new(1, 12);
        let r = shrink_to_size(&g, &a, &b, d, Q::zero()).unwrap();
        assert!(r.halted.is_none());
        assert!(r.residual_a <= Q::new(1, 1200));
        assert!(r.residual_b <= Q::new(1, 1200));
        for (x, y, gam) in [(&r.a, &b, r.gamma_a), (&a, &r.b, r.gamma_b), (&r.a, &r.b, r.gamma_bound)] {
            assert!(lifted_excess(&g, x, y).unwrap() <= gam);
        }
        let same = shrink_to_size(&g, &r.a, &r.b, r.a.measure(), Q::zero());
        assert!(same.is_err() || same.unwrap().steps_a == 0);
    }

    #[test]
    fn shrink_union_branch() {
        let (g, a, b) = planted(&[240, 5], 12, 12);
        let d = Q::new(1, 12);
        let r = shrink_to_size(&g, &a, &b, d, Q::zero()).unwrap();
        assert!(r.steps_a > 0);
        assert!(r.residual_a <= Q::new(1, 1200));
    }

    #[test]
    fn toric_ratios() {
        let g = make_torus(&[12, 12]).unwrap();
        let a = Subset::from_fn(144, |x| x / 12 < 3 && x % 12 < 3);
        let rep = toric_expansion_ratios(&g, &a).unwrap();
        let r = rep.ratios.iter().find(|(x, _)| *x == 1).unwrap().1;
        assert_eq!(r, Q::from_integer(4));
        assert!(rep.ratios.iter().all(|(_, r)| *r >= Q::from_integer(1)));
        let full = Subset::full(144);
        assert!(toric_expansion_ratios(&g, &full).unwrap().ratios.iter().all(|(_, r)| *r == Q::from_integer(1)));
        let h = cyclic_subgroup(&g, 13);
        let rep = toric_expansion_ratios(&g, &h.members).unwrap();
        assert_eq!(rep.ratios.iter().find(|(x, _)| *x == 13).unwrap().1, Q::from_integer(1));
    }

    #[test]
    fn covering() {
        let z = make_cyclic(12);
        let c = covering_tori(&z);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].order(), 12);
        let g = make_torus(&[12, 5]).unwrap();
        let c: HashSet<Vec<usize>> = covering_tori(&g).into_iter().map(|h| h.members.indices()).collect();
        let want: HashSet<Vec<usize>> =
            [cyclic_subgroup(&g, 1), cyclic_subgroup(&g, 5)].into_iter().map(|h| h.members.indices()).collect();
        assert_eq!(c, want);
        let s3 = make_s3();
        let c = covering_tori(&s3);
        assert_eq!(c[0].generator, Some(1));
        assert_eq!(c[1].generator, Some(3));
    }

    #[test]
    fn probe_small() {
        let g = make_torus(&[6, 4]).unwrap();
        let rep = nonexpander_probe(&g, Q::from_integer(24), 4000, 1).unwrap();
        assert_eq!(rep.best_measure, Q::new(1, 24));
        let tor = toric_expansion_ratios(&g, &rep.best_set).unwrap();
        assert_eq!(tor.max_ratio, rep.best_max_ratio);
        let single = Subset::from_indices(24, [0]);
        let worst = toric_expansion_ratios(&g, &single).unwrap().max_ratio;
        assert_eq!(worst, Q::from_integer(12));
    }

    #[test]
    fn kneser_reports_period() {
        let z = make_cyclic(12);
        let a = Subset::from_indices(12, [0, 4, 8, 1, 5, 9]);
        let b = Subset::from_indices(12, [0, 4, 8]);
        let h = kneser_stabilizer(&z, &a, &b).unwrap().unwrap();
        assert_eq!(h.members.indices(), vec![0, 4, 8]);
    }
}
