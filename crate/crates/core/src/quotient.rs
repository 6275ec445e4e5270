//! Fiber lengths over a subgroup, half-fiber level sets, the spillover
//! bound, quotient transfer, and arc fitting through a character.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::deficit;
use crate::group::{coordinate_complement, normality_witness, quotient, Arc, Character, GroupModel, Subgroup};
use crate::rational::{serde_q, sqrt_le};
use crate::subset::Subset;
use crate::sumset::{cell_lift, fast_product_set, Side};
use crate::Q;

/// Coset labelling for `G → G/H`. Normal subgroups get the actual quotient
/// group; otherwise only the labels of the chosen side are available.
#[derive(Clone, Debug)]
pub struct CosetMap {
    pub proj: Vec<usize>,
    pub count: usize,
    pub fiber: usize,
    pub quotient: Option<GroupModel>,
    /// `H` is a product of whole coordinate factors of a torus model, so the
    /// cell-lift measure is available on both `G` and `G/H`.
    pub lifted: bool,
}

pub fn coset_map(g: &GroupModel, h: &Subgroup, side: Side) -> Result<CosetMap> {
    g.check_subset(&h.members)?;
    if normality_witness(g, h).is_none() {
        let (q, proj) = quotient(g, h)?;
        let lifted = coordinate_complement(g, h).is_some();
        return Ok(CosetMap { count: q.order(), proj, fiber: h.order(), quotient: Some(q), lifted });
    }
    let mut proj = vec![usize::MAX; g.order()];
    let mut count = 0;
    for x in 0..g.order() {
        if proj[x] != usize::MAX {
            continue;
        }
        for y in h.members.iter() {
            let z = match side {
                Side::Left => g.mul(x, y),
                Side::Right => g.mul(y, x),
            };
            proj[z] = count;
        }
        count += 1;
    }
    Ok(CosetMap { proj, count, fiber: h.order(), quotient: None, lifted: false })
}

impl CosetMap {
    pub fn project(&self, s: &Subset) -> Subset {
        Subset::from_indices(self.count, s.iter().map(|x| self.proj[x]))
    }

    pub fn pullback(&self, s: &Subset) -> Subset {
        Subset::from_fn(self.proj.len(), |x| s.contains(self.proj[x]))
    }

    pub fn measure(&self, s: &Subset) -> Q {
        Q::new(s.len() as i64, self.count as i64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberProfile {
    pub side: Side,
    pub fiber: usize,
    /// `|A ∩ aH|` per coset label.
    pub counts: Vec<usize>,
}

impl FiberProfile {
    pub fn length(&self, coset: usize) -> Q {
        Q::new(self.counts[coset] as i64, self.fiber as i64)
    }

    pub fn lengths(&self) -> Vec<Q> {
        (0..self.counts.len()).map(|c| self.length(c)).collect()
    }
}

pub fn fiber_profile(g: &GroupModel, h: &Subgroup, a: &Subset, side: Side) -> Result<FiberProfile> {
    g.check_subset(a)?;
    let map = coset_map(g, h, side)?;
    Ok(profile_with(&map, a, side))
}

fn profile_with(map: &CosetMap, a: &Subset, side: Side) -> FiberProfile {
    let mut counts = vec![0; map.count];
    for x in a.iter() {
        counts[map.proj[x]] += 1;
    }
    FiberProfile { side, fiber: map.fiber, counts }
}

/// `(A_{(r,s]}, πA_{(r,s]})`.
pub fn level_set(g: &GroupModel, h: &Subgroup, a: &Subset, r: Q, s: Q, side: Side) -> Result<(Subset, Subset)> {
    if r.is_negative() || r >= s || s > Q::from_integer(1) {
        return Err(Error::OutOfRange(format!("level interval ({r}, {s}] not inside [0, 1]")));
    }
    let map = coset_map(g, h, side)?;
    Ok(level_with(&map, &profile_with(&map, a, side), a, r, s))
}

fn level_with(map: &CosetMap, prof: &FiberProfile, a: &Subset, r: Q, s: Q) -> (Subset, Subset) {
    let pa = Subset::from_fn(map.count, |c| {
        let l = prof.length(c);
        l > r && l <= s
    });
    let full = Subset::from_fn(a.universe(), |x| a.contains(x) && pa.contains(map.proj[x]));
    (full, pa)
}

/// Product-set measure in `G`, cell-lifted when the model allows it.
fn product_measure(g: &GroupModel, a: &Subset, b: &Subset, lifted: bool) -> Result<Q> {
    let ab = fast_product_set(g, a, b)?;
    Ok(if lifted { cell_lift(g, &ab).measure() } else { ab.measure() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpilloverReport {
    #[serde(with = "serde_q")]
    pub rhs: Q,
    /// Product measure the bound was compared with (cell-lifted when `lifted`).
    #[serde(with = "serde_q")]
    pub lhs: Q,
    #[serde(with = "serde_q")]
    pub lhs_raw: Q,
    pub lifted: bool,
    /// Both `A_{(1/2,1]}` and `B_{(1/2,1]}` are nonempty. The argument
    /// behind the bound applies the quotient Kemperman inequality to these
    /// sets, and it can fail without them.
    pub upper_levels_nonempty: bool,
    pub holds: bool,
}

struct Halves {
    pa_hi: Subset,
    pb_hi: Subset,
    pa_lo: Subset,
    pb_lo: Subset,
    a_lo: Subset,
    b_lo: Subset,
}

fn halves(map: &CosetMap, a: &Subset, b: &Subset) -> Halves {
    let half = Q::new(1, 2);
    let (zero, one) = (Q::zero(), Q::from_integer(1));
    let pa = profile_with(map, a, Side::Left);
    let pb = profile_with(map, b, Side::Right);
    let (_, pa_hi) = level_with(map, &pa, a, half, one);
    let (_, pb_hi) = level_with(map, &pb, b, half, one);
    let (a_lo, pa_lo) = level_with(map, &pa, a, zero, half);
    let (b_lo, pb_lo) = level_with(map, &pb, b, zero, half);
    Halves { pa_hi, pb_hi, pa_lo, pb_lo, a_lo, b_lo }
}

/// Level-set lower bound for `μ(AB)` with quarter weights on the short-fiber
/// projections of both sets.
pub fn spillover_bound(g: &GroupModel, h: &Subgroup, a: &Subset, b: &Subset) -> Result<SpilloverReport> {
    g.check_subset(a)?;
    g.check_subset(b)?;
    let map = coset_map(g, h, Side::Left)?;
    if map.measure(&map.project(a)) + map.measure(&map.project(b)) >= Q::from_integer(1) {
        return Err(Error::pre("μ(πA) + μ(πB) must be below 1"));
    }
    let hv = halves(&map, a, b);
    let quarter = Q::new(1, 4);
    let rhs = map.measure(&hv.pa_hi)
        + map.measure(&hv.pb_hi)
        + quarter * map.measure(&hv.pa_lo)
        + quarter * map.measure(&hv.pb_lo)
        + hv.a_lo.measure()
        + hv.b_lo.measure();
    let lhs_raw = product_measure(g, a, b, false)?;
    let lhs = if map.lifted { product_measure(g, a, b, true)? } else { lhs_raw };
    let upper_levels_nonempty = !hv.pa_hi.is_empty() && !hv.pb_hi.is_empty();
    Ok(SpilloverReport { rhs, lhs, lhs_raw, lifted: map.lifted, upper_levels_nonempty, holds: lhs >= rhs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    /// `πA_{(1/2,1]}` in quotient indices.
    pub a_q: Subset,
    pub b_q: Subset,
    #[serde(with = "serde_q")]
    pub gap_a: Q,
    #[serde(with = "serde_q")]
    pub gap_b: Q,
    /// Additive excess of `(A', B')` in the quotient.
    #[serde(with = "serde_q")]
    pub quotient_deficit: Q,
    #[serde(with = "serde_q")]
    pub delta: Q,
    pub gaps_certified: bool,
    pub deficit_certified: bool,
    /// Whether the certificates also hold with strict inequality.
    pub strict: bool,
    pub lifted: bool,
}

/// Pass a nearly-minimal pair to `G/H` through half-fiber level sets.
///
/// `delta` is additive. Certificates compare with `≤`: an exact planted pair
/// has `δ = 0` and zero gaps, where a strict bound cannot hold.
pub fn transfer(g: &GroupModel, h: &Subgroup, a: &Subset, b: &Subset, delta: Q) -> Result<(TransferResult, CosetMap)> {
    g.check_subset(a)?;
    g.check_subset(b)?;
    if let Some(w) = normality_witness(g, h) {
        return Err(Error::NotNormal(w));
    }
    let map = coset_map(g, h, Side::Left)?;
    let q = map.quotient.clone().expect("normal subgroup has a quotient");
    if map.measure(&map.project(a)) + map.measure(&map.project(b)) >= Q::from_integer(1) {
        return Err(Error::Hypothesis { name: "projection", detail: "μ(πA) + μ(πB) ≥ 1".into() });
    }
    let lhs = product_measure(g, a, b, map.lifted)?;
    if lhs > a.measure() + b.measure() + delta {
        return Err(Error::Hypothesis {
            name: "near-minimality",
            detail: format!("μ(AB) = {lhs} exceeds μA + μB + δ = {}", a.measure() + b.measure() + delta),
        });
    }
    let hv = halves(&map, a, b);
    let gap_a = a.symmetric_difference(&map.pullback(&hv.pa_hi)).measure();
    let gap_b = b.symmetric_difference(&map.pullback(&hv.pb_hi)).measure();
    let qd = if hv.pa_hi.is_empty() || hv.pb_hi.is_empty() {
        Q::zero()
    } else {
        product_measure(&q, &hv.pa_hi, &hv.pb_hi, map.lifted)? - hv.pa_hi.measure() - hv.pb_hi.measure()
    };
    let five = delta * 5;
    let nine = delta * 9;
    let res = TransferResult {
        gaps_certified: gap_a <= five && gap_b <= five,
        deficit_certified: qd <= nine,
        strict: gap_a < five && gap_b < five && qd < nine,
        a_q: hv.pa_hi,
        b_q: hv.pb_hi,
        gap_a,
        gap_b,
        quotient_deficit: qd,
        delta,
        lifted: map.lifted,
    };
    Ok((res, map))
}

/// Grid length for a measure: `round(μ·m)`, halves rounding up.
pub fn grid_length(mu: Q, m: usize) -> usize {
    let x = mu * Q::from_integer(m as i64);
    (x + Q::new(1, 2)).floor().to_integer() as usize
}

/// Per-residue counts of `S` and of the whole group under `χ`.
fn residue_counts(chi: &Character, s: &Subset) -> (Vec<usize>, Vec<usize>) {
    let mut inside = vec![0; chi.modulus];
    let mut fiber = vec![0; chi.modulus];
    for x in 0..chi.image.len() {
        fiber[chi.eval(x)] += 1;
    }
    for x in s.iter() {
        inside[chi.eval(x)] += 1;
    }
    (inside, fiber)
}

/// Arc of the given length minimizing `μ(S △ χ⁻¹(I))`, smallest start on ties.
pub fn fit_arc(g: &GroupModel, chi: &Character, s: &Subset, length: usize) -> Result<(Arc, Q)> {
    g.check_subset(s)?;
    if chi.image.len() != g.order() {
        return Err(Error::ParentMismatch { expected: g.order(), got: chi.image.len() });
    }
    let m = chi.modulus;
    if length > m {
        return Err(Error::OutOfRange(format!("arc length {length} exceeds modulus {m}")));
    }
    let (inside, fiber) = residue_counts(chi, s);
    // |S △ χ⁻¹I| = |S| + |χ⁻¹I| − 2|S ∩ χ⁻¹I|
    let score = |i: i64, f: i64| s.len() as i64 + f - 2 * i;
    let (mut win_in, mut win_f) = (0i64, 0i64);
    for r in 0..length {
        win_in += inside[r] as i64;
        win_f += fiber[r] as i64;
    }
    let mut best = (score(win_in, win_f), 0usize);
    for start in 1..m {
        if length > 0 {
            let out = start - 1;
            let inn = (start + length - 1) % m;
            win_in += inside[inn] as i64 - inside[out] as i64;
            win_f += fiber[inn] as i64 - fiber[out] as i64;
        }
        let sc = score(win_in, win_f);
        if sc < best.0 {
            best = (sc, start);
        }
    }
    Ok((Arc::new(m, best.1, length), Q::new(best.0, g.order() as i64)))
}

pub fn fit_arc_to_measure(g: &GroupModel, chi: &Character, s: &Subset) -> Result<(Arc, Q)> {
    fit_arc(g, chi, s, grid_length(s.measure(), chi.modulus))
}

/// Measure of `χ(S)` on the target circle.
pub fn image_measure(chi: &Character, s: &Subset) -> Q {
    let mut hit = vec![false; chi.modulus];
    for x in s.iter() {
        hit[chi.eval(x)] = true;
    }
    Q::new(hit.iter().filter(|&&h| h).count() as i64, chi.modulus as i64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub arc: Arc,
    #[serde(with = "serde_q")]
    pub gap: Q,
    #[serde(with = "serde_q")]
    pub bound: Q,
    pub certified: bool,
}

/// Given `B` close to `χ⁻¹(J)`, fit `A` to an arc of its own measure and
/// compare the gap with `(14 + κ)δ`. All three hypotheses are enforced.
pub fn bohr_stability(
    g: &GroupModel,
    chi: &Character,
    a: &Subset,
    b: &Subset,
    j: &Arc,
    kappa: Q,
    delta: Q,
) -> Result<StabilityReport> {
    if kappa.is_negative() || delta.is_negative() {
        return Err(Error::pre("κ and δ must be non-negative"));
    }
    let rep = deficit(g, a, b)?;
    let (ma, mb) = (rep.mu_a, rep.mu_b);
    let floor = (kappa * 2 + 30) * delta;
    if !(ma > floor && mb > floor) {
        return Err(Error::Hypothesis { name: "size", detail: format!("min(μA, μB) = {} not above (2κ+30)δ = {floor}", ma.min(mb)) });
    }
    let upper = ma + mb + delta;
    // 1 − (2√κ + 10)δ ≥ upper  ⇔  2√κ·δ ≤ 1 − upper − 10δ
    let room = Q::from_integer(1) - upper - delta * 10;
    if rep.mu_ab_lifted > upper || !sqrt_le(kappa * delta * delta * 4, room) {
        return Err(Error::Hypothesis {
            name: "expansion",
            detail: format!("need μ(AB) = {} ≤ μA+μB+δ = {upper} ≤ 1 − (2√κ+10)δ", rep.mu_ab_lifted),
        });
    }
    if j.modulus != chi.modulus {
        return Err(Error::ModulusMismatch { character: chi.modulus, arc: j.modulus });
    }
    if j.length != grid_length(mb, chi.modulus) {
        return Err(Error::Hypothesis { name: "interval", detail: format!("μ(J) = {} does not match μ(B) = {mb}", j.measure()) });
    }
    let jb = crate::group::bohr_preimage(g, chi, j)?;
    let off = b.symmetric_difference(&jb).measure();
    if off > kappa * delta {
        return Err(Error::Hypothesis { name: "closeness", detail: format!("μ(B △ χ⁻¹J) = {off} exceeds κδ = {}", kappa * delta) });
    }
    let (arc, gap) = fit_arc_to_measure(g, chi, a)?;
    let bound = (kappa + 14) * delta;
    Ok(StabilityReport { arc, gap, bound, certified: gap <= bound })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub arc_a: Arc,
    pub arc_b: Arc,
    #[serde(with = "serde_q")]
    pub gap_a: Q,
    #[serde(with = "serde_q")]
    pub gap_b: Q,
    #[serde(with = "serde_q")]
    pub bound: Q,
    pub within: bool,
}

pub fn structural_control(g: &GroupModel, chi: &Character, a: &Subset, b: &Subset, delta: Q) -> Result<StructuralReport> {
    let wide = image_measure(chi, a) + image_measure(chi, b);
    if wide >= Q::new(1, 5) {
        return Err(Error::Hypothesis { name: "projection", detail: format!("μ(χA) + μ(χB) = {wide} is not below 1/5") });
    }
    let rep = deficit(g, a, b)?;
    if delta >= rep.min_measure() {
        return Err(Error::Hypothesis { name: "size", detail: format!("δ = {delta} not below min(μA, μB)") });
    }
    if rep.mu_ab_lifted > rep.mu_a + rep.mu_b + delta {
        return Err(Error::Hypothesis { name: "expansion", detail: format!("excess {} exceeds δ = {delta}", rep.excess) });
    }
    let (arc_a, gap_a) = fit_arc_to_measure(g, chi, a)?;
    let (arc_b, gap_b) = fit_arc_to_measure(g, chi, b)?;
    let bound = delta * 15;
    Ok(StructuralReport { arc_a, arc_b, gap_a, gap_b, bound, within: gap_a <= bound && gap_b <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{bohr_preimage, cyclic_subgroup, first_projection, make_torus};

    #[test]
    fn fibers_and_levels() {
        let g = make_torus(&[6, 2]).unwrap();
        let h = cyclic_subgroup(&g, 1);
        let a = Subset::from_indices(12, [0, 1, 2]);
        let p = fiber_profile(&g, &h, &a, Side::Left).unwrap();
        assert_eq!(p.lengths()[..3], [Q::from_integer(1), Q::new(1, 2), Q::zero()]);
        let (lv, pl) = level_set(&g, &h, &a, Q::new(1, 2), Q::from_integer(1), Side::Left).unwrap();
        assert_eq!(lv.indices(), vec![0, 1]);
        assert_eq!(pl.indices(), vec![0]);
        let (all, _) = level_set(&g, &h, &a, Q::zero(), Q::from_integer(1), Side::Left).unwrap();
        assert_eq!(all, a);
        assert!(level_set(&g, &h, &a, Q::new(1, 2), Q::new(1, 2), Side::Left).is_err());
        let empty = fiber_profile(&g, &h, &Subset::empty(12), Side::Left).unwrap();
        assert!(empty.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn transfer_on_full_fibers() {
        let g = make_torus(&[48, 5]).unwrap();
        let chi = first_projection(&g).unwrap();
        let a = bohr_preimage(&g, &chi, &Arc::new(48, 0, 10)).unwrap();
        let b = bohr_preimage(&g, &chi, &Arc::new(48, 0, 12)).unwrap();
        let h = cyclic_subgroup(&g, 1);
        let (t, _) = transfer(&g, &h, &a, &b, Q::zero()).unwrap();
        assert_eq!(t.gap_a, Q::zero());
        assert_eq!(t.a_q.indices(), (0..10).collect::<Vec<_>>());
        assert!(t.gaps_certified && t.deficit_certified);
        let sp = spillover_bound(&g, &h, &a, &b).unwrap();
        assert_eq!(sp.rhs, Q::new(22, 48));
        assert!(sp.holds && sp.lifted);
        let big = bohr_preimage(&g, &chi, &Arc::new(48, 0, 30)).unwrap();
        assert!(transfer(&g, &h, &big, &big, Q::zero()).is_err());
    }

    #[test]
    fn spillover_needs_upper_levels() {
        // One cell against two cells in other rows; every fiber is 1/12.
        let g = make_torus(&[12, 4]).unwrap();
        let h = cyclic_subgroup(&g, g.from_coords(&[1, 0]).unwrap());
        let at = |x: usize, y: usize| g.from_coords(&[x, y]).unwrap();
        let a = Subset::from_indices(48, [at(7, 0)]);
        let b = Subset::from_indices(48, [at(8, 3), at(9, 1)]);
        let sp = spillover_bound(&g, &h, &a, &b).unwrap();
        assert!(sp.lifted && !sp.upper_levels_nonempty);
        assert_eq!((sp.rhs, sp.lhs), (Q::new(1, 4), Q::new(1, 6)));
        assert!(!sp.holds);
    }

    #[test]
    fn arc_fit_prefers_smallest_start() {
        let g = make_torus(&[48, 5]).unwrap();
        let chi = first_projection(&g).unwrap();
        let a = bohr_preimage(&g, &chi, &Arc::new(48, 7, 10)).unwrap();
        let (arc, gap) = fit_arc_to_measure(&g, &chi, &a).unwrap();
        assert_eq!((arc.start, arc.length, gap), (7, 10, Q::zero()));
        let (arc, _) = fit_arc(&g, &chi, &Subset::empty(240), 3).unwrap();
        assert_eq!(arc.start, 0);
        assert_eq!(grid_length(Q::new(1, 96), 48), 1);
        assert_eq!(grid_length(Q::new(1, 97), 48), 0);
    }

    #[test]
    fn structural_guard() {
        let g = make_torus(&[48, 5]).unwrap();
        let chi = first_projection(&g).unwrap();
        let a = bohr_preimage(&g, &chi, &Arc::new(48, 0, 4)).unwrap();
        let b = bohr_preimage(&g, &chi, &Arc::new(48, 2, 5)).unwrap();
        let r = structural_control(&g, &chi, &a, &b, Q::new(1, 240)).unwrap();
        assert_eq!((r.gap_a, r.gap_b), (Q::zero(), Q::zero()));
        let wide = bohr_preimage(&g, &chi, &Arc::new(48, 0, 10)).unwrap();
        assert!(matches!(
            structural_control(&g, &chi, &wide, &b, Q::new(1, 240)),
            Err(Error::Hypothesis { name: "projection", .. })
        ));
    }
}
