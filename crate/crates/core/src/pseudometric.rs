//! Set-induced pseudometrics, near-linearity checks, relative signs,
//! λ-sequences, total weight and the loop-length search.

use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::cmp::Reverse;

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::distinct_cyclic_subgroups;
use crate::group::GroupModel;
use crate::rational::{dist_to_lattice, serde_q};
use crate::subset::Subset;
use crate::sumset::{overlap_profile, Side};
use crate::Q;

const EXHAUSTIVE_TRIPLES: usize = 256;
const SAMPLED_TRIPLES: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// Left-invariant: `d(g1, g2) = norm[g1⁻¹ g2]`.
    Norms(Vec<i64>),
    /// Row-major `N x N` table.
    Dense(Vec<i64>),
}

/// Pseudometric with values `v / denom`, `v` an integer.
#[derive(Clone, Debug)]
pub struct PseudometricTable {
    group: GroupModel,
    denom: i64,
    storage: Storage,
    rho: i64,
}

impl PseudometricTable {
    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    pub fn from_norms(group: GroupModel, denom: i64, norms: Vec<i64>) -> Self {
        assert_eq!(norms.len(), group.order());
        let rho = norms.iter().copied().max().unwrap_or(0);
        PseudometricTable { group, denom, storage: Storage::Norms(norms), rho }
    }

    pub fn from_dense(group: GroupModel, denom: i64, table: Vec<i64>) -> Self {
        assert_eq!(table.len(), group.order() * group.order());
        let rho = table.iter().copied().max().unwrap_or(0);
        PseudometricTable { group, denom, storage: Storage::Dense(table), rho }
    }

    pub fn is_left_invariant_by_construction(&self) -> bool {
        matches!(self.storage, Storage::Norms(_))
    }

    /// Integer numerator of `d(a, b)`.
    pub fn dn(&self, a: usize, b: usize) -> i64 {
        match &self.storage {
            Storage::Norms(v) => v[self.group.mul(self.group.inv(a), b)],
            Storage::Dense(t) => t[a * self.order() + b],
        }
    }

    /// Integer numerator of `‖g‖ = d(id, g)`.
    pub fn nn(&self, g: usize) -> i64 {
        match &self.storage {
            Storage::Norms(v) => v[g],
            Storage::Dense(t) => t[self.group.identity() * self.order() + g],
        }
    }

    pub fn d(&self, a: usize, b: usize) -> Q {
        Q::new(self.dn(a, b), self.denom)
    }

    pub fn norm(&self, g: usize) -> Q {
        Q::new(self.nn(g), self.denom)
    }

    pub fn rho(&self) -> Q {
        Q::new(self.rho, self.denom)
    }

    /// `q` expressed in numerator units.
    fn units(&self, q: Q) -> Q {
        q * self.denom
    }

    /// `N(α) = {g : ‖g‖ ≤ α}`.
    pub fn ball(&self, alpha: Q) -> Subset {
        let a = self.units(alpha);
        Subset::from_fn(self.order(), |g| Q::from_integer(self.nn(g)) <= a)
    }

    /// Overwrite one entry (and its mirror); turns the table dense.
    pub fn corrupt(&mut self, a: usize, b: usize, value: i64) {
        let n = self.order();
        if let Storage::Norms(_) = self.storage {
            let t = (0..n * n).map(|k| self.dn(k / n, k % n)).collect();
            self.storage = Storage::Dense(t);
        }
        if let Storage::Dense(t) = &mut self.storage {
            t[a * n + b] = value;
            t[b * n + a] = value;
        }
        self.rho = match &self.storage {
            Storage::Dense(t) => t.iter().copied().max().unwrap_or(0),
            Storage::Norms(v) => v.iter().copied().max().unwrap_or(0),
        };
    }

    /// Pull back along a projection `G → Q` onto the group `g`.
    pub fn pullback(&self, g: &GroupModel, proj: &[usize]) -> PseudometricTable {
        let norms = (0..g.order()).map(|x| self.nn(proj[x])).collect();
        PseudometricTable::from_norms(g.clone(), self.denom, norms)
    }

    /// Dense CSV rows `i,j,numerator,denominator`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,num,den\n");
        for i in 0..self.order() {
            for j in 0..self.order() {
                let q = self.d(i, j);
                out.push_str(&format!("{i},{j},{},{}\n", q.numer(), q.denom()));
            }
        }
        out
    }

    /// Weighted Cayley distance from the identity with steps in `ball`,
    /// step weight `‖s‖`. Unreachable elements get `i64::MAX`.
    pub fn weighted_distances(&self, steps: &[usize]) -> Vec<i64> {
        let n = self.order();
        let mut dist = vec![i64::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[self.group.identity()] = 0;
        heap.push(Reverse((0i64, self.group.identity())));
        while let Some(Reverse((dx, x))) = heap.pop() {
            if dx > dist[x] {
                continue;
            }
            for &s in steps {
                let y = self.group.mul(x, s);
                let w = dx + self.nn(s).max(1);
                if w < dist[y] {
                    dist[y] = w;
                    heap.push(Reverse((w, y)));
                }
            }
        }
        dist
    }
}

/// `d_A(g1, g2) = μ(A) − μ(g1A ∩ g2A)` (left) or with right translates.
pub fn pseudometric_from_set(g: &GroupModel, a: &Subset, side: Side) -> Result<PseudometricTable> {
    g.check_subset(a)?;
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    let prof = overlap_profile(g, a, side)?;
    let size = a.len() as i64;
    let norms: Vec<i64> = prof.counts.iter().map(|&c| size - c as i64).collect();
    Ok(match side {
        Side::Left => PseudometricTable::from_norms(g.clone(), g.order() as i64, norms),
        Side::Right => {
            // μ(A g1 ∩ A g2) = μ(A ∩ A g2 g1⁻¹)
            let n = g.order();
            let t = (0..n * n).map(|k| norms[g.mul(k % n, g.inv(k / n))]).collect();
            PseudometricTable::from_dense(g.clone(), n as i64, t)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoReport {
    pub reflexive: bool,
    pub symmetric: bool,
    pub triangle: bool,
    pub left_invariant: bool,
    pub right_invariant: bool,
    pub kernel_is_subgroup: bool,
    /// First failing triple (or pair, padded with the identity).
    pub witness: Option<(usize, usize, usize)>,
    pub exhaustive: bool,
}

impl PseudoReport {
    pub fn all_pass(&self) -> bool {
        self.reflexive && self.symmetric && self.triangle && self.left_invariant && self.right_invariant && self.kernel_is_subgroup
    }
}

fn sample_triples(n: usize, seed: u64) -> Vec<(usize, usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..SAMPLED_TRIPLES.min(n * n * n)).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))).collect()
}

pub fn verify_pseudometric(d: &PseudometricTable) -> PseudoReport {
    let g = &d.group;
    let n = d.order();
    let e = g.identity();
    let exhaustive = n <= EXHAUSTIVE_TRIPLES;
    let mut witness = None;
    let mut note = |w: (usize, usize, usize), ok: bool| {
        if !ok && witness.is_none() {
            witness = Some(w);
        }
        ok
    };
    let reflexive = note((e, e, e), (0..n).all(|x| d.dn(x, x) == 0));
    let sym_fail = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).find(|&(a, b)| d.dn(a, b) != d.dn(b, a));
    let symmetric = note(sym_fail.map(|(a, b)| (a, b, e)).unwrap_or((e, e, e)), sym_fail.is_none());

    let tri_fail = match &d.storage {
        Storage::Norms(_) => (0..n)
            .into_par_iter()
            .find_map_first(|a| (0..n).find(|&b| d.nn(g.mul(a, b)) > d.nn(a) + d.nn(b)).map(|b| (e, a, g.mul(a, b)))),
        Storage::Dense(_) => {
            let bad = |&(a, b, c): &(usize, usize, usize)| d.dn(a, c) > d.dn(a, b) + d.dn(b, c);
            if exhaustive {
                (0..n * n * n).into_par_iter().map(|k| (k / (n * n), (k / n) % n, k % n)).find_first(bad)
            } else {
                sample_triples(n, 11).into_par_iter().find_first(bad)
            }
        }
    };
    let triangle = note(tri_fail.unwrap_or((e, e, e)), tri_fail.is_none());

    let hs: Vec<usize> = if n <= 512 { (0..n).collect() } else { (0..n).step_by(n / 257 + 1).collect() };
    let left_fail = match d.storage {
        Storage::Norms(_) => None,
        Storage::Dense(_) => hs.par_iter().find_map_first(|&h| {
            (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).find(|&(a, b)| d.dn(g.mul(h, a), g.mul(h, b)) != d.dn(a, b)).map(|(a, b)| (h, a, b))
        }),
    };
    let left_invariant = note(left_fail.unwrap_or((e, e, e)), left_fail.is_none());
    let right_fail = hs.par_iter().find_map_first(|&h| match d.storage {
        // d(g1 h, g2 h) = ‖h⁻¹ x h‖ with x = g1⁻¹ g2
        Storage::Norms(_) => (0..n).find(|&x| d.nn(g.mul(g.mul(g.inv(h), x), h)) != d.nn(x)).map(|x| (h, e, x)),
        Storage::Dense(_) => (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .find(|&(a, b)| d.dn(g.mul(a, h), g.mul(b, h)) != d.dn(a, b))
            .map(|(a, b)| (h, a, b)),
    });
    let right_invariant = note(right_fail.unwrap_or((e, e, e)), right_fail.is_none());

    let ker = kernel(d);
    let ker_fail = ker.iter().find_map(|a| ker.iter().find(|&b| !ker.contains(g.mul(a, b))).map(|b| (e, a, b)));
    let kernel_is_subgroup = note(ker_fail.unwrap_or((e, e, e)), ker_fail.is_none());
    PseudoReport { reflexive, symmetric, triangle, left_invariant, right_invariant, kernel_is_subgroup, witness, exhaustive }
}

/// `{g : ‖g‖ = 0}`.
pub fn kernel(d: &PseudometricTable) -> Subset {
    Subset::from_fn(d.order(), |g| d.nn(g) == 0)
}

/// Distance from `x` to the closed window `c + I(γ)`; zero inside.
fn miss(x: Q, c: Q, gamma: Q) -> Q {
    ((x - c).abs() - gamma).max(Q::zero())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    pub holds: bool,
    pub worst: Option<(usize, usize, usize)>,
    /// How far the worst triple sits outside both windows.
    #[serde(with = "serde_q")]
    pub worst_excess: Q,
    pub checked: usize,
}

/// Either `d13 ∈ d12 + d23 + I(γ)` or `d13 ∈ |d12 − d23| + I(γ)` whenever
/// `d12 + d23 < ρ − γ`. Intervals are closed; `γ = 0` means exact.
pub fn gamma_linearity(d: &PseudometricTable, gamma: Q) -> LinearityReport {
    let gm = d.units(gamma);
    let cap = d.units(d.rho()) - gm;
    let g = &d.group;
    let n = d.order();
    let e = g.identity();
    let eval = |d12: i64, d23: i64, d13: i64| -> Option<Q> {
        let s = Q::from_integer(d12 + d23);
        if s >= cap {
            return None;
        }
        let x = Q::from_integer(d13);
        Some(miss(x, s, gm).min(miss(x, Q::from_integer((d12 - d23).abs()), gm)))
    };
    let triples: Box<dyn Fn(usize) -> Vec<(Q, (usize, usize, usize))> + Sync> = match &d.storage {
        Storage::Norms(_) => Box::new(|a: usize| {
            (0..n)
                .filter_map(|b| {
                    let ab = g.mul(a, b);
                    eval(d.nn(a), d.nn(b), d.nn(ab)).map(|m| (m, (e, a, ab)))
                })
                .collect()
        }),
        Storage::Dense(_) => Box::new(|a: usize| {
            let mut out = Vec::new();
            for b in 0..n {
                for c in 0..n {
                    if let Some(m) = eval(d.dn(a, b), d.dn(b, c), d.dn(a, c)) {
                        out.push((m, (a, b, c)));
                    }
                }
            }
            out
        }),
    };
    let (worst, checked) = (0..n)
        .into_par_iter()
        .map(|a| {
            let v = triples(a);
            let cnt = v.len();
            let w = v.into_iter().filter(|(m, _)| m.is_positive()).min_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
            (w, cnt)
        })
        .reduce(
            || (None, 0),
            |(wa, ca), (wb, cb)| {
                let w = match (wa, wb) {
                    (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
                    (x, None) => x,
                    (None, y) => y,
                };
                (w, ca + cb)
            },
        );
    match worst {
        Some((m, t)) => LinearityReport { holds: false, worst: Some(t), worst_excess: m / d.denom, checked },
        None => LinearityReport { holds: true, worst: None, worst_excess: Q::zero(), checked },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub holds: bool,
    pub worst: Option<usize>,
    #[serde(with = "serde_q")]
    pub worst_excess: Q,
}

/// `‖g²‖ ∈ 2‖g‖ + I(window)` on `N(ρ/2 − 2γ)`, with `window = 4γ` for
/// γ-monotonicity.
pub fn monotone_with_window(d: &PseudometricTable, gamma: Q, window: Q) -> MonotoneReport {
    let g = &d.group;
    let ball = d.ball(d.rho() / 2 - gamma * 2);
    let w = d.units(window);
    let worst = ball
        .iter()
        .map(|x| (miss(Q::from_integer(d.nn(g.mul(x, x))), Q::from_integer(2 * d.nn(x)), w), x))
        .filter(|(m, _)| m.is_positive())
        .min_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    match worst {
        Some((m, x)) => MonotoneReport { holds: false, worst: Some(x), worst_excess: m / d.denom },
        None => MonotoneReport { holds: true, worst: None, worst_excess: Q::zero() },
    }
}

pub fn gamma_monotonicity(d: &PseudometricTable, gamma: Q) -> MonotoneReport {
    monotone_with_window(d, gamma, gamma * 4)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathMonotoneReport {
    /// Every cyclic subgroup satisfied one of the two path hypotheses.
    pub holds: bool,
    /// Generator of the first subgroup where both hypotheses failed.
    pub failed_subgroup: Option<usize>,
    /// Subgroups settled by the small-norm branch, the path branch, or
    /// having no element in the monotonicity range.
    pub small: usize,
    pub path: usize,
    pub vacuous: usize,
    #[serde(with = "serde_q")]
    pub certified_gamma: Q,
    /// Direct check of `8γ`-monotonicity, run when `holds`.
    pub monotone_verified: Option<bool>,
}

/// Finite analog of the one-parameter-subgroup criterion: each cyclic
/// subgroup is walked as `X^t` with `X` its smallest-norm generator.
pub fn path_monotone_check(d: &PseudometricTable, gamma: Q) -> PathMonotoneReport {
    let g = &d.group;
    let gm = d.units(gamma);
    let rho = d.units(d.rho());
    let range = d.ball(d.rho() / 2 - gamma * 2);
    let (mut small, mut path, mut vacuous) = (0, 0, 0);
    let mut failed = None;
    for h in distinct_cyclic_subgroups(g) {
        let members = h.members.indices();
        let x = members
            .iter()
            .copied()
            .filter(|&y| crate::group::cyclic_subgroup(g, y).order() == h.order())
            .min_by_key(|&y| (d.nn(y), y))
            .unwrap();
        let walk: Vec<usize> = (0..h.order()).map(|t| g.pow(x, t)).collect();
        if walk.iter().all(|&y| Q::from_integer(d.nn(y)) <= gm) {
            small += 1;
            continue;
        }
        let found = (1..walk.len()).any(|t0| {
            let g0 = walk[t0];
            let n0 = Q::from_integer(d.nn(g0));
            if !(n0 >= rho / 4 && n0 <= rho / 2) {
                return false;
            }
            if miss(Q::from_integer(d.nn(g.mul(g0, g0))), n0 * 2, gm).is_positive() {
                return false;
            }
            walk[..=t0].iter().all(|&y| !miss(Q::from_integer(d.nn(y) + d.dn(y, g0)), n0, gm).is_positive())
        });
        if found {
            path += 1;
        } else if h.members.iter().all(|y| y == g.identity() || !range.contains(y)) {
            vacuous += 1;
        } else if failed.is_none() {
            failed = Some(x);
        }
    }
    let holds = failed.is_none();
    let monotone_verified = holds.then(|| monotone_with_window(d, gamma, gamma * 8).holds);
    PathMonotoneReport { holds, failed_subgroup: failed, small, path, vacuous, certified_gamma: gamma * 8, monotone_verified }
}

/// Relative-sign context: a γ, and a reference element `g0` with
/// `4γ < ‖g0‖ ≤ ρ/4 − γ`.
#[derive(Clone, Debug)]
pub struct SignContext<'a> {
    pub d: &'a PseudometricTable,
    pub gamma: Q,
    pub g0: usize,
}

impl<'a> SignContext<'a> {
    pub fn references(d: &PseudometricTable, gamma: Q) -> Subset {
        d.ball(d.rho() / 4 - gamma).difference(&d.ball(gamma * 4))
    }

    /// Smallest-index reference.
    pub fn new(d: &'a PseudometricTable, gamma: Q) -> Result<Self> {
        let g0 = Self::references(d, gamma).first().ok_or(Error::NoReference)?;
        Ok(SignContext { d, gamma, g0 })
    }

    pub fn with_reference(d: &'a PseudometricTable, gamma: Q, g0: usize) -> Result<Self> {
        if !Self::references(d, gamma).contains(g0) {
            return Err(Error::pre(format!("{g0} is not a valid reference")));
        }
        Ok(SignContext { d, gamma, g0 })
    }

    fn check_reference(&self) -> Result<()> {
        if Self::references(self.d, self.gamma).contains(self.g0) {
            Ok(())
        } else {
            Err(Error::NoReference)
        }
    }

    /// `s(g1, g2)` straight from the definition.
    pub fn sign(&self, g1: usize, g2: usize) -> Result<i8> {
        let d = self.d;
        let gm = d.units(self.gamma);
        let (n1, n2) = (d.nn(g1), d.nn(g2));
        if Q::from_integer(n1 + n2) >= d.units(d.rho()) - gm {
            return Err(Error::pre(format!("‖{g1}‖ + ‖{g2}‖ not below ρ − γ")));
        }
        if Q::from_integer(n1.min(n2)) <= gm * 4 {
            return Ok(0);
        }
        let p = Q::from_integer(d.nn(d.group.mul(g1, g2)));
        if !miss(p, Q::from_integer(n1 + n2), gm).is_positive() {
            Ok(1)
        } else if !miss(p, Q::from_integer((n1 - n2).abs()), gm).is_positive() {
            Ok(-1)
        } else {
            Err(Error::AmbiguousSign(g1, g2))
        }
    }

    /// `Σ s(g0, gᵢ)‖gᵢ‖` in numerator units.
    pub fn signed_units(&self, seq: &[usize]) -> Result<i64> {
        self.check_reference()?;
        let lim = self.d.units(self.d.rho() / 4 - self.gamma);
        let mut acc = 0i64;
        for &x in seq {
            let nx = self.d.nn(x);
            if Q::from_integer(nx) > lim {
                return Err(Error::pre(format!("entry {x} outside N(ρ/4 − γ)")));
            }
            acc += self.sign(self.g0, x)? as i64 * nx;
        }
        Ok(acc)
    }

    pub fn signed_weight(&self, seq: &[usize]) -> Result<Q> {
        Ok(Q::new(self.signed_units(seq)?, self.d.denom))
    }
}

/// `t = |Σ s(g0, gᵢ)‖gᵢ‖|`, recomputed with a second reference (the
/// largest-index one) and required to agree.
pub fn total_weight(ctx: &SignContext, seq: &[usize]) -> Result<Q> {
    let t = ctx.signed_weight(seq)?.abs();
    if let Some(alt) = SignContext::references(ctx.d, ctx.gamma).iter().last() {
        let other = SignContext { g0: alt, ..ctx.clone() };
        let t2 = other.signed_weight(seq)?.abs();
        if t2 != t {
            return Err(Error::Hypothesis {
                name: "reference independence",
                detail: format!("total weight {t} with {} but {t2} with {alt}", ctx.g0),
            });
        }
    }
    Ok(t)
}

fn window_product(g: &GroupModel, seq: &[usize], start: usize, len: usize, cyclic: bool) -> usize {
    let n = seq.len();
    (0..len).fold(g.identity(), |acc, k| {
        let i = start + k;
        g.mul(acc, if cyclic { seq[i % n] } else { seq[i] })
    })
}

/// No window of 2 to 4 consecutive entries multiplies into `N(λ)`.
pub fn is_irreducible(d: &PseudometricTable, lambda: Q, seq: &[usize]) -> bool {
    let lim = d.units(lambda);
    let g = &d.group;
    (2..=4).all(|j| j > seq.len() || (0..=seq.len() - j).all(|i| Q::from_integer(d.nn(window_product(g, seq, i, j, false))) > lim))
}

/// Irreducibility with windows read around the loop, for identity-product
/// sequences.
pub fn is_cyclically_irreducible(d: &PseudometricTable, lambda: Q, seq: &[usize]) -> bool {
    let lim = d.units(lambda);
    let g = &d.group;
    !seq.is_empty()
        && (2..=4).all(|j| (0..seq.len()).all(|i| Q::from_integer(d.nn(window_product(g, seq, i, j, true))) > lim))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSequence {
    #[serde(with = "serde_q")]
    pub lambda: Q,
    pub entries: Vec<usize>,
    pub product: usize,
    pub in_ball: bool,
    pub irreducible: bool,
}

impl LambdaSequence {
    pub fn new(d: &PseudometricTable, lambda: Q, entries: Vec<usize>) -> Self {
        let g = &d.group;
        let product = entries.iter().fold(g.identity(), |acc, &x| g.mul(acc, x));
        let lim = d.units(lambda);
        let in_ball = entries.iter().all(|&x| Q::from_integer(d.nn(x)) <= lim);
        let irreducible = is_irreducible(d, lambda, &entries);
        LambdaSequence { lambda, entries, product, in_ball, irreducible }
    }
}

/// `4γ < λ ≤ ρ/16 − γ`, with the strict left bound relaxed to `λ > 0` at `γ = 0`.
pub(crate) fn check_lambda_range(d: &PseudometricTable, lambda: Q, gamma: Q, factor: i64) -> Result<()> {
    let lo = gamma * factor;
    let hi = d.rho() / 16 - gamma;
    if lambda <= lo || lambda <= Q::zero() || lambda > hi {
        return Err(Error::pre(format!("λ = {lambda} outside ({lo}, {hi}]")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Concatenation {
    pub reduced: Vec<usize>,
    #[serde(with = "serde_q")]
    pub drift_bound: Q,
    #[serde(with = "serde_q")]
    pub drift: Q,
}

/// Merge in-ball windows, shortest first and leftmost first, until the
/// sequence is irreducible. The total weight moves by at most `22(n−m)γ`.
pub fn irreducible_concatenation(ctx: &SignContext, lambda: Q, seq: &[usize]) -> Result<Concatenation> {
    let d = ctx.d;
    check_lambda_range(d, lambda, ctx.gamma, 4)?;
    let g = &d.group;
    let lim = d.units(lambda);
    let mut cur = seq.to_vec();
    'outer: loop {
        for j in 2..=4 {
            if j > cur.len() {
                break;
            }
            for i in 0..=cur.len() - j {
                let p = window_product(g, &cur, i, j, false);
                if Q::from_integer(d.nn(p)) <= lim {
                    cur.splice(i..i + j, [p]);
                    continue 'outer;
                }
            }
        }
        break;
    }
    let before = total_weight(ctx, seq)?;
    let after = total_weight(ctx, &cur)?;
    let drift_bound = ctx.gamma * 22 * (seq.len() - cur.len()) as i64;
    let drift = (after - before).abs();
    if drift > drift_bound {
        return Err(Error::InverseViolated(format!("concatenation drift {drift} exceeds {drift_bound}")));
    }
    Ok(Concatenation { reduced: cur, drift_bound, drift })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallGrowth {
    pub skipped: bool,
    pub n_lambda: usize,
    pub n_4lambda: usize,
    pub holds: bool,
}

/// `|N(4λ)| ≤ 12 |N(λ)|`, checked only for 4γ < λ ≤ ρ/16 − γ.
pub fn ball_growth_check(d: &PseudometricTable, lambda: Q, gamma: Q) -> BallGrowth {
    let n1 = d.ball(lambda).len();
    let n4 = d.ball(lambda * 4).len();
    if check_lambda_range(d, lambda, gamma, 4).is_err() {
        return BallGrowth { skipped: true, n_lambda: n1, n_4lambda: n4, holds: true };
    }
    BallGrowth { skipped: false, n_lambda: n1, n_4lambda: n4, holds: n4 <= 12 * n1 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    Exhaustive,
    Beam,
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    #[serde(with = "serde_q")]
    pub alpha: Q,
    pub witness: LambdaSequence,
    #[serde(with = "serde_q")]
    pub lower: Q,
    #[serde(with = "serde_q")]
    pub upper: Q,
    pub max_len: usize,
    /// The search covered every sequence up to `max_len`.
    pub exhaustive: bool,
    pub states: usize,
}

/// Search state for identity-product λ-sequences. `head` holds the first
/// three entries for the wrap-around windows; `tail` the last three.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct LoopState {
    product: u32,
    head: [u32; 3],
    tail: [u32; 3],
    hl: u8,
    tl: u8,
    sum: i64,
}

impl LoopState {
    fn start(e: usize) -> Self {
        LoopState { product: e as u32, head: [0; 3], tail: [0; 3], hl: 0, tl: 0, sum: 0 }
    }

    fn tail(&self) -> &[u32] {
        &self.tail[..self.tl as usize]
    }

    fn head(&self) -> &[u32] {
        &self.head[..self.hl as usize]
    }
}

/// Paths stored as parent links.
#[derive(Default)]
struct Arena {
    links: Vec<(u32, u32)>,
}

impl Arena {
    const ROOT: u32 = u32::MAX;

    fn push(&mut self, parent: u32, step: usize) -> u32 {
        self.links.push((parent, step as u32));
        (self.links.len() - 1) as u32
    }

    fn path(&self, mut at: u32) -> Vec<usize> {
        let mut out = Vec::new();
        while at != Self::ROOT {
            let (p, s) = self.links[at as usize];
            out.push(s as usize);
            at = p;
        }
        out.reverse();
        out
    }
}

struct LoopSearch<'a> {
    d: &'a PseudometricTable,
    steps: Vec<usize>,
    signed: Vec<i64>,
    lambda: Q,
    outside: Vec<bool>,
}

impl<'a> LoopSearch<'a> {
    fn new(ctx: &SignContext<'a>, lambda: Q) -> Result<Self> {
        let d = ctx.d;
        let steps = d.ball(lambda).indices();
        let mut signed = vec![0; d.order()];
        for &s in &steps {
            signed[s] = ctx.sign(ctx.g0, s)? as i64 * d.nn(s);
        }
        let lim = d.units(lambda);
        let outside = (0..d.order()).map(|x| Q::from_integer(d.nn(x)) > lim).collect();
        Ok(LoopSearch { d, steps, signed, lambda, outside })
    }

    fn push(&self, st: &LoopState, s: usize) -> Option<LoopState> {
        let g = &self.d.group;
        let mut p = s;
        for &x in st.tail().iter().rev() {
            p = g.mul(x as usize, p);
            if !self.outside[p] {
                return None;
            }
        }
        let mut ns = *st;
        if ns.hl < 3 {
            ns.head[ns.hl as usize] = s as u32;
            ns.hl += 1;
        }
        if ns.tl < 3 {
            ns.tail[ns.tl as usize] = s as u32;
            ns.tl += 1;
        } else {
            ns.tail = [ns.tail[1], ns.tail[2], s as u32];
        }
        ns.product = g.mul(st.product as usize, s) as u32;
        ns.sum += self.signed[s];
        Some(ns)
    }

    /// Close the loop: wrap-around windows, given the full sequence when it
    /// is shorter than seven entries.
    fn closes(&self, st: &LoopState, path: impl FnOnce() -> Vec<usize>, len: usize) -> bool {
        if st.product as usize != self.d.group.identity() {
            return false;
        }
        if len < 7 {
            return is_cyclically_irreducible(self.d, self.lambda, &path());
        }
        let ring: Vec<usize> = st.tail().iter().chain(st.head()).map(|&x| x as usize).collect();
        let g = &self.d.group;
        let tl = st.tl as usize;
        for j in 2..=4 {
            for i in 0..ring.len() {
                if i + j > ring.len() {
                    break;
                }
                if i < tl && i + j > tl && !self.outside[window_product(g, &ring, i, j, false)] {
                    return false;
                }
            }
        }
        true
    }
}

/// Minimum total weight of a cyclically irreducible identity-product
/// λ-sequence of length `≤ 4/μ(N(λ))`.
///
/// `Exhaustive` runs a layered search over deduplicated states; `Beam` runs
/// seeded best-first restarts keeping at most `width` states per product,
/// ordered by `|sum| + (weighted distance back to the identity)`.
pub fn alpha_lambda(
    ctx: &SignContext,
    lambda: Q,
    mode: AlphaMode,
    width: usize,
    seed: u64,
) -> Result<AlphaResult> {
    check_lambda_range(ctx.d, lambda, ctx.gamma, 44)?;
    alpha_lambda_unchecked(ctx, lambda, mode, width, seed)
}

/// `alpha_lambda` without the λ-range precondition, for coarse grids where
/// the smallest nonzero norm already exceeds `ρ/16`.
pub fn alpha_lambda_unchecked(
    ctx: &SignContext,
    lambda: Q,
    mode: AlphaMode,
    width: usize,
    seed: u64,
) -> Result<AlphaResult> {
    let d = ctx.d;
    let n = d.order() as i64;
    let nl = d.ball(lambda).len() as i64;
    let n4 = d.ball(lambda * 4).len() as i64;
    if nl <= 1 {
        return Err(Error::NoLoop("minimum resolution: N(λ) is the identity alone".into()));
    }
    let lower = lambda / (Q::new(n4, n) * 4);
    let upper = lambda * 4 / Q::new(nl, n);
    let max_len = (4 * n / nl) as usize;
    let search = LoopSearch::new(ctx, lambda)?;
    let exhaustive = match mode {
        AlphaMode::Exhaustive => true,
        AlphaMode::Beam => false,
        AlphaMode::Auto => search.steps.len() <= 5 && d.order() <= 512,
    };
    let found = if exhaustive {
        exhaustive_loops(&search, max_len)
    } else {
        (0..8u64)
            .into_par_iter()
            .map(|r| beam_loops(&search, max_len, width, seed.wrapping_add(r)))
            .reduce(|| (None, 0), |a, b| {
                let best = match (a.0, b.0) {
                    (Some(x), Some(y)) => Some(if (y.0, y.1.len()) < (x.0, x.1.len()) { y } else { x }),
                    (x, None) => x,
                    (None, y) => y,
                };
                (best, a.1 + b.1)
            })
    };
    let (best, states) = found;
    let (units, entries) = best.ok_or_else(|| Error::NoLoop(format!("no loop of length ≤ {max_len}")))?;
    let alpha = Q::new(units, d.denom);
    let witness = LambdaSequence::new(d, lambda, entries);
    Ok(AlphaResult { alpha, witness, lower, upper, max_len, exhaustive, states })
}

type Found = (Option<(i64, Vec<usize>)>, usize);

fn better(best: &mut Option<(i64, Vec<usize>)>, t: i64, seq: Vec<usize>) {
    let replace = match best {
        None => true,
        Some((bt, bs)) => (t, seq.len(), &seq) < (*bt, bs.len(), bs),
    };
    if replace {
        *best = Some((t, seq));
    }
}

fn exhaustive_loops(search: &LoopSearch, max_len: usize) -> Found {
    let g = &search.d.group;
    let mut arena = Arena::default();
    // Each layer keeps one representative path per state.
    let mut layer: Vec<(LoopState, u32)> = vec![(LoopState::start(g.identity()), Arena::ROOT)];
    let mut best = None;
    let mut states = 0;
    for len in 1..=max_len {
        let mut next: HashMap<LoopState, u32> = HashMap::new();
        for (st, at) in &layer {
            for &s in &search.steps {
                if let Some(ns) = search.push(st, s) {
                    if let std::collections::hash_map::Entry::Vacant(v) = next.entry(ns) {
                        v.insert(arena.push(*at, s));
                    }
                }
            }
        }
        states += next.len();
        for (st, &at) in &next {
            if search.closes(st, || arena.path(at), len) {
                better(&mut best, st.sum.abs(), arena.path(at));
            }
        }
        layer = next.into_iter().collect();
        layer.sort_unstable_by_key(|&(_, at)| at);
        if layer.is_empty() {
            break;
        }
    }
    (best, states)
}

fn beam_loops(search: &LoopSearch, max_len: usize, width: usize, seed: u64) -> Found {
    let d = search.d;
    let g = &d.group;
    let back = d.weighted_distances(&search.steps);
    let h = |p: usize| back[g.inv(p)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arena = Arena::default();
    let mut layer = vec![(LoopState::start(g.identity()), Arena::ROOT)];
    let mut best = None;
    let mut states = 0;
    for len in 1..=max_len {
        let mut seen = HashSet::new();
        let mut cand: Vec<(i64, u64, LoopState, u32)> = Vec::new();
        for (st, at) in &layer {
            for &s in &search.steps {
                if let Some(ns) = search.push(st, s) {
                    if seen.insert(ns) {
                        let f = ns.sum.abs().saturating_add(h(ns.product as usize));
                        cand.push((f, rng.gen(), ns, arena.push(*at, s)));
                    }
                }
            }
        }
        states += cand.len();
        for (_, _, st, at) in &cand {
            if search.closes(st, || arena.path(*at), len) {
                better(&mut best, st.sum.abs(), arena.path(*at));
            }
        }
        cand.sort_unstable_by_key(|c| (c.0, c.1));
        let mut per = vec![0usize; d.order()];
        layer = cand
            .into_iter()
            .filter(|c| {
                per[c.2.product as usize] += 1;
                per[c.2.product as usize] <= width
            })
            .map(|c| (c.2, c.3))
            .collect();
        if layer.is_empty() {
            break;
        }
    }
    (best, states)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationReport {
    pub checked: usize,
    pub violations: usize,
    pub exact: usize,
    pub worst: Option<Vec<usize>>,
    #[serde(with = "serde_q")]
    pub worst_distance: Q,
}

/// Shortest-step paths back to the identity over the `N(λ)` Cayley graph.
fn return_paths(d: &PseudometricTable, steps: &[usize]) -> Vec<Option<(usize, usize)>> {
    // parent[x] = (previous element, step) on a shortest path from the identity
    let g = &d.group;
    let mut parent = vec![None; d.order()];
    let mut seen = Subset::from_indices(d.order(), [g.identity()]);
    let mut q = VecDeque::from([g.identity()]);
    while let Some(x) = q.pop_front() {
        for &s in steps {
            let y = g.mul(x, s);
            if seen.insert(y) {
                parent[y] = Some((x, s));
                q.push_back(y);
            }
        }
    }
    parent
}

fn path_to(parent: &[Option<(usize, usize)>], target: usize) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    let mut x = target;
    while let Some((p, s)) = parent[x] {
        out.push(s);
        x = p;
    }
    out.reverse();
    Some(out)
}

/// Sample identity-product λ-sequences (random walk, closed by a shortest
/// path) and check `t ∈ αℤ + I(α/200)`.
pub fn loop_quantization_check(ctx: &SignContext, lambda: Q, alpha: Q, trials: usize, seed: u64) -> Result<QuantizationReport> {
    let d = ctx.d;
    if !ctx.gamma.is_zero() && lambda <= ctx.gamma * 100_000 {
        return Err(Error::pre("λ must exceed 10⁵γ"));
    }
    let g = &d.group;
    let steps = d.ball(lambda).indices();
    let n = d.order() as i64;
    let max_len = (4 * n / steps.len() as i64) as usize;
    let parent = return_paths(d, &steps);
    let depth = |x: usize| path_to(&parent, x).map(|p| p.len()).unwrap_or(usize::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = alpha / 200;
    let mut rep = QuantizationReport { checked: 0, violations: 0, exact: 0, worst: None, worst_distance: Q::zero() };
    for _ in 0..trials {
        let walk_len = rng.gen_range(0..=max_len);
        let mut seq = Vec::new();
        let mut p = g.identity();
        for _ in 0..walk_len {
            let s = *steps.choose(&mut rng).unwrap();
            let np = g.mul(p, s);
            if seq.len() + 1 + depth(g.inv(np)) > max_len {
                break;
            }
            seq.push(s);
            p = np;
        }
        let Some(back) = path_to(&parent, g.inv(p)) else { continue };
        seq.extend(back);
        debug_assert_eq!(seq.iter().fold(g.identity(), |a, &x| g.mul(a, x)), g.identity());
        let t = total_weight(ctx, &seq)?;
        let dist = dist_to_lattice(t, alpha);
        rep.checked += 1;
        if dist.is_zero() {
            rep.exact += 1;
        }
        if dist > tol {
            rep.violations += 1;
        }
        if dist > rep.worst_distance || rep.worst.is_none() {
            rep.worst_distance = dist.max(rep.worst_distance);
            rep.worst = Some(seq);
        }
    }
    Ok(rep)
}

/// Exhaustive version over all identity-product λ-sequences of length
/// `≤ 4/μ(N(λ))`: returns the largest distance of `t` from `αℤ`.
pub fn quantization_exhaustive(ctx: &SignContext, lambda: Q, alpha: Q) -> Result<Q> {
    let d = ctx.d;
    let g = &d.group;
    let steps = d.ball(lambda).indices();
    let n = d.order() as i64;
    let max_len = (4 * n / steps.len() as i64) as usize;
    let signed: Vec<i64> = steps.iter().map(|&s| ctx.sign(ctx.g0, s).map(|v| v as i64 * d.nn(s))).collect::<Result<_>>()?;
    let mut layer: HashSet<(usize, i64)> = HashSet::from([(g.identity(), 0)]);
    let mut worst = Q::zero();
    for _ in 1..=max_len {
        let mut next = HashSet::new();
        for &(p, s) in &layer {
            for (k, &x) in steps.iter().enumerate() {
                next.insert((g.mul(p, x), s + signed[k]));
            }
        }
        for &(p, s) in &next {
            if p == g.identity() {
                worst = worst.max(dist_to_lattice(Q::new(s.abs(), d.denom), alpha));
            }
        }
        layer = next;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_cyclic, make_s3};

    fn arc_metric(n: usize, len: usize) -> PseudometricTable {
        let g = make_cyclic(n);
        pseudometric_from_set(&g, &Subset::from_indices(n, 0..len), Side::Left).unwrap()
    }

    fn circ(n: usize, g: usize) -> usize {
        g.min(n - g)
    }

    #[test]
    fn arc_norms_and_balls() {
        let d = arc_metric(360, 40);
        for g in 0..360 {
            assert_eq!(d.norm(g), Q::new(circ(360, g).min(40) as i64, 360));
        }
        assert_eq!(d.ball(Q::new(5, 360)).len(), 11);
        assert_eq!(d.ball(d.rho()).len(), 360);
        let full = pseudometric_from_set(&make_cyclic(12), &Subset::full(12), Side::Left).unwrap();
        assert!((0..12).all(|g| full.nn(g) == 0));
        assert!(verify_pseudometric(&d).all_pass());
    }

    #[test]
    fn corrupted_table_fails_triangle() {
        let mut d = arc_metric(36, 8);
        d.corrupt(0, 10, 35);
        let rep = verify_pseudometric(&d);
        assert!(!rep.triangle);
        let (a, b, c) = rep.witness.unwrap();
        assert!(d.dn(a, c) > d.dn(a, b) + d.dn(b, c) || !rep.symmetric || !rep.left_invariant);
    }

    #[test]
    fn linearity_and_monotonicity() {
        let d = arc_metric(360, 40);
        assert!(gamma_linearity(&d, Q::zero()).holds);
        assert!(gamma_monotonicity(&d, Q::zero()).holds);
        let two = pseudometric_from_set(
            &make_cyclic(360),
            &Subset::from_indices(360, (0..20).chain(50..60)),
            Side::Left,
        )
        .unwrap();
        let rep = gamma_linearity(&two, Q::new(1, 360));
        assert!(!rep.holds && rep.worst.is_some());
        let zero = pseudometric_from_set(&make_cyclic(20), &Subset::full(20), Side::Left).unwrap();
        assert!(gamma_linearity(&zero, Q::zero()).holds);
        let pm = path_monotone_check(&zero, Q::zero());
        assert!(pm.holds && pm.path == 0 && pm.small > 0);
        let pm = path_monotone_check(&d, Q::zero());
        assert!(pm.holds && pm.monotone_verified == Some(true));
    }

    #[test]
    fn signs_and_weights() {
        let d = arc_metric(360, 40);
        let ctx = SignContext::new(&d, Q::zero()).unwrap();
        assert_eq!(ctx.g0, 1);
        assert_eq!(ctx.sign(3, 5).unwrap(), 1);
        assert_eq!(ctx.sign(3, 355).unwrap(), -1);
        assert_eq!(ctx.sign(0, 5).unwrap(), 0);
        assert_eq!(total_weight(&ctx, &[3, 5, 358]).unwrap(), Q::new(6, 360));
        assert_eq!(total_weight(&ctx, &[7]).unwrap(), Q::new(7, 360));
        assert_eq!(total_weight(&ctx, &[7, 353]).unwrap(), Q::zero());
    }

    #[test]
    fn irreducibility() {
        let d = arc_metric(360, 40);
        let l = Q::new(2, 360);
        assert!(is_irreducible(&d, l, &[2, 2, 2]));
        assert!(!is_irreducible(&d, l, &[2, 358]));
        assert!(is_irreducible(&d, l, &[2]));
        let d = arc_metric(360, 160);
        let ctx = SignContext::new(&d, Q::zero()).unwrap();
        let c = irreducible_concatenation(&ctx, Q::new(3, 360), &[2, 358, 3]).unwrap();
        assert_eq!(c.reduced, vec![3]);
        assert_eq!(c.drift, Q::zero());
        let c = irreducible_concatenation(&ctx, Q::new(3, 360), &[3, 3, 3]).unwrap();
        assert_eq!(c.reduced, vec![3, 3, 3]);
    }

    #[test]
    fn ball_growth() {
        let d = arc_metric(360, 160);
        let b = ball_growth_check(&d, Q::new(5, 360), Q::zero());
        assert!(!b.skipped && b.holds);
        assert_eq!((b.n_lambda, b.n_4lambda), (11, 41));
        assert!(ball_growth_check(&d, d.rho() / 4, Q::zero()).skipped);
    }

    #[test]
    fn alpha_small_exhaustive() {
        let d = arc_metric(36, 16);
        let ctx = SignContext::new(&d, Q::zero()).unwrap();
        let r = alpha_lambda(&ctx, Q::new(1, 36), AlphaMode::Exhaustive, 64, 0).unwrap();
        assert_eq!(r.alpha, Q::from_integer(1));
        assert_eq!(r.witness.entries.len(), 36);
        assert!(r.lower <= r.alpha && r.alpha <= r.upper);
        assert_eq!(quantization_exhaustive(&ctx, Q::new(1, 36), r.alpha).unwrap(), Q::zero());
    }

    #[test]
    fn alpha_beam_arc() {
        let d = arc_metric(360, 160);
        let ctx = SignContext::new(&d, Q::zero()).unwrap();
        let r = alpha_lambda(&ctx, Q::new(5, 360), AlphaMode::Auto, 64, 7).unwrap();
        assert!(!r.exhaustive);
        assert_eq!(r.alpha, Q::from_integer(1));
        assert_eq!((r.lower, r.upper), (Q::new(5, 164), Q::new(20, 11)));
        assert_eq!(r.max_len, 130);
        assert!(r.witness.irreducible && r.witness.in_ball);
        let q = loop_quantization_check(&ctx, Q::new(5, 360), r.alpha, 200, 3).unwrap();
        assert_eq!(q.violations, 0);
        assert_eq!(q.exact, q.checked);
    }

    #[test]
    fn s3_right_invariance_depends_on_the_set() {
        let s3 = make_s3();
        let normal = pseudometric_from_set(&s3, &Subset::from_indices(6, [0, 1, 2]), Side::Left).unwrap();
        assert!(verify_pseudometric(&normal).right_invariant);
    }
}
