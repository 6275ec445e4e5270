//! Property suites behind the acceptance criteria and `kemplab suite`.
//!
//! Each suite counts checks and violations; exact quantities worth keeping
//! go into `facts` as strings. Timing is left to the caller.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{deficit, distinct_cyclic_subgroups, nonexpander_probe, submodular_check};
use crate::group::{cyclic_subgroup, make_cyclic, make_product, make_s3, make_torus, GroupModel, Subgroup};
use crate::hom::{inverse_pipeline, kernel_norm_check, PipelineConfig};
use crate::inverse1d::{covering_arc, torus_inverse, TorusConfig, TorusOutcome};
use crate::plant::{move_cells, plant, random_noise};
use crate::pseudometric::{
    alpha_lambda, ball_growth_check, irreducible_concatenation, is_cyclically_irreducible, is_irreducible,
    loop_quantization_check, pseudometric_from_set, quantization_exhaustive, total_weight, AlphaMode,
    PseudometricTable, SignContext,
};
use crate::quotient::{coset_map, spillover_bound, transfer};
use crate::rational::fmt_q;
use crate::subset::Subset;
use crate::sumset::{fast_product_set, kernel_for, product_set, Side};
use crate::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    CauchyDavenport,
    Vosper,
    Submodularity,
    Spillover,
    Transfer,
    SignAlgebra,
    Sequences,
    BallGrowth,
    Alpha,
    Pipeline,
    KernelEquivalence,
    Probe,
    TorusSoundness,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::CauchyDavenport,
        Suite::Vosper,
        Suite::Submodularity,
        Suite::Spillover,
        Suite::Transfer,
        Suite::SignAlgebra,
        Suite::Sequences,
        Suite::BallGrowth,
        Suite::Alpha,
        Suite::Pipeline,
        Suite::KernelEquivalence,
        Suite::Probe,
        Suite::TorusSoundness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::CauchyDavenport => "cauchy-davenport",
            Suite::Vosper => "vosper",
            Suite::Submodularity => "submodularity",
            Suite::Spillover => "spillover",
            Suite::Transfer => "transfer",
            Suite::SignAlgebra => "sign-algebra",
            Suite::Sequences => "sequences",
            Suite::BallGrowth => "ball-growth",
            Suite::Alpha => "alpha",
            Suite::Pipeline => "pipeline",
            Suite::KernelEquivalence => "kernel-equivalence",
            Suite::Probe => "probe",
            Suite::TorusSoundness => "torus-soundness",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::OutOfRange(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub seed: u64,
    pub checked: u64,
    pub violations: u64,
    pub pass: bool,
    pub facts: BTreeMap<String, String>,
    pub first_violation: Option<String>,
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} checks, {} violations",
            self.suite,
            if self.pass { "PASS" } else { "FAIL" },
            self.checked,
            self.violations
        )?;
        if let Some(v) = &self.first_violation {
            write!(f, " (first: {v})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
struct Tally {
    checked: u64,
    violations: u64,
    first: Option<String>,
    facts: BTreeMap<String, String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    /// An error counts as a violation.
    fn check_res<T>(&mut self, r: Result<T>, ok: impl FnOnce(&T) -> bool, what: impl FnOnce() -> String) -> Option<T> {
        match r {
            Ok(v) => {
                let good = ok(&v);
                self.check(good, what);
                Some(v)
            }
            Err(e) => {
                self.check(false, || format!("{}: {e}", what()));
                None
            }
        }
    }

    fn fact(&mut self, k: &str, v: impl ToString) {
        self.facts.insert(k.to_string(), v.to_string());
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.checked += o.checked;
        self.violations += o.violations;
        if self.first.is_none() {
            self.first = o.first;
        }
        self.facts.extend(o.facts);
        self
    }

    fn finish(self, suite: Suite, seed: u64) -> SuiteOutcome {
        SuiteOutcome {
            suite,
            seed,
            checked: self.checked,
            violations: self.violations,
            pass: self.violations == 0 && self.checked > 0,
            facts: self.facts,
            first_violation: self.first,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Overrides the number of random instances (or the probe budget).
    pub instances: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 2024, instances: None }
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let n = |default: usize| cfg.instances.unwrap_or(default);
    let seed = cfg.seed;
    let t = match suite {
        Suite::CauchyDavenport => cauchy_davenport(seed),
        Suite::Vosper => vosper(),
        Suite::Submodularity => submodularity(n(10_000), seed)?,
        Suite::Spillover => spillover(n(10_000), seed)?,
        Suite::Transfer => transfer_suite(n(1_000), seed)?,
        Suite::SignAlgebra => sign_algebra()?,
        Suite::Sequences => sequences(n(1_000), seed)?,
        Suite::BallGrowth => ball_growth()?,
        Suite::Alpha => alpha_suite(n(1_000), seed)?,
        Suite::Pipeline => pipeline_suite(seed)?,
        Suite::KernelEquivalence => kernel_equivalence(n(1_000), seed)?,
        Suite::Probe => probe_suite(n(40_000), seed)?,
        Suite::TorusSoundness => torus_soundness(n(2_000), seed)?,
    };
    Ok(t.finish(suite, seed))
}

fn random_subset<R: Rng>(n: usize, p: f64, rng: &mut R) -> Subset {
    Subset::from_fn(n, |_| rng.gen_bool(p))
}

fn q(x: Q) -> String {
    fmt_q(&x)
}

/// Z_13 sets as 13-bit masks.
fn rot13(x: u32, k: u32) -> u32 {
    ((x << k) | (x >> (13 - k))) & 0x1fff
}

fn sum13(a: u32, b: u32) -> u32 {
    let (mut s, mut m) = (0, a);
    while m != 0 {
        s |= rot13(b, m.trailing_zeros());
        m &= m - 1;
    }
    s
}

fn mask13(s: &Subset) -> u32 {
    s.iter().fold(0, |m, i| m | 1 << i)
}

/// Both sets contain 0 (translation) and `a ≤ b` as masks (commutativity).
fn z13_pairs() -> impl ParallelIterator<Item = (u32, u32)> {
    (1u32..1 << 13).into_par_iter().step_by(2).flat_map_iter(|a| (a..1 << 13).step_by(2).map(move |b| (a, b)))
}

fn cauchy_davenport(seed: u64) -> Tally {
    let mut t = z13_pairs()
        .fold(Tally::default, |mut t, (a, b)| {
            let (ka, kb) = (a.count_ones(), b.count_ones());
            let s = sum13(a, b).count_ones();
            t.check(s >= (ka + kb - 1).min(13), || format!("A = {a:#x}, B = {b:#x}, |A+B| = {s}"));
            t
        })
        .reduce(Tally::default, Tally::merge);
    // The bit-rotation sumset against the group-table product set.
    let g = make_cyclic(13);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1_000 {
        let a = random_subset(13, rng.gen_range(0.05..0.9), &mut rng);
        let b = random_subset(13, rng.gen_range(0.05..0.9), &mut rng);
        let naive = mask13(&product_set(&g, &a, &b).unwrap());
        let fast = if a.is_empty() || b.is_empty() { 0 } else { sum13(mask13(&a), mask13(&b)) };
        t.check(naive == fast, || format!("oracle mismatch on {:?} + {:?}", a.indices(), b.indices()));
    }
    t
}

/// Differences `d ∈ 1..=6` for which the mask is an arithmetic progression.
fn ap_differences(m: u32) -> Vec<u32> {
    let k = m.count_ones();
    (1..=6).filter(|&d| (m | rot13(m, d)).count_ones() == k + 1).collect()
}

fn vosper() -> Tally {
    let cfg = TorusConfig { tau: Q::from_integer(13), size_cap: Q::from_integer(1) };
    let cases: Vec<(u32, u32)> = z13_pairs()
        .filter(|&(a, b)| {
            let (ka, kb) = (a.count_ones(), b.count_ones());
            let s = sum13(a, b).count_ones();
            ka > 1 && kb > 1 && s == ka + kb - 1 && s <= 11
        })
        .map(|(a, b)| if a.count_ones() >= b.count_ones() { (a, b) } else { (b, a) })
        .collect();
    let mut t = cases
        .par_iter()
        .fold(Tally::default, |mut t, &(am, bm)| {
            let a = Subset::from_fn(13, |i| am >> i & 1 == 1);
            let b = Subset::from_fn(13, |i| bm >> i & 1 == 1);
            let what = || format!("A = {:?}, B = {:?}", a.indices(), b.indices());
            let shared = ap_differences(am).into_iter().any(|d| ap_differences(bm).contains(&d));
            t.check(shared, || format!("no common progression: {}", what()));
            let r = torus_inverse(13, &a, &b, &cfg);
            t.check_res(
                r,
                |o| match *o {
                    TorusOutcome::Structured { dilation: c, len_a, len_b, .. } => {
                        let img = |s: &Subset| s.iter().map(|x| x * c % 13).collect::<Vec<_>>();
                        covering_arc(13, &img(&a)).1 == a.len()
                            && covering_arc(13, &img(&b)).1 == b.len()
                            && len_a == a.len()
                            && len_b == b.len()
                    }
                    TorusOutcome::Escape => false,
                },
                what,
            );
            t
        })
        .reduce(Tally::default, Tally::merge);
    t.fact("equality_cases", cases.len());
    t
}

fn submodularity(count: usize, seed: u64) -> Result<Tally> {
    let g = make_cyclic(60);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    let m = |a: &Subset, b: &Subset| product_set(&g, a, b).map(|s| s.measure());
    for i in 0..count {
        let a = random_subset(60, rng.gen_range(0.02..0.5), &mut rng);
        let b1 = random_subset(60, rng.gen_range(0.02..0.5), &mut rng);
        let b2 = random_subset(60, rng.gen_range(0.02..0.5), &mut rng);
        let r = submodular_check(&g, &a, &b1, &b2)?;
        let naive = (m(&a, &b1)?, m(&a, &b2)?, m(&a, &b1.intersection(&b2))?, m(&a, &b1.union(&b2))?);
        let agree = naive == (r.ab1, r.ab2, r.ab_cap, r.ab_cup);
        t.check(r.holds && agree, || format!("instance {i}: {r:?}"));
    }
    Ok(t)
}

/// Random pair over a random subgroup from `subs`, with projections
/// covering less than the whole quotient.
fn spillover_instance(g: &GroupModel, subs: &[Subgroup], rng: &mut ChaCha8Rng) -> Result<(Subgroup, Subset, Subset)> {
    let h = subs.choose(rng).unwrap().clone();
    let map = coset_map(g, &h, Side::Left)?;
    let c = map.count;
    let mut cosets: Vec<usize> = (0..c).collect();
    cosets.shuffle(rng);
    let ka = rng.gen_range(1..c - 1);
    let kb = rng.gen_range(1..c - ka);
    let pick = |chosen: &[usize], rng: &mut ChaCha8Rng| {
        let p = rng.gen_range(0.1..1.0);
        let mut s = Subset::empty(g.order());
        for &k in chosen {
            let fiber: Vec<usize> = (0..g.order()).filter(|&x| map.proj[x] == k).collect();
            s.insert(*fiber.choose(rng).unwrap());
            for &x in &fiber {
                if rng.gen_bool(p) {
                    s.insert(x);
                }
            }
        }
        s
    };
    let a = pick(&cosets[..ka], rng);
    let b = pick(&cosets[c - kb..], rng);
    Ok((h, a, b))
}

/// Runs on the cell-lifted model, where the coordinate subgroups of
/// Z_12×Z_4 stand for circle factors of the 2-torus. Raw counting measure
/// over the other cyclic subgroups is tallied as facts only.
fn spillover(count: usize, seed: u64) -> Result<Tally> {
    let g = make_torus(&[12, 4])?;
    let coord = vec![cyclic_subgroup(&g, g.from_coords(&[1, 0]).unwrap()), cyclic_subgroup(&g, g.from_coords(&[0, 1]).unwrap())];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    let (mut empty_upper, mut bad_empty, mut bad_full) = (0, 0, 0);
    for i in 0..count {
        let (h, a, b) = spillover_instance(&g, &coord, &mut rng)?;
        let r = spillover_bound(&g, &h, &a, &b)?;
        let naive = product_set(&g, &a, &b)?.measure();
        empty_upper += !r.upper_levels_nonempty as usize;
        if !r.holds {
            if r.upper_levels_nonempty {
                bad_full += 1;
            } else {
                bad_empty += 1;
            }
        }
        t.check(r.lifted && r.holds && naive == r.lhs_raw, || {
            format!("instance {i}: H of order {}, A = {:?}, B = {:?}, {r:?}", h.order(), a.indices(), b.indices())
        });
    }
    t.fact("instances_with_empty_upper_level", empty_upper);
    t.fact("violations_with_empty_upper_level", bad_empty);
    t.fact("violations_with_both_upper_levels", bad_full);
    let raw: Vec<Subgroup> =
        distinct_cyclic_subgroups(&g).into_iter().filter(|h| h.order() > 1 && coord.iter().all(|c| c.members != h.members)).collect();
    let mut raw_bad = 0;
    for _ in 0..count {
        let (h, a, b) = spillover_instance(&g, &raw, &mut rng)?;
        raw_bad += !spillover_bound(&g, &h, &a, &b)?.holds as usize;
    }
    t.fact("raw_model_instances", count);
    t.fact("raw_model_violations", raw_bad);
    Ok(t)
}

fn transfer_suite(count: usize, seed: u64) -> Result<Tally> {
    let g = make_torus(&[48, 5])?;
    let h = cyclic_subgroup(&g, g.from_coords(&[0, 1]).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    let (mut worst_gap, mut worst_qd, mut attempts) = (Q::zero(), Q::zero(), 0usize);
    let limit = Q::new(1, 50);
    while (t.checked as usize) < count {
        attempts += 1;
        if attempts > 50 * count.max(1) {
            return Err(Error::Infeasible("too few perturbed pairs with 0 < δ ≤ 1/50".into()));
        }
        let (la, lb) = (rng.gen_range(3..=20), rng.gen_range(3..=20));
        let p = plant(&[48, 5], la, lb)?;
        let a = random_noise(&g, &p.chi, &p.a, &p.arc_a, rng.gen_range(0..=3), rng.gen_range(0..=1), &mut rng);
        let b = random_noise(&g, &p.chi, &p.b, &p.arc_b, rng.gen_range(0..=3), rng.gen_range(0..=1), &mut rng);
        let delta = deficit(&g, &a, &b)?.excess;
        if delta <= Q::zero() || delta > limit {
            continue;
        }
        let (r, _) = transfer(&g, &h, &a, &b, delta)?;
        worst_gap = worst_gap.max(r.gap_a.max(r.gap_b) / delta);
        worst_qd = worst_qd.max(r.quotient_deficit / delta);
        t.check(r.strict, || format!("arcs {la}/{lb}, δ = {delta}: {r:?}"));
    }
    t.fact("attempts", attempts);
    t.fact("max_gap_over_delta", q(worst_gap));
    t.fact("max_quotient_deficit_over_delta", q(worst_qd));
    Ok(t)
}

pub fn arc_metric(n: usize, len: usize) -> Result<PseudometricTable> {
    pseudometric_from_set(&make_cyclic(n), &Subset::from_indices(n, 0..len), Side::Left)
}

fn within(x: Q, centre: Q, w: Q) -> bool {
    (x - centre).abs() <= w
}

fn sign_algebra() -> Result<Tally> {
    let d = arc_metric(360, 160)?;
    let gamma = Q::zero();
    let ctx = SignContext::new(&d, gamma)?;
    let g = d.group();
    let n = d.order();
    let valid = SignContext::references(&d, gamma).indices();
    let mut t = Tally::default();
    // s on valid × valid; 2 marks an undefined sign
    let mut s = vec![2i8; n * n];
    for &x in &valid {
        for &y in &valid {
            if let Some(v) = t.check_res(ctx.sign(x, y), |_| true, || format!("s({x}, {y})")) {
                s[x * n + y] = v;
            }
        }
    }
    let sg = |x: usize, y: usize| s[x * n + y];
    for &x in &valid {
        let xi = g.inv(x);
        t.check(sg(x, xi) == -1 && sg(x, x) == 1, || format!("(1) at {x}"));
        for &y in &valid {
            let yi = g.inv(y);
            t.check(sg(x, y) == sg(y, x), || format!("(2) at {x}, {y}"));
            let v = sg(x, y);
            t.check(v == sg(xi, yi) && v == -sg(xi, y) && v == -sg(x, yi), || format!("(3) at {x}, {y}"));
        }
    }
    let inner = |t: &mut Tally, x: usize| {
        for &y in &valid {
            for &z in &valid {
                t.check(sg(x, y) * sg(y, z) * sg(z, x) == 1, || format!("(4) at {x}, {y}, {z}"));
            }
        }
    };
    let t4 = valid.par_iter().fold(Tally::default, |mut t, &x| {
        inner(&mut t, x);
        t
    });
    t = t.merge(t4.reduce(Tally::default, Tally::merge));
    let in_valid = Subset::from_indices(n, valid.iter().copied());
    for &x in &valid {
        for &y in &valid {
            let (xy, yx) = (g.mul(x, y), g.mul(y, x));
            if d.nn(x) > d.nn(y) || !in_valid.contains(xy) || !in_valid.contains(yx) {
                continue;
            }
            for &z in &valid {
                t.check(sg(z, xy) == sg(z, y) && sg(z, yx) == sg(z, y), || format!("(5) at g0 = {z}, {x}, {y}"));
            }
        }
    }
    // Sum estimates on N(ρ/16 − γ).
    let small = d.ball(d.rho() / 16 - gamma).indices();
    let (w5, w22) = (gamma * 5, gamma * 22);
    for &x in &small {
        for &y in &small {
            if d.nn(x) > d.nn(y) {
                continue;
            }
            let sxy = Q::from_integer(ctx.sign(x, y)? as i64);
            let target = sxy * d.norm(x) + d.norm(y);
            let (xy, yx) = (g.mul(x, y), g.mul(y, x));
            t.check(within(d.norm(xy), target, w5) && within(d.norm(yx), target, w5), || {
                format!("sum estimate (1) at {x}, {y}")
            });
            for &z in &valid {
                let c = ContextSigns { ctx: &ctx, g0: z };
                let rhs = c.s(x)? * d.norm(x) + c.s(y)? * d.norm(y);
                let ok = within(c.s(xy)? * d.norm(xy), rhs, w22) && within(c.s(yx)? * d.norm(xy), rhs, w22);
                t.check(ok, || format!("sum estimate (2) at g0 = {z}, {x}, {y}"));
            }
        }
    }
    t.fact("valid_elements", valid.len());
    Ok(t)
}

struct ContextSigns<'a> {
    ctx: &'a SignContext<'a>,
    g0: usize,
}

impl ContextSigns<'_> {
    fn s(&self, x: usize) -> Result<Q> {
        Ok(Q::from_integer(self.ctx.sign(self.g0, x)? as i64))
    }
}

/// Random irreducible λ-sequence of length `n`, grown left to right.
fn sample_irreducible<R: Rng>(d: &PseudometricTable, lambda: Q, steps: &[usize], n: usize, rng: &mut R) -> Option<Vec<usize>> {
    'restart: for _ in 0..20 {
        let mut seq: Vec<usize> = Vec::with_capacity(n);
        while seq.len() < n {
            let ok = (0..50).find_map(|_| {
                let x = *steps.choose(rng).unwrap();
                seq.push(x);
                let good = is_irreducible(d, lambda, &seq[seq.len().saturating_sub(4)..]);
                seq.pop();
                good.then_some(x)
            });
            match ok {
                Some(x) => seq.push(x),
                None => continue 'restart,
            }
        }
        return Some(seq);
    }
    None
}

fn sequences(count: usize, seed: u64) -> Result<Tally> {
    let d = arc_metric(360, 160)?;
    let gamma = Q::zero();
    let refs = SignContext::references(&d, gamma).indices();
    let ctx = SignContext::new(&d, gamma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    let top = (d.rho() / 16 * 360).to_integer();
    let mut lengths = 0usize;
    for i in 0..count {
        let lambda = Q::new(rng.gen_range(1..=top), 360);
        let steps = d.ball(lambda).indices();
        let n = rng.gen_range(2..=40);
        let Some(seq) = sample_irreducible(&d, lambda, &steps, n, &mut rng) else {
            t.check(false, || format!("no irreducible sequence of length {n} at λ = {lambda}"));
            continue;
        };
        lengths += seq.len();
        let tw = total_weight(&ctx, &seq)?;
        let nl = lambda * n as i64;
        t.check(is_irreducible(&d, lambda, &seq), || format!("sample {i} not irreducible"));
        t.check(nl / 4 < tw && tw <= nl, || format!("sample {i}: t = {tw} outside ({}, {nl}] at λ = {lambda}", nl / 4));
        let other = SignContext::with_reference(&d, gamma, *refs.choose(&mut rng).unwrap())?;
        t.check(total_weight(&other, &seq)? == tw, || format!("sample {i}: t depends on the reference"));
        // A random walk in N(λ), then merged down to an irreducible one.
        let walk: Vec<usize> = (0..n).map(|_| *steps.choose(&mut rng).unwrap()).collect();
        let c = irreducible_concatenation(&ctx, lambda, &walk);
        t.check_res(c, |c| c.drift.is_zero() && is_irreducible(&d, lambda, &c.reduced), || format!("concatenation {i}"));
    }
    t.fact("mean_length", q(Q::new(lengths as i64, count.max(1) as i64)));
    Ok(t)
}

fn ball_growth() -> Result<Tally> {
    let d = arc_metric(360, 160)?;
    let mut t = Tally::default();
    let top = (d.rho() / 16 * 360).to_integer();
    for k in 1..=top {
        let r = ball_growth_check(&d, Q::new(k, 360), Q::zero());
        t.check(!r.skipped && r.holds, || format!("λ = {k}/360: {r:?}"));
        if k == 5 {
            t.fact("n_lambda_5", r.n_lambda);
            t.fact("n_4lambda_5", r.n_4lambda);
        }
    }
    Ok(t)
}

fn alpha_suite(trials: usize, seed: u64) -> Result<Tally> {
    let mut t = Tally::default();
    let one = Q::from_integer(1);
    let small = arc_metric(36, 16)?;
    let ctx = SignContext::new(&small, Q::zero())?;
    let lambda = Q::new(1, 36);
    let r = alpha_lambda(&ctx, lambda, AlphaMode::Exhaustive, 0, seed)?;
    let w = &r.witness.entries;
    let wrap = total_weight(&ctx, w)? == one && r.witness.product == 0 && is_cyclically_irreducible(&small, lambda, w);
    t.check(r.alpha == one && r.exhaustive, || format!("Z_36: α = {}", r.alpha));
    t.check(wrap, || format!("Z_36 witness {w:?}"));
    let min_n = Q::from_integer(w.len() as i64) * small.ball(lambda * 4).measure();
    t.check(min_n >= one, || format!("Z_36 witness shorter than 1/μ(N(4λ)): {}", w.len()));
    let worst = quantization_exhaustive(&ctx, lambda, r.alpha)?;
    t.check(worst.is_zero(), || format!("Z_36 loop off the lattice by {worst}"));
    t.fact("z36_witness_len", w.len());

    let d = arc_metric(360, 160)?;
    let ctx = SignContext::new(&d, Q::zero())?;
    let lambda = Q::new(5, 360);
    let r = alpha_lambda(&ctx, lambda, AlphaMode::Beam, 64, seed)?;
    let lower = lambda / (d.ball(lambda * 4).measure() * 4);
    let upper = lambda * 4 / d.ball(lambda).measure();
    t.check(r.alpha == one, || format!("Z_360: α = {}", r.alpha));
    t.check(lower <= r.alpha && r.alpha <= upper && r.lower == lower && r.upper == upper, || {
        format!("Z_360 bracket [{}, {}] vs [{lower}, {upper}]", r.lower, r.upper)
    });
    let ww = &r.witness.entries;
    t.check(
        r.witness.product == 0 && is_cyclically_irreducible(&d, lambda, ww) && total_weight(&ctx, ww)? == r.alpha,
        || "Z_360 witness is not an irreducible identity loop of weight α".into(),
    );
    t.fact("z360_lower", q(lower));
    t.fact("z360_upper", q(upper));
    t.fact("z360_witness_len", ww.len());
    let rep = loop_quantization_check(&ctx, lambda, r.alpha, trials, seed)?;
    t.check(rep.checked == trials && rep.exact == rep.checked && rep.violations == 0, || {
        format!("quantization: {} of {} exact", rep.exact, rep.checked)
    });
    t.fact("loops_sampled", rep.checked);
    Ok(t)
}

fn pipeline_suite(seed: u64) -> Result<Tally> {
    let p = plant(&[48, 5], 10, 12)?;
    let cfg = PipelineConfig { delta: Q::new(1, 2), seed, ..Default::default() };
    let mut t = Tally::default();
    let exact = inverse_pipeline(&p.group, &p.a, &p.b, &cfg)?;
    t.check(exact.character == p.chi && exact.arc_a == p.arc_a && exact.arc_b == p.arc_b, || {
        format!("exact pair: {:?} {:?} {:?}", exact.character, exact.arc_a, exact.arc_b)
    });
    t.check(exact.gap_a.is_zero() && exact.gap_b.is_zero(), || "exact pair has nonzero gaps".into());
    let mut prev = Q::zero();
    for k in 1..=4 {
        let a = move_cells(&p.group, &p.chi, &p.a, &p.arc_a, k)?;
        let what = || format!("noise {k}");
        let Some(f) = t.check_res(inverse_pipeline(&p.group, &a, &p.b, &cfg), |f| f.character == p.chi, what) else {
            continue;
        };
        let eps = f.gap_a.max(f.gap_b);
        let dm = f.diagnostics.delta_measured;
        t.check(eps <= dm * 50, || format!("noise {k}: ε = {eps} > 50·{dm}"));
        t.check(eps >= prev, || format!("noise {k}: ε = {eps} dropped below {prev}"));
        t.check(f.diagnostics.kernel.holds, || format!("noise {k}: kernel witness {:?}", f.diagnostics.kernel.witness));
        prev = eps;
        t.fact(&format!("noise{k}_epsilon"), q(eps));
        t.fact(&format!("noise{k}_delta"), q(dm));
    }
    // Independent kernel check with the planted character on the raw metric.
    let d = pseudometric_from_set(&p.group, &p.a, Side::Left)?;
    let kc = kernel_norm_check(&d, &p.chi, Q::new(1, 48));
    t.check(kc.holds, || format!("planted kernel witness {:?}", kc.witness));
    Ok(t)
}

fn kernel_equivalence(count: usize, seed: u64) -> Result<Tally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    let s3 = make_s3();
    for i in 0..count {
        let (g, p) = match i % 6 {
            0 => (make_cyclic(rng.gen_range(1..=300)), rng.gen_range(0.01..0.5)),
            1 => (make_cyclic(rng.gen_range(4096..=6000)), rng.gen_range(0.002..0.03)),
            2 => {
                let dims: Vec<usize> = (0..rng.gen_range(2..=3)).map(|_| rng.gen_range(2..=12)).collect();
                (make_torus(&dims)?, rng.gen_range(0.01..0.5))
            }
            3 => (make_torus(&vec![2; rng.gen_range(2..=9)])?, rng.gen_range(0.01..0.5)),
            4 => (make_product(&s3, &make_cyclic(rng.gen_range(1..=20)))?, rng.gen_range(0.01..0.5)),
            _ => (make_product(&s3, &s3)?, rng.gen_range(0.01..0.5)),
        };
        let a = random_subset(g.order(), p, &mut rng);
        let b = random_subset(g.order(), p, &mut rng);
        *kinds.entry(format!("{:?}", kernel_for(&g))).or_default() += 1;
        let fast = fast_product_set(&g, &a, &b)?;
        let naive = product_set(&g, &a, &b)?;
        t.check(fast.words() == naive.words(), || format!("instance {i} on {}", g.label()));
    }
    for (k, v) in kinds {
        t.fact(&format!("kernel_{}", k.to_lowercase()), v);
    }
    Ok(t)
}

fn probe_suite(budget: usize, seed: u64) -> Result<Tally> {
    let mut t = Tally::default();
    let quarter = Q::new(1, 4);
    for (name, g) in [("z60xz60", make_torus(&[60, 60])?), ("s3xz20", make_product(&make_s3(), &make_cyclic(20))?)] {
        let r = nonexpander_probe(&g, Q::from_integer(2), budget, seed)?;
        t.check(r.best_measure >= quarter, || format!("{name}: 2-nonexpander of measure {}", r.best_measure));
        t.fact(&format!("{name}_best_measure"), q(r.best_measure));
        t.fact(&format!("{name}_best_ratio"), q(r.best_max_ratio));
    }
    t.fact("budget", budget);
    Ok(t)
}

fn torus_soundness(count: usize, seed: u64) -> Result<Tally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = TorusConfig { tau: Q::from_integer(4), size_cap: Q::from_integer(1) };
    let mut t = Tally::default();
    let (mut structured, mut escapes, mut unresolved) = (0, 0, 0);
    for i in 0..count {
        let n = *[5usize, 7, 11, 13, 17, 19, 23, 29, 31].choose(&mut rng).unwrap();
        let ka = rng.gen_range(1..=n / 2);
        let kb = rng.gen_range(ka.div_ceil(4).max(1)..=ka);
        // Arc-like sets under a random dilation, sometimes with a stray point.
        let c = rng.gen_range(1..n);
        let start = rng.gen_range(0..n);
        let mut a = Subset::from_indices(n, (0..ka).map(|j| (start + j) * c % n));
        let b = Subset::from_indices(n, (0..kb).map(|j| (start + 2 * j) * c % n));
        if rng.gen_bool(0.3) {
            a.insert(rng.gen_range(0..n));
        }
        if b.len() > a.len() || Q::new(a.len() as i64, 4) > Q::from_integer(b.len() as i64) {
            continue;
        }
        match torus_inverse(n, &a, &b, &cfg) {
            Ok(TorusOutcome::Structured { dilation, start_a, len_a, start_b, len_b }) => {
                structured += 1;
                let inside = |s: &Subset, st: usize, len: usize| s.iter().all(|x| (x * dilation % n + n - st) % n < len);
                t.check(inside(&a, start_a, len_a) && inside(&b, start_b, len_b), || format!("instance {i} on Z_{n}"));
            }
            Ok(TorusOutcome::Escape) => {
                escapes += 1;
                let s = crate::inverse1d::cyclic_sumset(n, &a, &b).len();
                t.check(s >= a.len() + 2 * b.len() || s == n, || format!("instance {i}: escape with |A+B| = {s}"));
            }
            Err(Error::NoStructureFound) => unresolved += 1,
            Err(e) => t.check(false, || format!("instance {i}: {e}")),
        }
    }
    t.fact("structured", structured);
    t.fact("escapes", escapes);
    t.fact("unresolved", unresolved);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn z13_masks() {
        assert_eq!(sum13(0b11, 0b101), 0b1111);
        assert_eq!(rot13(1 << 12, 1), 1);
        assert_eq!(ap_differences(0b1010101), vec![2]);
        assert_eq!(ap_differences(0b111), vec![1]);
    }

    #[test]
    fn small_runs_pass() {
        let cfg = SuiteConfig { seed: 7, instances: Some(50) };
        for s in [Suite::Submodularity, Suite::KernelEquivalence, Suite::TorusSoundness, Suite::BallGrowth] {
            let o = run_suite(s, &cfg).unwrap();
            assert!(o.pass, "{o}");
        }
    }
}
