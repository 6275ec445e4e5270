//! Almost homomorphisms read off a near-linear pseudometric, snapping to an
//! exact character, and the end-to-end inverse pipeline.

use std::collections::VecDeque;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{deficit, distinct_cyclic_subgroups, shrink_to_size, DeficitReport};
use crate::group::{
    cyclic_subgroup, enumerate_characters, generated_subgroup, normality_witness, quotient, Arc, Character,
    GroupModel, Subgroup,
};
use crate::pseudometric::{
    alpha_lambda, alpha_lambda_unchecked, check_lambda_range, gamma_linearity, gamma_monotonicity,
    path_monotone_check, pseudometric_from_set, AlphaMode, PathMonotoneReport, PseudometricTable, SignContext,
};
use crate::quotient::{fit_arc, grid_length, image_measure, structural_control, StructuralReport};
use crate::rational::{circle_norm, modulo, serde_q, serde_q_opt, serde_q_vec};
use crate::subset::Subset;
use crate::sumset::Side;
use crate::Q;

const EXHAUSTIVE_PAIRS: usize = 512;
const SAMPLED_PAIRS: usize = 1 << 18;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostHom {
    #[serde(with = "serde_q")]
    pub alpha: Q,
    /// `values[g] ∈ [0, α)`.
    #[serde(with = "serde_q_vec")]
    pub values: Vec<Q>,
    /// Worst additive defect on the α-circle.
    #[serde(with = "serde_q")]
    pub q: Q,
    pub q_pair: Option<(usize, usize)>,
    pub exhaustive: bool,
    /// Longest canonical decomposition, and the allowed maximum.
    pub depth: usize,
    pub max_len: usize,
    pub clause1: bool,
    pub clause2: bool,
    pub clause3: bool,
    /// Two elements whose values sit more than `α/3` apart.
    pub clause4: Option<(usize, usize)>,
}

impl AlmostHom {
    pub fn all_clauses(&self) -> bool {
        self.clause1 && self.clause2 && self.clause3 && self.clause4.is_some()
    }

    /// Defect of one pair on the α-circle.
    pub fn defect(&self, g: &GroupModel, a: usize, b: usize) -> Q {
        circle_norm((self.values[a] + self.values[b] - self.values[g.mul(a, b)]) / self.alpha) * self.alpha
    }

    /// Recompute `q` over all pairs (small groups) or sampled pairs.
    pub fn measure_defect(&mut self, g: &GroupModel, seed: u64) {
        let n = g.order();
        let exhaustive = n <= EXHAUSTIVE_PAIRS;
        let mut worst = (Q::zero(), None);
        let mut visit = |a: usize, b: usize| {
            let x = self.defect(g, a, b);
            if x > worst.0 {
                worst = (x, Some((a, b)));
            }
        };
        if exhaustive {
            for a in 0..n {
                for b in 0..n {
                    visit(a, b);
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..SAMPLED_PAIRS {
                visit(rng.gen_range(0..n), rng.gen_range(0..n));
            }
        }
        self.exhaustive = exhaustive;
        self.q = worst.0;
        self.q_pair = worst.1;
        self.clause3 = self.q < self.alpha / 200;
    }
}

/// Canonical decompositions: breadth-first over the Cayley graph of `N(λ)`
/// with generators in index order. Shortest words are irreducible, since a
/// window landing in `N(λ)` could be merged into a shorter word.
pub fn almost_hom(ctx: &SignContext, lambda: Q, alpha: Q) -> Result<AlmostHom> {
    check_lambda_range(ctx.d, lambda, ctx.gamma, 44)?;
    almost_hom_unchecked(ctx, lambda, alpha)
}

pub fn almost_hom_unchecked(ctx: &SignContext, lambda: Q, alpha: Q) -> Result<AlmostHom> {
    let d = ctx.d;
    let g = d.group();
    let n = g.order();
    if !alpha.is_positive() {
        return Err(Error::pre("α must be positive"));
    }
    let steps = d.ball(lambda).indices();
    let mut signed = vec![0i64; n];
    for &s in &steps {
        signed[s] = ctx.signed_units(&[s])?;
    }
    let unreached = i64::MIN;
    let mut units = vec![unreached; n];
    let mut depth = vec![0usize; n];
    units[g.identity()] = 0;
    let mut queue = VecDeque::from([g.identity()]);
    while let Some(x) = queue.pop_front() {
        for &s in &steps {
            let y = g.mul(x, s);
            if units[y] == unreached {
                units[y] = units[x] + signed[s];
                depth[y] = depth[x] + 1;
                queue.push_back(y);
            }
        }
    }
    if let Some(miss) = units.iter().position(|&u| u == unreached) {
        return Err(Error::NotGenerated(format!("{miss} is not a product of elements of N({lambda})")));
    }
    let nl = steps.len();
    let max_len = 4 * n / nl;
    let values: Vec<Q> = units.iter().map(|&u| modulo(Q::new(u, d.denom()), alpha)).collect();
    let depth = depth.into_iter().max().unwrap_or(0);
    let clause4 = (0..n).find_map(|a| {
        let far = (0..n).find(|&b| circle_norm((values[a] - values[b]) / alpha) > Q::new(1, 3))?;
        Some((a, far))
    });
    let mut hom = AlmostHom {
        alpha,
        clause2: values[g.identity()].is_zero(),
        values,
        q: Q::zero(),
        q_pair: None,
        exhaustive: false,
        depth,
        max_len,
        clause1: depth <= max_len,
        clause3: false,
        clause4,
    };
    hom.measure_defect(g, 0);
    Ok(hom)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snap {
    pub character: Character,
    /// Sup distance on the unit circle between `χ/m` and `π/α`.
    #[serde(with = "serde_q")]
    pub distance: Q,
    #[serde(with = "serde_q")]
    pub bound: Q,
}

fn sup_distance(chi: &Character, pi: &AlmostHom) -> Q {
    let m = Q::from_integer(chi.modulus as i64);
    (0..pi.values.len())
        .map(|x| circle_norm(Q::from_integer(chi.eval(x) as i64) / m - pi.values[x] / pi.alpha))
        .max()
        .unwrap_or_else(Q::zero)
}

/// Nearest character into `Z_m` in sup distance; ties go to the smallest
/// image vector, which fixes the sign of the frequency.
pub fn snap_to_character(g: &GroupModel, pi: &AlmostHom, m: usize) -> Result<Snap> {
    if pi.values.len() != g.order() {
        return Err(Error::ParentMismatch { expected: g.order(), got: pi.values.len() });
    }
    let rel = pi.q / pi.alpha;
    if rel > Q::new(1, 12) {
        return Err(Error::pre(format!("defect q/α = {rel} above 1/12")));
    }
    let best = enumerate_characters(g, m)
        .into_iter()
        .map(|c| (sup_distance(&c, pi), c))
        .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.image.cmp(&b.1.image)))
        .ok_or_else(|| Error::pre("no characters"))?;
    let (distance, chi) = best;
    if chi.is_trivial() {
        return Err(Error::Hypothesis { name: "nontrivial", detail: format!("nearest character into Z_{m} is trivial") });
    }
    let bound = rel * Q::new(136, 100);
    if distance > bound {
        return Err(Error::NoCharacterWithinBound { best: distance.to_string(), bound: bound.to_string() });
    }
    Ok(Snap { character: chi.onto_image(), distance, bound })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub holds: bool,
    pub witness: Option<usize>,
    pub checked: usize,
}

/// `‖g‖ < 2λ/3` on `ker χ ∩ N(λ)`.
pub fn kernel_norm_check(d: &PseudometricTable, chi: &Character, lambda: Q) -> KernelCheck {
    let cut = lambda * 2 / 3;
    let pool: Vec<usize> = d.ball(lambda).intersection(&chi.kernel()).indices();
    let witness = pool.iter().copied().find(|&x| d.norm(x) >= cut);
    KernelCheck { holds: witness.is_none(), witness, checked: pool.len() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LambdaPolicy {
    Auto,
    #[serde(with = "serde_q")]
    Fixed(Q),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GammaPolicy {
    Exact,
    Fitted,
    #[serde(with = "serde_q")]
    Fixed(Q),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(with = "serde_q")]
    pub delta: Q,
    pub lambda: LambdaPolicy,
    pub gamma: GammaPolicy,
    pub modulus: Option<usize>,
    /// Shrink target; `None` skips the shrinking stage.
    #[serde(with = "serde_q_opt")]
    pub shrink: Option<Q>,
    /// Factor out the largest subgroup inside `N(quotient_radius·ρ)`;
    /// `None` keeps the whole group.
    #[serde(with = "serde_q_opt")]
    pub quotient_radius: Option<Q>,
    pub alpha_mode: AlphaMode,
    pub beam_width: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            delta: Q::new(1, 10),
            lambda: LambdaPolicy::Auto,
            gamma: GammaPolicy::Fitted,
            modulus: None,
            shrink: Some(Q::new(1, 12)),
            quotient_radius: Some(Q::new(1, 4)),
            alpha_mode: AlphaMode::Auto,
            beam_width: 64,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub input: DeficitReport,
    /// Additive excess of the input pair over `μA + μB`.
    #[serde(with = "serde_q")]
    pub delta_measured: Q,
    #[serde(with = "serde_q_opt")]
    pub shrink_measure_a: Option<Q>,
    #[serde(with = "serde_q_opt")]
    pub shrink_measure_b: Option<Q>,
    pub shrink_halted: Option<String>,
    /// Order of the subgroup factored out before building the metric.
    pub quotient_kernel: usize,
    pub working_order: usize,
    #[serde(with = "serde_q")]
    pub rho: Q,
    #[serde(with = "serde_q")]
    pub gamma: Q,
    pub path_monotone: PathMonotoneReport,
    #[serde(with = "serde_q")]
    pub lambda: Q,
    pub reference: usize,
    #[serde(with = "serde_q")]
    pub alpha: Q,
    pub alpha_witness_len: usize,
    #[serde(with = "serde_q")]
    pub q: Q,
    pub clauses: [bool; 4],
    #[serde(with = "serde_q")]
    pub snap_distance: Q,
    #[serde(with = "serde_q")]
    pub projection_sum: Q,
    pub projection_small: bool,
    pub structural: Option<StructuralReport>,
    pub structural_error: Option<String>,
    pub kernel: KernelCheck,
    pub notices: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub character: Character,
    pub arc_a: Arc,
    pub arc_b: Arc,
    #[serde(with = "serde_q")]
    pub gap_a: Q,
    #[serde(with = "serde_q")]
    pub gap_b: Q,
    pub diagnostics: Diagnostics,
}

/// Largest subgroup inside the ball, built greedily from the cyclic
/// subgroups it contains, largest first.
pub fn subgroup_in_ball(g: &GroupModel, ball: &Subset) -> Subgroup {
    let mut cyc: Vec<Subgroup> = distinct_cyclic_subgroups(g).into_iter().filter(|h| h.members.is_subset(ball)).collect();
    cyc.sort_by_key(|h| std::cmp::Reverse(h.order()));
    let mut gens: Vec<usize> = Vec::new();
    let mut cur = Subgroup::trivial(g);
    for h in cyc {
        if h.members.is_subset(&cur.members) {
            continue;
        }
        let mut trial = gens.clone();
        trial.push(h.generator.unwrap_or_else(|| h.members.iter().find(|&x| cyclic_subgroup(g, x).order() == h.order()).unwrap()));
        let next = generated_subgroup(g, &trial);
        if next.members.is_subset(ball) {
            gens = trial;
            cur = next;
        }
    }
    cur
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.at(name))
}

fn fit_gamma(d: &PseudometricTable, policy: GammaPolicy) -> Result<Q> {
    let ok = |gm: Q| gamma_linearity(d, gm).holds && gamma_monotonicity(d, gm).holds;
    match policy {
        GammaPolicy::Exact | GammaPolicy::Fixed(_) => {
            let gm = if let GammaPolicy::Fixed(x) = policy { x } else { Q::zero() };
            if ok(gm) {
                Ok(gm)
            } else {
                Err(Error::Hypothesis { name: "linearity", detail: format!("pseudometric is not {gm}-linear and {gm}-monotone") })
            }
        }
        GammaPolicy::Fitted => {
            let top = d.rho() * d.denom();
            let mut k = 0i64;
            while Q::from_integer(k) <= top {
                let gm = Q::new(k, d.denom());
                if ok(gm) {
                    return Ok(gm);
                }
                k += 1;
            }
            Err(Error::Hypothesis { name: "linearity", detail: "no γ on the grid up to ρ".into() })
        }
    }
}

/// Smallest grid λ at or above `ρ/32` whose ball generates the group.
fn pick_lambda(d: &PseudometricTable, gamma: Q, notices: &mut Vec<String>) -> Result<Q> {
    let g = d.group();
    let base = (d.rho() / 32).max(gamma * 44 + Q::new(1, d.denom() * 2));
    let mut norms: Vec<Q> = (0..g.order()).map(|x| d.norm(x)).filter(|&x| x >= base).collect();
    norms.sort();
    norms.dedup();
    let mut cands = vec![base];
    cands.extend(norms);
    for lam in cands {
        let ball = d.ball(lam);
        if generated_subgroup(g, &ball.indices()).order() == g.order() {
            if check_lambda_range(d, lam, gamma, 44).is_err() {
                notices.push(format!("MinimumResolution: λ raised to {lam}, outside the admissible range below ρ/16 − γ"));
            }
            return Ok(lam);
        }
    }
    Err(Error::NotGenerated("no ball up to radius ρ generates the group".into()))
}

/// Shrink, reduce, measure linearity, read off α and the almost
/// homomorphism, snap it to a character and fit arcs on the input pair.
pub fn inverse_pipeline(g: &GroupModel, a: &Subset, b: &Subset, cfg: &PipelineConfig) -> Result<FitResult> {
    let mut notices = Vec::new();
    let input = stage("near-minimal", deficit(g, a, b))?;
    let one = Q::one();
    let lifted_ok = input.lifted && input.lifted_delta() <= cfg.delta && input.mu_a + input.mu_b < one;
    if !input.nearly_minimal(cfg.delta) && !lifted_ok {
        return Err(Error::pre(format!("pair is not {}-nearly minimally expanding", cfg.delta)).at("near-minimal"));
    }
    let delta_measured = input.excess.max(Q::zero());

    let (wa, wb, shrink_a, shrink_b, shrink_halted) = match cfg.shrink {
        Some(t) if t < input.mu_a.max(input.mu_b) => {
            let r = stage("shrink", shrink_to_size(g, a, b, t, cfg.delta))?;
            let (ma, mb) = (r.a.measure(), r.b.measure());
            (r.a, r.b, Some(ma), Some(mb), r.halted)
        }
        _ => (a.clone(), b.clone(), None, None, None),
    };

    // Factor out the part of the group the metric cannot see.
    let full = stage("pseudometric", pseudometric_from_set(g, a, Side::Left))?;
    let kernel = match cfg.quotient_radius {
        Some(r) => subgroup_in_ball(g, &full.ball(full.rho() * r)),
        None => Subgroup::trivial(g),
    };
    let (work_g, proj) = if kernel.order() > 1 && normality_witness(g, &kernel).is_none() {
        stage("quotient", quotient(g, &kernel))?
    } else {
        (g.clone(), (0..g.order()).collect())
    };
    let fold = |s: &Subset| {
        let mut count = vec![0usize; work_g.order()];
        for x in s.iter() {
            count[proj[x]] += 1;
        }
        Subset::from_fn(work_g.order(), |q| 2 * count[q] >= kernel.order())
    };
    let qa = fold(&wa);
    if qa.is_empty() {
        return Err(Error::EmptyInput.at("quotient"));
    }
    let d = stage("pseudometric", pseudometric_from_set(&work_g, &qa, Side::Left))?;

    let gamma = stage("gamma", fit_gamma(&d, cfg.gamma))?;
    let path_monotone = path_monotone_check(&d, gamma);
    let lambda = match cfg.lambda {
        LambdaPolicy::Fixed(l) => l,
        LambdaPolicy::Auto => stage("lambda", pick_lambda(&d, gamma, &mut notices))?,
    };
    let in_range = check_lambda_range(&d, lambda, gamma, 44).is_ok();
    let ctx = stage("sign", SignContext::new(&d, gamma))?;
    let ar = if in_range {
        alpha_lambda(&ctx, lambda, cfg.alpha_mode, cfg.beam_width, cfg.seed)
    } else {
        alpha_lambda_unchecked(&ctx, lambda, cfg.alpha_mode, cfg.beam_width, cfg.seed)
    };
    let ar = stage("alpha", ar)?;
    let pi = stage("almost-hom", almost_hom_unchecked(&ctx, lambda, ar.alpha))?;
    if !pi.clause3 {
        notices.push(format!("almost homomorphism defect {} is not below α/200", pi.q));
    }
    let m = cfg.modulus.unwrap_or_else(|| work_g.abelian_exponent());
    let snap = stage("snap", snap_to_character(&work_g, &pi, m))?;
    let chi = snap.character.compose(&proj);

    let projection_sum = image_measure(&chi, &wa) + image_measure(&chi, &wb);
    let projection_small = projection_sum < Q::new(1, 5);
    let (structural, structural_error) = match structural_control(g, &chi, &wa, &wb, delta_measured.max(Q::new(1, g.order() as i64))) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let pulled = d.pullback(g, &proj);
    let kernel_check = kernel_norm_check(&pulled, &chi, lambda);

    let (arc_a, gap_a) = stage("arcs", fit_arc(g, &chi, a, grid_length(input.mu_a, chi.modulus)))?;
    let (arc_b, gap_b) = stage("arcs", fit_arc(g, &chi, b, grid_length(input.mu_b, chi.modulus)))?;
    let diagnostics = Diagnostics {
        input,
        delta_measured,
        shrink_measure_a: shrink_a,
        shrink_measure_b: shrink_b,
        shrink_halted,
        quotient_kernel: kernel.order(),
        working_order: work_g.order(),
        rho: d.rho(),
        gamma,
        path_monotone,
        lambda,
        reference: ctx.g0,
        alpha: ar.alpha,
        alpha_witness_len: ar.witness.entries.len(),
        q: pi.q,
        clauses: [pi.clause1, pi.clause2, pi.clause3, pi.clause4.is_some()],
        snap_distance: snap.distance,
        projection_sum,
        projection_small,
        structural,
        structural_error,
        kernel: kernel_check,
        notices,
    };
    Ok(FitResult { character: chi, arc_a, arc_b, gap_a, gap_b, diagnostics })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSide {
    /// Measure of the union of cosets met by the set.
    #[serde(with = "serde_q")]
    pub width: Q,
    /// Mean fiber length over met cosets, as a fraction of `|H|`.
    #[serde(with = "serde_q")]
    pub mean: Q,
    /// Smallest α with at least 99% of met cosets inside `(1 ± α)·mean`.
    #[serde(with = "serde_q")]
    pub concentration: Q,
    /// Per-coset gap between the fiber and its best arc, over `|H|`.
    #[serde(with = "serde_q_vec")]
    pub gaps: Vec<Q>,
    #[serde(with = "serde_q")]
    pub max_gap: Q,
    /// Fitted arc start per coset, in `Z_|H|` (`None` for empty fibers).
    pub zeta: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberwiseReport {
    pub side_a: FiberSide,
    pub side_b: FiberSide,
    /// `max(ratio, 1/ratio) − 1` for `ratio = μ(AH)/μ(HB)`.
    #[serde(with = "serde_q")]
    pub width_margin: Q,
    pub xi_triples: usize,
    pub xi_consistent: bool,
}

impl FiberwiseReport {
    pub fn max_margin(&self) -> Q {
        [
            self.width_margin,
            self.side_a.concentration,
            self.side_b.concentration,
            self.side_a.max_gap,
            self.side_b.max_gap,
        ]
        .into_iter()
        .max()
        .unwrap()
    }
}

fn fiber_side(g: &GroupModel, x: usize, k: usize, s: &Subset, side: Side) -> FiberSide {
    let n = g.order();
    let powers: Vec<usize> = (0..k).map(|t| g.pow(x, t)).collect();
    let mut seen = Subset::empty(n);
    let mut fibers: Vec<Vec<bool>> = Vec::new();
    for r in 0..n {
        if seen.contains(r) {
            continue;
        }
        let coset: Vec<usize> = powers
            .iter()
            .map(|&h| match side {
                Side::Left => g.mul(r, h),
                Side::Right => g.mul(h, r),
            })
            .collect();
        for &y in &coset {
            seen.insert(y);
        }
        fibers.push(coset.iter().map(|&y| s.contains(y)).collect());
    }
    let lens: Vec<usize> = fibers.iter().map(|f| f.iter().filter(|&&v| v).count()).collect();
    let met: Vec<usize> = lens.iter().copied().filter(|&l| l > 0).collect();
    let width = Q::new((met.len() * k) as i64, n as i64);
    let mean = if met.is_empty() { Q::zero() } else { Q::new(met.iter().sum::<usize>() as i64, (met.len() * k) as i64) };
    let mut devs: Vec<Q> = met
        .iter()
        .map(|&l| if mean.is_zero() { Q::zero() } else { (Q::new(l as i64, k as i64) / mean - 1).abs() })
        .collect();
    devs.sort();
    let keep = (met.len() * 99).div_ceil(100);
    let concentration = if keep == 0 { Q::zero() } else { devs[keep - 1] };
    let target = grid_length(mean, k);
    let mut gaps = Vec::new();
    let mut zeta = Vec::new();
    for f in &fibers {
        if f.iter().all(|&v| !v) {
            gaps.push(Q::zero());
            zeta.push(None);
            continue;
        }
        let best = (0..k)
            .map(|st| {
                let off = (0..k).filter(|&t| f[t] != ((t + k - st) % k < target)).count();
                (off, st)
            })
            .min()
            .unwrap();
        gaps.push(Q::new(best.0 as i64, k as i64));
        zeta.push(Some(best.1));
    }
    let max_gap = gaps.iter().copied().max().unwrap_or_else(Q::zero);
    FiberSide { width, mean, concentration, gaps, max_gap, zeta }
}

/// Fiber statistics along a cyclic subgroup `H = ⟨x⟩`; every fiber must be
/// shorter than `c·|H|`.
pub fn fiberwise_rigidity_report(
    g: &GroupModel,
    x: usize,
    a: &Subset,
    b: &Subset,
    c: Q,
    seed: u64,
) -> Result<FiberwiseReport> {
    g.check_subset(a)?;
    g.check_subset(b)?;
    let k = g.element_order(x);
    let side_a = fiber_side(g, x, k, a, Side::Left);
    let side_b = fiber_side(g, x, k, b, Side::Right);
    let long = |s: &Subset, side: Side| {
        let h = cyclic_subgroup(g, x);
        s.iter().any(|y| {
            let hits = h
                .members
                .iter()
                .filter(|&t| {
                    s.contains(match side {
                        Side::Left => g.mul(y, t),
                        Side::Right => g.mul(t, y),
                    })
                })
                .count();
            Q::new(hits as i64, k as i64) >= c
        })
    };
    if long(a, Side::Left) || long(b, Side::Right) {
        return Err(Error::pre(format!("a fiber along ⟨{x}⟩ reaches {c} of the subgroup")));
    }
    let ratio = side_a.width / side_b.width;
    let width_margin = ratio.max(ratio.recip()) - 1;

    // ξ(g1, g2) = ζ(g1⁻¹a) − ζ(g2⁻¹a) must telescope through any g3.
    let coset_of = |y: usize| -> usize {
        let h = cyclic_subgroup(g, x);
        h.members.iter().map(|t| g.mul(y, t)).min().unwrap()
    };
    let mut reps: Vec<usize> = (0..g.order()).map(coset_of).collect();
    reps.sort();
    reps.dedup();
    let index = |y: usize| reps.binary_search(&coset_of(y)).unwrap();
    let zeta = |y: usize| side_a.zeta[index(y)].map(|z| z as i64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = 0;
    let mut consistent = true;
    let n = g.order();
    let members = a.indices();
    for _ in 0..256 {
        if members.is_empty() {
            break;
        }
        let base = members[rng.gen_range(0..members.len())];
        let gs: Vec<usize> = (0..3).map(|_| rng.gen_range(0..n)).collect();
        let z: Vec<Option<i64>> = gs.iter().map(|&h| zeta(g.mul(g.inv(h), base))).collect();
        if let [Some(z1), Some(z2), Some(z3)] = z[..] {
            let m = k as i64;
            let xi = |p: i64, q: i64| (p - q).rem_euclid(m);
            consistent &= xi(z1, z2) == (xi(z1, z3) + xi(z3, z2)).rem_euclid(m);
            triples += 1;
        }
    }
    Ok(FiberwiseReport { side_a, side_b, width_margin, xi_triples: triples, xi_consistent: consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{bohr_preimage, first_projection, make_cyclic, make_torus};

    fn arc_ctx(n: usize, len: usize) -> PseudometricTable {
        let g = make_cyclic(n);
        pseudometric_from_set(&g, &Subset::from_indices(n, 0..len), Side::Left).unwrap()
    }

    #[test]
    fn exact_arc_almost_hom_and_snap() {
        let d = arc_ctx(360, 160);
        let ctx = SignContext::new(&d, Q::zero()).unwrap();
        let pi = almost_hom(&ctx, Q::new(5, 360), Q::one()).unwrap();
        assert!((0..360).all(|x| pi.values[x] == Q::new(x as i64, 360)));
        assert!(pi.q.is_zero() && pi.all_clauses());
        let snap = snap_to_character(d.group(), &pi, 360).unwrap();
        assert!(snap.distance.is_zero());
        assert!((0..360).all(|x| snap.character.eval(x) == x));
        assert!(matches!(snap_to_character(d.group(), &pi, 1), Err(Error::Hypothesis { name: "nontrivial", .. })));
    }

    #[test]
    fn perturbed_values_snap_back() {
        let d = arc_ctx(360, 160);
        let ctx = SignContext::new(&d, Q::zero()).unwrap();
        let mut pi = almost_hom(&ctx, Q::new(5, 360), Q::one()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for x in 1..360 {
            let e = Q::new(rng.gen_range(-9..=9), 4000);
            pi.values[x] = modulo(pi.values[x] + e, Q::one());
        }
        pi.measure_defect(d.group(), 1);
        let snap = snap_to_character(d.group(), &pi, 360).unwrap();
        assert!((0..360).all(|x| snap.character.eval(x) == x));
        assert!(snap.distance <= snap.bound && snap.distance.is_positive());
    }

    #[test]
    fn kernel_norms_on_product() {
        let g = make_torus(&[48, 5]).unwrap();
        let chi = first_projection(&g).unwrap();
        let a = bohr_preimage(&g, &chi, &Arc::new(48, 0, 10)).unwrap();
        let d = pseudometric_from_set(&g, &a, Side::Left).unwrap();
        let k = kernel_norm_check(&d, &chi, Q::new(1, 48));
        assert!(k.holds && k.checked == 5);
        let bad = Character::new(48, (0..240).map(|x| if x < 10 { 0 } else { 1 }).collect());
        let k = kernel_norm_check(&d, &bad, Q::new(1, 48));
        assert!(!k.holds && k.witness == Some(5));
        let triv = kernel_norm_check(&d, &Character::new(240, (0..240).collect()), Q::new(1, 48));
        assert!(triv.holds && triv.checked == 1);
    }

    #[test]
    fn pipeline_exact_planted() {
        let g = make_torus(&[48, 5]).unwrap();
        let chi = first_projection(&g).unwrap();
        let a = bohr_preimage(&g, &chi, &Arc::new(48, 0, 10)).unwrap();
        let b = bohr_preimage(&g, &chi, &Arc::new(48, 0, 12)).unwrap();
        let fit = inverse_pipeline(&g, &a, &b, &PipelineConfig::default()).unwrap();
        assert_eq!(fit.character, chi);
        assert!(fit.gap_a.is_zero() && fit.gap_b.is_zero());
        assert_eq!((fit.arc_a.length, fit.arc_b.length), (10, 12));
        assert!(fit.diagnostics.kernel.holds);
        let again = inverse_pipeline(
            &g,
            &bohr_preimage(&g, &fit.character, &fit.arc_a).unwrap(),
            &bohr_preimage(&g, &fit.character, &fit.arc_b).unwrap(),
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!((again.character, again.arc_a, again.arc_b), (fit.character, fit.arc_a, fit.arc_b));
    }

    #[test]
    fn pipeline_rejects_expanding_pair() {
        let g = make_cyclic(60);
        let a = Subset::from_indices(60, [0, 7, 19, 31]);
        let e = inverse_pipeline(&g, &a, &a, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(e, Error::Stage { stage: "near-minimal", .. }));
    }

    #[test]
    fn fiberwise_planted_and_long() {
        let g = make_torus(&[48, 5]).unwrap();
        let chi = first_projection(&g).unwrap();
        let a = bohr_preimage(&g, &chi, &Arc::new(48, 0, 10)).unwrap();
        let b = bohr_preimage(&g, &chi, &Arc::new(48, 0, 12)).unwrap();
        let x = g.from_coords(&[1, 0]).unwrap();
        // B's fibers fill exactly a quarter of the subgroup
        assert!(fiberwise_rigidity_report(&g, x, &a, &b, Q::new(1, 4), 0).is_err());
        let r = fiberwise_rigidity_report(&g, x, &a, &b, Q::new(1, 3), 0).unwrap();
        assert!(r.max_margin().is_zero() && r.xi_consistent && r.xi_triples > 0);
        let y = g.from_coords(&[0, 1]).unwrap();
        assert!(fiberwise_rigidity_report(&g, y, &a, &b, Q::new(1, 4), 0).is_err());
    }
}
