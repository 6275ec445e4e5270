use kemplab::expansion::{deficit, kneser_stabilizer, shrink_to_size};
use kemplab::group::{
    cyclic_subgroup, enumerate_characters, make_cyclic, make_from_table, make_product, make_s3, make_torus, quotient, stabilizer,
    GroupModel,
};
use kemplab::inverse1d::{cyclic_sumset, torus_inverse, TorusConfig, TorusOutcome};
use kemplab::io::{group_to_text, load_group, load_subset, subset_to_text, write_file, SubsetFormat};
use kemplab::pseudometric::{kernel, pseudometric_from_set, verify_pseudometric};
use kemplab::quotient::coset_map;
use kemplab::suites::{run_suite, Suite, SuiteConfig};
use kemplab::sumset::{fast_product_set, overlap_profile, product_set};
use kemplab::{Q, Side, Subset};
use num_traits::Zero;
use proptest::prelude::*;

fn groups() -> Vec<GroupModel> {
    vec![
        make_cyclic(30),
        make_cyclic(37),
        make_torus(&[6, 4]).unwrap(),
        make_torus(&[2, 2, 2, 2]).unwrap(),
        make_product(&make_s3(), &make_cyclic(5)).unwrap(),
        make_product(&make_s3(), &make_s3()).unwrap(),
    ]
}

fn subset_from(n: usize, bits: &[bool]) -> Subset {
    Subset::from_fn(n, |i| bits[i % bits.len()])
}

fn arb_pair() -> impl Strategy<Value = (usize, Vec<bool>, Vec<bool>)> {
    (0usize..6, prop::collection::vec(prop::bool::weighted(0.2), 1..64), prop::collection::vec(prop::bool::weighted(0.2), 1..64))
}

#[test]
fn models_satisfy_axioms() {
    for g in groups() {
        g.validate().unwrap();
        let e = g.identity();
        for x in 0..g.order() {
            assert_eq!(g.mul(x, g.inv(x)), e);
            assert_eq!(g.mul(e, x), x);
        }
    }
}

#[test]
fn characters_are_homomorphisms() {
    for g in [make_torus(&[6, 4]).unwrap(), make_cyclic(30), make_product(&make_s3(), &make_cyclic(6)).unwrap()] {
        for m in [2, 3, 6, 12] {
            let chars = enumerate_characters(&g, m);
            assert!(!chars.is_empty());
            for c in &chars {
                assert!(c.is_homomorphism(&g));
            }
        }
    }
}

#[test]
fn quotient_integral_identity() {
    // μ_G(A) equals the average over cosets of the fiber proportion.
    let g = make_torus(&[12, 4]).unwrap();
    let h = cyclic_subgroup(&g, g.from_coords(&[0, 1]).unwrap());
    let map = coset_map(&g, &h, Side::Left).unwrap();
    let a = Subset::from_fn(g.order(), |i| (i * 7 + 3) % 5 < 2);
    let mut sum = Q::zero();
    for c in 0..map.count {
        let hits = a.iter().filter(|&x| map.proj[x] == c).count();
        sum += Q::new(hits as i64, map.fiber as i64);
    }
    assert_eq!(sum / Q::from_integer(map.count as i64), a.measure());
    let (qg, proj) = quotient(&g, &h).unwrap();
    assert_eq!(qg.order() * h.order(), g.order());
    for x in 0..g.order() {
        for y in 0..g.order() {
            assert_eq!(proj[g.mul(x, y)], qg.mul(proj[x], proj[y]));
        }
    }
}

#[test]
fn pseudometric_kernels_are_subgroups() {
    for g in groups() {
        for seed in 0..4usize {
            let a = Subset::from_fn(g.order(), |i| (i * 13 + seed * 5) % 7 < 2);
            let d = pseudometric_from_set(&g, &a, Side::Left).unwrap();
            let rep = verify_pseudometric(&d);
            let right_ok = rep.right_invariant || !g.is_abelian();
            assert!(rep.reflexive && rep.symmetric && rep.triangle && rep.left_invariant && right_ok, "{} seed {seed}: {rep:?}", g.label());
            assert!(rep.kernel_is_subgroup);
            let k = kernel(&d);
            for x in k.iter() {
                for y in k.iter() {
                    assert!(k.contains(g.mul(x, g.inv(y))));
                }
            }
        }
    }
}

#[test]
fn torus_structured_contains_sets() {
    let cfg = TorusConfig { tau: Q::from_integer(13), size_cap: Q::from_integer(1) };
    for p in [5usize, 7, 11] {
        // Translation does not change the outcome, so both sets contain 0.
        let masks = 1u32 << (p - 1);
        for ma in 0..masks {
            let a = Subset::from_fn(p, |i| i == 0 || (ma >> (i - 1)) & 1 == 1);
            for mb in 0..masks {
                let b = Subset::from_fn(p, |i| i == 0 || (mb >> (i - 1)) & 1 == 1);
                if b.len() > a.len() {
                    continue;
                }
                let s = cyclic_sumset(p, &a, &b).len();
                match torus_inverse(p, &a, &b, &cfg) {
                    Ok(TorusOutcome::Escape) => assert!(s >= a.len() + 2 * b.len() || s == p),
                    Ok(TorusOutcome::Structured { dilation, start_a, len_a, start_b, len_b }) => {
                        let inside = |x: usize, st: usize, len: usize| (x * dilation % p + p - st) % p < len;
                        assert!(a.iter().all(|x| inside(x, start_a, len_a)), "p={p} A={:?} B={:?}", a.indices(), b.indices());
                        assert!(b.iter().all(|x| inside(x, start_b, len_b)));
                    }
                    // Soundness only: a pair the search cannot place is reported, not forced.
                    Err(kemplab::Error::NoStructureFound) => {}
                    Err(e) => panic!("p={p} A={:?} B={:?}: {e}", a.indices(), b.indices()),
                }
            }
        }
    }
}

#[test]
fn suites_are_deterministic() {
    let cfg = SuiteConfig { seed: 77, instances: Some(40) };
    for s in [Suite::Submodularity, Suite::Transfer, Suite::Sequences] {
        let a = run_suite(s, &cfg).unwrap();
        let b = run_suite(s, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = make_torus(&[48, 5]).unwrap();
    let gp = dir.path().join("g.txt");
    write_file(&gp, &group_to_text(&g)).unwrap();
    let back = load_group(&gp).unwrap();
    assert_eq!(back, g);
    let a = Subset::from_indices(240, [0, 5, 17, 239]);
    let ap = dir.path().join("a.txt");
    write_file(&ap, &subset_to_text(&a, SubsetFormat::Indices)).unwrap();
    assert_eq!(load_subset(&ap, &back).unwrap(), a);
    assert!(load_subset(&ap, &make_cyclic(100)).is_err());
}

#[test]
fn shrink_hits_target() {
    let p = kemplab::plant::plant(&[48, 5], 10, 12).unwrap();
    let d = Q::new(1, 12);
    let r = shrink_to_size(&p.group, &p.a, &p.b, d, Q::new(1, 10)).unwrap();
    if r.halted.is_none() {
        let cell = Q::new(1, 240);
        assert!(r.residual_a <= cell && r.residual_b <= cell);
    }
    let rep = deficit(&p.group, &r.a, &r.b).unwrap();
    assert!(rep.excess <= r.gamma_bound, "{} > {}", rep.excess, r.gamma_bound);
}

#[test]
fn non_table_models_match_their_tables() {
    for g in groups() {
        let t: Vec<Vec<usize>> = (0..g.order()).map(|a| (0..g.order()).map(|b| g.mul(a, b)).collect()).collect();
        let h = make_from_table(t).unwrap();
        let a = Subset::from_fn(g.order(), |i| i % 3 == 0);
        let b = Subset::from_fn(g.order(), |i| i % 4 == 1);
        assert_eq!(product_set(&g, &a, &b).unwrap(), product_set(&h, &a, &b).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn fast_matches_naive((gi, ba, bb) in arb_pair()) {
        let g = &groups()[gi];
        let (a, b) = (subset_from(g.order(), &ba), subset_from(g.order(), &bb));
        prop_assert_eq!(fast_product_set(g, &a, &b).unwrap(), product_set(g, &a, &b).unwrap());
    }

    #[test]
    fn product_size_bounds((gi, ba, bb) in arb_pair()) {
        let g = &groups()[gi];
        let (a, b) = (subset_from(g.order(), &ba), subset_from(g.order(), &bb));
        prop_assume!(!a.is_empty() && !b.is_empty());
        let ab = product_set(g, &a, &b).unwrap();
        prop_assert!(ab.len() >= a.len().max(b.len()));
        prop_assert!(ab.len() <= (a.len() * b.len()).min(g.order()));
        // a full-measure sum forces the whole group
        if a.len() + b.len() > g.order() {
            prop_assert_eq!(ab.len(), g.order());
        }
    }

    #[test]
    fn measure_is_bi_invariant((gi, ba, _bb) in arb_pair(), x in 0usize..1000) {
        let g = &groups()[gi];
        let a = subset_from(g.order(), &ba);
        let x = x % g.order();
        prop_assert_eq!(g.measure(&g.left_translate(x, &a)), a.measure());
        prop_assert_eq!(g.measure(&g.right_translate(&a, x)), a.measure());
        prop_assert_eq!(g.measure(&g.inverse_set(&a)), a.measure());
    }

    #[test]
    fn overlap_mean_is_square((gi, ba, _bb) in arb_pair()) {
        let g = &groups()[gi];
        let a = subset_from(g.order(), &ba);
        for side in [Side::Left, Side::Right] {
            let prof = overlap_profile(g, &a, side).unwrap();
            prop_assert_eq!(prof.mean(), a.measure() * a.measure());
        }
    }

    #[test]
    fn kneser_stabilizer_is_period((ba, bb) in (prop::collection::vec(prop::bool::weighted(0.3), 1..40), prop::collection::vec(prop::bool::weighted(0.3), 1..40))) {
        let g = make_cyclic(30);
        let (a, b) = (subset_from(30, &ba), subset_from(30, &bb));
        prop_assume!(!a.is_empty() && !b.is_empty());
        if let Some(h) = kneser_stabilizer(&g, &a, &b).unwrap() {
            prop_assert!(h.order() > 1);
            let ab = product_set(&g, &a, &b).unwrap();
            prop_assert_eq!(stabilizer(&g, &ab).members, h.members.clone());
            // Kneser: |AB| ≥ |AH| + |BH| − |H|
            let ah = product_set(&g, &a, &h.members).unwrap();
            let bh = product_set(&g, &b, &h.members).unwrap();
            prop_assert!(ab.len() + h.order() >= ah.len() + bh.len());
        }
    }

    #[test]
    fn prime_fibers_satisfy_cauchy_davenport(ba in prop::collection::vec(prop::bool::weighted(0.4), 1..60), bb in prop::collection::vec(prop::bool::weighted(0.4), 1..60), ca in 0usize..48, cb in 0usize..48) {
        // Z_48 × Z_5 with H = 0 × Z_5: fibers are copies of Z_5.
        let g = make_torus(&[48, 5]).unwrap();
        let h = cyclic_subgroup(&g, g.from_coords(&[0, 1]).unwrap());
        let map = coset_map(&g, &h, Side::Left).unwrap();
        let (a, b) = (subset_from(240, &ba), subset_from(240, &bb));
        let fa = Subset::from_fn(240, |x| a.contains(x) && map.proj[x] == map.proj[g.from_coords(&[ca, 0]).unwrap()]);
        let fb = Subset::from_fn(240, |x| b.contains(x) && map.proj[x] == map.proj[g.from_coords(&[cb, 0]).unwrap()]);
        prop_assume!(!fa.is_empty() && !fb.is_empty());
        let s = product_set(&g, &fa, &fb).unwrap().len();
        prop_assert!(s >= (fa.len() + fb.len() - 1).min(5));
    }
}
