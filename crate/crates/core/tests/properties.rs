use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use proptest::prelude::*;

use diqka::attack::{cc_decompose, cc_rate_upper, h_cc};
use diqka::boxes::{
    correlated_box, family_box, from_mixture, pr_box, pr_box_on, to_mixture, white_noise, FamilyPoint, NonlocalBox,
    Scenario,
};
use diqka::entropy_sdp::gauss_radau;
use diqka::quantum::{born_box, build_state, observables};
use diqka::rates::{chsh, cond_entropy_ab, qber, ChshVariant};
use diqka::search::best_chsh_variant;
use diqka::wirings::{
    apply_wiring, catalog_2in, catalog_3in, ns_vertices_2x2, wired_params, xor_pair, xor_wired_family, SupportSet,
    WiringPair,
};

fn point() -> impl Strategy<Value = FamilyPoint> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, v)| FamilyPoint::new(a, v).unwrap())
}

/// Random convex combination of the 2x2 no-signalling vertices.
fn ns_box() -> impl Strategy<Value = NonlocalBox> {
    prop::collection::vec(0.0..1.0f64, 24).prop_map(|w| {
        let vertices = ns_vertices_2x2();
        let total: f64 = w.iter().sum::<f64>().max(1e-9);
        let parts: Vec<(f64, &NonlocalBox)> = w.iter().map(|x| x / total).zip(&vertices).collect();
        NonlocalBox::mix(&parts).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn family_boxes_are_no_signalling_and_quantum(p in point()) {
        let b = family_box(p);
        prop_assert!(b.is_no_signalling(1e-12).no_signalling);
        prop_assert!(chsh(&b).unwrap() <= 2.0 * SQRT_2 + 1e-12);
        let q = qber(&b).unwrap();
        prop_assert!((q - p.alpha * (1.0 - p.v) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_round_trip(p in point()) {
        prop_assume!(p.alpha > 1e-9);
        let back = from_mixture(to_mixture(p)).unwrap();
        prop_assert!((back.alpha - p.alpha).abs() < 1e-12);
        prop_assert!((back.v - p.v).abs() < 1e-12);
        // the CHSH part of the family is the mixture box on the Bell settings
        let mix = to_mixture(p).to_box(Scenario::bell()).unwrap();
        prop_assert!(mix.max_abs_diff(&family_box(p).restrict(2, 2).unwrap()) < 1e-12);
    }

    #[test]
    fn born_rule_reproduces_family(p in point()) {
        let b = born_box(&build_state(p), &observables()).unwrap();
        prop_assert!(b.max_abs_diff(&family_box(p)) < 1e-12);
    }

    #[test]
    fn two_copy_parameter_map_matches_engine(p in point()) {
        let wired = xor_wired_family(p, 2).unwrap();
        let closed = family_box(wired_params(p, 2).unwrap());
        prop_assert!(wired.restrict(2, 2).unwrap().max_abs_diff(&closed.restrict(2, 2).unwrap()) < 1e-10);
        let beta = (1.0 - p.alpha * (1.0 - p.v)).powi(2);
        prop_assert!((qber(&wired).unwrap() - (1.0 - beta) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn three_copy_parameter_map_matches_engine(p in point()) {
        let wired = xor_wired_family(p, 3).unwrap();
        let closed = family_box(wired_params(p, 3).unwrap());
        prop_assert!(wired.restrict(2, 2).unwrap().max_abs_diff(&closed.restrict(2, 2).unwrap()) < 1e-10);
    }

    #[test]
    fn catalog_wirings_preserve_no_signalling(b in ns_box(), i in 0usize..82, j in 0usize..82, k in 0usize..82, l in 0usize..82) {
        let c = catalog_2in();
        let pair = WiringPair::new(vec![c[i].clone(), c[j].clone()], vec![c[k].clone(), c[l].clone()]).unwrap();
        prop_assert_eq!(SupportSet::of(&pair).len(), 64);
        let wired = apply_wiring(&pair, &[b.clone(), b]).unwrap();
        prop_assert!(wired.is_no_signalling(1e-9).no_signalling);
    }

    #[test]
    fn key_wirings_preserve_no_signalling(p in point(), i in 0usize..80, j in 0usize..80, k in 0usize..252) {
        let c2: Vec<_> = catalog_2in();
        let bob_key = catalog_3in()[k].clone();
        let pair = WiringPair::new(
            vec![c2[i].clone(), c2[j].clone()],
            vec![c2[i].embed(&[3, 3]).unwrap(), c2[j].embed(&[3, 3]).unwrap(), bob_key],
        ).unwrap();
        let b = family_box(p);
        let wired = apply_wiring(&pair, &[b.clone(), b]).unwrap();
        prop_assert!(wired.is_no_signalling(1e-9).no_signalling);
    }

    #[test]
    fn chsh_variants_are_bounded(b in ns_box()) {
        let (_, best) = best_chsh_variant(&b).unwrap();
        prop_assert!(best <= 4.0 + 1e-12);
        for v in ChshVariant::all() {
            prop_assert!(diqka::rates::chsh_signed(&b, v).unwrap() <= best + 1e-12);
        }
    }

    #[test]
    fn attack_decomposition(p in point()) {
        let d = cc_decompose(p);
        prop_assert!((d.q_nl1 + d.q_loc + d.q_c - 1.0).abs() < 1e-12);
        prop_assert!(d.h_cc >= 0.0 && d.h_cc <= p.alpha + 1e-15);
        if p.v >= FRAC_1_SQRT_2 {
            prop_assert!(d.q_nl1 >= 0.0 && d.q_loc >= -1e-15);
            prop_assert!(d.reconstruct().max_abs_diff(&family_box(p)) < 1e-12);
        }
    }

    #[test]
    fn attack_rate_increases_with_visibility(alpha in 0.01..=1.0f64, v in FRAC_1_SQRT_2..0.99f64) {
        for copies in 1..=3 {
            let lo = cc_rate_upper(FamilyPoint::new(alpha, v).unwrap(), copies).unwrap();
            let hi = cc_rate_upper(FamilyPoint::new(alpha, v + 0.01).unwrap(), copies).unwrap();
            prop_assert!(hi >= lo - 1e-12, "copies {copies}: {lo} -> {hi}");
        }
    }

    #[test]
    fn error_term_matches_conditional_entropy(p in point()) {
        let h = cond_entropy_ab(&family_box(p), 0, 2).unwrap();
        prop_assert!((h - diqka::rates::error_term_family(p)).abs() < 1e-12);
        let w = cond_entropy_ab(&xor_wired_family(p, 2).unwrap(), 0, 2).unwrap();
        prop_assert!((w - diqka::rates::wired_error_term(p)).abs() < 1e-12);
    }
}

#[test]
fn catalog_counts() {
    assert_eq!(catalog_2in().len(), 82);
    assert_eq!(catalog_3in().len(), 252);
}

#[test]
fn extreme_boxes() {
    assert!((chsh(&pr_box()).unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(chsh(&white_noise(Scenario::bell()).unwrap()).unwrap(), 0.0);
    assert!((chsh(&correlated_box(Scenario::bell()).unwrap()).unwrap() - 2.0).abs() < 1e-12);
    let pr = pr_box_on(Scenario::protocol()).unwrap();
    assert!(pr.is_no_signalling(1e-12).no_signalling);
    assert!((h_cc(FamilyPoint::new(1.0, 1.0).unwrap()) - 1.0).abs() < 1e-12);
    // the parities of two PR boxes cancel under XOR
    let pair = xor_pair(2, Scenario::bell()).unwrap();
    let w = apply_wiring(&pair, &[pr_box(), pr_box()]).unwrap();
    assert!(w.max_abs_diff(&correlated_box(Scenario::bell()).unwrap()) < 1e-12);
}

#[test]
fn radau_rules_are_exact_to_degree_2m_minus_2() {
    for m in 2..=12 {
        let rule = gauss_radau(m).unwrap();
        assert!((rule.nodes[m - 1] - 1.0).abs() < 1e-14);
        for k in 0..=(2 * m - 2) {
            let exact = 1.0 / (k as f64 + 1.0);
            let got = rule.integrate(|t| t.powi(k as i32));
            assert!((got - exact).abs() < 1e-10, "m {m} k {k}: {got}");
        }
    }
}
