use diqka::boxes::{correlated_box, family_box, FamilyPoint, Scenario};
use diqka::conic::{InteriorPoint, SdpBackend, SolverConfig};
use diqka::entropy_sdp::{
    build_relaxation, build_relaxation_with, entropy_lower_bound, guessing_probability, sdpa_string, solve_relaxation,
    BasisExtras, ConstraintMode, RelaxationOptions,
};
use diqka::wirings::xor_wired_family;

mod support;
use support::sdpa_reader::parse_sdpa;

fn bound(p: (f64, f64), m: usize) -> f64 {
    entropy_lower_bound(&family_box(FamilyPoint::new(p.0, p.1).unwrap()), m, 2).unwrap()
}

#[test]
fn ideal_point_certifies_about_one_bit_in_both_modes() {
    let b = family_box(FamilyPoint::new(1.0, 1.0).unwrap());
    let cfg = SolverConfig::default();
    let full = solve_relaxation(&build_relaxation(&b, 8, 2).unwrap(), &cfg).unwrap();
    assert!(full.value >= 0.9, "{full:?}");
    assert!(full.raw <= 1.0 + 1e-6);
    let opts = RelaxationOptions {
        mode: ConstraintMode::Coarse,
        ..RelaxationOptions::new(8, 2)
    };
    let coarse = solve_relaxation(&build_relaxation_with(&b, opts).unwrap(), &cfg).unwrap();
    assert!(
        (coarse.value - full.value).abs() < 1e-3,
        "{} vs {}",
        coarse.value,
        full.value
    );
}

#[test]
fn local_boxes_certify_nothing() {
    for p in [(0.0, 1.0), (1.0, 0.7), (0.5, 0.5)] {
        let h = bound(p, 4);
        assert!((0.0..=1e-3).contains(&h), "{p:?}: {h}");
    }
}

#[test]
fn more_nodes_do_not_lower_the_bound() {
    for p in [(1.0, 0.9), (0.5, 0.95), (0.02, 0.90236)] {
        let (h4, h8) = (bound(p, 4), bound(p, 8));
        assert!(h4 <= h8 + 1e-4, "{p:?}: m=4 {h4}, m=8 {h8}");
        assert!((0.0..=1.0 + 1e-6).contains(&h8));
    }
}

#[test]
fn extra_basis_words_tighten_the_bound() {
    let b = xor_wired_family(FamilyPoint::new(0.02, 0.90236).unwrap(), 2).unwrap();
    let cfg = SolverConfig::default();
    let bare = RelaxationOptions {
        extras: BasisExtras::None,
        ..RelaxationOptions::new(4, 2)
    };
    let bare = solve_relaxation(&build_relaxation_with(&b, bare).unwrap(), &cfg).unwrap();
    let full = solve_relaxation(&build_relaxation(&b, 4, 2).unwrap(), &cfg).unwrap();
    assert!(bare.value <= full.value + 1e-4, "{} vs {}", bare.value, full.value);
}

#[test]
fn guessing_probability_examples() {
    let ideal = guessing_probability(&family_box(FamilyPoint::new(1.0, 1.0).unwrap()), 2).unwrap();
    assert!((ideal.p_guess - 0.5).abs() < 1e-3, "{ideal:?}");
    assert!((ideal.h_min - 1.0).abs() < 3e-3);
    let corr = guessing_probability(&correlated_box(Scenario::protocol()).unwrap(), 2).unwrap();
    assert!((corr.p_guess - 1.0).abs() < 1e-6, "{corr:?}");
    assert!(corr.h_min.abs() < 1e-5);
}

#[test]
fn sdpa_export_round_trips() {
    let b = family_box(FamilyPoint::new(0.3, 0.9).unwrap());
    for mode in [ConstraintMode::Full, ConstraintMode::Coarse] {
        let r = build_relaxation_with(
            &b,
            RelaxationOptions {
                mode,
                ..RelaxationOptions::new(3, 2)
            },
        )
        .unwrap();
        let p = r.node_sdp(1).unwrap();
        let text = sdpa_string(&p, "round trip");
        let q = parse_sdpa(&text).unwrap();
        assert_eq!(q.num_vars, p.num_vars);
        assert_eq!(q.block_dim, r.moments.dim());
        assert_eq!(q.objective, p.objective);
        assert_eq!(q.objective_constant, p.objective_constant);
        let sorted = |mut e: Vec<(usize, usize, f64)>| {
            e.retain(|t| t.2 != 0.0);
            e.sort_by(|a, b| a.partial_cmp(b).unwrap());
            e
        };
        assert_eq!(sorted(q.constant.clone()), sorted(p.constant.clone()));
        for (a, b) in q.coefficients.iter().zip(&p.coefficients) {
            assert_eq!(sorted(a.clone()), sorted(b.clone()));
        }
        let norm = |eqs: &Vec<(Vec<(usize, f64)>, f64)>| {
            eqs.iter()
                .map(|(t, r)| {
                    let mut t: Vec<_> = t.iter().copied().filter(|x| x.1 != 0.0).collect();
                    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    (t, *r)
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(norm(&q.equalities), norm(&p.equalities));
        if mode == ConstraintMode::Coarse {
            assert!(!p.equalities.is_empty());
            assert!(text
                .lines()
                .any(|l| l.trim() == format!("{} {}", p.block_dim, -2 * p.equalities.len() as i64)));
        }
    }
}

#[test]
fn parsed_problem_solves_to_the_same_value() {
    let b = family_box(FamilyPoint::new(0.5, 0.95).unwrap());
    let opts = RelaxationOptions {
        mode: ConstraintMode::Coarse,
        ..RelaxationOptions::new(2, 2)
    };
    let r = build_relaxation_with(&b, opts).unwrap();
    let p = r.node_sdp(0).unwrap();
    let q = parse_sdpa(&sdpa_string(&p, "")).unwrap();
    let cfg = SolverConfig::default();
    let direct = InteriorPoint.solve(&p, &cfg).unwrap();
    let parsed = InteriorPoint.solve(&q, &cfg).unwrap();
    assert!((direct.dual_value - parsed.dual_value).abs() < 1e-6);
}
