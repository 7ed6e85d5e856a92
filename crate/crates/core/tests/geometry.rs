use approx::assert_relative_eq;
use proptest::prelude::*;
use ypq_core::geometry::*;
use ypq_core::{Error, Geometry, Geometry32};

#[test]
fn two_one_values() {
    let gp: Geometry = solve_geometry(2, 1).unwrap();
    assert_relative_eq!(gp.a, 0.38732652264175055, epsilon = 1e-14);
    assert!((gp.y_minus + 0.32569).abs() < 1e-5);
    assert!((gp.y_plus - 0.42431).abs() < 1e-5);
    assert!((gp.y3 - 1.40139).abs() < 1e-5);
    assert!((gp.tau - 0.45226).abs() < 1e-5);
    assert_eq!(gp.sigma, 6);
}

#[test]
fn three_two_values() {
    let gp = solve_geometry(3, 2).unwrap();
    assert_relative_eq!(gp.a, 0.18085763074788713, epsilon = 1e-14);
    assert!((gp.y_minus + 0.22871).abs() < 1e-5);
    assert!((gp.y_plus - 0.27129).abs() < 1e-5);
    assert_eq!(gp.sigma, 12);
}

#[test]
fn roots_sum_to_three_halves() {
    for (p, q) in label_lattice(8) {
        let gp = solve_geometry(p, q).unwrap();
        assert_relative_eq!(gp.y_minus + gp.y_plus + gp.y3, 1.5, epsilon = 1e-13);
        assert_relative_eq!(gp.y_minus * gp.y_plus * gp.y3, -gp.a / 2.0, epsilon = 1e-13);
    }
}

#[test]
fn upper_labels_rejected_with_mirror_hint() {
    match solve_geometry(2, 3) {
        Err(Error::InvalidLabel { reason, .. }) => assert!(reason.contains("(2,1)"), "{reason}"),
        other => panic!("expected InvalidLabel, got {other:?}"),
    }
    assert!(matches!(solve_geometry(4, 2), Err(Error::InvalidLabel { .. })));
    assert!(matches!(solve_geometry(1, 1), Err(Error::InvalidLabel { .. })));
    assert!(matches!(solve_geometry(3, 6), Err(Error::InvalidLabel { .. })));
}

#[test]
fn mirror_is_an_involution_and_keeps_sigma() {
    for p in 2..10u32 {
        for q in 1..2 * p {
            if gcd(p as u64, q as u64) != 1 {
                continue;
            }
            let (p2, q2) = mirrored_label(p, q);
            assert_eq!(mirrored_label(p2, q2), (p, q));
            assert_eq!(sigma_for(p, q, SigmaRule::Prose), sigma_for(p2, q2, SigmaRule::Prose));
        }
    }
}

#[test]
fn sigma_rules_agree() {
    for (p, q) in label_lattice(12) {
        let a = solve_geometry_with::<f64>(p, q, SigmaRule::Prose).unwrap();
        let b = solve_geometry_with::<f64>(p, q, SigmaRule::Display).unwrap();
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.a, b.a);
    }
}

#[test]
fn single_precision_alias() {
    let g32: Geometry32 = solve_geometry_with::<f32>(3, 2, SigmaRule::Prose).unwrap();
    let g64 = solve_geometry(3, 2).unwrap();
    assert!((g32.a as f64 - g64.a).abs() < 1e-5);
    assert!((g32.to_f64().tau - g64.tau).abs() < 1e-4);
}

#[test]
fn profiles_reject_outside() {
    let gp = solve_geometry(2, 1).unwrap();
    assert!(eval_profiles(&gp, 0.0).is_ok());
    assert!(matches!(eval_profiles(&gp, gp.y_plus + 0.01), Err(Error::OutOfRange { .. })));
}

proptest! {
    #[test]
    fn lattice_invariants(p in 2u32..16, q in 1u32..16) {
        prop_assume!(q < p && gcd(p as u64, q as u64) == 1);
        let gp = solve_geometry(p, q).unwrap();
        for c in check_invariants(&gp) {
            prop_assert!(c.pass, "{} residual {}", c.name, c.residual);
        }
        let pv = eval_profiles(&gp, 0.5 * (gp.y_minus + gp.y_plus)).unwrap();
        prop_assert!(pv.w > 0.0 && pv.r > 0.0 && pv.rho > 0.0);
    }

    #[test]
    fn quantization_ratio_exceeds_one(a in 0.001f64..0.999) {
        prop_assert!(quantization_ratio(a) > 1.0);
    }
}
