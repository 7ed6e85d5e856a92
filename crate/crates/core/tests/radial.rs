use proptest::prelude::*;
use ypq_core::geometry::solve_geometry;
use ypq_core::radial::shooting::shooting_auto;
use ypq_core::radial::*;
use ypq_core::Error;

#[test]
fn galerkin_matches_shooting() {
    for (p, q) in [(2, 1), (3, 2)] {
        let gp = solve_geometry(p, q).unwrap();
        for (m, l, lam) in [(1, 0, 2.0), (0, 1, 0.0), (2, -1, 6.0)] {
            let prob = RadialProblem::new(&gp, m, l, lam);
            let modes = solve_radial_auto(&prob, 3).unwrap();
            for md in &modes {
                let s = shooting_auto(&prob, md.k).unwrap();
                assert!((s - md.ell).abs() < 1e-8 * md.ell.abs().max(1.0), "{p},{q} {m},{l} k={} {} vs {s}", md.k, md.ell);
            }
        }
    }
}

#[test]
fn kernel_mode_is_constant() {
    let gp = solve_geometry(3, 2).unwrap();
    let md = solve_radial_auto(&RadialProblem::new(&gp, 0, 0, 0.0), 0).unwrap().remove(0);
    assert!(md.ell.abs() < 1e-9);
    let want = 1.0 / gp.rho_integral().sqrt();
    for i in 0..=10 {
        let y = gp.y_minus + (gp.y_plus - gp.y_minus) * i as f64 / 10.0;
        assert!((md.eval_unchecked(y) - want).abs() < 1e-10 * want);
    }
}

#[test]
fn exponents_closed_form() {
    let gp = solve_geometry(3, 2).unwrap();
    assert_eq!(char_exponents(&gp, 0, 1), (12.0, 6.0));
    assert_eq!(char_exponents(&gp, 2, -1), (14.0, 4.0));
}

#[test]
fn positive_near_lower_end_and_range_checked() {
    let gp = solve_geometry(2, 1).unwrap();
    let modes = solve_radial_auto(&RadialProblem::new(&gp, 1, 0, 2.0), 3).unwrap();
    for md in &modes {
        let y = gp.y_minus + 1e-3 * (gp.y_plus - gp.y_minus);
        assert!(md.eval(y).unwrap() > 0.0);
        assert!(matches!(md.eval(gp.y_plus + 1e-3), Err(Error::OutOfRange { .. })));
    }
}

#[test]
fn too_small_basis_is_rejected() {
    let gp = solve_geometry(2, 1).unwrap();
    assert!(solve_radial(&RadialProblem::new(&gp, 0, 0, 0.0), 10, 12).is_err());
}

#[test]
fn refinement_is_stable() {
    let gp = solve_geometry(2, 1).unwrap();
    let prob = RadialProblem::new(&gp, 1, 1, 2.0);
    let a = solve_radial(&prob, 4, 32).unwrap();
    let b = solve_radial(&prob, 4, 64).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.ell - y.ell).abs() < 1e-10 * x.ell.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conjugate_sector_has_same_spectrum(m in -2i64..=2, l in -2i64..=2, lam in 0u32..4) {
        let gp = solve_geometry(2, 1).unwrap();
        let lam = (lam * (lam + 1)) as f64;
        let a = solve_radial_auto(&RadialProblem::new(&gp, m, l, lam), 2).unwrap();
        let b = solve_radial_auto(&RadialProblem::new(&gp, -m, -l, lam), 2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.ell - y.ell).abs() < 1e-9 * x.ell.abs().max(1.0));
        }
    }

    #[test]
    fn eigenvalues_increase_with_lambda(m in -2i64..=2, l in -1i64..=1, lam in 0.0f64..20.0, dl in 0.5f64..10.0) {
        let gp = solve_geometry(3, 2).unwrap();
        let a = solve_radial_auto(&RadialProblem::new(&gp, m, l, lam), 2).unwrap();
        let b = solve_radial_auto(&RadialProblem::new(&gp, m, l, lam + dl), 2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y.ell > x.ell);
        }
        // strictly increasing in k
        prop_assert!(a.windows(2).all(|w| w[1].ell > w[0].ell));
    }
}
