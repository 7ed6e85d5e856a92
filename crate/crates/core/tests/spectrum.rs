use rand::{Rng, SeedableRng};
use ypq_core::geometry::solve_geometry;
use ypq_core::radial::GalerkinSolver;
use ypq_core::spectrum::*;
use ypq_core::validation::spectrum_modes;

#[test]
fn twenty_modes_orthonormal() {
    let modes = spectrum_modes(&GalerkinSolver::default()).unwrap();
    assert_eq!(modes.len(), 20);
    let g = product_gram(&modes).unwrap();
    for a in 0..20 {
        for b in 0..20 {
            let e = if a == b { 1.0 } else { 0.0 };
            assert!((g[(a, b)] - e).abs() < 1e-9);
        }
    }
}

#[test]
fn laplacian_residual_random_points() {
    let gp = solve_geometry(3, 2).unwrap();
    let t = TruncationPolicy { n_max: 1, m_max: 1, l_max: 1, k_max: 1, j_max: 1, lambda_max: Some(80.0) };
    let modes = build_spectrum(&gp, &t, &GalerkinSolver::default()).unwrap();
    assert!(!modes.is_empty());
    assert!(modes.iter().all(|m| m.lambda <= 80.0));
    let mut rng = rand::rngs::StdRng::seed_from_u64(9);
    for md in &modes {
        for _ in 0..10 {
            let y = rng.gen_range(gp.y_minus..gp.y_plus);
            let th = rng.gen_range(0.01..3.13);
            let r = laplacian_residual(md, y, th);
            assert!(r < 1e-6, "{:?} residual {r}", md.index);
        }
    }
}

#[test]
fn conjugate_modes_share_eigenvalues() {
    let gp = solve_geometry(2, 1).unwrap();
    let t = TruncationPolicy { n_max: 1, m_max: 1, l_max: 1, k_max: 1, j_max: 0, lambda_max: None };
    let modes = build_spectrum(&gp, &t, &GalerkinSolver::default()).unwrap();
    for md in &modes {
        let c = md.index.conjugate();
        let other = modes.iter().find(|x| x.index == c).unwrap();
        assert!((other.lambda - md.lambda).abs() < 1e-9 * md.lambda.max(1.0));
    }
}

#[test]
fn eval_u_phase_and_range() {
    let gp = solve_geometry(2, 1).unwrap();
    let md = build_eigenmode(&gp, YModeIndex::new(1, 0, 1, 0, 0), &GalerkinSolver::default()).unwrap();
    let pt = YPoint { y: 0.1, theta: 1.0, phi: 0.3, psi: 0.2, alpha: 0.7 };
    let u = eval_u(&md, &pt).unwrap();
    let a = md.amplitude(0.1, 1.0).unwrap();
    assert!((u.norm() - a.abs() * phase_norm(&gp)).abs() < 1e-14);
    let bad = YPoint { theta: 4.0, ..pt };
    assert!(eval_u(&md, &bad).is_err());
}
