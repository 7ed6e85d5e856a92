use ypq_core::cache::*;
use ypq_core::geometry::solve_geometry;
use ypq_core::radial::{GalerkinSolver, RadialProblem, RadialSolver};
use ypq_core::spectrum::{build_spectrum, TruncationPolicy};

fn problem() -> RadialProblem {
    RadialProblem::new(&solve_geometry(2, 1).unwrap(), 1, 0, 2.0)
}

#[test]
fn second_request_hits() {
    let dir = tempfile::tempdir().unwrap();
    let s = CachedSolver { inner: GalerkinSolver::default(), cache: ModeCache::new(dir.path()).unwrap() };
    let a = s.solve(&problem(), 3).unwrap();
    let b = s.solve(&problem(), 3).unwrap();
    assert_eq!(s.cache.solve_count(), 1);
    assert_eq!(a, b);
}

#[test]
fn keys_distinguish_basis_and_kmax() {
    let p = problem();
    let k1 = CacheKey::for_problem(&p, 32, 3);
    let k2 = CacheKey::for_problem(&p, 40, 3);
    let k3 = CacheKey::for_problem(&p, 32, 4);
    assert_ne!(k1.file_name(), k2.file_name());
    assert_ne!(k1.file_name(), k3.file_name());
    assert_eq!(k1.canonical(), CacheKey::for_problem(&p, 32, 3).canonical());
    assert!(k1.canonical().contains("Lambda=2.00000000000000e0"));
    let dir = tempfile::tempdir().unwrap();
    for n in [32, 40] {
        let s = CachedSolver { inner: GalerkinSolver { n_basis: Some(n) }, cache: ModeCache::new(dir.path()).unwrap() };
        s.solve(&p, 3).unwrap();
        assert_eq!(s.cache.solve_count(), 1);
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn corrupt_entry_is_resolved() {
    let dir = tempfile::tempdir().unwrap();
    let fresh = GalerkinSolver::default().solve(&problem(), 2).unwrap();
    let s = CachedSolver { inner: GalerkinSolver::default(), cache: ModeCache::new(dir.path()).unwrap() };
    s.solve(&problem(), 2).unwrap();
    let key = CacheKey::for_problem(&problem(), s.n_basis(2), 2);
    let path = s.cache.path_for(&key);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("ell", "elk", 1)).unwrap();
    let again = s.solve(&problem(), 2).unwrap();
    assert_eq!(s.cache.solve_count(), 2);
    assert_eq!(again, fresh);
    std::fs::write(&path, "not json").unwrap();
    assert_eq!(s.solve(&problem(), 2).unwrap(), fresh);
    assert_eq!(s.cache.solve_count(), 3);
}

#[test]
fn cache_is_pure_memoization() {
    let dir = tempfile::tempdir().unwrap();
    let gp = solve_geometry(3, 2).unwrap();
    let t = TruncationPolicy { n_max: 1, m_max: 1, l_max: 1, k_max: 1, j_max: 0, lambda_max: None };
    let plain = build_spectrum(&gp, &t, &GalerkinSolver::default()).unwrap();
    let s = CachedSolver { inner: GalerkinSolver::default(), cache: ModeCache::new(dir.path()).unwrap() };
    let cold = build_spectrum(&gp, &t, &s).unwrap();
    let warm = build_spectrum(&gp, &t, &s).unwrap();
    for ((a, b), c) in plain.iter().zip(&cold).zip(&warm) {
        assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
        assert_eq!(a.lambda.to_bits(), c.lambda.to_bits());
        assert_eq!(a.radial.coeffs, c.radial.coeffs);
    }
}
