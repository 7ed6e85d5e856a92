use proptest::prelude::*;
use ypq_core::angular::*;
use ypq_core::specfun::gauss_legendre_on;

#[test]
fn eigenvalue_examples() {
    assert_eq!(angular_eigenvalue_int(0, 0, 0), 0);
    assert_eq!(angular_eigenvalue_int(0, 0, 1), 2);
    assert_eq!(angular_eigenvalue_int(1, 0, 0), 2);
    assert_eq!(angular_eigenvalue_int(0, 1, 0), 2);
    assert_eq!(angular_eigenvalue_int(1, 0, 1), 6);
}

#[test]
fn gram_identity_over_box() {
    for n in -3i64..=3 {
        for m in -3i64..=3 {
            let g = angular_gram(n, m, 10);
            for a in 0..11 {
                for b in 0..11 {
                    let e = if a == b { 1.0 } else { 0.0 };
                    assert!((g[(a, b)] - e).abs() < 1e-11, "n={n} m={m} ({a},{b}) {}", g[(a, b)]);
                }
            }
        }
    }
}

#[test]
fn norm_by_plain_legendre_rule() {
    // independent of the Jacobi machinery: integrate in θ directly
    let (x, w) = gauss_legendre_on(0.0, std::f64::consts::PI, 200).unwrap();
    for (n, m, j) in [(0, 0, 3), (2, -1, 2), (-3, 1, 4), (1, 2, 0)] {
        let md = angular_mode(n, m, j);
        let v: f64 = x.iter().zip(&w).map(|(&t, &wi)| wi * t.sin() * md.eval(t).powi(2)).sum();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }
}

proptest! {
    #[test]
    fn ode_residual_small(n in -3i64..=3, m in -3i64..=3, j in 0u32..=10, th in 0.05f64..3.09) {
        let md = angular_mode(n, m, j);
        prop_assert!(md.residual(th).abs() < 1e-7);
    }

    #[test]
    fn eigenvalue_symmetric(n in -5i64..=5, m in -5i64..=5, j in 0u32..8) {
        prop_assert_eq!(angular_eigenvalue_int(n, m, j), angular_eigenvalue_int(-n, -m, j));
        prop_assert!(angular_eigenvalue_int(n, m, j) >= 0);
    }
}
