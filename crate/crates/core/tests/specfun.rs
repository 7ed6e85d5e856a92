use approx::assert_relative_eq;
use num_dual::Dual2_64;
use proptest::prelude::*;
use ypq_core::scalar::derivs2;
use ypq_core::specfun::*;

fn binom(n: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i as f64) / (i + 1) as f64)
}

/// Explicit sum form of the Jacobi polynomial.
fn jacobi_sum(a: f64, b: f64, n: u32, x: f64) -> f64 {
    (0..=n)
        .map(|s| binom(n as f64 + a, n - s) * binom(n as f64 + b, s) * ((x - 1.0) / 2.0).powi(s as i32) * ((x + 1.0) / 2.0).powi((n - s) as i32))
        .sum()
}

fn beta_fn(x: f64, y: f64) -> f64 {
    (ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp()
}

#[test]
fn gegenbauer_small() {
    assert_relative_eq!(gegenbauer(2.0, 2, 1.0f64), 10.0, epsilon = 1e-13);
    assert_relative_eq!(gegenbauer(1.0, 3, 0.5f64), -1.0, epsilon = 1e-13);
}

#[test]
fn legendre_minus_order() {
    let x = 0.3f64;
    let p = assoc_legendre(3, 2, x).unwrap();
    let m = assoc_legendre(3, -2, x).unwrap();
    assert_relative_eq!(m, p / 120.0, epsilon = 1e-14);
    assert!(assoc_legendre(2, 3, x).is_err());
    assert!(assoc_legendre(2, 1, 1.5f64).is_err());
}

#[test]
fn gauss_jacobi_weights_sum_to_moment() {
    for (a, b) in [(0.0, 0.0), (0.5, 0.5), (3.0, 1.0), (2.7, 0.0), (12.0, 4.0)] {
        let r = gauss_jacobi(a, b, 12).unwrap();
        let total: f64 = r.weights.iter().sum();
        let want = 2f64.powf(a + b + 1.0) * beta_fn(a + 1.0, b + 1.0);
        assert_relative_eq!(total, want, max_relative = 1e-13);
    }
}

proptest! {
    #[test]
    fn jacobi_matches_explicit_sum(a in 0.0f64..6.0, b in 0.0f64..6.0, n in 0u32..12, x in -1.0f64..1.0) {
        let r = jacobi(a, b, n, x);
        let s = jacobi_sum(a, b, n, x);
        prop_assert!((r - s).abs() <= 1e-10 * s.abs().max(1.0), "{r} vs {s}");
    }

    #[test]
    fn gauss_jacobi_exact_on_monomials(a in 0.0f64..5.0, b in 0.0f64..5.0, k in 0i32..15) {
        // ∫ (1-x)^a (1+x)^b ((1+x)/2)^k dx = 2^{a+b+1} B(a+1, b+k+1)
        let r = gauss_jacobi(a, b, 8).unwrap();
        let v = r.integrate(|x| ((1.0 + x) / 2.0).powi(k));
        let want = 2f64.powf(a + b + 1.0) * beta_fn(a + 1.0, b + k as f64 + 1.0);
        prop_assert!((v - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn legendre_ode_residual(l in 0u32..10, m in -9i32..10, x in -0.95f64..0.95) {
        prop_assume!(m.unsigned_abs() <= l);
        let (p, d1, d2) = derivs2(|t: Dual2_64| assoc_legendre(l, m, t).unwrap(), x);
        let lf = l as f64;
        let mf = m as f64;
        let res = (1.0 - x * x) * d2 - 2.0 * x * d1 + (lf * (lf + 1.0) - mf * mf / (1.0 - x * x)) * p;
        let scale = ((1.0 - x * x) * d2).abs() + (2.0 * x * d1).abs() + (lf * (lf + 1.0) * p).abs() + 1.0;
        prop_assert!(res.abs() < 1e-10 * scale);
    }

    #[test]
    fn gegenbauer_via_jacobi(lam in 0.6f64..5.0, n in 0u32..10, x in -1.0f64..1.0) {
        // C_n^λ = (2λ)_n / (λ+1/2)_n · P_n^{(λ-1/2, λ-1/2)}
        let ratio = (ln_gamma(2.0 * lam + n as f64) - ln_gamma(2.0 * lam) - ln_gamma(lam + 0.5 + n as f64) + ln_gamma(lam + 0.5)).exp();
        let want = ratio * jacobi_sum(lam - 0.5, lam - 0.5, n, x);
        let got = gegenbauer(lam, n, x);
        prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn ortho_family_is_orthonormal(a in 0.0f64..8.0, b in 0.0f64..8.0) {
        let n = 10;
        let fam = OrthoJacobi::new(a, b, n);
        let r = gauss_jacobi(a, b, n + 2).unwrap();
        for i in 0..n {
            for j in 0..n {
                let v = r.integrate(|x| { let p = fam.values(n, x); p[i] * p[j] });
                let e = if i == j { 1.0 } else { 0.0 };
                prop_assert!((v - e).abs() < 1e-11);
            }
        }
    }
}
