//! Eigenbasis of `T_nm = (1/sinθ) ∂θ sinθ ∂θ - ((n + 2m cosθ)/sinθ)^2` on
//! `L^2((0,π), sinθ dθ)`.
//!
//! With `a = |n+2m|`, `b = |n-2m|` the eigenfunctions are
//! `C sin^a(θ/2) cos^b(θ/2) P_j^{(a,b)}(cosθ)` and `T v = -Λ v` with
//! `Λ = L(L+1) - 4m^2`, `L = j + (a+b)/2 = j + max(|n|, 2|m|)`.

use crate::scalar::Real;
use crate::specfun::{gauss_jacobi, jacobi, ln_factorial};
use nalgebra::DMatrix;
use num_dual::Dual2_64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularMode {
    pub n: i64,
    pub m: i64,
    pub j: u32,
    pub lambda_cap: f64,
    pub norm_const: f64,
}

/// `(|n+2m|, |n-2m|)`.
pub fn exponents(n: i64, m: i64) -> (u32, u32) {
    ((n + 2 * m).unsigned_abs() as u32, (n - 2 * m).unsigned_abs() as u32)
}

/// `Λ_nmj` as an exact integer.
pub fn angular_eigenvalue_int(n: i64, m: i64, j: u32) -> i64 {
    let big_l = j as i64 + n.abs().max(2 * m.abs());
    big_l * (big_l + 1) - 4 * m * m
}

pub fn angular_eigenvalue(n: i64, m: i64, j: u32) -> f64 {
    angular_eigenvalue_int(n, m, j) as f64
}

/// `C_nmj` evaluated in log space.
pub fn norm_const(n: i64, m: i64, j: u32) -> f64 {
    let (a, b) = exponents(n, m);
    let (a, b, j) = (a as u64, b as u64, j as u64);
    let ln = ((2 * j + a + b + 1) as f64).ln() + ln_factorial(j) + ln_factorial(j + a + b)
        - std::f64::consts::LN_2
        - ln_factorial(j + a)
        - ln_factorial(j + b);
    (0.5 * ln).exp()
}

pub fn angular_mode(n: i64, m: i64, j: u32) -> AngularMode {
    AngularMode { n, m, j, lambda_cap: angular_eigenvalue(n, m, j), norm_const: norm_const(n, m, j) }
}

impl AngularMode {
    pub fn exponents(&self) -> (u32, u32) {
        exponents(self.n, self.m)
    }

    pub fn eval<T: Real>(&self, theta: T) -> T {
        let (a, b) = self.exponents();
        let half = theta * T::c(0.5);
        let s = half.sin().powi(a as i32);
        let c = half.cos().powi(b as i32);
        T::c(self.norm_const) * s * c * jacobi(a as f64, b as f64, self.j, theta.cos())
    }

    /// `(v, v', v'')` at `theta`.
    pub fn eval_derivs(&self, theta: f64) -> (f64, f64, f64) {
        crate::scalar::derivs2(|t: Dual2_64| self.eval(t), theta)
    }

    /// Pointwise `T_nm v + Λ v`.
    pub fn residual(&self, theta: f64) -> f64 {
        let (v, d1, d2) = self.eval_derivs(theta);
        let (s, c) = theta.sin_cos();
        let k = (self.n as f64 + 2.0 * self.m as f64 * c) / s;
        d2 + c / s * d1 - k * k * v + self.lambda_cap * v
    }
}

/// Gram matrix of `v_nm0..v_nm{j_max}` under `sinθ dθ`, by Gauss–Jacobi in `cosθ`.
pub fn angular_gram(n: i64, m: i64, j_max: u32) -> DMatrix<f64> {
    let (a, b) = exponents(n, m);
    let rule = gauss_jacobi(a as f64, b as f64, j_max as usize + 2).expect("Gauss-Jacobi rule");
    let modes: Vec<AngularMode> = (0..=j_max).map(|j| angular_mode(n, m, j)).collect();
    // v^2 = C^2 2^{-a-b} (1-s)^a (1+s)^b P^2
    let scale = 0.5f64.powi((a + b) as i32);
    let np = j_max as usize + 1;
    let mut vals = DMatrix::zeros(rule.len(), np);
    for (i, &x) in rule.nodes.iter().enumerate() {
        for (k, md) in modes.iter().enumerate() {
            vals[(i, k)] = md.norm_const * jacobi(a as f64, b as f64, md.j, x);
        }
    }
    let mut g = DMatrix::zeros(np, np);
    for r in 0..np {
        for c in r..np {
            let s: f64 = (0..rule.len()).map(|i| rule.weights[i] * vals[(i, r)] * vals[(i, c)]).sum();
            g[(r, c)] = s * scale;
            g[(c, r)] = s * scale;
        }
    }
    g
}
