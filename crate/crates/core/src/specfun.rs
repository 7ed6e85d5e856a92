//! Orthogonal polynomials, log-Gamma and Gauss–Jacobi quadrature.
//!
//! Conventions: `jacobi(alpha, beta, ..)` is orthogonal against
//! `(1-x)^alpha (1+x)^beta` on [-1, 1]; the same ordering is used for
//! `QuadratureRule`.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `P_j^{(alpha,beta)}(x)` by the three-term recurrence.
pub fn jacobi<T: Real>(alpha: f64, beta: f64, j: u32, x: T) -> T {
    let one = T::one();
    if j == 0 {
        return one;
    }
    let (a, b) = (alpha, beta);
    let mut p0 = one;
    let mut p1 = T::c(a + 1.0) + T::c(0.5 * (a + b + 2.0)) * (x - one);
    for n in 2..=j {
        let n = n as f64;
        let s = 2.0 * n + a + b;
        let c0 = 2.0 * n * (n + a + b) * (s - 2.0);
        let c1 = s - 1.0;
        let c2 = s * (s - 2.0);
        let c3 = a * a - b * b;
        let c4 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * s;
        let p2 = (T::c(c1) * (T::c(c2) * x + T::c(c3)) * p1 - T::c(c4) * p0) / T::c(c0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Derivative of `P_j^{(alpha,beta)}` via `P_{j-1}^{(alpha+1,beta+1)}`.
pub fn jacobi_deriv<T: Real>(alpha: f64, beta: f64, j: u32, x: T) -> T {
    if j == 0 {
        return T::zero();
    }
    T::c(0.5 * (j as f64 + alpha + beta + 1.0)) * jacobi(alpha + 1.0, beta + 1.0, j - 1, x)
}

/// `ln h_j` where `h_j = ∫ (1-x)^α (1+x)^β P_j² dx`.
pub fn ln_jacobi_h(alpha: f64, beta: f64, j: u32) -> f64 {
    let (a, b, n) = (alpha, beta, j as f64);
    let base = (a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(n + a + 1.0) + ln_gamma(n + b + 1.0)
        - ln_gamma(n + 1.0);
    if j == 0 {
        base - ln_gamma(a + b + 2.0)
    } else {
        base - (2.0 * n + a + b + 1.0).ln() - ln_gamma(n + a + b + 1.0)
    }
}

/// Closed form of `∫_0^1 z^a (1-z)^b P_j^{(a,b)}(1-2z)^2 dz`.
pub fn jacobi_norm_integral(a_exp: u32, b_exp: u32, j: u32) -> f64 {
    let (a, b) = (a_exp as f64, b_exp as f64);
    (ln_jacobi_h(a, b, j) - (a + b + 1.0) * std::f64::consts::LN_2).exp()
}

/// Recurrence coefficients of the orthonormal Jacobi family:
/// `x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}`.
/// Returns `(diag[0..n], off[0..n])` with `off[k] = b_k` (`off[0]` unused).
pub fn jacobi_matrix(alpha: f64, beta: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (alpha, beta);
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for k in 0..n {
        let kk = k as f64;
        let s = 2.0 * kk + a + b;
        diag[k] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k == 1 {
            let v = 4.0 * (1.0 + a) * (1.0 + b) / ((a + b + 2.0).powi(2) * (a + b + 3.0));
            off[k] = v.sqrt();
        } else if k > 1 {
            let v = 4.0 * kk * (kk + a) * (kk + b) * (kk + a + b)
                / (s * s * (s + 1.0) * (s - 1.0));
            off[k] = v.sqrt();
        }
    }
    (diag, off)
}

/// Orthonormal Jacobi family `p̂_k`, k < n, and their derivatives, at `x`.
pub struct OrthoJacobi {
    alpha: f64,
    beta: f64,
    diag: Vec<f64>,
    off: Vec<f64>,
    diag1: Vec<f64>,
    off1: Vec<f64>,
    p0: f64,
    p0_shift: f64,
}

impl OrthoJacobi {
    pub fn new(alpha: f64, beta: f64, n: usize) -> Self {
        let (diag, off) = jacobi_matrix(alpha, beta, n + 1);
        let (diag1, off1) = jacobi_matrix(alpha + 1.0, beta + 1.0, n + 1);
        OrthoJacobi {
            alpha,
            beta,
            diag,
            off,
            diag1,
            off1,
            p0: (-0.5 * ln_jacobi_h(alpha, beta, 0)).exp(),
            p0_shift: (-0.5 * ln_jacobi_h(alpha + 1.0, beta + 1.0, 0)).exp(),
        }
    }

    fn run<T: Real>(diag: &[f64], off: &[f64], p0: f64, n: usize, x: T, out: &mut Vec<T>) {
        out.clear();
        if n == 0 {
            return;
        }
        out.push(T::c(p0));
        for k in 0..n - 1 {
            let prev = if k == 0 { T::zero() } else { out[k - 1] * T::c(off[k]) };
            let next = ((x - T::c(diag[k])) * out[k] - prev) / T::c(off[k + 1]);
            out.push(next);
        }
    }

    /// Values `p̂_0..p̂_{n-1}` at `x`.
    pub fn values<T: Real>(&self, n: usize, x: T) -> Vec<T> {
        let mut v = Vec::with_capacity(n);
        Self::run(&self.diag, &self.off, self.p0, n, x, &mut v);
        v
    }

    /// Values and first derivatives using `p̂_k' = sqrt(k(k+α+β+1)) p̂_{k-1}^{(α+1,β+1)}`.
    pub fn values_and_derivs<T: Real>(&self, n: usize, x: T) -> (Vec<T>, Vec<T>) {
        let v = self.values(n, x);
        let mut s = Vec::with_capacity(n);
        Self::run(&self.diag1, &self.off1, self.p0_shift, n.saturating_sub(1), x, &mut s);
        let mut d = Vec::with_capacity(n);
        for k in 0..n {
            if k == 0 {
                d.push(T::zero());
            } else {
                let kk = k as f64;
                d.push(T::c((kk * (kk + self.alpha + self.beta + 1.0)).sqrt()) * s[k - 1]);
            }
        }
        (v, d)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Single orthonormal Jacobi value `p̂_j^{(α,β)}(x)`.
pub fn ortho_jacobi<T: Real>(alpha: f64, beta: f64, j: u32, x: T) -> T {
    let o = OrthoJacobi::new(alpha, beta, j as usize + 1);
    o.values(j as usize + 1, x)[j as usize]
}

/// Gegenbauer `C_n^{(λ)}(x)`.
pub fn gegenbauer<T: Real>(order: f64, degree: u32, x: T) -> T {
    let l = order;
    let mut c0 = T::one();
    if degree == 0 {
        return c0;
    }
    let mut c1 = T::c(2.0 * l) * x;
    for n in 2..=degree {
        let n = n as f64;
        let c2 = (T::c(2.0 * (n + l - 1.0)) * x * c1 - T::c(n + 2.0 * l - 2.0) * c0) / T::c(n);
        c0 = c1;
        c1 = c2;
    }
    c1
}

/// Associated Legendre `P_l^m(x)` with the Condon–Shortley phase.  `sin_t`
/// must equal `sqrt(1-x^2)`; passing it separately keeps the angular form
/// exact near the poles.
pub fn assoc_legendre_cs<T: Real>(l: u32, m: i32, x: T, sin_t: T) -> Result<T> {
    let ma = m.unsigned_abs();
    if ma > l {
        return Err(Error::DegreeOrderError { l, m });
    }
    // P_m^m = (-1)^m (2m-1)!! sin^m
    let mut pmm = T::one();
    for i in 0..ma {
        pmm = pmm * T::c(-(2.0 * i as f64 + 1.0)) * sin_t;
    }
    let mut val = pmm;
    if l > ma {
        let mut p0 = pmm;
        let mut p1 = x * T::c(2.0 * ma as f64 + 1.0) * pmm;
        for ll in (ma + 2)..=l {
            let lf = ll as f64;
            let mf = ma as f64;
            let p2 = (x * T::c(2.0 * lf - 1.0) * p1 - T::c(lf + mf - 1.0) * p0) / T::c(lf - mf);
            p0 = p1;
            p1 = p2;
        }
        val = p1;
    }
    if m < 0 {
        let sign = if ma % 2 == 0 { 1.0 } else { -1.0 };
        let ratio = (ln_factorial((l - ma) as u64) - ln_factorial((l + ma) as u64)).exp();
        val = val * T::c(sign * ratio);
    }
    Ok(val)
}

/// Associated Legendre `P_l^m(x)` for `x ∈ [-1, 1]`.
pub fn assoc_legendre<T: Real>(l: u32, m: i32, x: T) -> Result<T> {
    if x.re().abs() > 1.0 {
        return Err(Error::OutOfRange { value: x.re(), lo: -1.0, hi: 1.0 });
    }
    let s = (T::one() - x * x).sqrt();
    assoc_legendre_cs(l, m, x, s)
}

/// Gauss rule for `∫ (1-x)^α (1+x)^β f(x) dx`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha_exp: f64,
    pub beta_exp: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Eigenvalues and first eigenvector components of a symmetric tridiagonal
/// matrix by implicit QL with Wilkinson shifts.
fn tridiag_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    // e[i] couples i and i+1
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenFailure(format!("tridiagonal QL stalled at row {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Gauss–Jacobi rule with `n` nodes for weight `(1-x)^α (1+x)^β`.
///
/// Nodes start from the Golub–Welsch eigenvalues and are polished by Newton
/// on `p̂_n`; weights come from the Christoffel function `1/Σ p̂_k(x)^2`,
/// which stays accurate when the exponents are large.
pub fn gauss_jacobi(alpha: f64, beta: f64, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::IndexError("quadrature needs at least one node".into()));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::OutOfRange { value: alpha.min(beta), lo: -1.0, hi: f64::INFINITY });
    }
    let (diag, off) = jacobi_matrix(alpha, beta, n);
    let mut d = diag.clone();
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { off[i + 1] } else { 0.0 }).collect();
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    tridiag_ql(&mut d, &mut e, &mut z)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let fam = OrthoJacobi::new(alpha, beta, n + 1);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &i in &order {
        let mut x = d[i].clamp(-1.0 + 1e-300, 1.0 - 1e-300);
        for _ in 0..4 {
            let (v, dv) = fam.values_and_derivs(n + 1, x);
            if dv[n] == 0.0 {
                break;
            }
            let step = v[n] / dv[n];
            let xn = x - step;
            if !(xn > -1.0 && xn < 1.0) || step.abs() > 1e-6 {
                break;
            }
            x = xn;
            if step.abs() < 1e-17 {
                break;
            }
        }
        let v = fam.values(n, x);
        let k: f64 = v.iter().map(|p| p * p).sum();
        let w = 1.0 / k;
        if !(w.is_finite()) {
            return Err(Error::QuadratureUnderflow(format!(
                "weight at node {x} not finite for exponents ({alpha},{beta})"
            )));
        }
        nodes.push(x);
        weights.push(w);
    }
    Ok(QuadratureRule { nodes, weights, alpha_exp: alpha, beta_exp: beta })
}

/// Gauss–Legendre on `[lo, hi]` (nodes, weights).
pub fn gauss_legendre_on(lo: f64, hi: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = gauss_jacobi(0.0, 0.0, n)?;
    let h = 0.5 * (hi - lo);
    let c = 0.5 * (hi + lo);
    Ok((
        r.nodes.iter().map(|x| c + h * x).collect(),
        r.weights.iter().map(|w| w * h).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_jacobi_values() {
        assert_eq!(jacobi(0.3, 1.7, 0, 0.2), 1.0);
        assert_relative_eq!(jacobi(0.0, 0.0, 1, 0.5), 0.5);
        assert_relative_eq!(jacobi(2.0, 0.0, 2, 1.0), 6.0, epsilon = 1e-14);
    }

    #[test]
    fn norm_integral_small_cases() {
        assert_relative_eq!(jacobi_norm_integral(0, 0, 0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(jacobi_norm_integral(1, 1, 0), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn gegenbauer_examples() {
        assert_eq!(gegenbauer(3.0, 0, 0.4), 1.0);
        assert_relative_eq!(gegenbauer(1.0, 1, 0.5), 1.0);
        // C_2^{(2)}(1) = binom(2+4-1, 2) = 10
        assert_relative_eq!(gegenbauer(2.0, 2, 1.0), 10.0, epsilon = 1e-14);
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(assoc_legendre(0, 0, 0.3).unwrap(), 1.0);
        assert_relative_eq!(assoc_legendre(1, 0, 0.3).unwrap(), 0.3);
        assert_relative_eq!(assoc_legendre(1, 1, 0.0).unwrap(), -1.0);
        assert!(matches!(assoc_legendre(1, 2, 0.0), Err(Error::DegreeOrderError { .. })));
        // reflection: P_1^{-1} = -(1/2) P_1^1
        let a = assoc_legendre(1, -1, 0.4).unwrap();
        let b = assoc_legendre(1, 1, 0.4).unwrap();
        assert_relative_eq!(a, -0.5 * b, epsilon = 1e-15);
    }

    #[test]
    fn tiny_rules() {
        let r = gauss_jacobi(0.0, 0.0, 1).unwrap();
        assert!(r.nodes[0].abs() < 1e-15);
        assert_relative_eq!(r.weights[0], 2.0, epsilon = 1e-14);
        let r = gauss_jacobi(0.0, 0.0, 2).unwrap();
        assert_relative_eq!(r.nodes[0], -1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r.nodes[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r.weights[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.weights[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn ortho_derivative_matches_plain() {
        let (a, b) = (2.5, 1.0);
        let fam = OrthoJacobi::new(a, b, 8);
        let (v, d) = fam.values_and_derivs(8, 0.31);
        for j in 0..8u32 {
            let s = (-0.5 * ln_jacobi_h(a, b, j)).exp();
            assert_relative_eq!(v[j as usize], s * jacobi(a, b, j, 0.31), max_relative = 1e-12);
            let dd = s * jacobi_deriv(a, b, j, 0.31);
            assert!((d[j as usize] - dd).abs() < 1e-11 * (1.0 + dd.abs()));
        }
    }
}
