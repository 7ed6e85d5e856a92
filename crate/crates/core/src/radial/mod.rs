//! Radial Sturm–Liouville problem on `(y-, y+)` with weight `ρ(y) = (1-y)/18`.
//!
//! The operator is `-S = -(1/ρ) ∂ ρ w r ∂ + V` with
//! `V = κ²/w + 9(2m - hκ)²/r + 6Λ/(1-y)` and `κ = σl/τ`.  Eigenvalues `ℓ ≥ 0`
//! of `-S` are reported (the spectrum of `S` itself is `-ℓ`).
//!
//! Discretization is a Jacobi–Galerkin method in `s ∈ [-1, 1]`, `y = y_c + c1 s`,
//! with trial functions `(1+s)^{ν-} (1-s)^{ν+} p̂_k(s)`, where `p̂_k` are
//! orthonormal for the weight `(1-s)^{2ν+} (1+s)^{2ν-}`.  The endpoint
//! behaviour is therefore built into every trial function.

pub mod series;
pub mod shooting;

use crate::error::{Error, Result};
use crate::geometry::GeometryParams;
use crate::scalar::Real;
use crate::specfun::{gauss_jacobi, OrthoJacobi};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Bumped whenever the discretization changes; part of every cache key.
pub const SOLVER_VERSION: &str = "galerkin-jacobi-3";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProblem {
    pub gp: GeometryParams<f64>,
    pub m: i64,
    pub l: i64,
    pub lambda_cap: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialMode {
    pub problem: RadialProblem,
    pub k: u32,
    pub ell: f64,
    pub coeffs: Vec<f64>,
    pub grid_norm_residual: f64,
}

/// `(2ν-, 2ν+)` as exact integers.
pub fn two_nu(gp: &GeometryParams<f64>, m: i64, l: i64) -> (u64, u64) {
    let (p, q, sig) = (gp.p as i64, gp.q as i64, gp.sigma as i64);
    // σ is even, so both numerators are even
    let plus = (4 * m + q * sig * l).unsigned_abs() / 2;
    let minus = (4 * m + (q - 2 * p) * sig * l).unsigned_abs() / 2;
    (minus, plus)
}

/// `(ν-, ν+)`.
pub fn char_exponents(gp: &GeometryParams<f64>, m: i64, l: i64) -> (f64, f64) {
    let (a, b) = two_nu(gp, m, l);
    (a as f64 / 2.0, b as f64 / 2.0)
}

impl RadialProblem {
    pub fn new(gp: &GeometryParams<f64>, m: i64, l: i64, lambda_cap: f64) -> Self {
        let (nu_minus, nu_plus) = char_exponents(gp, m, l);
        RadialProblem { gp: *gp, m, l, lambda_cap, nu_minus, nu_plus }
    }

    pub fn kappa(&self) -> f64 {
        self.gp.kappa(self.l)
    }

    /// `c1 = (y+ - y-)/2`.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.gp.y_plus - self.gp.y_minus)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.gp.y_plus + self.gp.y_minus)
    }

    pub fn y_of_s<T: Real>(&self, s: T) -> T {
        T::c(self.center()) + T::c(self.half_width()) * s
    }

    pub fn s_of_y<T: Real>(&self, y: T) -> T {
        (y - T::c(self.center())) / T::c(self.half_width())
    }

    /// `ρ V` with the simple zeros of `r` at the ends written out as `1 - s²`.
    pub fn rho_v(&self, s: f64) -> f64 {
        let gp = &self.gp;
        let y = self.y_of_s(s);
        let c1 = self.half_width();
        let ay = gp.a - y * y;
        let kap = self.kappa();
        let mu = self.m as f64 - crate::geometry::h_of(gp.a, y) * kap / 2.0;
        let t1 = kap * kap * (1.0 - y) * (1.0 - y) / (36.0 * ay);
        let t2 = mu * mu * ay * (1.0 - y) / (c1 * c1 * (1.0 - s * s) * (gp.y3 - y));
        let t3 = self.lambda_cap / 3.0;
        t1 + t2 + t3
    }

    fn deltas(&self) -> (f64, f64) {
        let d = |nu: f64| if nu > 0.0 { 1.0 } else { 0.0 };
        (d(self.nu_minus), d(self.nu_plus))
    }
}

/// Symmetric Galerkin matrices `(A, B)` for `-S` in the weighted basis.
pub fn assemble_galerkin(prob: &RadialProblem, n_basis: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if n_basis < 4 {
        return Err(Error::IndexError(format!("n_basis={n_basis} below the minimum of 4")));
    }
    let (num, nup) = (prob.nu_minus, prob.nu_plus);
    let (dm, dp) = prob.deltas();
    let (em, ep) = (2.0 * num - dm, 2.0 * nup - dp);
    let nq = 2 * n_basis + 60;
    let rule = gauss_jacobi(ep, em, nq)?;
    if rule.weights.iter().any(|&w| w < 1e-300) {
        return Err(Error::QuadratureUnderflow(format!(
            "weights underflow for exponents ({ep},{em}) with {nq} nodes"
        )));
    }
    let fam = OrthoJacobi::new(2.0 * nup, 2.0 * num, n_basis);
    let c1 = prob.half_width();
    let y3 = prob.gp.y3;
    let n = n_basis;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, n);
    let mut dvals = vec![0.0; n];
    for (&s, &wq) in rule.nodes.iter().zip(&rule.weights) {
        let y = prob.y_of_s(s);
        let (pv, pd) = fam.values_and_derivs(n, s);
        let g = num / (1.0 + s) - nup / (1.0 - s);
        for k in 0..n {
            dvals[k] = g * pv[k] + pd[k];
        }
        let fm = (1.0 + s).powf(dm);
        let fp = (1.0 - s).powf(dp);
        let ks = wq * (2.0 * c1 / 9.0) * (y3 - y) * (1.0 - s) * (1.0 + s) * fm * fp;
        let kv = wq * c1 * fm * fp * prob.rho_v(s);
        let kb = wq * c1 * fm * fp * (1.0 - y) / 18.0;
        for j in 0..n {
            let (dj, pj) = (dvals[j], pv[j]);
            for k in j..n {
                a[(j, k)] += ks * dj * dvals[k] + kv * pj * pv[k];
                b[(j, k)] += kb * pj * pv[k];
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            a[(j, k)] = a[(k, j)];
            b[(j, k)] = b[(k, j)];
        }
    }
    Ok((a, b))
}

/// All eigenpairs of `A c = ℓ B c`, ascending, with `cᵀ B c = 1`.
pub fn generalized_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::EigenFailure("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    let lt = l.transpose();
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..eig.eigenvalues.len())
        .map(|i| {
            let v = eig.eigenvectors.column(i).into_owned();
            let cvec = lt.solve_upper_triangular(&v).expect("triangular solve");
            (eig.eigenvalues[i], cvec)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

fn solve_fixed(prob: &RadialProblem, k_max: usize, n_basis: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let (a, b) = assemble_galerkin(prob, n_basis)?;
    let (vals, vecs) = generalized_eigen(&a, &b)?;
    if vals.len() <= k_max {
        return Err(Error::IndexError(format!("k_max={k_max} needs more than {n_basis} basis functions")));
    }
    let fam = OrthoJacobi::new(2.0 * prob.nu_plus, 2.0 * prob.nu_minus, n_basis);
    let at_left = fam.values(n_basis, -1.0);
    Ok((0..=k_max)
        .map(|k| {
            let mut c: Vec<f64> = vecs[k].iter().copied().collect();
            // sign convention: positive next to y-
            let lead: f64 = c.iter().zip(&at_left).map(|(x, p)| x * p).sum();
            let flip = if lead.abs() > 1e-8 {
                lead < 0.0
            } else {
                let imax = (0..c.len()).max_by(|&i, &j| c[i].abs().partial_cmp(&c[j].abs()).unwrap()).unwrap();
                c[imax] < 0.0
            };
            if flip {
                c.iter_mut().for_each(|x| *x = -*x);
            }
            let mut ell = vals[k];
            if (-1e-9..0.0).contains(&ell) {
                ell = 0.0;
            }
            (ell, c)
        })
        .collect())
}

/// First `k_max + 1` eigenpairs of `-S`.
///
/// The solve is repeated with 25% more basis functions; if either of the
/// two largest requested eigenvalues moves by more than 1e-8 (relative) the
/// result is rejected with `NotConverged`.
pub fn solve_radial(prob: &RadialProblem, k_max: u32, n_basis: usize) -> Result<Vec<RadialMode>> {
    let k_max = k_max as usize;
    if n_basis < k_max + 8 {
        return Err(Error::IndexError(format!("n_basis={n_basis} must be at least k_max+8={}", k_max + 8)));
    }
    let coarse = solve_fixed(prob, k_max, n_basis)?;
    let fine = solve_fixed(prob, k_max, (n_basis * 5).div_ceil(4))?;
    for k in k_max.saturating_sub(1)..=k_max {
        let (e0, e1) = (coarse[k].0, fine[k].0);
        if (e0 - e1).abs() > 1e-8 * e1.abs().max(1.0) {
            return Err(Error::NotConverged(format!(
                "eigenvalue {k} moved from {e0} to {e1} under basis refinement (m={}, l={}, Λ={})",
                prob.m, prob.l, prob.lambda_cap
            )));
        }
    }
    let check = NormCheck::new(prob, n_basis)?;
    Ok(coarse
        .into_iter()
        .enumerate()
        .map(|(k, (ell, coeffs))| {
            let res = (check.norm2(&coeffs) - 1.0).abs();
            RadialMode { problem: prob.clone(), k: k as u32, ell, coeffs, grid_norm_residual: res }
        })
        .collect())
}

/// Default basis size for `k_max`.
pub fn default_n_basis(k_max: u32) -> usize {
    (k_max as usize + 24).max(32)
}

/// Solve with the default basis, doubling on `NotConverged` up to 256 functions.
pub fn solve_radial_auto(prob: &RadialProblem, k_max: u32) -> Result<Vec<RadialMode>> {
    let mut n = default_n_basis(k_max);
    loop {
        match solve_radial(prob, k_max, n) {
            Err(Error::NotConverged(msg)) if n < 256 => {
                log::debug!("{msg}; retrying with {} basis functions", 2 * n);
                n *= 2;
            }
            r => return r,
        }
    }
}

/// Independent check of `∫ w² ρ dy` on a Gauss–Legendre grid in `s`, which
/// does not share nodes or weights with the Galerkin rule.
struct NormCheck {
    vals: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl NormCheck {
    fn new(prob: &RadialProblem, n_basis: usize) -> Result<Self> {
        let (t, w) = crate::specfun::gauss_legendre_on(-1.0, 1.0, 2 * n_basis + 80)?;
        let fam = OrthoJacobi::new(2.0 * prob.nu_plus, 2.0 * prob.nu_minus, n_basis);
        let c1 = prob.half_width();
        let mut vals = Vec::new();
        let mut weights = Vec::new();
        for (&s, &wi) in t.iter().zip(&w) {
            let env = (1.0 + s).powf(prob.nu_minus) * (1.0 - s).powf(prob.nu_plus);
            let y = prob.y_of_s(s);
            vals.push(fam.values(n_basis, s).into_iter().map(|p| p * env).collect());
            weights.push(wi * c1 * (1.0 - y) / 18.0);
        }
        Ok(NormCheck { vals, weights })
    }

    fn norm2(&self, c: &[f64]) -> f64 {
        self.vals
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| {
                let f: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                w * f * f
            })
            .sum()
    }
}

impl RadialMode {
    /// Evaluation in factored form, valid on the closed interval.
    pub fn eval_unchecked<T: Real>(&self, y: T) -> T {
        let pr = &self.problem;
        let s = pr.s_of_y(y);
        let one = T::one();
        let fam = OrthoJacobi::new(2.0 * pr.nu_plus, 2.0 * pr.nu_minus, self.coeffs.len());
        let pv = fam.values(self.coeffs.len(), s);
        let mut acc = T::zero();
        for (c, p) in self.coeffs.iter().zip(pv) {
            acc += T::c(*c) * p;
        }
        let env = pow_half(one + s, pr.nu_minus) * pow_half(one - s, pr.nu_plus);
        env * acc
    }

    pub fn eval<T: Real>(&self, y: T) -> Result<T> {
        let gp = &self.problem.gp;
        if !(y.re() > gp.y_minus && y.re() < gp.y_plus) {
            return Err(Error::OutOfRange { value: y.re(), lo: gp.y_minus, hi: gp.y_plus });
        }
        Ok(self.eval_unchecked(y))
    }

    pub fn nu(&self) -> (f64, f64) {
        (self.problem.nu_minus, self.problem.nu_plus)
    }
}

/// `x^ν` for half-integer `ν`, exact for integers (keeps dual numbers smooth).
fn pow_half<T: Real>(x: T, nu: f64) -> T {
    let twice = (2.0 * nu).round() as i32;
    if twice % 2 == 0 {
        x.powi(twice / 2)
    } else {
        x.sqrt().powi(twice)
    }
}

/// Pluggable radial backend (the cache wraps one of these).
pub trait RadialSolver: Send + Sync {
    fn solve(&self, prob: &RadialProblem, k_max: u32) -> Result<Vec<RadialMode>>;
    fn n_basis(&self, k_max: u32) -> usize;
}

/// Plain Galerkin backend with a fixed or default basis size.
#[derive(Clone, Debug, Default)]
pub struct GalerkinSolver {
    pub n_basis: Option<usize>,
}

impl RadialSolver for GalerkinSolver {
    fn solve(&self, prob: &RadialProblem, k_max: u32) -> Result<Vec<RadialMode>> {
        match self.n_basis {
            Some(n) => solve_radial(prob, k_max, n),
            None => solve_radial_auto(prob, k_max),
        }
    }

    fn n_basis(&self, k_max: u32) -> usize {
        self.n_basis.unwrap_or(default_n_basis(k_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::solve_geometry;

    #[test]
    fn exponents_examples() {
        let gp = solve_geometry(2, 1).unwrap();
        assert_eq!(char_exponents(&gp, 3, 0), (3.0, 3.0));
        // (2,1): σ = 6, q = 1, q - 2p = -3
        assert_eq!(char_exponents(&gp, 0, 1), (4.5, 1.5));
    }

    #[test]
    fn kernel_is_constant() {
        let gp = solve_geometry(2, 1).unwrap();
        let prob = RadialProblem::new(&gp, 0, 0, 0.0);
        let (a, _) = assemble_galerkin(&prob, 10).unwrap();
        for j in 0..10 {
            assert!(a[(j, 0)].abs() < 1e-12);
        }
        let modes = solve_radial(&prob, 2, 16).unwrap();
        assert!(modes[0].ell.abs() < 1e-9);
        let c = 1.0 / gp.rho_integral().sqrt();
        for y in [-0.2, 0.0, 0.3] {
            assert!((modes[0].eval(y).unwrap() - c).abs() < 1e-10);
        }
    }
}
