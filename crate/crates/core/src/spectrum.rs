//! Laplace eigenfunctions on Y^{p,q} as products of angular and radial modes.

use crate::angular::{angular_mode, AngularMode};
use crate::error::{Error, Result};
use crate::geometry::{profiles_unchecked, GeometryParams};
use crate::radial::{RadialMode, RadialProblem, RadialSolver};
use crate::scalar::derivs2;
use crate::specfun::gauss_jacobi;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_dual::Dual2_64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YModeIndex {
    pub n: i64,
    pub m: i64,
    pub l: i64,
    pub k: u32,
    pub j: u32,
}

impl YModeIndex {
    pub fn new(n: i64, m: i64, l: i64, k: u32, j: u32) -> Self {
        YModeIndex { n, m, l, k, j }
    }

    pub fn conjugate(&self) -> Self {
        YModeIndex { n: -self.n, m: -self.m, l: -self.l, ..*self }
    }

    pub fn sector(&self) -> (i64, i64, i64) {
        (self.n, self.m, self.l)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct YEigenmode {
    pub index: YModeIndex,
    pub lambda: f64,
    pub angular: AngularMode,
    pub radial: RadialMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YPoint {
    pub y: f64,
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct TruncationPolicy {
    pub n_max: u32,
    pub m_max: u32,
    pub l_max: u32,
    pub k_max: u32,
    pub j_max: u32,
    pub lambda_max: Option<f64>,
}

/// Rectangular index set, lexicographic in `(n, m, l, k, j)`.
pub fn enumerate_modes(trunc: &TruncationPolicy) -> Vec<YModeIndex> {
    let (nn, mm, ll) = (trunc.n_max as i64, trunc.m_max as i64, trunc.l_max as i64);
    let mut v = Vec::new();
    for n in -nn..=nn {
        for m in -mm..=mm {
            for l in -ll..=ll {
                for k in 0..=trunc.k_max {
                    for j in 0..=trunc.j_max {
                        v.push(YModeIndex { n, m, l, k, j });
                    }
                }
            }
        }
    }
    v
}

pub fn build_eigenmode(
    gp: &GeometryParams<f64>,
    idx: YModeIndex,
    solver: &dyn RadialSolver,
) -> Result<YEigenmode> {
    let ang = angular_mode(idx.n, idx.m, idx.j);
    let prob = RadialProblem::new(gp, idx.m, idx.l, ang.lambda_cap);
    let mut modes = solver.solve(&prob, idx.k)?;
    let radial = modes.swap_remove(idx.k as usize);
    Ok(YEigenmode { index: idx, lambda: radial.ell, angular: ang, radial })
}

/// Every mode of the truncation, sharing one radial solve per `(m, l, Λ)`.
/// Distinct radial problems are solved on parallel threads.
pub fn build_spectrum(
    gp: &GeometryParams<f64>,
    trunc: &TruncationPolicy,
    solver: &dyn RadialSolver,
) -> Result<Vec<YEigenmode>> {
    let idx = enumerate_modes(trunc);
    let mut groups: BTreeMap<(i64, i64, i64), u32> = BTreeMap::new();
    for i in &idx {
        let lam = crate::angular::angular_eigenvalue_int(i.n, i.m, i.j);
        let e = groups.entry((i.m, i.l, lam)).or_insert(0);
        *e = (*e).max(i.k);
    }
    let keys: Vec<_> = groups.into_iter().collect();
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8);
    let chunk = keys.len().div_ceil(threads).max(1);
    let solved: Vec<Result<Vec<((i64, i64, i64), Vec<RadialMode>)>>> = std::thread::scope(|sc| {
        let handles: Vec<_> = keys
            .chunks(chunk)
            .map(|ch| {
                sc.spawn(move || {
                    ch.iter()
                        .map(|&((m, l, lam), kmax)| {
                            let prob = RadialProblem::new(gp, m, l, lam as f64);
                            solver.solve(&prob, kmax).map(|v| ((m, l, lam), v))
                        })
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    let mut table = BTreeMap::new();
    for r in solved {
        for (k, v) in r? {
            table.insert(k, v);
        }
    }
    let mut out = Vec::with_capacity(idx.len());
    for i in idx {
        let ang = angular_mode(i.n, i.m, i.j);
        let lam = crate::angular::angular_eigenvalue_int(i.n, i.m, i.j);
        let radial = table[&(i.m, i.l, lam)][i.k as usize].clone();
        if let Some(cut) = trunc.lambda_max {
            if radial.ell > cut {
                continue;
            }
        }
        out.push(YEigenmode { index: i, lambda: radial.ell, angular: ang, radial });
    }
    Ok(out)
}

impl YEigenmode {
    /// Angular-times-radial amplitude, without the phase.
    pub fn amplitude(&self, y: f64, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::OutOfRange { value: theta, lo: 0.0, hi: PI });
        }
        Ok(self.angular.eval(theta) * self.radial.eval(y)?)
    }

    /// `exp(i(nφ + 2mψ + σlα/τ)) / ((2π)^{3/2} τ^{1/2})`.
    pub fn phase(&self, pt: &YPoint) -> Complex64 {
        let gp = &self.radial.problem.gp;
        let i = &self.index;
        let arg = i.n as f64 * pt.phi + 2.0 * i.m as f64 * pt.psi + gp.kappa(i.l) * pt.alpha;
        Complex64::from_polar(1.0, arg) * phase_norm(gp)
    }
}

/// Normalization of the phase factor on the chart `φ,ψ ∈ [0,2π)`, `α ∈ [0,2πτ)`.
pub fn phase_norm(gp: &GeometryParams<f64>) -> f64 {
    1.0 / ((2.0 * PI).powf(1.5) * gp.tau.sqrt())
}

pub fn eval_u(mode: &YEigenmode, pt: &YPoint) -> Result<Complex64> {
    Ok(mode.phase(pt) * mode.amplitude(pt.y, pt.theta)?)
}

/// Relative residual `|Δu + λu|` at `(y, θ)`, scaled by the sum of the
/// magnitudes of the individual Laplacian terms.  The coordinate Laplacian
/// is applied term by term with exact derivatives of both factors, and the
/// Fourier derivatives act as multiplication by `i n`, `2 i m`, `i σl/τ`.
pub fn laplacian_residual(mode: &YEigenmode, y: f64, theta: f64) -> f64 {
    let gp = &mode.radial.problem.gp;
    let a = gp.a;
    let (w0, w1, w2) = derivs2(|t: Dual2_64| mode.radial.eval_unchecked(t), y);
    let (v0, v1, v2) = mode.angular.eval_derivs(theta);
    // (1/ρ) ∂y (ρ w r ∂y u)
    let f = derivs2(
        |t: Dual2_64| {
            let pv = profiles_unchecked(Dual2_64::from_re(a), t);
            pv.rho * pv.w * pv.r
        },
        y,
    );
    let pv = profiles_unchecked(a, y);
    let radial_term = (f.0 * w2 + f.1 * w1) / pv.rho * v0;
    let i = Complex64::i();
    let d_phi = i * mode.index.n as f64;
    let d_psi = i * (2.0 * mode.index.m as f64);
    let d_alpha = i * gp.kappa(mode.index.l);
    let u = Complex64::from(w0 * v0);
    let t_alpha = d_alpha * d_alpha / pv.w * u;
    let fib = d_psi - pv.h * d_alpha;
    let t_fib = 9.0 / pv.r * fib * fib * u;
    let (s, c) = theta.sin_cos();
    let t_theta = (v2 + c / s * v1) * w0;
    let g = d_phi + c * d_psi;
    let t_az = g * g / (s * s) * u;
    let pref = 6.0 / (1.0 - y);
    let total = radial_term + t_alpha + t_fib + pref * (t_theta + t_az) + mode.lambda * u;
    let scale = radial_term.abs()
        + t_alpha.norm()
        + t_fib.norm()
        + pref * (t_theta.abs() + t_az.norm())
        + (mode.lambda * u).norm();
    if scale == 0.0 {
        0.0
    } else {
        total.norm() / scale
    }
}

/// Gram matrix of the modes under `dμ`, with the phase integrals done exactly
/// (distinct `(n, m, l)` sectors are orthogonal) and product Gauss rules in
/// `cosθ` and `y` for each sector.
pub fn product_gram(modes: &[YEigenmode]) -> Result<DMatrix<f64>> {
    let n = modes.len();
    let mut g = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let (ma, mb) = (&modes[a], &modes[b]);
            if ma.index.sector() != mb.index.sector() {
                continue;
            }
            let v = angular_overlap(&ma.angular, &mb.angular)?;
            let w = radial_overlap(&ma.radial, &mb.radial)?;
            // phase integral: (2π)^2 · 2πτ times phase_norm^2 = 1
            g[(a, b)] = v * w;
            g[(b, a)] = v * w;
        }
    }
    Ok(g)
}

fn angular_overlap(x: &AngularMode, y: &AngularMode) -> Result<f64> {
    let (a, b) = x.exponents();
    let nq = (x.j.max(y.j) as usize) + 4;
    let rule = gauss_jacobi(a as f64, b as f64, nq)?;
    let scale = 0.5f64.powi((a + b) as i32);
    Ok(rule.integrate(|s| {
        let pj = crate::specfun::jacobi(a as f64, b as f64, x.j, s);
        let pk = crate::specfun::jacobi(a as f64, b as f64, y.j, s);
        x.norm_const * y.norm_const * pj * pk
    }) * scale)
}

fn radial_overlap(x: &RadialMode, y: &RadialMode) -> Result<f64> {
    let pr = &x.problem;
    let (nm, np) = (pr.nu_minus, pr.nu_plus);
    let nq = x.coeffs.len().max(y.coeffs.len()) + 4;
    let rule = gauss_jacobi(2.0 * np, 2.0 * nm, nq)?;
    let fx = crate::specfun::OrthoJacobi::new(2.0 * np, 2.0 * nm, x.coeffs.len());
    let fy = crate::specfun::OrthoJacobi::new(2.0 * np, 2.0 * nm, y.coeffs.len());
    let c1 = pr.half_width();
    Ok(rule.integrate(|s| {
        let px: f64 = fx.values(x.coeffs.len(), s).iter().zip(&x.coeffs).map(|(p, c)| p * c).sum();
        let py: f64 = fy.values(y.coeffs.len(), s).iter().zip(&y.coeffs).map(|(p, c)| p * c).sum();
        let yy = pr.y_of_s(s);
        c1 * (1.0 - yy) / 18.0 * px * py
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerate_counts() {
        let t = TruncationPolicy::default();
        assert_eq!(enumerate_modes(&t), vec![YModeIndex::new(0, 0, 0, 0, 0)]);
        let t = TruncationPolicy { n_max: 1, m_max: 1, ..Default::default() };
        assert_eq!(enumerate_modes(&t).len(), 9);
        let t = TruncationPolicy { n_max: 2, m_max: 1, l_max: 1, k_max: 2, j_max: 3, lambda_max: None };
        assert_eq!(enumerate_modes(&t).len(), 5 * 3 * 3 * 3 * 4);
    }
}
