//! Shooting oracle for the radial eigenvalues, independent of the Galerkin
//! discretization.
//!
//! The eigenvalue equation is written as `(P u')' + Q u = 0` with
//! `P = 2y³ - 3y² + a`,
//! `Q = (1-y)ℓ/2 - 3Λ - κ²(1-y)²/(4(a-y²)) - (1-y)N²/(8(a-y²)P)` and
//! `N = 12m(a-y²) - κ(a-2y+y²)`.  Frobenius series start the regular
//! solution at each endpoint, a Taylor-series integrator carries it to the
//! midpoint, and the Prüfer angles `atan2(u, P u')` of the two solutions are
//! matched there.  The angle mismatch is monotone in `ℓ`, so bisection finds
//! the `k`-th eigenvalue and the angle count fixes `k`.

use super::series::Series;
use super::RadialProblem;
use crate::error::{Error, Result};
use std::f64::consts::PI;

const TAYLOR_ORDER: usize = 32;
const FROB_ORDER: usize = 80;

struct Coeffs {
    a: f64,
    m: f64,
    kappa: f64,
    lam: f64,
}

impl Coeffs {
    fn new(prob: &RadialProblem) -> Self {
        Coeffs { a: prob.gp.a, m: prob.m as f64, kappa: prob.kappa(), lam: prob.lambda_cap }
    }

    fn p_series(&self, y0: f64, k: usize) -> Series {
        let y = Series::ident(y0, k);
        let y2 = &y * &y;
        let y3 = &y2 * &y;
        (&y3.scale(2.0) - &y2.scale(3.0)).add_const(self.a)
    }

    /// Pieces shared by both expansions: `(1-y, a-y², N)`.
    fn parts(&self, y0: f64, k: usize) -> (Series, Series, Series) {
        let y = Series::ident(y0, k);
        let y2 = &y * &y;
        let one_m = (-&y).add_const(1.0);
        let aa = (-&y2).add_const(self.a);
        let quad = (&y2 - &y.scale(2.0)).add_const(self.a);
        let n = &aa.scale(12.0 * self.m) - &quad.scale(self.kappa);
        (one_m, aa, n)
    }

    /// Regular part of `Q`: everything except the `1/P` term.
    fn q_regular(&self, ell: f64, one_m: &Series, aa: &Series) -> Series {
        let t1 = one_m.scale(ell / 2.0).add_const(-3.0 * self.lam);
        let om2 = one_m * one_m;
        let t2 = om2.scale(self.kappa * self.kappa / 4.0).div(aa);
        &t1 - &t2
    }

    /// `P` and `Q` about an interior point.
    fn interior(&self, y0: f64, ell: f64, k: usize) -> (Series, Series) {
        let p = self.p_series(y0, k);
        let (one_m, aa, n) = self.parts(y0, k);
        let qr = self.q_regular(ell, &one_m, &aa);
        let n2 = &n * &n;
        let num = (&one_m * &n2).scale(1.0 / 8.0);
        let den = &aa * &p;
        (p, &qr - &num.div(&den))
    }

    /// Frobenius data at a root `y_e` of `P`: `P = ζ R`, `p = P'/R`, `q = ζ Q / R`.
    fn endpoint(&self, ye: f64, ell: f64, k: usize) -> (Series, Series, Series) {
        let mut p = self.p_series(ye, k + 1);
        p.c[0] = 0.0;
        let r = p.shift_down();
        let dp = p.deriv();
        let pp = dp.div(&r);
        let (one_m, aa, n) = self.parts(ye, k + 1);
        let qr = self.q_regular(ell, &one_m, &aa);
        let n2 = &n * &n;
        let sing = (&one_m * &n2).scale(1.0 / 8.0).div(&(&aa * &r));
        let qq = (&qr.shift_up() - &sing).div(&r);
        let trim = |s: Series| Series { c: s.c[..=k].to_vec() };
        (trim(r), trim(pp), trim(qq))
    }
}

/// Regular Frobenius solution `|ζ|^ν Σ c_k ζ^k` at one endpoint.
pub struct Frobenius {
    pub nu: f64,
    pub c: Vec<f64>,
    r: Series,
}

impl Frobenius {
    fn new(co: &Coeffs, ye: f64, ell: f64) -> Self {
        let (r, p, q) = co.endpoint(ye, ell, FROB_ORDER);
        let mut nu = (-q.c[0]).max(0.0).sqrt();
        let snapped = (2.0 * nu).round() / 2.0;
        if (nu - snapped).abs() < 1e-6 {
            nu = snapped;
        }
        let mut c = vec![0.0; FROB_ORDER + 1];
        c[0] = 1.0;
        for k in 1..=FROB_ORDER {
            let mut acc = 0.0;
            for i in 1..=k {
                acc += c[k - i] * (p.c[i] * ((k - i) as f64 + nu) + q.c[i]);
            }
            c[k] = -acc / (k as f64 * (k as f64 + 2.0 * nu));
        }
        Frobenius { nu, c, r }
    }

    /// `(u, P u')` divided by `|ζ|^ν`.
    fn state(&self, z: f64) -> (f64, f64) {
        let mut u = 0.0;
        let mut du = 0.0;
        let mut zk = 1.0;
        for (k, &ck) in self.c.iter().enumerate() {
            let t = ck * zk;
            u += t;
            du += (k as f64 + self.nu) * t;
            if k > 8 && t.abs() < 1e-18 * u.abs() {
                break;
            }
            zk *= z;
        }
        (u, self.r.eval(z) * du)
    }
}

struct Track {
    u: f64,
    pu: f64,
    theta: f64,
}

fn unwrap(prev: f64, raw: f64) -> f64 {
    let mut d = raw - prev.rem_euclid(2.0 * PI);
    while d > PI {
        d -= 2.0 * PI;
    }
    while d <= -PI {
        d += 2.0 * PI;
    }
    prev + d
}

pub struct Shooter {
    co: Coeffs,
    ym: f64,
    yp: f64,
    sing: Vec<f64>,
    mid: f64,
}

impl Shooter {
    pub fn new(prob: &RadialProblem) -> Self {
        let gp = &prob.gp;
        let sa = gp.a.sqrt();
        Shooter {
            co: Coeffs::new(prob),
            ym: gp.y_minus,
            yp: gp.y_plus,
            sing: vec![gp.y_minus, gp.y_plus, gp.y3, 1.0, sa, -sa],
            mid: 0.5 * (gp.y_minus + gp.y_plus),
        }
    }

    fn dist(&self, y: f64, skip: Option<f64>) -> f64 {
        self.sing
            .iter()
            .filter(|&&s| Some(s) != skip)
            .map(|s| (s - y).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Launch from endpoint `ye` and integrate to the midpoint; returns the
    /// unwrapped Prüfer angle there.
    fn angle_at_mid(&self, ye: f64, ell: f64) -> f64 {
        let fr = Frobenius::new(&self.co, ye, ell);
        let dir = if ye < self.mid { 1.0 } else { -1.0 };
        let z0 = dir * (0.25 * self.dist(ye, Some(ye))).min(0.5 * (self.mid - ye).abs());
        // angle along the series segment
        let (u, pu) = fr.state(z0 * 1e-9);
        let mut theta = u.atan2(pu);
        const NS: usize = 64;
        for j in 1..=NS {
            let (u, pu) = fr.state(z0 * j as f64 / NS as f64);
            theta = unwrap(theta, u.atan2(pu));
        }
        let (u0, pu0) = fr.state(z0);
        let y0 = ye + z0;
        let p0 = self.co.p_series(y0, 0).c[0];
        let mut tr = Track { u: u0, pu: pu0, theta };
        let mut y = y0;
        // u' = (P u') / P
        let mut du = pu0 / p0;
        while (self.mid - y) * dir > 0.0 {
            let remaining = (self.mid - y).abs();
            let mut h = (0.3 * self.dist(y, None)).min(remaining) * dir;
            let (ps, qs) = self.co.interior(y, ell, TAYLOR_ORDER);
            let uc = taylor_solution(&ps, &qs, tr.u, du, TAYLOR_ORDER);
            // tail-based step control
            loop {
                let tail = (uc[TAYLOR_ORDER] * h.powi(TAYLOR_ORDER as i32)).abs()
                    + (uc[TAYLOR_ORDER - 1] * h.powi(TAYLOR_ORDER as i32 - 1)).abs();
                let scale = tr.u.abs() + (du * h).abs();
                if tail <= 1e-17 * scale || h.abs() < 1e-12 {
                    break;
                }
                h *= 0.5;
            }
            let mut samples = 8usize;
            loop {
                let mut th = tr.theta;
                let mut ok = true;
                for j in 1..=samples {
                    let t = h * j as f64 / samples as f64;
                    let (uu, dd) = eval_taylor(&uc, t);
                    let pu = ps.eval(t) * dd;
                    let raw = uu.atan2(pu);
                    let before = th;
                    th = unwrap(th, raw);
                    if (th - before).abs() > 1.0 {
                        ok = false;
                    }
                }
                if ok || samples >= 4096 {
                    tr.theta = th;
                    break;
                }
                samples *= 8;
            }
            let (uu, dd) = eval_taylor(&uc, h);
            y += h;
            let norm = uu.abs().max(dd.abs()).max(1e-300);
            tr.u = uu / norm;
            du = dd / norm;
            tr.pu = ps.eval(h) * du;
        }
        let _ = tr.pu;
        tr.theta
    }

    /// `θ_L(mid) - θ_R(mid) - kπ`, increasing in `ℓ`.
    pub fn mismatch(&self, ell: f64, k: u32) -> f64 {
        let tl = self.angle_at_mid(self.ym, ell);
        let trr = self.angle_at_mid(self.yp, ell);
        tl - trr - k as f64 * PI
    }

    /// Number of interior zeros implied by the angles at `ℓ`.
    pub fn zero_count(&self, ell: f64) -> i64 {
        let d = self.angle_at_mid(self.ym, ell) - self.angle_at_mid(self.yp, ell);
        (d / PI).round() as i64
    }

    /// Characteristic exponents seen by the Frobenius expansion, `(ν-, ν+)`.
    pub fn exponents(&self) -> (f64, f64) {
        let fm = Frobenius::new(&self.co, self.ym, 0.0);
        let fp = Frobenius::new(&self.co, self.yp, 0.0);
        (fm.nu, fp.nu)
    }
}

/// Taylor coefficients of the solution of `(P u')' + Q u = 0` with the
/// given value and derivative at the expansion point.
fn taylor_solution(p: &Series, q: &Series, u0: f64, du0: f64, order: usize) -> Vec<f64> {
    let mut u = vec![0.0; order + 1];
    u[0] = u0;
    u[1] = du0;
    for k in 0..order - 1 {
        let mut s = 0.0;
        for i in 1..=k + 1 {
            s += p.c[i] * (k + 2 - i) as f64 * u[k + 2 - i];
        }
        let mut qu = 0.0;
        for i in 0..=k {
            qu += q.c[i] * u[k - i];
        }
        let kk = (k + 1) as f64;
        u[k + 2] = -(kk * s + qu) / (kk * p.c[0] * (k + 2) as f64);
    }
    u
}

fn eval_taylor(c: &[f64], h: f64) -> (f64, f64) {
    let mut u = 0.0;
    let mut du = 0.0;
    for k in (0..c.len()).rev() {
        u = u * h + c[k];
        if k > 0 {
            du = du * h + k as f64 * c[k];
        }
    }
    (u, du)
}

/// Eigenvalue `ℓ_k` by bisection on the angle mismatch inside `bracket`.
pub fn shooting_oracle(prob: &RadialProblem, bracket: (f64, f64), k_target: u32) -> Result<f64> {
    let sh = Shooter::new(prob);
    bisect(&sh, bracket, k_target)
}

fn bisect(sh: &Shooter, bracket: (f64, f64), k: u32) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let (flo, fhi) = (sh.mismatch(lo, k), sh.mismatch(hi, k));
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::BracketError { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 * mid.abs().max(1.0) {
            break;
        }
        if sh.mismatch(mid, k) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bracket automatically: start from `[-1, 10]` and double the upper end.
pub fn shooting_auto(prob: &RadialProblem, k_target: u32) -> Result<f64> {
    let sh = Shooter::new(prob);
    let lo = -1.0;
    let mut hi = 10.0;
    let mut n = 0;
    while sh.mismatch(hi, k_target) <= 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 60 {
            return Err(Error::BracketError { lo, hi });
        }
    }
    let lo = if hi > 10.0 { hi / 2.0 } else { lo };
    bisect(&sh, (lo, hi), k_target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::solve_geometry;

    #[test]
    fn kernel_from_shooting() {
        let gp = solve_geometry(2, 1).unwrap();
        let prob = RadialProblem::new(&gp, 0, 0, 0.0);
        let e = shooting_auto(&prob, 0).unwrap();
        assert!(e.abs() < 1e-10, "{e}");
    }

    #[test]
    fn exponents_agree_with_closed_form() {
        let gp = solve_geometry(3, 2).unwrap();
        for (m, l) in [(0, 0), (1, 0), (0, 1), (2, -1)] {
            let prob = RadialProblem::new(&gp, m, l, 2.0);
            let (a, b) = Shooter::new(&prob).exponents();
            assert!((a - prob.nu_minus).abs() < 1e-9 && (b - prob.nu_plus).abs() < 1e-9);
        }
    }
}
