//! Scalar data of a Y^{p,q} geometry: the constant `a`, the roots of
//! `a - 3y^2 + 2y^3`, the metric profiles and the periods.
//!
//! Labels: the quantization ratio `(h(y+) - h(y-)) / (2 h(y+))` takes every
//! value in (1, ∞) exactly once as `a` runs over (0, 1), so a root exists iff
//! q < p.  The pair (p, 2p - q) describes the same manifold with the two
//! ends of the `y` interval exchanged; see [`mirrored_label`].

use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SigmaRule {
    /// lcm{2, p, q, 2p-q}
    #[default]
    Prose,
    /// lcm{2, pq, 2p-q}
    Display,
}

impl SigmaRule {
    pub fn as_str(self) -> &'static str {
        match self {
            SigmaRule::Prose => "prose",
            SigmaRule::Display => "display",
        }
    }
}

impl std::str::FromStr for SigmaRule {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "prose" => Ok(SigmaRule::Prose),
            "display" => Ok(SigmaRule::Display),
            _ => Err(format!("unknown sigma rule '{s}' (expected prose|display)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams<T = f64> {
    pub p: u32,
    pub q: u32,
    pub a: T,
    pub y_minus: T,
    pub y_plus: T,
    /// Third root of the cubic, above 1.
    pub y3: T,
    pub tau: T,
    pub sigma: u32,
    pub sigma_rule: SigmaRule,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileValues<T = f64> {
    pub w: T,
    pub r: T,
    pub h: T,
    pub rho: T,
    pub rho_b: T,
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

pub fn sigma_for(p: u32, q: u32, rule: SigmaRule) -> u32 {
    let (p, q) = (p as u64, q as u64);
    let t = 2 * p - q;
    let v = match rule {
        SigmaRule::Prose => lcm(lcm(lcm(2, p), q), t),
        SigmaRule::Display => lcm(lcm(2, p * q), t),
    };
    v as u32
}

/// The label of the same manifold with `y-` and `y+` exchanged.
pub fn mirrored_label(p: u32, q: u32) -> (u32, u32) {
    (p, 2 * p - q)
}

pub fn validate_label(p: u32, q: u32) -> Result<()> {
    let bad = |reason: &str| Err(Error::InvalidLabel { p: p as i64, q: q as i64, reason: reason.into() });
    if p < 2 {
        return bad("p must be at least 2");
    }
    if q == 0 {
        return bad("q must be positive");
    }
    if gcd(p as u64, q as u64) != 1 {
        return bad("p and q must be coprime");
    }
    if q >= 2 * p {
        return bad("q must be below 2p");
    }
    if q > p {
        let (mp, mq) = mirrored_label(p, q);
        return Err(Error::InvalidLabel {
            p: p as i64,
            q: q as i64,
            reason: format!(
                "no a in (0,1) solves the quantization condition for p<q; the same manifold is ({mp},{mq})"
            ),
        });
    }
    Ok(())
}

/// Roots `(y-, y+, y3)` of `2y^3 - 3y^2 + a`, sorted ascending.
pub fn cubic_roots<T: Real>(a: T) -> (T, T, T) {
    let th = (T::one() - T::c(2.0) * a).acos() / T::c(3.0);
    let half = T::c(0.5);
    let mut r = [
        half + th.cos(),
        half + (th - T::c(2.0 * PI / 3.0)).cos(),
        half + (th - T::c(4.0 * PI / 3.0)).cos(),
    ];
    r.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // Vieta keeps the sum exact: y- + y+ + y3 = 3/2.
    let y3 = T::c(1.5) - r[0] - r[1];
    (r[0], r[1], y3)
}

#[inline]
pub fn cubic<T: Real>(a: T, y: T) -> T {
    a - T::c(3.0) * y * y + T::c(2.0) * y * y * y
}

#[inline]
pub fn h_of<T: Real>(a: T, y: T) -> T {
    (a - T::c(2.0) * y + y * y) / (T::c(6.0) * (a - y * y))
}

/// `(h(y+) - h(y-)) / (2 h(y+))` as a function of `a`.
pub fn quantization_ratio<T: Real>(a: T) -> T {
    let (ym, yp, _) = cubic_roots(a);
    let hp = h_of(a, yp);
    let hm = h_of(a, ym);
    (hp - hm) / (T::c(2.0) * hp)
}

pub fn solve_geometry(p: u32, q: u32) -> Result<GeometryParams<f64>> {
    solve_geometry_with::<f64>(p, q, SigmaRule::Prose)
}

pub fn solve_geometry_with<T: Real>(p: u32, q: u32, rule: SigmaRule) -> Result<GeometryParams<T>> {
    validate_label(p, q)?;
    let target = T::c(p as f64 / q as f64);
    let f = |a: T| quantization_ratio(a) - target;
    let mut lo = T::c(1e-12);
    let mut hi = T::c(1.0 - 1e-12);
    if !(hi < T::one()) {
        // single precision cannot represent 1 - 1e-12
        lo = T::c(1e-6);
        hi = T::c(1.0 - 1e-6);
    }
    let (flo, fhi) = (f(lo), f(hi));
    if (flo.re() > 0.0) == (fhi.re() > 0.0) {
        return Err(Error::NoRoot { p: p as i64, q: q as i64 });
    }
    let lo_pos = flo.re() > 0.0;
    for _ in 0..200 {
        let mid = (lo + hi) * T::c(0.5);
        if !(mid > lo && mid < hi) {
            break;
        }
        if (f(mid).re() > 0.0) == lo_pos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the better endpoint
    let a = if f(lo).abs() < f(hi).abs() { lo } else { hi };
    let (ym, yp, y3) = cubic_roots(a);
    let tau = -T::c(2.0) * h_of(a, yp) / T::c(q as f64);
    Ok(GeometryParams { p, q, a, y_minus: ym, y_plus: yp, y3, tau, sigma: sigma_for(p, q, rule), sigma_rule: rule })
}

/// Profiles from their closed forms, without range checking.
pub fn profiles_unchecked<T: Real>(a: T, y: T) -> ProfileValues<T> {
    let one = T::one();
    let ay = a - y * y;
    let w = T::c(2.0) * ay / (one - y);
    let r = cubic(a, y) / ay;
    let h = h_of(a, y);
    let rho = (one - y) / T::c(18.0);
    let rho_b = rho / w.sqrt();
    ProfileValues { w, r, h, rho, rho_b }
}

pub fn eval_profiles<T: Real>(gp: &GeometryParams<T>, y: T) -> Result<ProfileValues<T>> {
    if y < gp.y_minus || y > gp.y_plus {
        return Err(Error::OutOfRange { value: y.re(), lo: gp.y_minus.re(), hi: gp.y_plus.re() });
    }
    Ok(profiles_unchecked(gp.a, y))
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl<T: Real> GeometryParams<T> {
    pub fn to_f64(&self) -> GeometryParams<f64> {
        GeometryParams {
            p: self.p,
            q: self.q,
            a: self.a.re(),
            y_minus: self.y_minus.re(),
            y_plus: self.y_plus.re(),
            y3: self.y3.re(),
            tau: self.tau.re(),
            sigma: self.sigma,
            sigma_rule: self.sigma_rule,
        }
    }

    /// `σ l / τ`, the α-frequency of sector `l`.
    pub fn kappa(&self, l: i64) -> T {
        T::c(self.sigma as f64 * l as f64) / self.tau
    }

    /// Integral of `ρ` over `(y-, y+)`.
    pub fn rho_integral(&self) -> T {
        let (a, b) = (self.y_minus, self.y_plus);
        ((b - a) - (b * b - a * a) * T::c(0.5)) / T::c(18.0)
    }

    /// Volume of the chart φ,ψ ∈ [0,2π), α ∈ [0,2πτ), θ ∈ (0,π).
    pub fn volume(&self) -> T {
        self.rho_integral() * T::c(2.0 * 8.0 * PI * PI * PI) * self.tau
    }
}

/// Residual checks for the defining conditions and the ordering of roots.
pub fn check_invariants(gp: &GeometryParams<f64>) -> Vec<InvariantCheck> {
    let mut out = Vec::new();
    let mut push = |name, residual: f64, tolerance| {
        out.push(InvariantCheck { name, residual, tolerance, pass: residual.is_finite() && residual < tolerance })
    };
    let target = gp.p as f64 / gp.q as f64;
    push("label q<p coprime", if validate_label(gp.p, gp.q).is_ok() { 0.0 } else { 1.0 }, 0.5);
    push("0<a<1", if gp.a > 0.0 && gp.a < 1.0 { 0.0 } else { 1.0 }, 0.5);
    let ordered = gp.y_minus < 0.0 && 0.0 < gp.y_plus && gp.y_plus < gp.y3;
    push("y-<0<y+<y3", if ordered { 0.0 } else { 1.0 }, 0.5);
    push("cubic(y-)", cubic(gp.a, gp.y_minus).abs(), 1e-12);
    push("cubic(y+)", cubic(gp.a, gp.y_plus).abs(), 1e-12);
    let hp = h_of(gp.a, gp.y_plus);
    let hm = h_of(gp.a, gp.y_minus);
    push("ratio", ((hp - hm) / (2.0 * hp) - target).abs(), 1e-12);
    push("h(y+)", (hp - (gp.y_plus - 1.0) / (6.0 * gp.y_plus)).abs(), 1e-12);
    push("h(y-)", (hm - (gp.y_minus - 1.0) / (6.0 * gp.y_minus)).abs(), 1e-12);
    push("tau>0", if gp.tau > 0.0 { 0.0 } else { 1.0 }, 0.5);
    push("sigma even", (gp.sigma % 2) as f64, 0.5);
    out
}

/// Every valid label (q < p, coprime) with `2 <= p <= p_max`.
pub fn label_lattice(p_max: u32) -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for p in 2..=p_max {
        for q in 1..p {
            if gcd(p as u64, q as u64) == 1 {
                v.push((p, q));
            }
        }
    }
    v
}
