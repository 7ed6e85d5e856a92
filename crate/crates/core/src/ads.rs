//! AdS5 × S³ mode machinery: spherical harmonics on S³, the eigenbasis of
//! the radial operator
//! `L(s,λ) = -∂² + 3(tan x + cot x)∂ + s(s+2)/cos²x + (M²+λ)/(κ sin²x)`
//! on `L²((0,π/2), dν)` with `dν = 2cot³x dx`, and projection of data on the
//! time slice onto the product basis `f_i^β Ψ_β`.

use crate::error::{Error, Result};
use crate::geometry::GeometryParams;
use crate::radial::RadialSolver;
use crate::scalar::{derivs2, Real};
use crate::spectrum::{build_spectrum, phase_norm, TruncationPolicy, YEigenmode, YModeIndex, YPoint};
use crate::specfun::{assoc_legendre_cs, gauss_jacobi, gegenbauer, jacobi, ln_factorial, ln_gamma};
use num_complex::Complex64;
use num_dual::Dual2_64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// `β = (s1, s2, s3, n, m, l, k, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "[i64; 8]", try_from = "[i64; 8]")]
pub struct ModeIndex {
    pub s1: u32,
    pub s2: u32,
    pub s3: i64,
    pub n: i64,
    pub m: i64,
    pub l: i64,
    pub k: u32,
    pub j: u32,
}

impl ModeIndex {
    pub fn new(beta: [i64; 8]) -> Result<Self> {
        let [s1, s2, s3, n, m, l, k, j] = beta;
        if s1 < 0 || s2 < 0 || k < 0 || j < 0 {
            return Err(Error::IndexError(format!("negative natural entry in {beta:?}")));
        }
        if !(s1 >= s2 && s2 >= s3.abs()) {
            return Err(Error::IndexError(format!("need s1 >= s2 >= |s3| in {beta:?}")));
        }
        Ok(ModeIndex { s1: s1 as u32, s2: s2 as u32, s3, n, m, l, k: k as u32, j: j as u32 })
    }

    pub fn from_parts(s: (u32, u32, i64), y: YModeIndex) -> Self {
        ModeIndex { s1: s.0, s2: s.1, s3: s.2, n: y.n, m: y.m, l: y.l, k: y.k, j: y.j }
    }

    pub fn y_index(&self) -> YModeIndex {
        YModeIndex { n: self.n, m: self.m, l: self.l, k: self.k, j: self.j }
    }

    pub fn sector(&self) -> SectorKey {
        SectorKey { s3: self.s3, n: self.n, m: self.m, l: self.l }
    }

    pub fn to_array(&self) -> [i64; 8] {
        [self.s1 as i64, self.s2 as i64, self.s3, self.n, self.m, self.l, self.k as i64, self.j as i64]
    }
}

impl From<ModeIndex> for [i64; 8] {
    fn from(b: ModeIndex) -> Self {
        b.to_array()
    }
}

impl TryFrom<[i64; 8]> for ModeIndex {
    type Error = Error;
    fn try_from(v: [i64; 8]) -> Result<Self> {
        ModeIndex::new(v)
    }
}

/// `N_{s1 s2 s3}` in log space.
pub fn s3_norm(s1: u32, s2: u32, s3: i64) -> f64 {
    let (s1, s2) = (s1 as u64, s2 as u64);
    let s3a = s3;
    let ln = (2.0 * s2 as f64 - 1.0) * std::f64::consts::LN_2
        + ((s1 + 1) as f64).ln()
        + ((2 * s2 + 1) as f64).ln()
        + ln_factorial(s1 - s2)
        + ln_factorial((s2 as i64 - s3a) as u64)
        + 2.0 * ln_factorial(s2)
        - 2.0 * PI.ln()
        - ln_factorial(s1 + s2 + 1)
        - ln_factorial((s2 as i64 + s3a) as u64);
    (0.5 * ln).exp()
}

fn check_chain(s1: u32, s2: u32, s3: i64) -> Result<()> {
    if s1 >= s2 && s2 as i64 >= s3.abs() {
        Ok(())
    } else {
        Err(Error::IndexError(format!("need s1 >= s2 >= |s3|, got ({s1},{s2},{s3})")))
    }
}

/// Real part of the harmonic without the `e^{i s3 ϑ3}` factor.
pub fn s3_profile<T: Real>(s1: u32, s2: u32, s3: i64, t1: T, t2: T) -> Result<T> {
    check_chain(s1, s2, s3)?;
    let a = s3_polar(s1, s2, s3, t1);
    let b = assoc_legendre_cs(s2, s3 as i32, t2.cos(), t2.sin())?;
    Ok(a * b)
}

pub fn s3_harmonic(s1: u32, s2: u32, s3: i64, point: (f64, f64, f64)) -> Result<Complex64> {
    let (t1, t2, t3) = point;
    let r = s3_profile(s1, s2, s3, t1, t2)?;
    Ok(Complex64::from_polar(r, s3 as f64 * t3))
}

/// Relative residual of `Δ_{S³} Y + s1(s1+2) Y` with exact derivatives.
pub fn s3_residual(s1: u32, s2: u32, s3: i64, t1: f64, t2: f64) -> Result<f64> {
    check_chain(s1, s2, s3)?;
    let (a0, a1, a2) = derivs2(|t: Dual2_64| s3_polar(s1, s2, s3, t), t1);
    let (b0, b1, b2) = derivs2(|t: Dual2_64| assoc_legendre_cs(s2, s3 as i32, t.cos(), t.sin()).unwrap(), t2);
    let (s_1, c_1) = t1.sin_cos();
    let (s_2, c_2) = t2.sin_cos();
    let y = a0 * b0;
    let term1 = (a2 + 2.0 * c_1 / s_1 * a1) * b0;
    let term2 = a0 * (b2 + c_2 / s_2 * b1) / (s_1 * s_1);
    let term3 = -(s3 * s3) as f64 * y / (s_1 * s_1 * s_2 * s_2);
    let ev = (s1 * (s1 + 2)) as f64 * y;
    let scale = term1.abs() + term2.abs() + term3.abs() + ev.abs();
    Ok(if scale == 0.0 { 0.0 } else { (term1 + term2 + term3 + ev).abs() / scale })
}

fn s3_polar<T: Real>(s1: u32, s2: u32, s3: i64, t: T) -> T {
    T::c(s3_norm(s1, s2, s3)) * t.sin().powi(s2 as i32) * gegenbauer(s2 as f64 + 1.0, s1 - s2, t.cos())
}

/// `c_β = sqrt(4 + (M² + λ)/κ)`.
pub fn c_beta(mass: f64, kappa: f64, lambda: f64) -> f64 {
    (4.0 + (mass * mass + lambda) / kappa).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdSRadialMode {
    pub beta1: u32,
    pub c: f64,
    pub i: u32,
    pub omega: f64,
    pub norm_const: f64,
}

pub fn ads_omega(beta1: u32, c: f64, i: u32) -> f64 {
    let r = 2.0 * i as f64 + beta1 as f64 + c + 2.0;
    r * r
}

pub fn ads_radial_mode(beta1: u32, c: f64, i: u32) -> AdSRadialMode {
    let (s, ii) = (beta1 as f64, i as f64);
    let ln = (2.0 * ii + s + c + 2.0).ln() + ln_gamma(ii + 1.0) + ln_gamma(ii + s + c + 2.0)
        - ln_gamma(ii + s + 2.0)
        - ln_gamma(ii + c + 1.0);
    AdSRadialMode { beta1, c, i, omega: ads_omega(beta1, c, i), norm_const: (0.5 * ln).exp() }
}

impl AdSRadialMode {
    pub fn eval<T: Real>(&self, x: T) -> T {
        let (s, c) = (x.sin(), x.cos());
        T::c(self.norm_const)
            * c.powi(self.beta1 as i32)
            * s.powi(2)
            * s.powf(self.c)
            * jacobi(self.beta1 as f64 + 1.0, self.c, self.i, -(T::c(2.0) * x).cos())
    }

    /// Value in terms of `ξ = cos²x`.
    pub fn eval_xi(&self, xi: f64) -> f64 {
        self.norm_const
            * xi.powf(0.5 * self.beta1 as f64)
            * (1.0 - xi).powf(1.0 + 0.5 * self.c)
            * jacobi(self.beta1 as f64 + 1.0, self.c, self.i, 1.0 - 2.0 * xi)
    }

    /// Relative residual of `L f - Ω f`, with `(M²+λ)/κ = c² - 4`.
    pub fn residual(&self, x: f64) -> f64 {
        let (f0, f1, f2) = derivs2(|t: Dual2_64| self.eval(t), x);
        let (s, c) = x.sin_cos();
        let s1 = self.beta1 as f64;
        let t1 = -f2;
        let t2 = 3.0 * (s / c + c / s) * f1;
        let t3 = s1 * (s1 + 2.0) / (c * c) * f0;
        let t4 = (self.c * self.c - 4.0) / (s * s) * f0;
        let t5 = -self.omega * f0;
        let scale = t1.abs() + t2.abs() + t3.abs() + t4.abs() + t5.abs();
        if scale == 0.0 {
            0.0
        } else {
            (t1 + t2 + t3 + t4 + t5).abs() / scale
        }
    }
}

/// Gauss rule for `∫_0^{π/2} F dν` in `ξ = cos²x`, weight `ξ^{ea} (1-ξ)^{eb}`
/// divided out, so the returned weights integrate `F` directly.
pub fn nu_rule(ea: f64, eb: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    // t = 1 - 2ξ: (1-t) = 2ξ, (1+t) = 2(1-ξ)
    let r = gauss_jacobi(ea, eb, n)?;
    let mut xi = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for (&t, &wt) in r.nodes.iter().zip(&r.weights) {
        let x = 0.5 * (1.0 - t);
        let jac = 0.5f64.powf(ea + eb + 1.0) * wt / (x.powf(ea) * (1.0 - x).powf(eb));
        // dν = ξ (1-ξ)^{-2} dξ
        xi.push(x);
        w.push(jac * x / ((1.0 - x) * (1.0 - x)));
    }
    Ok((xi, w))
}

/// Gram matrix of `f_0..f_{i_max}` for fixed `(β1, c)` under `dν`, exact
/// for its polynomial part.
pub fn ads_gram(beta1: u32, c: f64, i_max: u32) -> Result<Vec<Vec<f64>>> {
    let n = i_max as usize + 1;
    let rule = gauss_jacobi(beta1 as f64 + 1.0, c, n + 2)?;
    let modes: Vec<AdSRadialMode> = (0..=i_max).map(|i| ads_radial_mode(beta1, c, i)).collect();
    let scale = 0.5f64.powf(beta1 as f64 + c + 2.0);
    let mut g = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a..n {
            let v = rule.integrate(|t| {
                modes[a].norm_const
                    * modes[b].norm_const
                    * jacobi(beta1 as f64 + 1.0, c, modes[a].i, t)
                    * jacobi(beta1 as f64 + 1.0, c, modes[b].i, t)
            }) * scale;
            g[a][b] = v;
            g[b][a] = v;
        }
    }
    Ok(g)
}

/// Truncation of the full product basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct AdsTruncation {
    pub y: TruncationPolicy,
    pub s1_max: u32,
    pub i_max: u32,
}

/// Fourier sector on the torus `(ϑ3, φ, ψ, α)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SectorKey {
    pub s3: i64,
    pub n: i64,
    pub m: i64,
    pub l: i64,
}

#[derive(Clone, Debug)]
pub struct BetaEntry {
    pub beta: ModeIndex,
    pub c: f64,
    pub lambda: f64,
    pub y_mode: Arc<YEigenmode>,
}

impl BetaEntry {
    pub fn radial(&self, i: u32) -> AdSRadialMode {
        ads_radial_mode(self.beta.s1, self.c, i)
    }
}

/// The retained `(β, i)` pairs with everything needed to evaluate them.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    pub gp: GeometryParams<f64>,
    pub mass: f64,
    pub kappa: f64,
    pub trunc: AdsTruncation,
    pub entries: Vec<BetaEntry>,
    index: BTreeMap<ModeIndex, usize>,
}

impl ModeBasis {
    pub fn build(
        gp: &GeometryParams<f64>,
        mass: f64,
        kappa: f64,
        trunc: &AdsTruncation,
        solver: &dyn RadialSolver,
    ) -> Result<Self> {
        if !(kappa > 0.0) || !(mass >= 0.0) {
            return Err(Error::Config(format!("need M >= 0 and κ > 0, got M={mass}, κ={kappa}")));
        }
        let ys = build_spectrum(gp, &trunc.y, solver)?;
        let mut entries = Vec::new();
        for ym in ys.into_iter().map(Arc::new) {
            let c = c_beta(mass, kappa, ym.lambda);
            for s1 in 0..=trunc.s1_max {
                for s2 in 0..=s1 {
                    for s3 in -(s2 as i64)..=(s2 as i64) {
                        let beta = ModeIndex::from_parts((s1, s2, s3), ym.index);
                        entries.push(BetaEntry { beta, c, lambda: ym.lambda, y_mode: ym.clone() });
                    }
                }
            }
        }
        entries.sort_by_key(|e| e.beta);
        let index = entries.iter().enumerate().map(|(i, e)| (e.beta, i)).collect();
        Ok(ModeBasis { gp: *gp, mass, kappa, trunc: *trunc, entries, index })
    }

    pub fn entry(&self, beta: &ModeIndex) -> Option<&BetaEntry> {
        self.index.get(beta).map(|&i| &self.entries[i])
    }

    pub fn omega(&self, beta: &ModeIndex, i: u32) -> Result<f64> {
        let e = self.entry(beta).ok_or_else(|| Error::IndexError(format!("{beta:?} not in basis")))?;
        Ok(ads_omega(beta.s1, e.c, i))
    }

    pub fn sectors(&self) -> Vec<SectorKey> {
        let mut v: Vec<SectorKey> = self.entries.iter().map(|e| e.beta.sector()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// `f_i^β(x) Ψ_β(ϑ, η)` at a point of the time slice.
    pub fn eval_product(&self, e: &BetaEntry, i: u32, pt: &SlicePoint) -> Result<Complex64> {
        let f = e.radial(i).eval(pt.x);
        let b = &e.beta;
        let y = s3_harmonic(b.s1, b.s2, b.s3, (pt.theta1, pt.theta2, pt.theta3))?;
        let u = crate::spectrum::eval_u(&e.y_mode, &pt.eta)?;
        Ok(f * y * u)
    }

    /// Sector grid suited to this basis with `nx` radial AdS nodes.
    pub fn sector_grid(&self, key: SectorKey, nx: usize) -> Result<SectorGrid> {
        let ents: Vec<&BetaEntry> = self.entries.iter().filter(|e| e.beta.sector() == key).collect();
        if ents.is_empty() {
            return Err(Error::GridMismatch(format!("sector {key:?} not in basis")));
        }
        let s1_max = ents.iter().map(|e| e.beta.s1).max().unwrap() as usize;
        let j_max = ents.iter().map(|e| e.beta.j).max().unwrap() as usize;
        let n_rad = ents.iter().map(|e| e.y_mode.radial.coeffs.len()).max().unwrap();
        SectorGrid::new(&self.gp, key, nx, s1_max + 2, s1_max + 2, n_rad + 2, j_max + 2)
    }
}

/// A point of the time slice `Σ`: AdS radius, S³ angles, Y^{p,q} point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicePoint {
    pub x: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub eta: YPoint,
}

/// One quadrature axis: nodes (in the natural coordinate) and weights that
/// integrate against the full measure of that coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Tensor-product grid for one Fourier sector.  Axes, in storage order:
/// `x` (AdS radius), `ϑ1`, `ϑ2`, `y`, `θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorGrid {
    pub key: SectorKey,
    pub x: Axis,
    pub theta1: Axis,
    pub theta2: Axis,
    pub y: Axis,
    pub theta: Axis,
}

fn angle_axis(ea: f64, eb: f64, n: usize, sin_power: f64) -> Result<Axis> {
    // ∫ F(ϑ) sin^{sin_power}ϑ dϑ with u = cosϑ: sin^{sin_power-1} du
    let r = gauss_jacobi(ea, eb, n)?;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (&u, &w) in r.nodes.iter().zip(&r.weights) {
        let weight_fn = (1.0 - u).powf(ea) * (1.0 + u).powf(eb);
        let meas = (1.0 - u * u).powf(0.5 * (sin_power - 1.0));
        nodes.push(u.acos());
        weights.push(w / weight_fn * meas);
    }
    Ok(Axis { nodes, weights })
}

impl SectorGrid {
    pub fn new(
        gp: &GeometryParams<f64>,
        key: SectorKey,
        nx: usize,
        n1: usize,
        n2: usize,
        ny: usize,
        nth: usize,
    ) -> Result<Self> {
        // x: functions carry ξ^{β1/2}, so ξ^1 from dν is the singular part at 0
        let (xi, wx) = nu_rule(1.0, 0.0, nx)?;
        let x = Axis { nodes: xi.iter().map(|&t| t.sqrt().acos()).collect(), weights: wx };
        let a3 = key.s3.unsigned_abs() as f64;
        let theta1 = angle_axis(a3 + 0.5, a3 + 0.5, n1, 2.0)?;
        let theta2 = angle_axis(a3, a3, n2, 1.0)?;
        let (ang_a, ang_b) = crate::angular::exponents(key.n, key.m);
        let theta = angle_axis(ang_a as f64, ang_b as f64, nth, 1.0)?;
        let (two_nm, two_np) = crate::radial::two_nu(gp, key.m, key.l);
        let r = gauss_jacobi(two_np as f64, two_nm as f64, ny)?;
        let c1 = 0.5 * (gp.y_plus - gp.y_minus);
        let yc = 0.5 * (gp.y_plus + gp.y_minus);
        let mut yn = Vec::with_capacity(ny);
        let mut yw = Vec::with_capacity(ny);
        for (&s, &w) in r.nodes.iter().zip(&r.weights) {
            let wf = (1.0 - s).powf(two_np as f64) * (1.0 + s).powf(two_nm as f64);
            let y = yc + c1 * s;
            yn.push(y);
            yw.push(w / wf * c1 * (1.0 - y) / 18.0);
        }
        Ok(SectorGrid { key, x, theta1, theta2, y: Axis { nodes: yn, weights: yw }, theta })
    }

    pub fn shape(&self) -> [usize; 5] {
        [self.x.nodes.len(), self.theta1.nodes.len(), self.theta2.nodes.len(), self.y.nodes.len(), self.theta.nodes.len()]
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn flat(&self, i: [usize; 5]) -> usize {
        let s = self.shape();
    ((((i[0] * s[1]) + i[1]) * s[2] + i[2]) * s[3] + i[3]) * s[4] + i[4]
    }

    /// Weight of a flattened node for `∫ · dν dω̂ dμ̂` (phase directions excluded).
    pub fn weight(&self, i: [usize; 5]) -> f64 {
        self.x.weights[i[0]] * self.theta1.weights[i[1]] * self.theta2.weights[i[2]] * self.y.weights[i[3]] * self.theta.weights[i[4]]
    }

    pub fn for_each_index<F: FnMut([usize; 5])>(&self, mut f: F) {
        let s = self.shape();
        for a in 0..s[0] {
            for b in 0..s[1] {
                for c in 0..s[2] {
                    for d in 0..s[3] {
                        for e in 0..s[4] {
                            f([a, b, c, d, e]);
                        }
                    }
                }
            }
        }
    }
}

/// Field data on the slice in sector form: for each sector, the amplitude
/// `g` sampled on that sector's grid, so that
/// `φ = Σ_sectors g · e^{i s3 ϑ3} / sqrt(2π) · e^{i(nφ + 2mψ + σlα/τ)} / ((2π)^{3/2} τ^{1/2})`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SectorSamples {
    pub sectors: BTreeMap<SectorKey, (SectorGrid, Vec<Complex64>)>,
}

impl SectorSamples {
    /// `∫ |φ|² dν dω dμ` on the grids.
    pub fn norm2(&self) -> f64 {
        let mut tot = 0.0;
        for (grid, vals) in self.sectors.values() {
            grid.for_each_index(|ix| tot += grid.weight(ix) * vals[grid.flat(ix)].norm_sqr());
        }
        tot
    }
}

/// Coefficients `a_{β,i}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoefficients {
    #[serde(with = "coeff_serde")]
    pub entries: BTreeMap<(ModeIndex, u32), Complex64>,
}

mod coeff_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row {
        beta: [i64; 8],
        i: u32,
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<(ModeIndex, u32), Complex64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Row> = m.iter().map(|((b, i), c)| Row { beta: b.to_array(), i: *i, re: c.re, im: c.im }).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<(ModeIndex, u32), Complex64>, D::Error> {
        let rows: Vec<Row> = Vec::deserialize(d)?;
        let mut m = BTreeMap::new();
        for r in rows {
            let b = ModeIndex::new(r.beta).map_err(serde::de::Error::custom)?;
            m.insert((b, r.i), Complex64::new(r.re, r.im));
        }
        Ok(m)
    }
}

impl SpectralCoefficients {
    pub fn get(&self, beta: &ModeIndex, i: u32) -> Complex64 {
        self.entries.get(&(*beta, i)).copied().unwrap_or_default()
    }

    pub fn norm2(&self) -> f64 {
        self.entries.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &SpectralCoefficients) -> f64 {
        let mut d: f64 = 0.0;
        for (k, v) in &self.entries {
            d = d.max((v - other.entries.get(k).copied().unwrap_or_default()).norm());
        }
        for (k, v) in &other.entries {
            if !self.entries.contains_key(k) {
                d = d.max(v.norm());
            }
        }
        d
    }

    pub fn scale(&self, s: Complex64) -> Self {
        SpectralCoefficients { entries: self.entries.iter().map(|(k, v)| (*k, v * s)).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut e = self.entries.clone();
        for (k, v) in &o.entries {
            *e.entry(*k).or_default() += v;
        }
        SpectralCoefficients { entries: e }
    }
}

/// Per-axis values of one basis function on a sector grid.
struct Factors {
    t1: Vec<f64>,
    t2: Vec<f64>,
    y: Vec<f64>,
    th: Vec<f64>,
}

fn factors(e: &BetaEntry, g: &SectorGrid) -> Result<Factors> {
    let b = &e.beta;
    let t1 = g.theta1.nodes.iter().map(|&t| s3_polar(b.s1, b.s2, b.s3, t)).collect();
    let t2 = g
        .theta2
        .nodes
        .iter()
        .map(|&t| assoc_legendre_cs(b.s2, b.s3 as i32, t.cos(), t.sin()).map(|v| v * (2.0 * PI).sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let y = g.y.nodes.iter().map(|&y| e.y_mode.radial.eval_unchecked(y)).collect();
    let th = g.theta.nodes.iter().map(|&t| e.y_mode.angular.eval(t)).collect();
    Ok(Factors { t1, t2, y, th })
}

/// `⟨data, f_i^β Ψ_β⟩` for every retained `(β, i)`.
pub fn project_cauchy(data: &SectorSamples, basis: &ModeBasis) -> Result<SpectralCoefficients> {
    let mut out = BTreeMap::new();
    for e in &basis.entries {
        let key = e.beta.sector();
        let Some((grid, vals)) = data.sectors.get(&key) else {
            for i in 0..=basis.trunc.i_max {
                out.insert((e.beta, i), Complex64::default());
            }
            continue;
        };
        if vals.len() != grid.len() {
            return Err(Error::GridMismatch(format!("sector {key:?}: {} samples for {} nodes", vals.len(), grid.len())));
        }
        let f = factors(e, grid)?;
        let s = grid.shape();
        // contract all but x
        let mut along_x = vec![Complex64::default(); s[0]];
        for (a, ax) in along_x.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for b in 0..s[1] {
                let wb = grid.theta1.weights[b] * f.t1[b];
                for c in 0..s[2] {
                    let wc = wb * grid.theta2.weights[c] * f.t2[c];
                    for d in 0..s[3] {
                        let wd = wc * grid.y.weights[d] * f.y[d];
                        let base = grid.flat([a, b, c, d, 0]);
                        for t in 0..s[4] {
                            acc += vals[base + t] * (wd * grid.theta.weights[t] * f.th[t]);
                        }
                    }
                }
            }
            *ax = acc * grid.x.weights[a];
        }
        for i in 0..=basis.trunc.i_max {
            let md = e.radial(i);
            let v: Complex64 = grid.x.nodes.iter().zip(&along_x).map(|(&x, &g)| g * md.eval(x)).sum();
            out.insert((e.beta, i), v);
        }
    }
    Ok(SpectralCoefficients { entries: out })
}

/// Synthesize sector samples from coefficients on the basis' own grids.
pub fn synthesize(coeffs: &SpectralCoefficients, basis: &ModeBasis, nx: usize) -> Result<SectorSamples> {
    let mut out = SectorSamples::default();
    for key in basis.sectors() {
        let grid = basis.sector_grid(key, nx)?;
        let mut vals = vec![Complex64::default(); grid.len()];
        for e in basis.entries.iter().filter(|e| e.beta.sector() == key) {
            let along: Vec<Complex64> = grid
                .x
                .nodes
                .iter()
                .map(|&x| (0..=basis.trunc.i_max).map(|i| coeffs.get(&e.beta, i) * e.radial(i).eval(x)).sum())
                .collect();
            if along.iter().all(|c| c.norm() == 0.0) {
                continue;
            }
            let f = factors(e, &grid)?;
            grid.for_each_index(|[a, b, c, d, t]| {
                vals[grid.flat([a, b, c, d, t])] += along[a] * (f.t1[b] * f.t2[c] * f.y[d] * f.th[t]);
            });
        }
        out.sectors.insert(key, (grid, vals));
    }
    Ok(out)
}

/// Sample an arbitrary sector amplitude `g(x, ϑ1, ϑ2, y, θ)` on the basis grids.
pub fn sample_sectors<F>(basis: &ModeBasis, keys: &[SectorKey], nx: usize, g: F) -> Result<SectorSamples>
where
    F: Fn(SectorKey, [f64; 5]) -> Complex64,
{
    let mut out = SectorSamples::default();
    for &key in keys {
        let grid = basis.sector_grid(key, nx)?;
        let mut vals = vec![Complex64::default(); grid.len()];
        grid.for_each_index(|ix| {
            let pt = [
                grid.x.nodes[ix[0]],
                grid.theta1.nodes[ix[1]],
                grid.theta2.nodes[ix[2]],
                grid.y.nodes[ix[3]],
                grid.theta.nodes[ix[4]],
            ];
            vals[grid.flat(ix)] = g(key, pt);
        });
        out.sectors.insert(key, (grid, vals));
    }
    Ok(out)
}

/// Field value `Σ a_{β,i} f_i^β Ψ_β` at a slice point.
pub fn eval_field(coeffs: &SpectralCoefficients, basis: &ModeBasis, pt: &SlicePoint) -> Result<Complex64> {
    let mut acc = Complex64::default();
    for ((beta, i), a) in &coeffs.entries {
        if a.norm() == 0.0 {
            continue;
        }
        let e = basis.entry(beta).ok_or_else(|| Error::IndexError(format!("{beta:?} not in basis")))?;
        acc += a * basis.eval_product(e, *i, pt)?;
    }
    Ok(acc)
}

/// Phase normalization of the torus factor in sector form.
pub fn sector_phase(gp: &GeometryParams<f64>, key: SectorKey, pt: &SlicePoint) -> Complex64 {
    let arg = key.s3 as f64 * pt.theta3
        + key.n as f64 * pt.eta.phi
        + 2.0 * key.m as f64 * pt.eta.psi
        + gp.kappa(key.l) * pt.eta.alpha;
    Complex64::from_polar(phase_norm(gp) / (2.0 * PI).sqrt(), arg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn c_beta_examples() {
        assert_eq!(c_beta(0.0, 3.0, 0.0), 2.0);
        assert_relative_eq!(c_beta(1.0, 1.0, 0.0), 5f64.sqrt());
        assert_relative_eq!(c_beta(0.0, 1.0, 12.0), 4.0);
    }

    #[test]
    fn omega_examples() {
        assert_eq!(ads_radial_mode(0, 2.0, 0).omega, 16.0);
        assert_eq!(ads_radial_mode(2, 3.0, 1).omega, 81.0);
    }

    #[test]
    fn constant_harmonic() {
        let y = s3_harmonic(0, 0, 0, (0.3, 1.1, 2.0)).unwrap();
        assert_relative_eq!(y.re, 1.0 / (PI * 2f64.sqrt()), epsilon = 1e-15);
        assert!(s3_harmonic(1, 2, 0, (0.3, 1.1, 2.0)).is_err());
    }

    #[test]
    fn mode_index_chain() {
        assert!(ModeIndex::new([1, 1, -1, 0, 0, 0, 0, 0]).is_ok());
        assert!(ModeIndex::new([1, 0, 1, 0, 0, 0, 0, 0]).is_err());
        let b = ModeIndex::new([2, 1, 0, 1, -1, 0, 1, 2]).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, "[2,1,0,1,-1,0,1,2]");
        assert_eq!(serde_json::from_str::<ModeIndex>(&s).unwrap(), b);
    }

    #[test]
    fn nu_rule_integrates_mode_norm() {
        let md = ads_radial_mode(1, 2.7, 3);
        let (xi, w) = nu_rule(2.0, 2.7, 12).unwrap();
        let n: f64 = xi.iter().zip(&w).map(|(&x, &wi)| wi * md.eval_xi(x).powi(2)).sum();
        assert_relative_eq!(n, 1.0, epsilon = 1e-12);
    }
}
