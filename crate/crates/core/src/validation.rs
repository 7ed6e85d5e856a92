//! The invariant suite shared by `ypq selftest` and the acceptance target.
//! Every check returns a [`CheckResult`] carrying its worst observed value,
//! its tolerance and its wall time; runtime budgets count toward `pass`.

use crate::ads::{ads_gram, ads_radial_mode, AdsTruncation, ModeBasis, SpectralCoefficients};
use crate::angular::{angular_gram, angular_mode};
use crate::error::Result;
use crate::geometry::{check_invariants, gcd, mirrored_label, solve_geometry, GeometryParams};
use crate::propagator::{
    duhamel_coefficients, evolve_coefficients, mode_energy_coeffs, reflection_discrepancy, translation_discrepancy,
    FieldData, SourceTerm,
};
use crate::radial::shooting::shooting_auto;
use crate::radial::{solve_radial_auto, GalerkinSolver, RadialProblem, RadialSolver};
use crate::spectrum::{build_spectrum, laplacian_residual, product_gram, TruncationPolicy, YEigenmode};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub name: String,
    pub pass: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:<4} {:<44} worst={:.3e} tol={:.1e} time={:.2}s/{:.0}s {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.worst,
            self.tolerance,
            self.seconds,
            self.budget_seconds,
            self.detail
        )
    }
}

fn finish(id: &str, name: &str, start: Instant, budget: f64, worst: f64, tol: f64, ok: bool, detail: String) -> CheckResult {
    let seconds = start.elapsed().as_secs_f64();
    CheckResult {
        id: id.into(),
        name: name.into(),
        pass: ok && worst.is_finite() && worst < tol && seconds < budget,
        worst,
        tolerance: tol,
        seconds,
        budget_seconds: budget,
        detail,
    }
}

fn wrap(id: &str, name: &str, start: Instant, budget: f64, tol: f64, r: Result<(f64, String)>) -> CheckResult {
    match r {
        Ok((w, d)) => finish(id, name, start, budget, w, tol, true, d),
        Err(e) => finish(id, name, start, budget, f64::INFINITY, tol, false, format!("error: {e}")),
    }
}

fn geometry_worst(gp: &GeometryParams<f64>) -> f64 {
    check_invariants(gp)
        .iter()
        .filter(|c| matches!(c.name, "ratio" | "h(y+)" | "h(y-)"))
        .map(|c| c.residual)
        .fold(0.0, f64::max)
}

/// Labels `2 <= p <= 6`, `p < q < 2p`, coprime.
pub fn upper_labels() -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for p in 2..=6u32 {
        for q in p + 1..2 * p {
            if gcd(p as u64, q as u64) == 1 {
                v.push((p, q));
            }
        }
    }
    v
}

/// Criterion 1 exactly as stated: `solve_geometry` on labels with `p < q < 2p`.
pub fn geometry_literal() -> CheckResult {
    let t = Instant::now();
    let labels = upper_labels();
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for &(p, q) in &labels {
        match solve_geometry(p, q) {
            Ok(gp) => worst = worst.max(geometry_worst(&gp)),
            Err(_) => {
                failed.push(format!("({p},{q})"));
                worst = f64::INFINITY;
            }
        }
    }
    let m = geometry_mirrored_inner();
    let detail = format!(
        "{} labels, rejected: {}; mirrored (p,2p-q) lattice worst={:.2e}",
        labels.len(),
        if failed.is_empty() { "none".to_string() } else { failed.join(" ") },
        m
    );
    finish("1", "geometry, labels p<q<2p", t, 1.0, worst, 1e-12, true, detail)
}

fn geometry_mirrored_inner() -> f64 {
    upper_labels()
        .into_iter()
        .map(|(p, q)| {
            let (p2, q2) = mirrored_label(p, q);
            solve_geometry(p2, q2).map(|g| geometry_worst(&g)).unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}

/// The same residuals on the mirrored labels `(p, 2p-q)`.
pub fn geometry_mirrored() -> CheckResult {
    let t = Instant::now();
    let w = geometry_mirrored_inner();
    finish("1m", "geometry, mirrored labels (p,2p-q)", t, 1.0, w, 1e-12, true, format!("{} labels", upper_labels().len()))
}

/// Criterion 2.
pub fn angular_basis() -> CheckResult {
    let t = Instant::now();
    let mut gram: f64 = 0.0;
    let mut ode: f64 = 0.0;
    for n in -3i64..=3 {
        for m in -3i64..=3 {
            let g = angular_gram(n, m, 10);
            for a in 0..g.nrows() {
                for b in 0..g.ncols() {
                    let e = if a == b { 1.0 } else { 0.0 };
                    gram = gram.max((g[(a, b)] - e).abs());
                }
            }
            for j in 0..=10 {
                let md = angular_mode(n, m, j);
                for k in 1..40 {
                    let th = std::f64::consts::PI * k as f64 / 40.0;
                    ode = ode.max(md.residual(th).abs());
                }
            }
        }
    }
    let ok = gram < 1e-11 && ode < 1e-7;
    let worst = (gram / 1e-11).max(ode / 1e-7);
    finish("2", "angular Gram and ODE residual", t, 10.0, worst, 1.0, ok, format!("gram={gram:.2e} (1e-11) ode={ode:.2e} (1e-7)"))
}

/// `(p,q)` pairs of the radial test matrix after mirroring.
pub const RADIAL_LABELS: [(u32, u32); 2] = [(2, 1), (3, 2)];
pub const RADIAL_ML: [(i64, i64); 4] = [(0, 0), (1, 0), (0, 1), (2, -1)];

/// Criterion 3.
pub fn radial_vs_oracle() -> CheckResult {
    let t = Instant::now();
    let r = (|| -> Result<(f64, String)> {
        let mut worst: f64 = 0.0;
        let lam101 = angular_mode(1, 0, 1).lambda_cap;
        for (p, q) in RADIAL_LABELS {
            let gp = solve_geometry(p, q)?;
            for (m, l) in RADIAL_ML {
                for lam in [0.0, lam101] {
                    let prob = RadialProblem::new(&gp, m, l, lam);
                    let gal = solve_radial_auto(&prob, 4)?;
                    for (k, md) in gal.iter().enumerate() {
                        let sh = shooting_auto(&prob, k as u32)?;
                        let scale = md.ell.abs().max(sh.abs()).max(1.0);
                        worst = worst.max((md.ell - sh).abs() / scale);
                    }
                }
            }
        }
        let gp = solve_geometry(2, 1)?;
        let kern = solve_radial_auto(&RadialProblem::new(&gp, 0, 0, 0.0), 0)?;
        let w0 = kern[0].eval_unchecked(gp.y_minus);
        let flat = (0..=20)
            .map(|i| {
                let y = gp.y_minus + (gp.y_plus - gp.y_minus) * i as f64 / 20.0;
                (kern[0].eval_unchecked(y) - w0).abs() / w0.abs()
            })
            .fold(0.0, f64::max);
        let kern_ok = kern[0].ell.abs() < 1e-9 && flat < 1e-9;
        let detail = format!("16 cases x 5 eigenvalues; kernel l0={:.1e} flatness={flat:.1e}", kern[0].ell);
        Ok((if kern_ok { worst } else { f64::INFINITY }, detail))
    })();
    wrap("3", "radial Galerkin vs shooting oracle", t, 120.0, 1e-6, r)
}

/// `(p, q, m, l, Λ, k)` for the endpoint-exponent fits.
pub const EXPONENT_MODES: [(u32, u32, i64, i64, f64, u32); 6] = [
    (2, 1, 0, 1, 0.0, 0),
    (2, 1, 1, 0, 2.0, 1),
    (2, 1, 2, -1, 0.0, 2),
    (3, 2, 0, 1, 2.0, 0),
    (3, 2, 1, 1, 0.0, 1),
    (3, 2, 1, -1, 6.0, 0),
];

/// Least-squares slope of `log|w|` against `log d` for `d` over one decade.
pub fn fitted_slope<F: Fn(f64) -> f64>(w: F, d_lo: f64) -> f64 {
    let n = 21;
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let d = d_lo * 10f64.powf(i as f64 / (n - 1) as f64);
            (d.ln(), w(d).abs().ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Criterion 4.
pub fn endpoint_exponents() -> CheckResult {
    let t = Instant::now();
    let r = (|| -> Result<(f64, String)> {
        let mut worst: f64 = 0.0;
        let mut parts = Vec::new();
        for (p, q, m, l, lam, k) in EXPONENT_MODES {
            let gp = solve_geometry(p, q)?;
            let prob = RadialProblem::new(&gp, m, l, lam);
            let md = solve_radial_auto(&prob, k)?.swap_remove(k as usize);
            let width = gp.y_plus - gp.y_minus;
            let d_lo = 1e-4 * width;
            let sm = fitted_slope(|d| md.eval_unchecked(gp.y_minus + d), d_lo);
            let sp = fitted_slope(|d| md.eval_unchecked(gp.y_plus - d), d_lo);
            worst = worst.max((sm - prob.nu_minus).abs()).max((sp - prob.nu_plus).abs());
            parts.push(format!("({p},{q};{m},{l};{k}):{sm:.3}/{}|{sp:.3}/{}", prob.nu_minus, prob.nu_plus));
        }
        Ok((worst, parts.join(" ")))
    })();
    wrap("4", "endpoint exponents", t, 30.0, 0.05, r)
}

/// The 20 lowest modes of a small box on `Y^{2,1}`.
pub fn spectrum_modes(solver: &dyn RadialSolver) -> Result<Vec<YEigenmode>> {
    let gp = solve_geometry(2, 1)?;
    let trunc = TruncationPolicy { n_max: 1, m_max: 1, l_max: 1, k_max: 1, j_max: 1, lambda_max: None };
    let mut all = build_spectrum(&gp, &trunc, solver)?;
    all.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.index.cmp(&b.index)));
    all.truncate(20);
    Ok(all)
}

/// Criterion 5.
pub fn spectrum_assembly() -> CheckResult {
    let t = Instant::now();
    let r = (|| -> Result<(f64, String)> {
        let modes = spectrum_modes(&GalerkinSolver::default())?;
        let g = product_gram(&modes)?;
        let mut gram: f64 = 0.0;
        for a in 0..g.nrows() {
            for b in 0..g.ncols() {
                gram = gram.max((g[(a, b)] - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        let gp = modes[0].radial.problem.gp;
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let mut res: f64 = 0.0;
        for md in &modes {
            for _ in 0..20 {
                let y = rng.gen_range(gp.y_minus..gp.y_plus);
                let th = rng.gen_range(0.0..std::f64::consts::PI);
                res = res.max(laplacian_residual(md, y, th));
            }
        }
        let ok = gram < 1e-9 && res < 1e-6;
        let detail = format!("{} modes on Y^(2,1); gram={gram:.2e} (1e-9) residual={res:.2e} (1e-6)", modes.len());
        Ok((if ok { (gram / 1e-9).max(res / 1e-6) } else { f64::INFINITY }, detail))
    })();
    wrap("5", "product-basis Gram and Laplacian residual", t, 120.0, 1.0, r)
}

/// `Ω` as an exact fraction for rational `c = num/den`.
pub fn omega_rational(beta1: u32, c_num: i128, c_den: i128, i: u32) -> (i128, i128) {
    let top = (2 * i as i128 + beta1 as i128 + 2) * c_den + c_num;
    (top * top, c_den * c_den)
}

pub const ADS_BETA1: [u32; 3] = [0, 1, 3];
pub const ADS_C: [(i128, i128); 3] = [(2, 1), (27, 10), (5, 1)];

/// Criterion 6.
pub fn ads_modes() -> CheckResult {
    let t = Instant::now();
    let r = (|| -> Result<(f64, String)> {
        let mut gram: f64 = 0.0;
        let mut res: f64 = 0.0;
        let mut spacing_ok = true;
        for b in ADS_BETA1 {
            for (cn, cd) in ADS_C {
                let c = cn as f64 / cd as f64;
                let g = ads_gram(b, c, 12)?;
                for (a, row) in g.iter().enumerate() {
                    for (k, v) in row.iter().enumerate() {
                        gram = gram.max((v - if a == k { 1.0 } else { 0.0 }).abs());
                    }
                }
                for i in 0..=12 {
                    let md = ads_radial_mode(b, c, i);
                    for k in 1..=30 {
                        let x = std::f64::consts::FRAC_PI_2 * k as f64 / 31.0;
                        res = res.max(md.residual(x));
                    }
                    // Ω_{i+1} - Ω_i = 4(2i + β1 + c + 3) in exact fractions
                    let (n0, d) = omega_rational(b, cn, cd, i);
                    let (n1, _) = omega_rational(b, cn, cd, i + 1);
                    let rhs = 4 * ((2 * i as i128 + b as i128 + 3) * cd + cn) * cd;
                    spacing_ok &= n1 - n0 == rhs;
                    spacing_ok &= (md.omega - n0 as f64 / d as f64).abs() <= 4.0 * f64::EPSILON * md.omega;
                }
            }
        }
        let ok = gram < 1e-10 && res < 1e-6 && spacing_ok;
        let detail = format!("gram={gram:.2e} (1e-10) L-residual={res:.2e} (1e-6) spacing exact={spacing_ok}");
        Ok((if ok { (gram / 1e-10).max(res / 1e-6) } else { f64::INFINITY }, detail))
    })();
    wrap("6", "AdS radial modes", t, 20.0, 1.0, r)
}

/// Small basis used by the propagator diagnostics.
pub fn diagnostic_basis() -> Result<ModeBasis> {
    let gp = solve_geometry(2, 1)?;
    let trunc = AdsTruncation {
        y: TruncationPolicy { n_max: 1, m_max: 1, l_max: 1, k_max: 1, j_max: 1, lambda_max: None },
        s1_max: 1,
        i_max: 4,
    };
    ModeBasis::build(&gp, 0.5, 1.0, &trunc, &GalerkinSolver::default())
}

pub fn random_coefficients(basis: &ModeBasis, seed: u64) -> SpectralCoefficients {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut c = SpectralCoefficients::default();
    for e in &basis.entries {
        for i in 0..=basis.trunc.i_max {
            c.entries.insert((e.beta, i), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    c
}

/// Criterion 7.
pub fn propagator_diagnostics() -> CheckResult {
    let t = Instant::now();
    let r = (|| -> Result<(f64, String)> {
        let basis = diagnostic_basis()?;
        let a0 = random_coefficients(&basis, 11);
        let a1 = random_coefficients(&basis, 12);
        let e0 = mode_energy_coeffs(&basis, &a0, &a1)?;
        let mut energy: f64 = 0.0;
        for step in 0..=10 {
            let (x, v) = evolve_coefficients(&basis, &a0, &a1, step as f64)?;
            let et = mode_energy_coeffs(&basis, &x, &v)?;
            for (a, b) in e0.iter().zip(&et) {
                energy = energy.max((a.energy - b.energy).abs() / a.energy);
            }
        }
        let mut refl: f64 = 0.0;
        let mut trans: f64 = 0.0;
        for (t1, t2) in [(0.3, 1.7), (2.5, 4.0), (5.0, 5.0), (-1.2, 3.3)] {
            refl = refl.max(reflection_discrepancy(&basis, &a0, &a1, t1 + t2)?);
            trans = trans.max(translation_discrepancy(&basis, &a0, &a1, t1, t2)?);
        }
        // zero source
        let tt = 3.0;
        let zero = SourceTerm { times: vec![0.0, 1.5, 3.0], slices: vec![FieldData::zero(); 3] };
        let d = duhamel_coefficients(&basis, &zero, tt)?;
        let (x, _) = evolve_coefficients(&basis, &a0, &a1, tt)?;
        let zero_src = x.add(&d).max_abs_diff(&x);
        // constant single-mode source
        let e = &basis.entries[basis.entries.len() / 2];
        let mut one = SpectralCoefficients::default();
        one.entries.insert((e.beta, 2), Complex64::new(1.0, 0.0));
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let src = SourceTerm { times: times.clone(), slices: vec![FieldData::Coefficients(one); times.len()] };
        let mut closed: f64 = 0.0;
        for &tt in &[0.5, 2.0, 7.3, 10.0] {
            let om = basis.omega(&e.beta, 2)?;
            let got = duhamel_coefficients(&basis, &src, tt)?.get(&e.beta, 2);
            let want = (1.0 - (tt * om.sqrt()).cos()) / om;
            closed = closed.max((got - Complex64::new(want, 0.0)).norm());
        }
        let ok = energy < 1e-12 && refl < 1e-12 && trans < 1e-12 && zero_src < 1e-14 && closed < 1e-10;
        let worst = (energy / 1e-12).max(refl / 1e-12).max(trans / 1e-12).max(zero_src / 1e-14).max(closed / 1e-10);
        let detail = format!(
            "{} modes; energy={energy:.1e} reflection={refl:.1e} translation={trans:.1e} zero-source={zero_src:.1e} closed-form={closed:.1e}",
            e0.len()
        );
        Ok((if ok { worst } else { f64::INFINITY }, detail))
    })();
    wrap("7", "propagator admissibility diagnostics", t, 30.0, 1.0, r)
}

/// Everything `selftest` runs: the checks on the solvable label domain.
pub fn run_suite() -> Vec<CheckResult> {
    vec![
        geometry_mirrored(),
        angular_basis(),
        radial_vs_oracle(),
        endpoint_exponents(),
        spectrum_assembly(),
        ads_modes(),
        propagator_diagnostics(),
    ]
}
