use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use ypq_core::ads::{ads_gram, ads_radial_mode, ModeBasis};
use ypq_core::angular::{angular_gram, angular_mode};
use ypq_core::cache::{CachedSolver, ModeCache};
use ypq_core::config::{OutputFormat, RunConfig};
use ypq_core::geometry::{check_invariants, mirrored_label, solve_geometry_with, GeometryParams, SigmaRule};
use ypq_core::propagator::{FieldSample, Propagator};
use ypq_core::radial::shooting::shooting_auto;
use ypq_core::radial::{GalerkinSolver, RadialProblem, RadialSolver};
use ypq_core::spectrum::{build_spectrum, TruncationPolicy};
use ypq_core::{validation, Error};

/// `println!` that ends the process quietly once the reader has gone away.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        if let Err(e) = writeln!(std::io::stdout().lock(), $($t)*) {
            quiet_exit(e);
        }
    }};
}

fn quiet_exit(e: std::io::Error) -> ! {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        std::process::exit(0);
    }
    eprintln!("error: {e}");
    std::process::exit(1);
}

#[derive(Parser)]
#[command(name = "ypq", version, about = "Spectral solver for Y^{p,q} and the AdS5 x Y^{p,q} Klein-Gordon propagator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the quantization condition and print the geometry.
    Geometry {
        #[command(flatten)]
        label: Label,
        #[arg(long)]
        json: bool,
    },
    /// Angular eigenvalues, normalizations and Gram residual.
    Angular {
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, default_value_t = 5)]
        jmax: u32,
        #[arg(long)]
        json: bool,
    },
    /// Radial eigenvalues for one (m, l, Λ).
    Radial {
        #[command(flatten)]
        label: Label,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, allow_hyphen_values = true)]
        l: i64,
        /// Angular separation constant Λ.
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = 4)]
        kmax: u32,
        #[arg(long)]
        n_basis: Option<usize>,
        /// Also run the shooting oracle and print the relative difference.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Eigenvalues of the Laplacian over a rectangular truncation.
    Spectrum {
        #[command(flatten)]
        label: Label,
        #[command(flatten)]
        trunc: Trunc,
        #[command(flatten)]
        out: Output,
    },
    /// AdS radial modes: (i, Ω, norm residual).
    AdsModes {
        #[arg(long)]
        beta1: u32,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 12)]
        imax: u32,
        #[arg(long)]
        json: bool,
    },
    /// Evolve Cauchy data described by a TOML run configuration.
    Propagate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant suite and print a pass/fail table.
    Selftest {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Label {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    q: u32,
    #[arg(long, default_value = "prose")]
    sigma_rule: SigmaRule,
}

#[derive(Args)]
struct Trunc {
    #[arg(long, default_value_t = 1)]
    n_max: u32,
    #[arg(long, default_value_t = 1)]
    m_max: u32,
    #[arg(long, default_value_t = 1)]
    l_max: u32,
    #[arg(long, default_value_t = 1)]
    k_max: u32,
    #[arg(long, default_value_t = 1)]
    j_max: u32,
    #[arg(long)]
    lambda_max: Option<f64>,
}

#[derive(Args)]
struct Output {
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
    /// Radial cache directory (overridden by YPQ_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

/// Input problems exit 2, numerical ones exit 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidLabel { .. }
        | Error::OutOfRange { .. }
        | Error::DegreeOrderError { .. }
        | Error::IndexError(_)
        | Error::Config(_)
        | Error::GridMismatch(_)
        | Error::SourceCoverage { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Labels with `p < q < 2p` are solved as `(p, 2p - q)`, the same manifold.
fn geometry_for(l: &Label) -> ypq_core::Result<GeometryParams<f64>> {
    let (mut p, mut q) = (l.p, l.q);
    if q > p && q < 2 * p {
        let (p2, q2) = mirrored_label(p, q);
        eprintln!("note: label ({p},{q}) solved as its mirror ({p2},{q2})");
        (p, q) = (p2, q2);
    }
    solve_geometry_with::<f64>(p, q, l.sigma_rule)
}

fn solver(dir: Option<&Path>) -> ypq_core::Result<Box<dyn RadialSolver>> {
    Ok(match ModeCache::from_env_or(dir)? {
        Some(cache) => Box::new(CachedSolver { inner: GalerkinSolver::default(), cache }),
        None => Box::new(GalerkinSolver::default()),
    })
}

fn print_json<T: Serialize>(v: &T) -> ypq_core::Result<()> {
    out!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn csv_out<R: Serialize>(rows: &[R]) -> ypq_core::Result<()> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for r in rows {
        match w.serialize(r) {
            Err(e) => match e.into_kind() {
                csv::ErrorKind::Io(io) => quiet_exit(io),
                k => return Err(Error::Io(std::io::Error::other(format!("{k:?}")))),
            },
            Ok(()) => {}
        }
    }
    if let Err(e) = w.flush() {
        quiet_exit(e);
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn run(cmd: Cmd) -> ypq_core::Result<u8> {
    match cmd {
        Cmd::Geometry { label, json } => {
            let gp = geometry_for(&label)?;
            let checks = check_invariants(&gp);
            if json {
                #[derive(Serialize)]
                struct Out<'a> {
                    geometry: &'a GeometryParams<f64>,
                    volume: f64,
                    invariants: &'a [ypq_core::geometry::InvariantCheck],
                }
                print_json(&Out { geometry: &gp, volume: gp.volume(), invariants: &checks })?;
            } else {
                out!("p={} q={} sigma_rule={}", gp.p, gp.q, gp.sigma_rule.as_str());
                out!("a      = {:.17e}", gp.a);
                out!("y-     = {:.17e}", gp.y_minus);
                out!("y+     = {:.17e}", gp.y_plus);
                out!("y3     = {:.17e}", gp.y3);
                out!("tau    = {:.17e}", gp.tau);
                out!("sigma  = {}", gp.sigma);
                out!("volume = {:.17e}", gp.volume());
                for c in &checks {
                    out!("{} {:<12} {:.3e}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.residual);
                }
            }
            Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 })
        }
        Cmd::Angular { n, m, jmax, json } => {
            #[derive(Serialize)]
            struct Row {
                j: u32,
                lambda: f64,
                norm_const: f64,
            }
            let rows: Vec<Row> = (0..=jmax)
                .map(|j| {
                    let md = angular_mode(n, m, j);
                    Row { j, lambda: md.lambda_cap, norm_const: md.norm_const }
                })
                .collect();
            let g = angular_gram(n, m, jmax);
            let mut dev: f64 = 0.0;
            for a in 0..g.nrows() {
                for b in 0..g.ncols() {
                    dev = dev.max((g[(a, b)] - if a == b { 1.0 } else { 0.0 }).abs());
                }
            }
            if json {
                #[derive(Serialize)]
                struct Out {
                    n: i64,
                    m: i64,
                    modes: Vec<Row>,
                    gram_deviation: f64,
                }
                print_json(&Out { n, m, modes: rows, gram_deviation: dev })?;
            } else {
                out!("j,lambda,norm_const");
                for r in &rows {
                    out!("{},{},{:e}", r.j, r.lambda, r.norm_const);
                }
                out!("# gram deviation {dev:.3e}");
            }
            Ok(0)
        }
        Cmd::Radial { label, m, l, lambda, kmax, n_basis, oracle, out } => {
            let gp = geometry_for(&label)?;
            let prob = RadialProblem::new(&gp, m, l, lambda);
            let modes = match n_basis {
                Some(n) => GalerkinSolver { n_basis: Some(n) }.solve(&prob, kmax)?,
                None => solver(out.cache_dir.as_deref())?.solve(&prob, kmax)?,
            };
            #[derive(Serialize)]
            struct Row {
                k: u32,
                ell: f64,
                nu_minus: f64,
                nu_plus: f64,
                oracle: Option<f64>,
                rel_diff: Option<f64>,
            }
            let mut rows = Vec::new();
            for md in &modes {
                let (o, d) = if oracle {
                    let s = shooting_auto(&prob, md.k)?;
                    (Some(s), Some((s - md.ell).abs() / md.ell.abs().max(s.abs()).max(1.0)))
                } else {
                    (None, None)
                };
                rows.push(Row { k: md.k, ell: md.ell, nu_minus: prob.nu_minus, nu_plus: prob.nu_plus, oracle: o, rel_diff: d });
            }
            if out.json {
                print_json(&rows)?;
            } else {
                csv_out(&rows)?;
            }
            Ok(0)
        }
        Cmd::Spectrum { label, trunc, out } => {
            let gp = geometry_for(&label)?;
            let policy = TruncationPolicy {
                n_max: trunc.n_max,
                m_max: trunc.m_max,
                l_max: trunc.l_max,
                k_max: trunc.k_max,
                j_max: trunc.j_max,
                lambda_max: trunc.lambda_max,
            };
            let s = solver(out.cache_dir.as_deref())?;
            let modes = build_spectrum(&gp, &policy, s.as_ref())?;
            #[derive(Serialize)]
            struct Row {
                n: i64,
                m: i64,
                l: i64,
                k: u32,
                j: u32,
                lambda_cap: f64,
                lambda: f64,
            }
            let rows: Vec<Row> = modes
                .iter()
                .map(|md| Row {
                    n: md.index.n,
                    m: md.index.m,
                    l: md.index.l,
                    k: md.index.k,
                    j: md.index.j,
                    lambda_cap: md.angular.lambda_cap,
                    lambda: md.lambda,
                })
                .collect();
            if out.json {
                print_json(&rows)?;
            } else {
                csv_out(&rows)?;
            }
            Ok(0)
        }
        Cmd::AdsModes { beta1, c, imax, json } => {
            if !(c >= 2.0) {
                return Err(Error::OutOfRange { value: c, lo: 2.0, hi: f64::INFINITY });
            }
            let g = ads_gram(beta1, c, imax)?;
            #[derive(Serialize)]
            struct Row {
                i: u32,
                omega: f64,
                norm_residual: f64,
            }
            let rows: Vec<Row> = (0..=imax)
                .map(|i| Row { i, omega: ads_radial_mode(beta1, c, i).omega, norm_residual: (g[i as usize][i as usize] - 1.0).abs() })
                .collect();
            if json {
                print_json(&rows)?;
            } else {
                csv_out(&rows)?;
            }
            Ok(0)
        }
        Cmd::Propagate { config } => propagate(&config),
        Cmd::Selftest { json } => {
            let results = validation::run_suite();
            if json {
                print_json(&results)?;
            } else {
                for r in &results {
                    out!("{}", r.line());
                }
            }
            let ok = results.iter().all(|r| r.pass);
            out!("selftest: {}", if ok { "all checks passed" } else { "FAILED" });
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn propagate(path: &Path) -> ypq_core::Result<u8> {
    let cfg = RunConfig::load(path)?;
    let (p, q) = cfg.label();
    let gp = solve_geometry_with::<f64>(p, q, cfg.geometry.sigma_rule)?;
    let s = solver(cfg.cache.dir.as_deref())?;
    let basis = ModeBasis::build(&gp, cfg.mass(), cfg.kappa(), &cfg.truncation(), s.as_ref())?;
    let data = cfg.cauchy_data(&basis)?;
    let source = cfg.source_term()?;
    let mut prop = Propagator::new(&basis, cfg.eval_points());
    prop.tail_fraction = cfg.output.tail_fraction;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let mut samples = Vec::new();
    for (k, &t) in cfg.times().iter().enumerate() {
        let fs = match &source {
            Some(src) => prop.evolve_inhomogeneous(&data, src, t)?,
            None => prop.evolve(&data, t)?,
        };
        if let Some(w) = &fs.truncation_warning {
            eprintln!("warning: t={t}: {w}");
        }
        write_sample(dir, k, &fs, cfg.output.format)?;
        samples.push(fs);
    }
    write_energy(dir, &samples)?;
    out!("wrote {} samples to {}", samples.len(), dir.display());
    Ok(0)
}

fn write_sample(dir: &Path, k: usize, fs: &FieldSample, fmt: OutputFormat) -> ypq_core::Result<()> {
    match fmt {
        OutputFormat::Json => {
            let path = dir.join(format!("field_{k:04}.json"));
            let mut f = std::fs::File::create(path)?;
            f.write_all(serde_json::to_string_pretty(fs)?.as_bytes())?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(dir.join(format!("field_{k:04}.csv"))).map_err(csv_err)?;
            w.write_record(["t", "x", "theta1", "theta2", "theta3", "y", "theta", "phi", "psi", "alpha", "re", "im"])
                .map_err(csv_err)?;
            for (pt, v) in fs.points.iter().zip(&fs.values) {
                let Complex64 { re, im } = *v;
                let row = [fs.t, pt.x, pt.theta1, pt.theta2, pt.theta3, pt.eta.y, pt.eta.theta, pt.eta.phi, pt.eta.psi, pt.eta.alpha, re, im];
                w.write_record(row.iter().map(|x| format!("{x:e}"))).map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn write_energy(dir: &Path, samples: &[FieldSample]) -> ypq_core::Result<()> {
    let mut w = csv::Writer::from_path(dir.join("energy.csv")).map_err(csv_err)?;
    w.write_record(["t", "kind", "s1", "s2", "s3", "n", "m", "l", "k", "j", "i", "energy"]).map_err(csv_err)?;
    for fs in samples {
        for e in &fs.per_mode_energy {
            let b = e.beta.to_array();
            let mut rec = vec![format!("{:e}", fs.t), "mode".into()];
            rec.extend(b.iter().map(|v| v.to_string()));
            rec.push(e.i.to_string());
            rec.push(format!("{:e}", e.energy));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let mut rec = vec![format!("{:e}", fs.t), "total".to_string()];
        rec.extend(std::iter::repeat_n(String::new(), 9));
        rec.push(format!("{:e}", fs.total_energy));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
