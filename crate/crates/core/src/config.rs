//! TOML run configuration for `propagate`.

use crate::ads::{
    sample_sectors, AdsTruncation, ModeBasis, ModeIndex, SectorKey, SlicePoint, SpectralCoefficients,
};
use crate::error::{Error, Result};
use crate::geometry::{validate_label, SigmaRule};
use crate::propagator::{CauchyData, FieldData, SourceTerm};
use crate::spectrum::{TruncationPolicy, YPoint};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use toml::Spanned;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: Spanned<u32>,
    pub geometry: GeometrySection,
    pub physics: PhysicsSection,
    pub truncation: TruncationSection,
    #[serde(default)]
    pub grid: GridSection,
    pub data: DataSection,
    #[serde(default)]
    pub source: Option<SourceSection>,
    pub output: OutputSection,
    #[serde(default)]
    pub cache: CacheSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub p: Spanned<u32>,
    pub q: Spanned<u32>,
    #[serde(default)]
    pub sigma_rule: SigmaRule,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub mass: Spanned<f64>,
    pub kappa: Spanned<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(default)]
    pub n_max: u32,
    #[serde(default)]
    pub m_max: u32,
    #[serde(default)]
    pub l_max: u32,
    #[serde(default)]
    pub k_max: u32,
    #[serde(default)]
    pub j_max: u32,
    #[serde(default)]
    pub s1_max: u32,
    #[serde(default)]
    pub i_max: u32,
    #[serde(default)]
    pub lambda_max: Option<Spanned<f64>>,
}

fn d_nx() -> Spanned<usize> {
    Spanned::new(0..0, 96)
}
fn d_xs() -> usize {
    33
}
fn d_y() -> Spanned<f64> {
    Spanned::new(0..0, 0.0)
}
fn d_t1() -> f64 {
    0.9
}
fn d_t2() -> f64 {
    1.1
}
fn d_th() -> f64 {
    1.2
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// AdS radial quadrature nodes per sector.
    #[serde(default = "d_nx")]
    pub nx: Spanned<usize>,
    /// Evaluation points along `x` at the fixed angles below.
    #[serde(default = "d_xs")]
    pub x_samples: usize,
    #[serde(default = "d_t1")]
    pub theta1: f64,
    #[serde(default = "d_t2")]
    pub theta2: f64,
    #[serde(default)]
    pub theta3: f64,
    #[serde(default = "d_y")]
    pub y: Spanned<f64>,
    #[serde(default = "d_th")]
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub psi: f64,
    #[serde(default)]
    pub alpha: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        toml::from_str("").expect("grid defaults")
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffRow {
    pub beta: [i64; 8],
    pub i: u32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSection {
    /// `φ⁰ = phi0 · f_i^β Ψ_β`, `φ¹ = phi1 · f_i^β Ψ_β`.
    Mode {
        beta: [i64; 8],
        #[serde(default)]
        i: u32,
        #[serde(default = "one")]
        phi0: f64,
        #[serde(default)]
        phi1: f64,
    },
    /// Radial Gaussian shell in the trivial sector, sampled on the grid.
    Gaussian {
        x0: f64,
        width: Spanned<f64>,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// Random coefficients on every retained mode.
    Random {
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Coefficients {
        #[serde(default)]
        phi0: Vec<CoeffRow>,
        #[serde(default)]
        phi1: Vec<CoeffRow>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceSection {
    None,
    /// `θ_{β,i}(T) = value` on `[0, t_end]`, sampled at `samples` stamps.
    ConstantMode {
        beta: [i64; 8],
        #[serde(default)]
        i: u32,
        value: f64,
        t_end: f64,
        #[serde(default = "d_samples")]
        samples: usize,
    },
}

fn d_samples() -> usize {
    65
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub times: Spanned<Vec<f64>>,
    #[serde(default)]
    pub format: OutputFormat,
    pub dir: PathBuf,
    #[serde(default = "d_tail")]
    pub tail_fraction: f64,
}

fn d_tail() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheSection {
    pub dir: Option<PathBuf>,
}

fn line_of(text: &str, span: std::ops::Range<usize>) -> usize {
    text[..span.start.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parse and validate; errors read `origin:line: message`.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s)).unwrap_or(0);
            Error::Config(format!("{origin}:{line}: {}", e.message()))
        })?;
        let fail = |span: std::ops::Range<usize>, msg: String| Error::Config(format!("{origin}:{}: {msg}", line_of(text, span)));
        if *cfg.schema_version.get_ref() != SCHEMA_VERSION {
            return Err(fail(
                cfg.schema_version.span(),
                format!("schema_version {} unsupported (expected {SCHEMA_VERSION})", cfg.schema_version.get_ref()),
            ));
        }
        let (p, q) = (cfg.geometry.p.get_ref(), cfg.geometry.q.get_ref());
        if let Err(e) = validate_label(*p, *q) {
            return Err(fail(cfg.geometry.q.span(), e.to_string()));
        }
        let gp = crate::geometry::solve_geometry_with::<f64>(*p, *q, cfg.geometry.sigma_rule)
            .map_err(|e| fail(cfg.geometry.q.span(), e.to_string()))?;
        let y = *cfg.grid.y.get_ref();
        if !(y > gp.y_minus && y < gp.y_plus) {
            return Err(fail(cfg.grid.y.span(), format!("y={y} outside ({}, {})", gp.y_minus, gp.y_plus)));
        }
        let m = *cfg.physics.mass.get_ref();
        if !(m >= 0.0 && m.is_finite()) {
            return Err(fail(cfg.physics.mass.span(), format!("mass must be finite and >= 0, got {m}")));
        }
        let k = *cfg.physics.kappa.get_ref();
        if !(k > 0.0 && k.is_finite()) {
            return Err(fail(cfg.physics.kappa.span(), format!("kappa must be finite and > 0, got {k}")));
        }
        if let Some(lm) = &cfg.truncation.lambda_max {
            if !(*lm.get_ref() >= 0.0) {
                return Err(fail(lm.span(), "lambda_max must be >= 0".into()));
            }
        }
        if *cfg.grid.nx.get_ref() < 4 {
            return Err(fail(cfg.grid.nx.span(), "nx must be >= 4".into()));
        }
        let times = cfg.output.times.get_ref();
        if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
            return Err(fail(cfg.output.times.span(), "times must be a nonempty list of finite numbers".into()));
        }
        if let DataSection::Gaussian { width, .. } = &cfg.data {
            if !(*width.get_ref() > 0.0) {
                return Err(fail(width.span(), "width must be > 0".into()));
            }
        }
        Ok(cfg)
    }

    pub fn label(&self) -> (u32, u32) {
        (*self.geometry.p.get_ref(), *self.geometry.q.get_ref())
    }

    pub fn mass(&self) -> f64 {
        *self.physics.mass.get_ref()
    }

    pub fn kappa(&self) -> f64 {
        *self.physics.kappa.get_ref()
    }

    pub fn truncation(&self) -> AdsTruncation {
        let t = &self.truncation;
        AdsTruncation {
            y: TruncationPolicy {
                n_max: t.n_max,
                m_max: t.m_max,
                l_max: t.l_max,
                k_max: t.k_max,
                j_max: t.j_max,
                lambda_max: t.lambda_max.as_ref().map(|s| *s.get_ref()),
            },
            s1_max: t.s1_max,
            i_max: t.i_max,
        }
    }

    pub fn times(&self) -> &[f64] {
        self.output.times.get_ref()
    }

    /// Evaluation line in `x` at the configured angles.
    pub fn eval_points(&self) -> Vec<SlicePoint> {
        let g = &self.grid;
        let n = g.x_samples.max(1);
        (0..n)
            .map(|k| SlicePoint {
                x: std::f64::consts::FRAC_PI_2 * (k as f64 + 0.5) / n as f64,
                theta1: g.theta1,
                theta2: g.theta2,
                theta3: g.theta3,
                eta: YPoint { y: *g.y.get_ref(), theta: g.theta, phi: g.phi, psi: g.psi, alpha: g.alpha },
            })
            .collect()
    }

    pub fn cauchy_data(&self, basis: &ModeBasis) -> Result<CauchyData> {
        let nx = *self.grid.nx.get_ref();
        match &self.data {
            DataSection::Mode { beta, i, phi0, phi1 } => {
                let b = ModeIndex::new(*beta)?;
                let one = |v: f64| {
                    let mut c = SpectralCoefficients::default();
                    c.entries.insert((b, *i), Complex64::new(v, 0.0));
                    FieldData::Coefficients(c)
                };
                Ok(CauchyData { phi0: one(*phi0), phi1: one(*phi1) })
            }
            DataSection::Gaussian { x0, width, amplitude, velocity } => {
                let key = SectorKey { s3: 0, n: 0, m: 0, l: 0 };
                let w = *width.get_ref();
                let prof = |a: f64| {
                    sample_sectors(basis, &[key], nx, |_, pt| {
                        let d = (pt[0] - x0) / w;
                        Complex64::new(a * (-d * d).exp(), 0.0)
                    })
                };
                Ok(CauchyData { phi0: FieldData::Sectors(prof(*amplitude)?), phi1: FieldData::Sectors(prof(*velocity)?) })
            }
            DataSection::Random { seed, amplitude } => {
                let mut rng = rand::rngs::StdRng::seed_from_u64(*seed);
                let mut draw = || {
                    let mut c = SpectralCoefficients::default();
                    for e in &basis.entries {
                        for i in 0..=basis.trunc.i_max {
                            let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                            c.entries.insert((e.beta, i), v * *amplitude);
                        }
                    }
                    FieldData::Coefficients(c)
                };
                let phi0 = draw();
                let phi1 = draw();
                Ok(CauchyData { phi0, phi1 })
            }
            DataSection::Coefficients { phi0, phi1 } => {
                let rows = |r: &[CoeffRow]| -> Result<FieldData> {
                    let mut c = SpectralCoefficients::default();
                    for row in r {
                        c.entries.insert((ModeIndex::new(row.beta)?, row.i), Complex64::new(row.re, row.im));
                    }
                    Ok(FieldData::Coefficients(c))
                };
                Ok(CauchyData { phi0: rows(phi0)?, phi1: rows(phi1)? })
            }
        }
    }

    pub fn source_term(&self) -> Result<Option<SourceTerm>> {
        match &self.source {
            None | Some(SourceSection::None) => Ok(None),
            Some(SourceSection::ConstantMode { beta, i, value, t_end, samples }) => {
                let b = ModeIndex::new(*beta)?;
                let n = (*samples).max(2);
                let (lo, hi) = (t_end.min(0.0), t_end.max(0.0));
                let times: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
                let mut c = SpectralCoefficients::default();
                c.entries.insert((b, *i), Complex64::new(*value, 0.0));
                let slices = vec![FieldData::Coefficients(c); n];
                Ok(Some(SourceTerm { times, slices }))
            }
        }
    }
}
