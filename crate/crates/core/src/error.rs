use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid label (p,q)=({p},{q}): {reason}")]
    InvalidLabel { p: i64, q: i64, reason: String },
    #[error("quantization condition not bracketed for p/q={p}/{q}")]
    NoRoot { p: i64, q: i64 },
    #[error("argument {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("order |m|={m} exceeds degree l={l}")]
    DegreeOrderError { l: u32, m: i32 },
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("quadrature weights underflow: {0}")]
    QuadratureUnderflow(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("no sign change on [{lo}, {hi}]")]
    BracketError { lo: f64, hi: f64 },
    #[error("invalid index: {0}")]
    IndexError(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("source covers [{lo}, {hi}] but t={t} requested")]
    SourceCoverage { lo: f64, hi: f64, t: f64 },
    #[error("cache entry corrupt: {0}")]
    CacheCorrupt(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
