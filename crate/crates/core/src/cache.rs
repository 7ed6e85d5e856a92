//! On-disk memoization of radial solves.  One JSON file per key, named by the
//! SHA-256 of the canonical key string, carrying a checksum of its payload.
//! Writes go to a temporary file in the same directory and are renamed into
//! place, so concurrent writers give last-writer-wins without torn reads.

use crate::error::{Error, Result};
use crate::geometry::SigmaRule;
use crate::radial::{RadialMode, RadialProblem, RadialSolver, SOLVER_VERSION};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

pub const CACHE_DIR_ENV: &str = "YPQ_CACHE_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub p: u32,
    pub q: u32,
    pub sigma_rule: SigmaRule,
    pub m: i64,
    pub l: i64,
    pub lambda_cap: f64,
    pub n_basis: usize,
    pub k_max: u32,
    pub solver_version: String,
}

impl CacheKey {
    pub fn for_problem(prob: &RadialProblem, n_basis: usize, k_max: u32) -> Self {
        CacheKey {
            p: prob.gp.p,
            q: prob.gp.q,
            sigma_rule: prob.gp.sigma_rule,
            m: prob.m,
            l: prob.l,
            lambda_cap: prob.lambda_cap,
            n_basis,
            k_max,
            solver_version: SOLVER_VERSION.to_string(),
        }
    }

    /// Stable text form; `Λ` goes through 15 significant digits.
    pub fn canonical(&self) -> String {
        format!(
            "p={};q={};sigma={};m={};l={};Lambda={:.14e};n_basis={};k_max={};solver={}",
            self.p,
            self.q,
            self.sigma_rule.as_str(),
            self.m,
            self.l,
            self.lambda_cap,
            self.n_basis,
            self.k_max,
            self.solver_version
        )
    }

    pub fn file_name(&self) -> String {
        format!("{}.json", hex::encode(Sha256::digest(self.canonical().as_bytes())))
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    checksum: String,
    payload: String,
}

fn checksum(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

#[derive(Debug)]
pub struct ModeCache {
    dir: PathBuf,
    solves: AtomicUsize,
}

impl ModeCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(ModeCache { dir, solves: AtomicUsize::new(0) })
    }

    /// Directory from `YPQ_CACHE_DIR`, else `explicit`, else none.
    pub fn from_env_or(explicit: Option<&Path>) -> Result<Option<Self>> {
        if let Ok(d) = std::env::var(CACHE_DIR_ENV) {
            if !d.is_empty() {
                return Self::new(d).map(Some);
            }
        }
        explicit.map(Self::new).transpose()
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Number of solver invocations made through this handle.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::SeqCst)
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    fn read(&self, key: &CacheKey) -> Result<Option<Vec<RadialMode>>> {
        let path = self.path_for(key);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let entry: Entry = serde_json::from_str(&text).map_err(|e| Error::CacheCorrupt(format!("{}: {e}", path.display())))?;
        if entry.key != key.canonical() || entry.checksum != checksum(&entry.payload) {
            return Err(Error::CacheCorrupt(format!("{}: checksum or key mismatch", path.display())));
        }
        let modes = serde_json::from_str(&entry.payload).map_err(|e| Error::CacheCorrupt(format!("{}: {e}", path.display())))?;
        Ok(Some(modes))
    }

    fn write(&self, key: &CacheKey, modes: &[RadialMode]) -> Result<()> {
        let payload = serde_json::to_string(modes)?;
        let entry = Entry { key: key.canonical(), checksum: checksum(&payload), payload };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(serde_json::to_string(&entry)?.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path_for(key)).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    pub fn get_or_solve<F>(&self, key: &CacheKey, solve: F) -> Result<Vec<RadialMode>>
    where
        F: FnOnce() -> Result<Vec<RadialMode>>,
    {
        match self.read(key) {
            Ok(Some(m)) => return Ok(m),
            Ok(None) => {}
            Err(Error::CacheCorrupt(msg)) => log::warn!("cache entry corrupt, re-solving: {msg}"),
            Err(e) => return Err(e),
        }
        self.solves.fetch_add(1, Ordering::SeqCst);
        let modes = solve()?;
        self.write(key, &modes)?;
        Ok(modes)
    }
}

/// A radial backend memoized through a [`ModeCache`].
pub struct CachedSolver<S: RadialSolver> {
    pub inner: S,
    pub cache: ModeCache,
}

impl<S: RadialSolver> RadialSolver for CachedSolver<S> {
    fn solve(&self, prob: &RadialProblem, k_max: u32) -> Result<Vec<RadialMode>> {
        let key = CacheKey::for_problem(prob, self.inner.n_basis(k_max), k_max);
        self.cache.get_or_solve(&key, || self.inner.solve(prob, k_max))
    }

    fn n_basis(&self, k_max: u32) -> usize {
        self.inner.n_basis(k_max)
    }
}
