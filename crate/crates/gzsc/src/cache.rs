//! Content-addressed store for exact matrix elements.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GzError, Result};
use crate::linalg::CMat;

pub const CACHE_ENV: &str = "GZSC_CACHE_DIR";

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    re: f64,
    im: f64,
    checksum: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss,
    Corrupt,
}

/// Canonical key: fields joined by `|`, `g` entries to 17 significant digits.
pub fn cache_key(mode: &str, n: usize, weight: &[i64], g: &CMat, nu: &[i64], mu: &[i64]) -> String {
    let ints = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let gs = g.iter().map(|z| format!("{:.16e},{:.16e}", z.re, z.im)).collect::<Vec<_>>().join(";");
    format!("{mode}|{n}|{}|{}|{}|{}", ints(weight), gs, ints(nu), ints(mu))
}

fn checksum(key: &str, re: f64, im: f64) -> String {
    let mut h = Sha256::new();
    h.update(key.as_bytes());
    h.update(re.to_bits().to_le_bytes());
    h.update(im.to_bits().to_le_bytes());
    hex::encode(h.finalize())
}

impl Cache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| GzError::Invalid(format!("cache dir {}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    /// Cache under `$GZSC_CACHE_DIR`, if set.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(CACHE_ENV) {
            Some(d) => Ok(Some(Self::new(d)?)),
            None => Ok(None),
        }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{}.json", hex::encode(Sha256::digest(key.as_bytes()))))
    }

    pub fn get(&self, key: &str) -> (Lookup, Option<Complex64>) {
        let Ok(text) = fs::read_to_string(self.path(key)) else {
            return (Lookup::Miss, None);
        };
        match serde_json::from_str::<Entry>(&text) {
            Ok(e) if e.key == key && e.checksum == checksum(key, e.re, e.im) => (Lookup::Hit, Some(Complex64::new(e.re, e.im))),
            _ => (Lookup::Corrupt, None),
        }
    }

    /// Stores a value; an existing valid entry is left untouched.
    pub fn put(&self, key: &str, value: Complex64) -> Result<()> {
        if self.get(key).0 == Lookup::Hit {
            return Ok(());
        }
        let e = Entry { key: key.to_string(), re: value.re, im: value.im, checksum: checksum(key, value.re, value.im) };
        let text = serde_json::to_string(&e).map_err(|e| GzError::Invalid(e.to_string()))?;
        let path = self.path(key);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text).and_then(|_| fs::rename(&tmp, &path)).map_err(|e| GzError::Invalid(format!("cache write: {e}")))
    }

    /// Cached value or `compute()`, recomputing over corrupt entries.
    pub fn get_or_compute(&self, key: &str, compute: impl FnOnce() -> Result<Complex64>) -> Result<(Complex64, Lookup)> {
        match self.get(key) {
            (Lookup::Hit, Some(v)) => Ok((v, Lookup::Hit)),
            (state, _) => {
                if state == Lookup::Corrupt {
                    eprintln!("warning: corrupt cache entry for {key}, recomputing");
                    let _ = fs::remove_file(self.path(key));
                }
                let v = compute()?;
                self.put(key, v)?;
                Ok((v, state))
            }
        }
    }
}
