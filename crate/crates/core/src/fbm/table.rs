use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{path_functionals, Functional, Type1Simulator, Type2Simulator};
use crate::error::{Error, Result};
use crate::fracops::ProcessKind;
use crate::seed::{derive_seed, rng_from_seed};

pub const TABLE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TABLE_M: usize = 1024;
pub const DEFAULT_TABLE_REPS: usize = 100_000;
pub const DEFAULT_TABLE_SEED: u64 = 20_240_601;
const MAGIC: &str = "fracinv-quantile-table";
const MIN_REPS: usize = 1000;

/// Everything that determines a table's contents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableKey {
    pub functional: Functional,
    pub kind: ProcessKind,
    pub d: f64,
    pub m: usize,
    pub reps: usize,
    pub seed: u64,
}

impl TableKey {
    fn header(&self) -> String {
        format!(
            "{MAGIC}\nformat_version {TABLE_FORMAT_VERSION}\nfunctional {}\nkind {}\nd {:?}\nm {}\nreps {}\nseed {}\n\n",
            self.functional, self.kind.as_str(), self.d, self.m, self.reps, self.seed
        )
    }

    /// Filename derived from a digest of the header. Samples are a pure
    /// function of the header, so this addresses the full content.
    pub fn file_name(&self) -> String {
        let digest = Sha256::digest(self.header().as_bytes());
        format!("{}_{}_{}.qt", self.functional, self.kind.as_str(), hex::encode(&digest[..8]))
    }

    pub fn id(&self) -> String {
        self.file_name().trim_end_matches(".qt").to_string()
    }
}

/// Sorted Monte Carlo sample of a path functional.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub key: TableKey,
    samples: Vec<f64>,
}

impl QuantileTable {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn id(&self) -> String {
        self.key.id()
    }

    /// Empirical quantile by the lower order statistic.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.samples.len();
        let k = ((p.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        self.samples[k - 1]
    }

    /// Upper middle order statistic.
    pub fn median(&self) -> f64 {
        self.samples[self.samples.len() / 2]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = self.key.header();
        let mut out = Vec::with_capacity(header.len() + 8 * self.samples.len());
        out.extend_from_slice(header.as_bytes());
        for x in &self.samples {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format { what: "quantile table", path: path.to_path_buf(), reason };
        let split = bytes
            .windows(2)
            .position(|w| w == b"\n\n")
            .ok_or_else(|| bad("header terminator not found".into()))?;
        let header = std::str::from_utf8(&bytes[..split]).map_err(|e| bad(e.to_string()))?;
        let mut lines = header.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("bad magic line".into()));
        }
        let mut fields = HashMap::new();
        for line in lines {
            let (k, v) = line.split_once(' ').ok_or_else(|| bad(format!("malformed header line {line:?}")))?;
            fields.insert(k, v);
        }
        let field = |k: &str| fields.get(k).copied().ok_or_else(|| bad(format!("missing header field {k}")));
        let version: u32 = field("format_version")?.parse().map_err(|_| bad("bad format_version".into()))?;
        if version != TABLE_FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {version}")));
        }
        let key = TableKey {
            functional: field("functional")?.parse().map_err(bad)?,
            kind: field("kind")?.parse().map_err(|e: String| bad(e))?,
            d: field("d")?.parse().map_err(|_| bad("bad d".into()))?,
            m: field("m")?.parse().map_err(|_| bad("bad m".into()))?,
            reps: field("reps")?.parse().map_err(|_| bad("bad reps".into()))?,
            seed: field("seed")?.parse().map_err(|_| bad("bad seed".into()))?,
        };
        let body = &bytes[split + 2..];
        if body.len() != 8 * key.reps {
            return Err(bad(format!("expected {} samples, found {} bytes", key.reps, body.len())));
        }
        let samples: Vec<f64> =
            body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        if samples.iter().any(|x| !x.is_finite()) || samples.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("samples not finite and sorted".into()));
        }
        Ok(QuantileTable { key, samples })
    }

    /// Writes under `dir` with the content-derived name and returns the path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(self.key.file_name());
        let tmp = dir.join(format!(".{}.tmp{}", self.key.file_name(), std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        match fs::read(path) {
            Ok(bytes) => Self::from_bytes(&bytes, path),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingTable(path.to_path_buf())),
            Err(e) => Err(e.into()),
        }
    }
}

enum AnySimulator {
    One(Type1Simulator),
    Two(Type2Simulator),
}

/// Simulates `reps` paths and keeps the requested functional.
pub fn build_quantile_table(
    functional: Functional,
    kind: ProcessKind,
    d: f64,
    m: usize,
    reps: usize,
    seed: u64,
) -> Result<QuantileTable> {
    Ok(build_quantile_tables(&[functional], kind, d, m, reps, seed)?.remove(0))
}

/// Several functionals from one set of paths. Each table equals the one
/// [`build_quantile_table`] gives for the same arguments.
pub fn build_quantile_tables(
    functionals: &[Functional],
    kind: ProcessKind,
    d: f64,
    m: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<QuantileTable>> {
    if reps < MIN_REPS {
        return Err(Error::domain("reps", reps as f64, "[1000, inf)"));
    }
    let sim = match kind {
        ProcessKind::TypeI => AnySimulator::One(Type1Simulator::new(d, m)?),
        ProcessKind::TypeII => AnySimulator::Two(Type2Simulator::new(d, m)?),
    };
    let rows: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, r));
            let path = match &sim {
                AnySimulator::One(s) => s.sample(&mut rng),
                AnySimulator::Two(s) => s.sample(&mut rng),
            };
            let f = path_functionals(&path);
            functionals.iter().map(|&which| f.get(which)).collect()
        })
        .collect();
    Ok(functionals
        .iter()
        .enumerate()
        .map(|(i, &functional)| {
            let mut samples: Vec<f64> = rows.iter().map(|row| row[i]).collect();
            samples.sort_by(f64::total_cmp);
            QuantileTable { key: TableKey { functional, kind, d, m, reps, seed }, samples }
        })
        .collect())
}

/// Right-tail add-one p-value `(1 + #{x >= observed}) / (reps + 1)`.
pub fn pvalue_from_table(table: &QuantileTable, observed: f64) -> f64 {
    let s = table.samples();
    let below = s.partition_point(|&x| x < observed);
    (1 + s.len() - below) as f64 / (s.len() + 1) as f64
}

/// Table lookup under a directory, optionally building missing tables.
/// Tables loaded once are kept in memory for the lifetime of the store.
#[derive(Clone)]
pub struct TableStore {
    dir: PathBuf,
    build_missing: bool,
    m: usize,
    reps: usize,
    seed: u64,
    cache: Arc<Mutex<HashMap<String, Arc<QuantileTable>>>>,
}

impl TableStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        TableStore {
            dir: dir.into(),
            build_missing: false,
            m: DEFAULT_TABLE_M,
            reps: DEFAULT_TABLE_REPS,
            seed: DEFAULT_TABLE_SEED,
            cache: Arc::default(),
        }
    }

    pub fn build_missing(mut self, yes: bool) -> Self {
        self.build_missing = yes;
        self
    }

    pub fn with_resolution(mut self, m: usize, reps: usize, seed: u64) -> Self {
        self.m = m;
        self.reps = reps;
        self.seed = seed;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(&self, functional: Functional, kind: ProcessKind, d: f64) -> TableKey {
        TableKey { functional, kind, d, m: self.m, reps: self.reps, seed: self.seed }
    }

    pub fn get(&self, functional: Functional, kind: ProcessKind, d: f64) -> Result<Arc<QuantileTable>> {
        let key = self.key(functional, kind, d);
        let name = key.file_name();
        if let Some(t) = self.cache.lock().expect("table cache poisoned").get(&name) {
            return Ok(Arc::clone(t));
        }
        let path = self.dir.join(&name);
        let table = match QuantileTable::load(&path) {
            Ok(t) => t,
            Err(Error::MissingTable(_)) if self.build_missing => {
                log::info!("building quantile tables for {} d = {d}", kind.as_str());
                let mut wanted = None;
                for t in build_quantile_tables(&Functional::ALL, kind, d, key.m, key.reps, key.seed)? {
                    t.save(&self.dir)?;
                    if t.key.functional == functional {
                        wanted = Some(t);
                    } else {
                        let t = Arc::new(t);
                        self.cache.lock().expect("table cache poisoned").insert(t.key.file_name(), t);
                    }
                }
                wanted.expect("all functionals built")
            }
            Err(e) => return Err(e),
        };
        if table.key.file_name() != name {
            return Err(Error::Format {
                what: "quantile table",
                path,
                reason: "header does not match the file name".into(),
            });
        }
        let table = Arc::new(table);
        self.cache.lock().expect("table cache poisoned").insert(name, Arc::clone(&table));
        Ok(table)
    }
}
