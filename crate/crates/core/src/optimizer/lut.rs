//! Look-up table of solved strategies keyed by quantized link distances.
//!
//! Keys are the 3K distances rounded to `step_m`; values are computed from
//! the rounded distances, so a cached entry is exactly what a fresh solve
//! of the same key would produce.
//!
//! Text format (`v1`), one entry per line after the header:
//!
//! ```text
//! # rpca-lut v1
//! step_m=1
//! fingerprint=<free text identifying the solver inputs>
//! key=120,300,410,...;lambda=3.21;zeta=0.4,...;eta=9.1,...;benefit=1,0,...
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::geometry::DistanceInfo;
use crate::optimizer::solver::StrategyConfig;

pub const LUT_HEADER: &str = "# rpca-lut v1";

#[derive(Debug)]
pub struct LookupTable<V> {
    step_m: f64,
    entries: RwLock<HashMap<Vec<i64>, V>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<V: Clone> LookupTable<V> {
    pub fn new(step_m: f64) -> Self {
        LookupTable {
            step_m,
            entries: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn step_m(&self) -> f64 {
        self.step_m
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("lut lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns the cached value for the quantized distances, or runs
    /// `solve` on the quantized distances and stores the result.
    pub fn get_or_solve<F>(&self, distances: &DistanceInfo, solve: F) -> Result<V>
    where
        F: FnOnce(&DistanceInfo) -> Result<V>,
    {
        let key = distances.quantized(self.step_m);
        if let Some(v) = self.entries.read().expect("lut lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let snapped = DistanceInfo::from_quantized(&key, self.step_m)?;
        let value = solve(&snapped)?;
        self.entries
            .write()
            .expect("lut lock")
            .entry(key)
            .or_insert_with(|| value.clone());
        Ok(value)
    }
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list<T: std::str::FromStr>(field: &str, text: &str, line: usize) -> Result<Vec<T>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::LookupTable(format!("line {line}: bad value `{s}` in `{field}`")))
        })
        .collect()
}

impl LookupTable<StrategyConfig> {
    pub fn export<W: Write>(&self, fingerprint: &str, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::LookupTable(e.to_string());
        let entries = self.entries.read().expect("lut lock");
        let mut keys: Vec<_> = entries.keys().collect();
        keys.sort();
        writeln!(out, "{LUT_HEADER}").map_err(io)?;
        writeln!(out, "step_m={}", self.step_m).map_err(io)?;
        writeln!(out, "fingerprint={fingerprint}").map_err(io)?;
        for key in keys {
            let c = &entries[key];
            writeln!(
                out,
                "key={};lambda={};zeta={};eta={};benefit={}",
                join(key.iter()),
                c.lambda_star,
                join(c.zeta.iter()),
                join(c.eta.iter()),
                join(c.benefit.iter().map(|&b| u8::from(b)))
            )
            .map_err(io)?;
        }
        Ok(())
    }

    /// Reads a table; fails if the fingerprint differs from `expected`.
    pub fn import<R: BufRead>(expected_fingerprint: &str, input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((i, Err(e))) => Err(Error::LookupTable(format!("line {}: {e}", i + 1))),
                None => Err(Error::LookupTable(format!("missing {what}"))),
            }
        };
        let (_, header) = next("header")?;
        if header.trim() != LUT_HEADER {
            return Err(Error::LookupTable(format!("unsupported header `{header}`")));
        }
        let (_, step) = next("step_m")?;
        let step_m: f64 = step
            .trim()
            .strip_prefix("step_m=")
            .and_then(|s| s.parse().ok())
            .filter(|s: &f64| *s > 0.0)
            .ok_or_else(|| Error::LookupTable(format!("bad step line `{step}`")))?;
        let (_, fp) = next("fingerprint")?;
        match fp.strip_prefix("fingerprint=") {
            Some(f) if f == expected_fingerprint => {}
            Some(f) => {
                return Err(Error::LookupTable(format!(
                    "fingerprint mismatch: table `{f}`, expected `{expected_fingerprint}`"
                )))
            }
            None => return Err(Error::LookupTable(format!("bad fingerprint line `{fp}`"))),
        }
        let table = LookupTable::new(step_m);
        {
            let mut entries = table.entries.write().expect("lut lock");
            while let Ok((n, line)) = next("entry") {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let mut fields: HashMap<&str, &str> = HashMap::new();
                for part in line.split(';') {
                    let (k, v) = part
                        .split_once('=')
                        .ok_or_else(|| Error::LookupTable(format!("line {n}: malformed field `{part}`")))?;
                    fields.insert(k.trim(), v.trim());
                }
                let get = |k: &str| {
                    fields
                        .get(k)
                        .copied()
                        .ok_or_else(|| Error::LookupTable(format!("line {n}: missing `{k}`")))
                };
                let key: Vec<i64> = parse_list("key", get("key")?, n)?;
                let lambda_star: f64 = get("lambda")?
                    .parse()
                    .map_err(|_| Error::LookupTable(format!("line {n}: bad lambda")))?;
                let zeta: Vec<f64> = parse_list("zeta", get("zeta")?, n)?;
                let eta: Vec<f64> = parse_list("eta", get("eta")?, n)?;
                let benefit: Vec<u8> = parse_list("benefit", get("benefit")?, n)?;
                let k = benefit.len();
                if key.len() != 3 * k || zeta.len() != k || eta.len() != k || benefit.iter().any(|&b| b > 1) {
                    return Err(Error::LookupTable(format!("line {n}: inconsistent entry lengths")));
                }
                entries.insert(
                    key,
                    StrategyConfig {
                        lambda_star,
                        zeta,
                        eta,
                        benefit: benefit.into_iter().map(|b| b == 1).collect(),
                    },
                );
            }
        }
        Ok(table)
    }
}
