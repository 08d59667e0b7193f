//! Run configuration: TOML documents validated into a [`SolverConfig`].

use std::path::PathBuf;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::bathymetry::{eval_bathymetry, Bathymetry};
use crate::dynamics::{Dynamics, SchemeConfig};
use crate::elliptic::StreamOperator;
use crate::error::{LakeError, Result};
use crate::grid::{build_grid, Grid, MIN_ANGULAR_CELLS, MIN_RADIAL_CELLS};
use crate::initial::InitialData;

/// Regularisation used by inviscid runs that leave `epsilon` unset.
pub const DEFAULT_INVISCID_EPSILON: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridConfig {
    pub n_r: usize,
    pub n_theta: usize,
}

/// Viscosity list and comparison times of a vanishing-viscosity sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub mu: Vec<f64>,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub grid: GridConfig,
    pub a: f64,
    pub epsilon: f64,
    pub mu: f64,
    /// Enstrophy exponent, `2 < q <= inf`.
    pub q: f64,
    pub initial: InitialData,
    pub t_final: f64,
    /// Snapshot spacing; `None` keeps the initial and final states only.
    pub snapshot_interval: Option<f64>,
    pub scheme: SchemeConfig,
    pub output_dir: PathBuf,
    /// Seed of the randomized probe fields.
    pub seed: u64,
    pub sweep: SweepConfig,
}

const KEYS: &[&str] = &[
    "grid",
    "a",
    "epsilon",
    "mu",
    "q",
    "initial",
    "T",
    "snapshot_interval",
    "scheme",
    "output_dir",
    "seed",
    "sweep",
];

struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn get<T: DeserializeOwned>(&mut self, table: &Table, key: &str, path: &str) -> Option<T> {
        let v = table.get(key)?;
        match v.clone().try_into::<T>() {
            Ok(x) => Some(x),
            Err(e) => {
                let msg = e.to_string();
                self.errors.push(format!("{path}: {}", msg.trim()));
                None
            }
        }
    }

    fn unknown(&mut self, table: &Table, known: &[&str], prefix: &str) {
        for k in table.keys() {
            if !known.contains(&k.as_str()) {
                self.errors.push(format!("unknown key `{prefix}{k}`"));
            }
        }
    }

    fn table<'a>(&mut self, table: &'a Table, key: &str) -> Option<&'a Table> {
        match table.get(key)? {
            Value::Table(t) => Some(t),
            _ => {
                self.errors.push(format!("`{key}` must be a table"));
                None
            }
        }
    }
}

/// Parses and validates a TOML document; every violation is reported.
pub fn parse_config(text: &str) -> Result<SolverConfig> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| LakeError::Config(vec![e.to_string().trim().to_string()]))?;
    let mut rd = Reader { errors: Vec::new() };
    rd.unknown(&doc, KEYS, "");

    let mut n_r = 64usize;
    let mut n_theta = None;
    if let Some(g) = rd.table(&doc, "grid") {
        rd.unknown(g, &["n_r", "n_theta"], "grid.");
        n_r = rd.get(g, "n_r", "grid.n_r").unwrap_or(n_r);
        n_theta = rd.get(g, "n_theta", "grid.n_theta");
    }
    let n_theta = n_theta.unwrap_or(2 * n_r);
    if n_r < MIN_RADIAL_CELLS {
        rd.errors
            .push(format!("grid.n_r must be >= {MIN_RADIAL_CELLS} (got {n_r})"));
    }
    if n_theta < MIN_ANGULAR_CELLS || n_theta % 2 != 0 {
        rd.errors.push(format!(
            "grid.n_theta must be even and >= {MIN_ANGULAR_CELLS} (got {n_theta})"
        ));
    }

    let a: f64 = rd.get(&doc, "a", "a").unwrap_or(2.0);
    if !(a >= 2.0) || !a.is_finite() {
        rd.errors.push(format!("a must be ≥ 2 (got {a})"));
    }
    let mu: f64 = rd.get(&doc, "mu", "mu").unwrap_or(0.0);
    if !(mu >= 0.0) || !mu.is_finite() {
        rd.errors.push(format!("mu must be ≥ 0 (got {mu})"));
    }
    let epsilon: Option<f64> = rd.get(&doc, "epsilon", "epsilon");
    let epsilon = match epsilon {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => {
            rd.errors.push(format!("epsilon must be > 0 (got {e})"));
            0.0
        }
        None if mu > 0.0 => {
            rd.errors
                .push("epsilon must be > 0 when mu > 0 (missing key `epsilon`)".into());
            0.0
        }
        None => DEFAULT_INVISCID_EPSILON,
    };
    let q: f64 = rd.get(&doc, "q", "q").unwrap_or(4.0);
    if !(q > 2.0) {
        rd.errors.push(format!("q must lie in (2, inf] (got {q})"));
    }
    let t_final: f64 = rd.get(&doc, "T", "T").unwrap_or(1.0);
    if !(t_final >= 0.0) || !t_final.is_finite() {
        rd.errors.push(format!("T must be ≥ 0 (got {t_final})"));
    }
    let snapshot_interval: Option<f64> = rd.get(&doc, "snapshot_interval", "snapshot_interval");
    if let Some(s) = snapshot_interval {
        if !(s > 0.0) || !s.is_finite() {
            rd.errors
                .push(format!("snapshot_interval must be > 0 (got {s})"));
        }
    }
    let initial: InitialData = rd.get(&doc, "initial", "initial").unwrap_or_default();
    rd.errors.extend(initial.violations());
    let scheme: SchemeConfig = rd.get(&doc, "scheme", "scheme").unwrap_or_default();
    rd.errors.extend(scheme.violations());
    let output_dir: PathBuf = rd
        .get::<String>(&doc, "output_dir", "output_dir")
        .unwrap_or_else(|| "out".into())
        .into();
    let seed: u64 = rd.get(&doc, "seed", "seed").unwrap_or(0);

    let mut sweep = SweepConfig {
        mu: vec![1e-2, 3e-3, 1e-3, 3e-4],
        times: Vec::new(),
    };
    if let Some(s) = rd.table(&doc, "sweep") {
        rd.unknown(s, &["mu", "times"], "sweep.");
        if let Some(m) = rd.get(s, "mu", "sweep.mu") {
            sweep.mu = m;
        }
        if let Some(t) = rd.get(s, "times", "sweep.times") {
            sweep.times = t;
        }
    }
    if sweep.times.is_empty() && t_final > 0.0 {
        sweep.times = vec![0.25 * t_final, 0.5 * t_final, t_final];
    }
    rd.errors.extend(mu_list_violations(&sweep.mu));
    if sweep.times.windows(2).any(|w| !(w[1] > w[0]))
        || sweep.times.iter().any(|t| !(*t > 0.0 && *t <= t_final))
    {
        rd.errors.push(format!(
            "sweep.times must increase strictly within (0, T = {t_final}]"
        ));
    }

    if !rd.errors.is_empty() {
        return Err(LakeError::Config(rd.errors));
    }
    Ok(SolverConfig {
        grid: GridConfig { n_r, n_theta },
        a,
        epsilon,
        mu,
        q,
        initial,
        t_final,
        snapshot_interval,
        scheme,
        output_dir,
        seed,
        sweep,
    })
}

pub(crate) fn mu_list_violations(mu: &[f64]) -> Vec<String> {
    let mut out = Vec::new();
    if mu.is_empty() {
        out.push("sweep.mu must not be empty".into());
    }
    if mu.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        out.push("sweep.mu entries must be > 0".into());
    }
    if mu.windows(2).any(|w| !(w[1] < w[0])) {
        out.push("sweep.mu must be strictly decreasing".into());
    }
    out
}

impl SolverConfig {
    /// Reads and validates a config file.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LakeError::Config(vec![format!("{}: {e}", path.display())]))?;
        parse_config(&text)
    }

    /// Canonical text of every field that affects results.
    pub fn canonical(&self) -> String {
        format!(
            "grid={:?};a={:?};epsilon={:?};mu={:?};q={:?};initial={:?};T={:?};snapshot_interval={:?};scheme={:?};seed={};sweep={:?}",
            self.grid,
            self.a,
            self.epsilon,
            self.mu,
            self.q,
            self.initial,
            self.t_final,
            self.snapshot_interval,
            self.scheme,
            self.seed,
            self.sweep
        )
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.canonical().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(build_grid(self.grid.n_r, self.grid.n_theta)?))
    }

    pub fn build_bathymetry(&self) -> Result<Arc<Bathymetry>> {
        Ok(Arc::new(eval_bathymetry(&self.build_grid()?, self.a, self.epsilon)?))
    }

    pub fn build_dynamics(&self) -> Result<Dynamics> {
        let op = StreamOperator::new(self.build_bathymetry()?)?;
        Dynamics::new(op, self.mu, self.scheme)
    }

    /// Snapshot times after 0, ending at `T`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.t_final == 0.0 {
            return out;
        }
        if let Some(s) = self.snapshot_interval {
            let mut k = 1u64;
            loop {
                let t = k as f64 * s;
                if t >= self.t_final * (1.0 - 1e-12) {
                    break;
                }
                out.push(t);
                k += 1;
            }
        }
        out.push(self.t_final);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.grid, GridConfig { n_r: 64, n_theta: 128 });
        assert_eq!(c.a, 2.0);
        assert_eq!(c.mu, 0.0);
        assert_eq!(c.epsilon, DEFAULT_INVISCID_EPSILON);
        assert_eq!(c.q, 4.0);
        assert_eq!(c.t_final, 1.0);
        assert_eq!(c.initial, InitialData::default());
        assert_eq!(c.sweep.times, vec![0.25, 0.5, 1.0]);
    }

    #[test]
    fn a_below_two_is_rejected() {
        let e = parse_config("a = 1.5").unwrap_err();
        let LakeError::Config(v) = e else { panic!() };
        assert!(v.iter().any(|m| m.starts_with("a must be ≥ 2")), "{v:?}");
    }

    #[test]
    fn viscous_run_needs_epsilon() {
        let LakeError::Config(v) = parse_config("mu = 0.01").unwrap_err() else {
            panic!()
        };
        assert!(v.iter().any(|m| m.contains("epsilon must be > 0")));
        assert!(parse_config("mu = 0.01\nepsilon = 0.01").is_ok());
    }

    #[test]
    fn all_violations_are_collected() {
        let text = "a = 1.0\nq = 2.0\nT = -1.0\nbogus = 3\n[grid]\nn_r = 2\nn_theta = 7\n[initial]\nkind = \"blob\"\nwidth = -1.0\n[scheme]\ncfl_advective = 2.0";
        let LakeError::Config(v) = parse_config(text).unwrap_err() else {
            panic!()
        };
        for needle in ["a must", "q must", "T must", "bogus", "grid.n_r", "grid.n_theta", "width", "cfl_advective"] {
            assert!(v.iter().any(|m| m.contains(needle)), "{needle} missing from {v:?}");
        }
    }

    #[test]
    fn unknown_nested_keys_are_rejected() {
        assert!(parse_config("[scheme]\nfoo = 1").is_err());
        assert!(parse_config("[initial]\nkind = \"radial\"\nwidth = 1.0").is_err());
        assert!(parse_config("[grid]\nn_z = 3").is_err());
    }

    #[test]
    fn q_may_be_infinite() {
        assert!(parse_config("q = inf").unwrap().q.is_infinite());
    }

    #[test]
    fn hash_tracks_physics_not_output_dir() {
        let a = parse_config("mu = 0.0").unwrap();
        let b = parse_config("mu = 0.0\noutput_dir = \"elsewhere\"").unwrap();
        let c = parse_config("mu = 0.0\na = 3.0").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn snapshot_schedule() {
        let c = parse_config("T = 1.0\nsnapshot_interval = 0.3").unwrap();
        let t = c.snapshot_times();
        assert_eq!(t.len(), 4);
        assert_eq!(*t.last().unwrap(), 1.0);
        assert!(parse_config("T = 0.0\n[sweep]\ntimes = [0.0]").is_err());
        assert!(parse_config("T = 0.0").unwrap().sweep.times.is_empty());
        assert!(parse_config("T = 0.0\n[sweep]\ntimes = [0.5]").is_err());
    }
}
