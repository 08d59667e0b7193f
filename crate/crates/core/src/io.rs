//! Text output: CSV series, field snapshots, atomic file replacement.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::DiagnosticsSeries;
use crate::dynamics::SimState;
use crate::elliptic::ProbeRow;
use crate::error::{LakeError, Result};
use crate::experiment::RateReport;
use crate::grid::Grid;

pub const FORMAT_VERSION: u32 = 1;

/// First line of every CSV file.
pub fn csv_header(kind: &str, config_hash: &str) -> String {
    format!("# lake-{kind} v{FORMAT_VERSION} config={config_hash}\n")
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:e}")
    }
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| LakeError::Io(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// `t, E, enstrophy_q2, enstrophy_qcfg, omega_max, dt`.
pub fn diagnostics_csv(series: &DiagnosticsSeries, config_hash: &str) -> String {
    let mut s = csv_header("diagnostics", config_hash);
    s.push_str("t,E,enstrophy_q2,enstrophy_qcfg,omega_max,dt\n");
    for r in &series.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(r.t),
            num(r.energy),
            num(r.enstrophy_q2),
            num(r.enstrophy_qcfg),
            num(r.omega_max),
            num(r.dt)
        );
    }
    s
}

/// `p, sample_id, grid, epsilon, ratio_grad, ratio_sup`; `grid` is
/// `n_r x n_theta`, undefined ratios are empty.
pub fn probe_csv(rows: &[ProbeRow], config_hash: &str) -> String {
    let mut s = csv_header("probe", config_hash);
    s.push_str("p,sample_id,grid,epsilon,ratio_grad,ratio_sup\n");
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{}x{},{},{},{}",
            r.p,
            r.sample_id,
            r.n_r,
            r.n_theta,
            num(r.epsilon),
            opt(r.ratio_grad),
            opt(r.ratio_sup)
        );
    }
    s
}

/// `t, mu, D, envelope, alpha_fit, M_fit, Ctilde_fit`, one row per
/// (time, μ); `alpha_fit` is NaN where too few points clear the floor.
pub fn sweep_csv(report: &RateReport, config_hash: &str) -> String {
    let mut s = csv_header("sweep", config_hash);
    s.push_str("t,mu,D,envelope,alpha_fit,M_fit,Ctilde_fit\n");
    for (k, &t) in report.times.iter().enumerate() {
        let alpha = report.alpha[k].map(|a| a.alpha).unwrap_or(f64::NAN);
        for (i, &mu) in report.mu_list.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                num(t),
                num(mu),
                num(report.d[k][i]),
                num(report.envelope[k][i]),
                num(alpha),
                num(report.fit.m),
                num(report.fit.c_tilde)
            );
        }
    }
    s
}

/// Component names of a state snapshot, in file order.
pub const SNAPSHOT_COMPONENTS: [&str; 4] = ["omega", "psi", "u_x", "u_y"];

/// Header `lake-field v1 n_r n_theta components` followed by the config
/// hash and time, then one node per line in ring-major order.
pub fn field_text(grid: &Grid, t: f64, comps: &[&[f64]], names: &[&str], config_hash: &str) -> Result<String> {
    if comps.len() != names.len() || comps.is_empty() {
        return Err(LakeError::Invalid("component names must match components".into()));
    }
    let n = grid.n_nodes();
    for c in comps {
        if c.len() != n {
            return Err(LakeError::ShapeMismatch {
                expected: n,
                actual: c.len(),
            });
        }
    }
    let mut s = format!(
        "lake-field v{FORMAT_VERSION} {} {} {} config={config_hash} t={} names={}\n",
        grid.n_r(),
        grid.n_theta(),
        comps.len(),
        num(t),
        names.join(",")
    );
    for i in 0..n {
        let line: Vec<String> = comps.iter().map(|c| num(c[i])).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    Ok(s)
}

pub fn snapshot_text(state: &SimState, config_hash: &str) -> Result<String> {
    let grid = state.bath.grid();
    let comps: [&[f64]; 4] = [&state.omega.values, &state.psi.values, &state.u.x, &state.u.y];
    field_text(grid, state.t, &comps, &SNAPSHOT_COMPONENTS, config_hash)
}

/// Parsed field file.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub n_r: usize,
    pub n_theta: usize,
    /// `components[c][node]`
    pub components: Vec<Vec<f64>>,
}

pub fn parse_field(text: &str) -> Result<FieldFile> {
    let bad = |m: &str| LakeError::Invalid(format!("field file: {m}"));
    let mut lines = text.lines();
    let head: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
    if head.len() < 5 || head[0] != "lake-field" || head[1] != format!("v{FORMAT_VERSION}") {
        return Err(bad("bad header"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header size"));
    let (n_r, n_theta, nc) = (parse(head[2])?, parse(head[3])?, parse(head[4])?);
    let nodes = (n_r + 1) * n_theta;
    let mut components = vec![Vec::with_capacity(nodes); nc];
    for line in lines.by_ref().take(nodes) {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| bad("bad value")))
            .collect::<Result<_>>()?;
        if vals.len() != nc {
            return Err(bad("wrong number of components"));
        }
        for (c, v) in components.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    if components[0].len() != nodes || lines.next().is_some() {
        return Err(bad("wrong number of nodes"));
    }
    Ok(FieldFile {
        n_r,
        n_theta,
        components,
    })
}
