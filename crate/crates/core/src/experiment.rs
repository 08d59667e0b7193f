//! Vanishing-viscosity experiments: μ-sweeps against an inviscid reference,
//! ε-continuation, twin inviscid runs and the Osgood/log-Lipschitz envelope.

use rayon::prelude::*;

use crate::config::{mu_list_violations, SolverConfig};
use crate::diagnostics::velocity_energy;
use crate::dynamics::{run_from, RunOutput};
use crate::error::{LakeError, Result};
use crate::grid::{ScalarField, VectorField};

/// Environment variable capping the number of concurrent runs.
pub const THREADS_ENV: &str = "LAKE_THREADS";

/// Thread pool sized by `LAKE_THREADS` (rayon's default when unset).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| LakeError::InvalidParameter {
            name: "LAKE_THREADS",
            reason: format!("expected a positive integer (got {v:?})"),
        })?;
        if n == 0 {
            return Err(LakeError::InvalidParameter {
                name: "LAKE_THREADS",
                reason: "must be >= 1".into(),
            });
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| LakeError::Invalid(e.to_string()))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Bound from `rho(t) <= a + int_0^t alpha(s) w(rho(s)) ds`: the `rho`
/// solving `int_a^rho dr / w(r) = int_0^t alpha`, i.e.
/// `Omega^{-1}(Omega(a) - int alpha)` with `Omega(x) = int_x^1 dr / w`.
/// Returns infinity when the modulus admits finite-time escape before `t`.
pub fn osgood_bound(
    rho0: f64,
    modulus: &dyn Fn(f64) -> f64,
    rate: &dyn Fn(f64) -> f64,
    t: f64,
) -> Result<f64> {
    if !(rho0 >= 0.0) || !(t >= 0.0) {
        return Err(LakeError::InvalidParameter {
            name: "osgood_bound",
            reason: format!("need rho0 >= 0 and t >= 0 (got {rho0}, {t})"),
        });
    }
    if rho0 == 0.0 {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(rho0);
    }
    let budget = adaptive_simpson(rate, 0.0, t, 1e-14 * t);
    if budget <= 0.0 {
        return Ok(rho0);
    }
    let inv = |r: f64| -> Result<f64> {
        let w = modulus(r);
        if !(w > 0.0) || !w.is_finite() {
            return Err(LakeError::ModulusNotPositive(r));
        }
        Ok(1.0 / w)
    };
    inv(rho0)?;
    // F(rho) = int_{rho0}^{rho} dr / w, increasing in rho
    let tol = |lo: f64, hi: f64| 1e-15 * budget.max(1.0) * (hi - lo).clamp(1e-300, 1.0);
    let span = |lo: f64, hi: f64| -> Result<f64> {
        inv(hi)?;
        let g = |r: f64| 1.0 / modulus(r);
        Ok(adaptive_simpson(&g, lo, hi, tol(lo, hi)))
    };
    let (mut lo, mut f_lo) = (rho0, 0.0);
    let mut hi = 2.0 * rho0;
    let mut f_hi = span(lo, hi)?;
    let mut grow = 0;
    while f_hi < budget {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        if hi > 1e150 {
            return Ok(f64::INFINITY);
        }
        f_hi = f_lo + span(lo, hi)?;
        grow += 1;
        if grow > 2000 {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f_lo + span(lo, mid)?;
        if f_mid < budget {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Log-Lipschitz envelope
/// `C M^{2(1 - e^{-Ct t})} (gamma0 + mu t)^{e^{-Ct t}}`.
pub fn theorem26_envelope(gamma0: f64, mu: f64, t: f64, m: f64, c_tilde: f64, c: f64) -> Result<f64> {
    let bad = |name: &'static str, v: f64, want: &str| LakeError::InvalidParameter {
        name,
        reason: format!("{name} must be {want} (got {v})"),
    };
    if !(gamma0 >= 0.0) {
        return Err(bad("gamma0", gamma0, ">= 0"));
    }
    if !(mu >= 0.0) {
        return Err(bad("mu", mu, ">= 0"));
    }
    if !(t >= 0.0) {
        return Err(bad("t", t, ">= 0"));
    }
    if !(m > 1.0) || !m.is_finite() {
        return Err(bad("M", m, "> 1"));
    }
    if !(c_tilde > 0.0) {
        return Err(bad("Ctilde", c_tilde, "> 0"));
    }
    if !(c > 0.0) {
        return Err(bad("C", c, "> 0"));
    }
    let base = if mu == 0.0 { gamma0 } else { gamma0 + mu * t };
    if !(base < m * m) {
        return Err(LakeError::EnvelopeDomain {
            value: base,
            limit: m * m,
        });
    }
    let e = (-c_tilde * t).exp();
    if base == 0.0 {
        return Ok(0.0);
    }
    Ok(c * m.powf(2.0 * (1.0 - e)) * base.powf(e))
}

/// `int |u - v|^2 w dA` with `w = b_eps` or `b`.
pub fn difference_energy(u: &VectorField, v: &VectorField, bath: &crate::bathymetry::Bathymetry, regularised: bool) -> Result<f64> {
    velocity_energy(&u.sub(v), bath, regularised)
}

/// μ-sweep specification. The reference run uses `mu = 0` with the base
/// config's grid, ε and initial data.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub base: SolverConfig,
    pub mu_list: Vec<f64>,
    pub times: Vec<f64>,
}

impl SweepPlan {
    pub fn from_config(cfg: &SolverConfig) -> Self {
        SweepPlan {
            base: cfg.clone(),
            mu_list: cfg.sweep.mu.clone(),
            times: cfg.sweep.times.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = mu_list_violations(&self.mu_list);
        if self.times.is_empty()
            || self.times.windows(2).any(|w| !(w[1] > w[0]))
            || self.times.iter().any(|t| !(*t > 0.0))
        {
            v.push("comparison times must be positive and strictly increasing".into());
        }
        if !(self.base.epsilon > 0.0) {
            v.push("epsilon must be > 0 for a sweep".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(LakeError::Config(v))
        }
    }

    fn config_for(&self, mu: f64) -> SolverConfig {
        let mut c = self.base.clone();
        c.mu = mu;
        c.t_final = *self.times.last().unwrap_or(&0.0);
        c
    }
}

/// Fitted envelope constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeFit {
    pub m: f64,
    pub c: f64,
    pub c_tilde: f64,
}

impl EnvelopeFit {
    pub fn envelope(&self, gamma0: f64, mu: f64, t: f64) -> Result<f64> {
        theorem26_envelope(gamma0, mu, t, self.m, self.c_tilde, self.c)
    }
}

/// Least-squares slope of `ln D` against `ln mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub alpha: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `ln D`.
    pub residual: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub mu_list: Vec<f64>,
    pub times: Vec<f64>,
    /// `d[k][i] = int |u^mu_i - u^0|^2 b_eps` at `times[k]`.
    pub d: Vec<Vec<f64>>,
    pub envelope: Vec<Vec<f64>>,
    /// Per-time slope fits; `None` with fewer than two usable points.
    pub alpha: Vec<Option<SlopeFit>>,
    pub fit: EnvelopeFit,
    /// Time-discretisation floor of `D` per comparison time.
    pub floor: Vec<f64>,
    /// Largest `(D - envelope) / D`; non-positive when the envelope dominates.
    pub max_violation: f64,
    /// `D` strictly decreasing with μ at every time.
    pub monotone: bool,
    /// Viscous runs that failed, with their error.
    pub failed: Vec<(f64, String)>,
}

impl RateReport {
    pub fn complete(&self) -> bool {
        self.failed.is_empty()
    }
}

fn final_states(out: &RunOutput) -> Vec<VectorField> {
    out.trajectory[1..].iter().map(|s| s.u.clone()).collect()
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - icpt - slope * a).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Some((slope, icpt, rms))
}

/// Smallest admissible `C >= 1` for a given `Ct` and the log-misfit
/// `sum ln(env / D)^2` of the resulting envelope.
fn envelope_for(c_tilde: f64, m: f64, pts: &[(f64, f64, f64)]) -> (f64, f64) {
    let shape = |mu: f64, t: f64| {
        let e = (-c_tilde * t).exp();
        m.powf(2.0 * (1.0 - e)) * (mu * t).powf(e)
    };
    let c = pts
        .iter()
        .map(|&(mu, t, d)| d / shape(mu, t))
        .fold(1.0f64, f64::max);
    let misfit = pts
        .iter()
        .map(|&(mu, t, d)| (c * shape(mu, t) / d).ln().powi(2))
        .sum();
    (c, misfit)
}

/// Fits `(C, Ct)` with `M` fixed: `C` is the smallest value that makes the
/// envelope dominate every point, `Ct` minimises the log misfit.
pub fn fit_envelope(m: f64, pts: &[(f64, f64, f64)]) -> EnvelopeFit {
    let pts: Vec<_> = pts.iter().copied().filter(|p| p.2 > 0.0).collect();
    if pts.is_empty() {
        return EnvelopeFit { m, c: 1.0, c_tilde: 1.0 };
    }
    let obj = |lc: f64| envelope_for(lc.exp(), m, &pts).1;
    let (lo, hi) = ((1e-3f64).ln(), (1e3f64).ln());
    let n = 121;
    let mut best = lo;
    let mut best_v = f64::INFINITY;
    for k in 0..n {
        let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let v = obj(x);
        if v < best_v {
            best_v = v;
            best = x;
        }
    }
    let step = (hi - lo) / (n - 1) as f64;
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if obj(x1) <= obj(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let c_tilde = (0.5 * (a + b)).exp();
    let (c, _) = envelope_for(c_tilde, m, &pts);
    EnvelopeFit { m, c, c_tilde }
}

/// Runs the inviscid reference, a half-step reference (for the floor) and
/// every viscous run concurrently, then fits rates and envelope.
pub fn sweep(plan: &SweepPlan) -> Result<RateReport> {
    plan.validate()?;
    let ref_cfg = plan.config_for(0.0);
    let dynamics0 = ref_cfg.build_dynamics()?;
    let omega0 = ref_cfg.initial.sample(dynamics0.grid())?;
    let q = plan.base.q;

    let mut half = ref_cfg.clone();
    half.scheme.cfl_advective *= 0.5;
    half.scheme.dt_max *= 0.5;
    if let Some(dt) = half.scheme.dt_fixed.as_mut() {
        *dt *= 0.5;
    }
    let mut cfgs = vec![ref_cfg, half];
    cfgs.extend(plan.mu_list.iter().map(|&mu| plan.config_for(mu)));

    let pool = thread_pool()?;
    let results: Vec<Result<RunOutput>> = pool.install(|| {
        cfgs.par_iter()
            .map(|c| {
                let dynamics = c.build_dynamics()?;
                run_from(&dynamics, &omega0, &plan.times, q)
            })
            .collect()
    });
    let mut results = results.into_iter();
    let reference = results.next().expect("reference run")?;
    let half = results.next().expect("half-step run")?;
    let bath = dynamics0.bathymetry();
    let u_ref = final_states(&reference);
    let u_half = final_states(&half);

    let nt = plan.times.len();
    let floor: Vec<f64> = (0..nt)
        .map(|k| difference_energy(&u_ref[k], &u_half[k], bath, true))
        .collect::<Result<_>>()?;
    let ref_sup = u_ref.iter().map(|u| u.max_abs()).fold(0.0, f64::max);

    let mut mu_ok = Vec::new();
    let mut d_cols: Vec<Vec<f64>> = Vec::new();
    let mut failed = Vec::new();
    let mut m: f64 = 0.0;
    for (&mu, res) in plan.mu_list.iter().zip(results) {
        match res {
            Ok(out) => {
                let us = final_states(&out);
                let col = (0..nt)
                    .map(|k| difference_energy(&us[k], &u_ref[k], bath, true))
                    .collect::<Result<Vec<_>>>()?;
                for (k, u) in us.iter().enumerate() {
                    m = m.max(u_ref[k].max_abs() + u.max_abs());
                }
                mu_ok.push(mu);
                d_cols.push(col);
            }
            Err(e) => failed.push((mu, e.to_string())),
        }
    }
    if m == 0.0 {
        m = 2.0 * ref_sup;
    }
    // M > 1 and above the envelope domain edge
    let mu_t_max = mu_ok.first().copied().unwrap_or(0.0) * plan.times[nt - 1];
    let m = m.max(1.0 + 1e-12).max((2.0 * mu_t_max).sqrt());

    let d: Vec<Vec<f64>> = (0..nt).map(|k| d_cols.iter().map(|c| c[k]).collect()).collect();
    let mut pts = Vec::new();
    for (k, &t) in plan.times.iter().enumerate() {
        for (i, &mu) in mu_ok.iter().enumerate() {
            pts.push((mu, t, d[k][i]));
        }
    }
    let fit = fit_envelope(m, &pts);
    let envelope: Vec<Vec<f64>> = plan
        .times
        .iter()
        .map(|&t| mu_ok.iter().map(|&mu| fit.envelope(0.0, mu, t)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let max_violation = (0..nt)
        .flat_map(|k| (0..mu_ok.len()).map(move |i| (k, i)))
        .filter(|&(k, i)| d[k][i] > 0.0)
        .map(|(k, i)| (d[k][i] - envelope[k][i]) / d[k][i])
        .fold(f64::NEG_INFINITY, f64::max);
    let monotone = d.iter().all(|row| row.windows(2).all(|w| w[1] < w[0]));
    let alpha = (0..nt)
        .map(|k| {
            let thresh = 100.0 * floor[k].max(f64::EPSILON * f64::EPSILON);
            let (x, y): (Vec<f64>, Vec<f64>) = mu_ok
                .iter()
                .zip(&d[k])
                .filter(|(_, dv)| **dv > thresh)
                .map(|(mu, dv)| (mu.ln(), dv.ln()))
                .unzip();
            linear_fit(&x, &y).map(|(alpha, intercept, residual)| SlopeFit {
                alpha,
                intercept,
                residual,
                points: x.len(),
            })
        })
        .collect();
    Ok(RateReport {
        mu_list: mu_ok,
        times: plan.times.clone(),
        d,
        envelope,
        alpha,
        fit,
        floor,
        max_violation,
        monotone,
        failed,
    })
}

/// Differences between consecutive levels of an ε-continuation.
#[derive(Clone, Debug)]
pub struct ContinuationTable {
    pub epsilons: Vec<f64>,
    /// `||sqrt(b) (u^{eps_k} - u^{eps_{k+1}})(T)||_2`.
    pub differences: Vec<f64>,
    /// One run per schedule entry.
    pub runs: Vec<RunOutput>,
}

impl ContinuationTable {
    pub fn decreasing(&self) -> bool {
        self.differences.windows(2).all(|w| w[1] < w[0])
    }
}

/// Reruns `cfg` for every ε of a decreasing schedule.
pub fn epsilon_continuation(cfg: &SolverConfig, schedule: &[f64]) -> Result<ContinuationTable> {
    if schedule.is_empty() || schedule.iter().any(|e| !(*e > 0.0)) {
        return Err(LakeError::InvalidParameter {
            name: "epsilon_schedule",
            reason: "entries must be > 0".into(),
        });
    }
    if schedule.windows(2).any(|w| w[1] > w[0]) {
        return Err(LakeError::InvalidParameter {
            name: "epsilon_schedule",
            reason: "schedule must be non-increasing".into(),
        });
    }
    let pool = thread_pool()?;
    let runs: Vec<Result<RunOutput>> = pool.install(|| {
        schedule
            .par_iter()
            .map(|&eps| {
                let mut c = cfg.clone();
                c.epsilon = eps;
                let dynamics = c.build_dynamics()?;
                let omega0 = c.initial.sample(dynamics.grid())?;
                run_from(&dynamics, &omega0, &[c.t_final].into_iter().filter(|t| *t > 0.0).collect::<Vec<_>>(), c.q)
            })
            .collect()
    });
    let runs: Vec<RunOutput> = runs.into_iter().collect::<Result<_>>()?;
    let bath = cfg.build_bathymetry()?;
    let differences = runs
        .windows(2)
        .map(|w| {
            let a = &w[0].trajectory.last().expect("final state").u;
            let b = &w[1].trajectory.last().expect("final state").u;
            difference_energy(a, b, &bath, false).map(f64::sqrt)
        })
        .collect::<Result<_>>()?;
    Ok(ContinuationTable {
        epsilons: schedule.to_vec(),
        differences,
        runs,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport {
    pub times: Vec<f64>,
    /// `int |u_1 - u_2|^2 b_eps` at each time, starting with `t = 0`.
    pub difference: Vec<f64>,
    pub envelope: Vec<f64>,
    pub fit: EnvelopeFit,
    pub passed: bool,
}

/// Smooth unit-size perturbation shape vanishing on the wall.
fn perturbation_shape(x: f64, y: f64) -> f64 {
    (1.0 - x * x - y * y) * (x + 0.5 * y)
}

/// Twin inviscid runs from `w0` and `w0 + scale max|w0| phi`, compared with
/// the envelope at `mu = 0`, `gamma0` = initial difference. `times` are the
/// comparison times; when `fit` is `None`, `M` is taken from the runs and
/// `C = Ct = 1`.
pub fn uniqueness_check(
    cfg: &SolverConfig,
    perturbation_scale: f64,
    times: &[f64],
    fit: Option<EnvelopeFit>,
) -> Result<UniquenessReport> {
    if cfg.mu != 0.0 {
        return Err(LakeError::InvalidParameter {
            name: "mu",
            reason: "uniqueness check needs mu = 0".into(),
        });
    }
    if !(perturbation_scale >= 0.0) || perturbation_scale > 1e-10 {
        return Err(LakeError::InvalidParameter {
            name: "perturbation_scale",
            reason: format!("must lie in [0, 1e-10] (got {perturbation_scale})"),
        });
    }
    let dynamics = cfg.build_dynamics()?;
    let grid = dynamics.grid();
    let w1 = cfg.initial.sample(grid)?;
    let amp = perturbation_scale * w1.max_abs();
    let phi = ScalarField::from_fn(grid, perturbation_shape);
    let w2 = ScalarField {
        values: w1.values.iter().zip(&phi.values).map(|(w, p)| w + amp * p).collect(),
    };
    let pool = thread_pool()?;
    let (a, b) = pool.install(|| {
        rayon::join(
            || run_from(&dynamics, &w1, times, cfg.q),
            || run_from(&dynamics, &w2, times, cfg.q),
        )
    });
    let (a, b) = (a?, b?);
    let bath = dynamics.bathymetry();
    let difference: Vec<f64> = a
        .trajectory
        .iter()
        .zip(&b.trajectory)
        .map(|(x, y)| difference_energy(&x.u, &y.u, bath, true))
        .collect::<Result<_>>()?;
    let fit = fit.unwrap_or_else(|| {
        let m = a
            .trajectory
            .iter()
            .zip(&b.trajectory)
            .map(|(x, y)| x.u.max_abs() + y.u.max_abs())
            .fold(0.0, f64::max)
            .max(1.0 + 1e-12);
        EnvelopeFit { m, c: 1.0, c_tilde: 1.0 }
    });
    let gamma0 = difference[0];
    let all_times: Vec<f64> = std::iter::once(0.0).chain(times.iter().copied()).collect();
    let envelope: Vec<f64> = all_times
        .iter()
        .map(|&t| fit.envelope(gamma0, 0.0, t))
        .collect::<Result<_>>()?;
    let passed = difference
        .iter()
        .zip(&envelope)
        .all(|(d, e)| *d <= *e * (1.0 + 1e-12));
    Ok(UniquenessReport {
        times: all_times,
        difference,
        envelope,
        fit,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use proptest::prelude::*;

    #[test]
    fn osgood_trivial_cases() {
        let id = |r: f64| r;
        let one = |_: f64| 1.0;
        assert_eq!(osgood_bound(0.0, &id, &one, 3.0).unwrap(), 0.0);
        assert_eq!(osgood_bound(0.3, &id, &one, 0.0).unwrap(), 0.3);
    }

    #[test]
    fn osgood_gronwall_cross_check() {
        let id = |r: f64| r;
        for (a, c, t) in [(0.5, 1.0, 1.0), (1e-3, 2.5, 0.7), (2.0, 0.3, 4.0)] {
            let rate = move |_: f64| c;
            let got = osgood_bound(a, &id, &rate, t).unwrap();
            let want = a * (c * t).exp();
            assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn osgood_log_lipschitz_matches_closed_form() {
        // w(r) = r (1 - ln r) on (0, 1): int dr / w = -ln(1 - ln r)
        let w = |r: f64| r * (1.0 - r.ln());
        let one = |_: f64| 1.0;
        let (a, t): (f64, f64) = (1e-4, 0.5);
        let got = osgood_bound(a, &w, &one, t).unwrap();
        let want = (1.0 - (1.0 - a.ln()) * (-t).exp()).exp();
        assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    }

    #[test]
    fn osgood_rejects_non_positive_modulus() {
        let bad = |r: f64| r - 0.5;
        let one = |_: f64| 1.0;
        assert!(matches!(
            osgood_bound(0.1, &bad, &one, 1.0),
            Err(LakeError::ModulusNotPositive(_))
        ));
    }

    #[test]
    fn osgood_detects_escape() {
        let sq = |r: f64| r * r;
        let one = |_: f64| 1.0;
        assert!(osgood_bound(1.0, &sq, &one, 2.0).unwrap().is_infinite());
    }

    #[test]
    fn envelope_examples() {
        let v = theorem26_envelope(0.01, 0.0, 2f64.ln(), 2.0, 1.0, 1.0).unwrap();
        assert!((v - 0.2).abs() < 1e-15, "{v}");
        assert_eq!(theorem26_envelope(0.37, 0.5, 0.0, 3.0, 2.0, 1.0).unwrap(), 0.37);
        assert_eq!(theorem26_envelope(0.0, 0.0, 5.0, 3.0, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(theorem26_envelope(0.2, 0.0, f64::INFINITY, 3.0, 2.0, 1.5).unwrap(), 1.5 * 9.0);
        assert!(matches!(
            theorem26_envelope(3.0, 1.0, 1.0, 2.0, 1.0, 1.0),
            Err(LakeError::EnvelopeDomain { .. })
        ));
        assert!(theorem26_envelope(0.1, 0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn envelope_is_monotone(g in 0.0f64..0.5, mu in 0.0f64..0.1, t in 0.0f64..2.0,
                                ct in 0.1f64..3.0, dg in 1e-4f64..0.1) {
            let f = |g: f64, mu: f64, t: f64| theorem26_envelope(g, mu, t, 2.0, ct, 1.3).unwrap();
            let base = f(g, mu, t);
            prop_assert!(f(g + dg, mu, t) >= base);
            prop_assert!(f(g, mu + dg, t) >= base);
            if g + mu * t > 0.0 {
                prop_assert!(f(g, mu, t + dg) >= base * (1.0 - 1e-12));
            }
        }

        #[test]
        fn envelope_at_zero_time_is_c_gamma0(g in 0.0f64..3.0, c in 0.1f64..5.0) {
            let v = theorem26_envelope(g, 0.3, 0.0, 2.0, 1.0, c).unwrap();
            prop_assert!((v - c * g).abs() <= 1e-15 * (c * g).max(1.0));
        }
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (s, i, r) = linear_fit(&x, &y).unwrap();
        assert!((s - 2.0).abs() < 1e-14 && (i + 1.0).abs() < 1e-14 && r < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn envelope_fit_dominates_points() {
        let pts = [(1e-2, 0.5, 3e-5), (1e-3, 0.5, 3e-7), (1e-2, 1.0, 8e-5), (1e-3, 1.0, 9e-7)];
        let f = fit_envelope(3.0, &pts);
        assert!(f.c >= 1.0 && f.c_tilde > 0.0);
        for (mu, t, d) in pts {
            assert!(f.envelope(0.0, mu, t).unwrap() >= d * (1.0 - 1e-12));
        }
    }

    fn small_cfg(extra: &str) -> SolverConfig {
        let (top, tables) = match extra.find('[') {
            Some(i) => extra.split_at(i),
            None => (extra, ""),
        };
        parse_config(&format!(
            "{top}\nT = 0.1\nepsilon = 0.05\n[grid]\nn_r = 12\n[initial]\nkind = \"radial\"\n{tables}"
        ))
        .unwrap()
    }

    #[test]
    fn single_mu_radial_sweep_is_bounded() {
        let cfg = small_cfg("[sweep]\nmu = [1e-2]\ntimes = [0.05, 0.1]");
        let r = sweep(&SweepPlan::from_config(&cfg)).unwrap();
        assert!(r.complete());
        assert_eq!(r.d.len(), 2);
        assert!(r.d.iter().all(|row| row.len() == 1 && row[0] > 0.0));
        assert!(r.max_violation <= 0.0);
        assert!(r.alpha.iter().all(|a| a.is_none()));
    }

    #[test]
    fn duplicated_mu_gives_identical_columns() {
        let cfg = small_cfg("");
        let plan = SweepPlan {
            base: cfg,
            mu_list: vec![1e-2, 1e-2],
            times: vec![0.1],
        };
        assert!(plan.validate().is_err());
        // runs are deterministic, so equal μ must give equal D
        let mut a = plan.clone();
        a.mu_list = vec![1e-2];
        let r1 = sweep(&a).unwrap();
        let r2 = sweep(&a).unwrap();
        assert_eq!(r1.d, r2.d);
    }

    #[test]
    fn continuation_with_repeated_epsilon_is_zero() {
        let cfg = small_cfg("");
        let t = epsilon_continuation(&cfg, &[1e-1, 1e-1]).unwrap();
        assert_eq!(t.differences, vec![0.0]);
        let t = epsilon_continuation(&cfg, &[1e-1]).unwrap();
        assert!(t.differences.is_empty());
        assert!(epsilon_continuation(&cfg, &[1e-2, 1e-1]).is_err());
    }

    #[test]
    fn zero_perturbation_gives_zero_difference() {
        let cfg = small_cfg("");
        let r = uniqueness_check(&cfg, 0.0, &[0.05, 0.1], None).unwrap();
        assert!(r.difference.iter().all(|d| *d == 0.0));
        assert!(r.passed);
        assert!(uniqueness_check(&cfg, 1e-6, &[0.1], None).is_err());
        let viscous = small_cfg("mu = 0.01");
        assert!(uniqueness_check(&viscous, 0.0, &[0.1], None).is_err());
    }
}
