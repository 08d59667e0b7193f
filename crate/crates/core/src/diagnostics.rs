//! Energies, dissipation integrals, identity residuals and time series.

use crate::bathymetry::Bathymetry;
use crate::dynamics::SimState;
use crate::error::{LakeError, Result};
use crate::grid::{ScalarField, VectorField};
use crate::norms::{lq_norm, weighted_norm};

/// Default largest exponent in the Yudovich functional.
pub const YUDOVICH_P_MAX: usize = 40;

/// Frozen constant of the gradient-energy bound
/// `mu int_0^T ||sqrt(b) grad u||^2 dt <= C (||sqrt(b) u0||^2 + ||w0||^2)`.
pub const GRADIENT_ENERGY_CONSTANT: f64 = 1e-2;

/// Frozen growth rate `K` of the weighted enstrophy bound
/// `||b^{1/q} w(t)||_q <= ||b^{1/q} w0||_q (1 + K mu t)`.
pub const ENSTROPHY_GROWTH_CONSTANT: f64 = 4e3;

/// `int |u|^2 b_eps dA`.
pub fn energy(state: &SimState) -> Result<f64> {
    velocity_energy(&state.u, &state.bath, true)
}

/// `int |u|^2 w dA` with `w = b_eps` or the unregularised `b`.
pub fn velocity_energy(u: &VectorField, bath: &Bathymetry, regularised: bool) -> Result<f64> {
    let grid = bath.grid();
    u.check(grid, "velocity")?;
    let w = if regularised { bath.b_eps() } else { bath.b() };
    let dens: Vec<f64> = (0..grid.n_nodes())
        .map(|i| (u.x[i] * u.x[i] + u.y[i] * u.y[i]) * w.values[i])
        .collect();
    Ok(grid.integrate(&dens))
}

/// The integrals entering the energy balance, all weighted by `b_eps`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dissipation {
    /// `int D(u):D(u) b_eps`
    pub deformation: f64,
    /// `int (div u)^2 b_eps`
    pub divergence: f64,
    /// `int |grad u|^2 b_eps`
    pub gradient: f64,
    /// `oint kappa |u . tau|^2 b_eps`
    pub boundary_drag: f64,
}

impl Dissipation {
    /// Right-hand side of the energy identity: `dE/dt = -2 rate`.
    pub fn rate(&self, mu: f64) -> f64 {
        mu * (2.0 * self.deformation - self.divergence + 2.0 * self.boundary_drag)
    }
}

pub fn dissipation(u: &VectorField, bath: &Bathymetry) -> Result<Dissipation> {
    let grid = bath.grid();
    u.check(grid, "velocity")?;
    let [a, b, c, d] = grid.jacobian(&u.x, &u.y);
    let be = &bath.b_eps().values;
    let n = grid.n_nodes();
    let mut dd = vec![0.0; n];
    let mut dv = vec![0.0; n];
    let mut gg = vec![0.0; n];
    for i in 0..n {
        let off = 0.5 * (b[i] + c[i]);
        dd[i] = (a[i] * a[i] + 2.0 * off * off + d[i] * d[i]) * be[i];
        dv[i] = (a[i] + d[i]).powi(2) * be[i];
        gg[i] = (a[i] * a[i] + b[i] * b[i] + c[i] * c[i] + d[i] * d[i]) * be[i];
    }
    let ring = grid.boundary_ring();
    let kappa = bath.kappa();
    let drag: Vec<f64> = ring
        .clone()
        .enumerate()
        .map(|(k, i)| {
            let tangential = -grid.sin_theta(k) * u.x[i] + grid.cos_theta(k) * u.y[i];
            kappa[k] * tangential * tangential * be[i]
        })
        .collect();
    Ok(Dissipation {
        deformation: grid.integrate(&dd),
        divergence: grid.integrate(&dv),
        gradient: grid.integrate(&gg),
        boundary_drag: drag.iter().zip(grid.boundary_weights()).map(|(v, w)| v * w).sum(),
    })
}

/// `||b^{1/q} w||_q`; `q = inf` gives the max norm.
pub fn weighted_enstrophy(omega: &ScalarField, bath: &Bathymetry, q: f64) -> Result<f64> {
    let s = if q.is_infinite() { 0.0 } else { 1.0 / q };
    weighted_norm(omega, bath, q, s)
}

/// Residual of
/// `1/2 dE/dt + 2mu int D:D b - mu int (div u)^2 b + 2mu oint kappa |u.tau|^2 b = 0`
/// at the interior snapshots of a window
/// of equally spaced states, with centred `dE/dt`. Normalised by
/// `mu max(int D:D b, 1)`, or by 1 for `mu = 0`; the largest value is
/// returned.
pub fn energy_balance_residual(window: &[SimState], mu: f64) -> Result<f64> {
    if window.len() < 3 {
        return Err(LakeError::Invalid(format!(
            "energy balance needs at least 3 snapshots (got {})",
            window.len()
        )));
    }
    let dt = window[1].t - window[0].t;
    if !(dt > 0.0) {
        return Err(LakeError::Invalid("snapshot times must increase".into()));
    }
    if window
        .windows(2)
        .any(|w| ((w[1].t - w[0].t) - dt).abs() > 1e-6 * dt)
    {
        return Err(LakeError::Invalid("snapshots must be equally spaced".into()));
    }
    let e: Vec<f64> = window.iter().map(energy).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for k in 1..window.len() - 1 {
        let de = (e[k + 1] - e[k - 1]) / (2.0 * dt);
        let d = dissipation(&window[k].u, &window[k].bath)?;
        let res = (0.5 * de + d.rate(mu)).abs();
        let norm = if mu > 0.0 { mu * d.deformation.max(1.0) } else { 1.0 };
        worst = worst.max(res / norm);
    }
    Ok(worst)
}

/// Largest wall value of `|D(u)n.tau + kappa u.tau - curl(u)/2 - d_tau(u.n)|`.
/// The identity holds for every smooth field on the unit circle; the last
/// term vanishes when `u . n = 0`.
pub fn navier_identity_residual(u: &VectorField, bath: &Bathymetry) -> Result<f64> {
    let grid = bath.grid();
    u.check(grid, "velocity")?;
    let [a, b, c, d] = grid.jacobian(&u.x, &u.y);
    let ring = grid.boundary_ring();
    let normal: Vec<f64> = (0..grid.n_nodes())
        .map(|i| {
            let (_, k) = grid.ring_angle(i);
            u.x[i] * grid.cos_theta(k) + u.y[i] * grid.sin_theta(k)
        })
        .collect();
    let d_normal = grid.d_theta(&normal);
    let kappa = bath.kappa();
    let mut worst = 0.0f64;
    for (k, i) in ring.enumerate() {
        let (nx, ny) = (grid.cos_theta(k), grid.sin_theta(k));
        let (tx, ty) = (-ny, nx);
        let off = 0.5 * (b[i] + c[i]);
        let dn_tau = tx * (a[i] * nx + off * ny) + ty * (off * nx + d[i] * ny);
        let u_tau = u.x[i] * tx + u.y[i] * ty;
        let curl = c[i] - b[i];
        let r = dn_tau + kappa[k] * u_tau - 0.5 * curl - d_normal[i];
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Pointwise Frobenius norm of the collocated velocity gradient.
pub fn gradient_frobenius(u: &VectorField, bath: &Bathymetry) -> Vec<f64> {
    crate::elliptic::gradient_magnitude(bath.grid(), u)
}

/// `max_{3 <= p <= p_max} ||grad u||_p / p` over integer `p`.
pub fn yudovich_l(u: &VectorField, bath: &Bathymetry, p_max: usize) -> Result<f64> {
    if p_max < 3 {
        return Err(LakeError::InvalidParameter {
            name: "p_max",
            reason: format!("p_max must be >= 3 (got {p_max})"),
        });
    }
    let grid = bath.grid();
    u.check(grid, "velocity")?;
    let g = gradient_frobenius(u, bath);
    Ok((3..=p_max)
        .map(|p| lq_norm(&g, grid.quad_weights(), p as f64) / p as f64)
        .fold(0.0, f64::max))
}

/// One row of the per-step record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub energy: f64,
    pub energy_b: f64,
    pub enstrophy_q2: f64,
    pub enstrophy_qcfg: f64,
    pub omega_max: f64,
    pub dt: f64,
    pub grad_energy: f64,
    pub boundary_drag: f64,
    pub deformation: f64,
    pub divergence: f64,
}

/// Time series of diagnostics with strictly increasing times.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsSeries {
    pub q: f64,
    pub rows: Vec<DiagnosticsRow>,
}

impl DiagnosticsSeries {
    pub fn new(q: f64) -> Self {
        DiagnosticsSeries {
            q,
            rows: Vec::new(),
        }
    }

    /// Appends the diagnostics of `state`; `dt` is the step that produced
    /// it (0 for the initial state).
    pub fn record(&mut self, state: &SimState, dt: f64) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(state.t > last.t) {
                return Err(LakeError::Invalid(format!(
                    "diagnostic times must increase ({} after {})",
                    state.t, last.t
                )));
            }
        }
        let bath = &state.bath;
        let d = dissipation(&state.u, bath)?;
        let row = DiagnosticsRow {
            t: state.t,
            energy: energy(state)?,
            energy_b: velocity_energy(&state.u, bath, false)?,
            enstrophy_q2: weighted_enstrophy(&state.omega, bath, 2.0)?,
            enstrophy_qcfg: weighted_enstrophy(&state.omega, bath, self.q)?,
            omega_max: state.omega.max_abs(),
            dt,
            grad_energy: d.gradient,
            boundary_drag: d.boundary_drag,
            deformation: d.deformation,
            divergence: d.divergence,
        };
        let finite = [
            row.energy,
            row.energy_b,
            row.enstrophy_q2,
            row.enstrophy_qcfg,
            row.omega_max,
            row.grad_energy,
            row.boundary_drag,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(LakeError::Invalid(format!("non-finite diagnostics at t = {}", state.t)));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    /// First step whose energy exceeds its predecessor by more than
    /// `tol_rel E(0)`, as `(index, increase)`.
    pub fn energy_increase(&self, tol_rel: f64) -> Option<(usize, f64)> {
        let e0 = self.rows.first()?.energy;
        self.rows
            .windows(2)
            .enumerate()
            .map(|(k, w)| (k + 1, w[1].energy - w[0].energy))
            .find(|(_, inc)| *inc > tol_rel * e0)
    }

    /// Largest per-step energy change relative to `E(0)`.
    pub fn max_energy_increase(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        let e0 = first.energy.max(f64::MIN_POSITIVE);
        self.rows
            .windows(2)
            .map(|w| (w[1].energy - w[0].energy) / e0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoidal `mu int_0^T int |grad u|^2 b_eps dt`.
    pub fn integrated_gradient_energy(&self, mu: f64) -> f64 {
        mu * self
            .rows
            .windows(2)
            .map(|w| 0.5 * (w[0].grad_energy + w[1].grad_energy) * (w[1].t - w[0].t))
            .sum::<f64>()
    }

    /// Largest `K` with `Z(t) = Z(0) (1 + K mu t)` over the series, using
    /// the configured-exponent enstrophy.
    pub fn enstrophy_growth_rate(&self, mu: f64) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        let z0 = first.enstrophy_qcfg;
        if z0 == 0.0 || mu == 0.0 {
            return 0.0;
        }
        self.rows
            .iter()
            .filter(|r| r.t > first.t)
            .map(|r| (r.enstrophy_qcfg / z0 - 1.0) / (mu * (r.t - first.t)))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bathymetry::eval_bathymetry;
    use crate::grid::{build_grid, Grid};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn state_with(u: VectorField, bath: Arc<Bathymetry>) -> SimState {
        let g = bath.grid().clone();
        SimState {
            t: 0.0,
            omega: ScalarField::zeros(&g),
            psi: ScalarField::zeros(&g),
            u,
            mu: 0.0,
            bath,
        }
    }

    fn grid(n: usize) -> Arc<Grid> {
        Arc::new(build_grid(n, 2 * n).unwrap())
    }

    #[test]
    fn energy_examples() {
        let g = grid(64);
        let flat = Arc::new(Bathymetry::constant(&g, 1.0));
        assert_eq!(energy(&state_with(VectorField::zeros(&g), flat.clone())).unwrap(), 0.0);
        let rot = VectorField::from_fn(&g, |x, y| (-y, x));
        let e = energy(&state_with(rot, flat)).unwrap();
        assert!((e - PI / 2.0).abs() < 2.0 * g.dr().powi(2), "{e}");
        let deg = Arc::new(eval_bathymetry(&g, 2.0, 0.0).unwrap());
        let e = energy(&state_with(VectorField::from_fn(&g, |_, _| (1.0, 0.0)), deg)).unwrap();
        assert!((e - PI / 3.0).abs() < 2.0 * g.dr().powi(2), "{e}");
    }

    #[test]
    fn energy_quadrature_is_second_order() {
        let err = |n: usize| {
            let g = grid(n);
            let flat = Arc::new(Bathymetry::constant(&g, 1.0));
            let rot = VectorField::from_fn(&g, |x, y| (-y, x));
            (energy(&state_with(rot, flat)).unwrap() - PI / 2.0).abs()
        };
        let order = (err(16) / err(32)).log2();
        assert!(order > 1.95, "{order}");
    }

    #[test]
    fn rigid_rotation_dissipation_terms() {
        let g = grid(32);
        let flat = Bathymetry::constant(&g, 1.0);
        let rot = VectorField::from_fn(&g, |x, y| (-y, x));
        let d = dissipation(&rot, &flat).unwrap();
        assert!(d.deformation.abs() < 1e-12);
        assert!(d.divergence.abs() < 1e-12);
        assert!((d.gradient - 2.0 * PI).abs() < 1e-10);
        assert!((d.boundary_drag - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn balance_needs_three_equally_spaced_snapshots() {
        let g = grid(16);
        let flat = Arc::new(Bathymetry::constant(&g, 1.0));
        let s = state_with(VectorField::zeros(&g), flat);
        let mut w = vec![s.clone(), s.clone()];
        w[1].t = 0.1;
        assert!(energy_balance_residual(&w, 0.1).is_err());
        let mut s2 = s.clone();
        s2.t = 0.5;
        w.push(s2);
        assert!(energy_balance_residual(&w, 0.1).is_err());
        w[2].t = 0.2;
        assert_eq!(energy_balance_residual(&w, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn navier_identity_on_linear_fields() {
        let g = grid(32);
        let bath = eval_bathymetry(&g, 2.0, 1e-2).unwrap();
        for f in [
            |x: f64, y: f64| (-y, x),
            |_x: f64, y: f64| (y, 0.0),
        ] {
            let u = VectorField::from_fn(&g, f);
            assert!(navier_identity_residual(&u, &bath).unwrap() < 1e-10);
        }
        assert_eq!(navier_identity_residual(&VectorField::zeros(&g), &bath).unwrap(), 0.0);
    }

    #[test]
    fn navier_identity_is_exact_for_nonlinear_field() {
        // The radial derivatives cancel algebraically; only spectral angular
        // terms remain, so the residual sits at roundoff on every grid.
        for n in [16, 32, 64] {
            let g = grid(n);
            let bath = eval_bathymetry(&g, 2.0, 1e-2).unwrap();
            let u = VectorField::from_fn(&g, |x, y| (x.sin() * y * y, (2.0 * y).cos() + x.powi(3)));
            assert!(navier_identity_residual(&u, &bath).unwrap() < 1e-10);
        }
    }

    #[test]
    fn yudovich_examples() {
        let g = grid(16);
        let flat = Bathymetry::constant(&g, 1.0);
        assert_eq!(yudovich_l(&VectorField::zeros(&g), &flat, 40).unwrap(), 0.0);
        let rot = VectorField::from_fn(&g, |x, y| (-y, x));
        let l = yudovich_l(&rot, &flat, 40).unwrap();
        let expected = 2f64.sqrt() * PI.powf(1.0 / 3.0) / 3.0;
        assert!((l - expected).abs() < 1e-12, "{l} vs {expected}");
        let l2 = yudovich_l(&rot.scaled(2.0), &flat, 40).unwrap();
        assert!((l2 - 2.0 * l).abs() < 1e-12);
        assert!(yudovich_l(&rot, &flat, 2).is_err());
    }

    #[test]
    fn series_rejects_non_increasing_times() {
        let g = grid(16);
        let flat = Arc::new(Bathymetry::constant(&g, 1.0));
        let s = state_with(VectorField::zeros(&g), flat);
        let mut series = DiagnosticsSeries::new(4.0);
        series.record(&s, 0.0).unwrap();
        assert!(series.record(&s, 0.1).is_err());
    }
}
