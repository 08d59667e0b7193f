//! Stream-function solver for the weighted div-curl system
//! `div(b_eps v) = 0`, `curl v = f`, `b_eps v . n = 0`, via
//! `b_eps v = perp-grad psi` and `div(b_eps^{-1} grad psi) = f`, `psi = 0`
//! on the wall.
//!
//! The operator is the finite-volume assembly of `grid::fv_*`, so it is
//! symmetric and negative definite in the quadrature inner product. It is
//! inverted by conjugate gradients preconditioned with the angle-averaged
//! operator, which is block diagonal in angular Fourier modes and solved
//! ring-tridiagonally per mode.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bathymetry::Bathymetry;
use crate::error::{LakeError, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::norms::lq_norm;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

#[derive(Clone, Debug)]
pub struct StreamOperator {
    bath: Arc<Bathymetry>,
    beta_cell: Vec<f64>,
    beta_face: Vec<f64>,
    beta_node: Vec<f64>,
    // angle-averaged coefficients of the preconditioner
    pc_lower: Vec<f64>,
    pc_upper: Vec<f64>,
    pc_diag_radial: Vec<f64>,
    pc_angular: Vec<f64>,
    tolerance: f64,
    max_iterations: usize,
}

/// Stream function and velocity produced by one recovery.
#[derive(Clone, Debug)]
pub struct Recovery {
    pub psi: ScalarField,
    pub u: VectorField,
    pub iterations: usize,
}

impl StreamOperator {
    pub fn new(bath: Arc<Bathymetry>) -> Result<Self> {
        Self::with_tolerance(bath, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)
    }

    pub fn with_tolerance(
        bath: Arc<Bathymetry>,
        tolerance: f64,
        max_iterations: usize,
    ) -> Result<Self> {
        if !(bath.min_b_eps() > 0.0) {
            return Err(LakeError::InvalidParameter {
                name: "epsilon",
                reason: "the stream operator needs b_eps > 0 on the closed disk".into(),
            });
        }
        let grid = bath.grid().clone();
        let n = grid.n_theta();
        let nr = grid.n_r();
        let h = grid.dr();
        let beta_node: Vec<f64> = bath.b_eps().values.iter().map(|b| 1.0 / b).collect();
        let mut beta_cell = beta_node.clone();
        for v in &mut beta_cell[grid.boundary_ring()] {
            *v = 0.0;
        }
        let mut beta_face = vec![0.0; (nr + 1) * n];
        for i in 1..=nr {
            let be = bath.b_eps_at(grid.face_radius(i));
            beta_face[i * n..(i + 1) * n].fill(1.0 / be);
        }

        let ring_mean = |v: &[f64], j: usize| v[j * n..(j + 1) * n].iter().sum::<f64>() / n as f64;
        let mut pc_lower = vec![0.0; nr];
        let mut pc_upper = vec![0.0; nr];
        let mut pc_diag_radial = vec![0.0; nr];
        let mut pc_angular = vec![0.0; nr];
        for j in 0..nr {
            let r = grid.radius(j);
            let lo = grid.face_radius(j) * ring_mean(&beta_face, j) / (r * h * h);
            let hi_coef = grid.face_radius(j + 1) * ring_mean(&beta_face, j + 1) / (r * h * h);
            let hi = if j == nr - 1 { 2.0 * hi_coef } else { hi_coef };
            pc_lower[j] = if j == 0 { 0.0 } else { lo };
            pc_upper[j] = if j == nr - 1 { 0.0 } else { hi };
            pc_diag_radial[j] = -(lo + hi);
            pc_angular[j] = ring_mean(&beta_cell, j) / (r * r);
        }

        Ok(StreamOperator {
            bath,
            beta_cell,
            beta_face,
            beta_node,
            pc_lower,
            pc_upper,
            pc_diag_radial,
            pc_angular,
            tolerance,
            max_iterations,
        })
    }

    pub fn bathymetry(&self) -> &Arc<Bathymetry> {
        &self.bath
    }
    pub fn grid(&self) -> &Arc<Grid> {
        self.bath.grid()
    }
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `div(b_eps^{-1} grad psi)` on interior nodes with `psi = 0` on the
    /// wall; the boundary ring of the output is zero.
    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        let grid = self.grid();
        let mut p = psi.to_vec();
        for v in &mut p[grid.boundary_ring()] {
            *v = 0.0;
        }
        let mut flux = grid.fv_radial_gradient(&p);
        for (f, b) in flux.iter_mut().zip(&self.beta_face) {
            *f *= b;
        }
        let mut vt = grid.d_theta(&p);
        for (i, v) in vt.iter_mut().enumerate() {
            *v *= self.beta_cell[i] / grid.radius(i / grid.n_theta());
        }
        grid.fv_divergence(&flux, &vt)
    }

    /// Inverse of the angle-averaged operator, mode by mode.
    fn precondition(&self, rhs: &[f64]) -> Vec<f64> {
        let grid = self.grid();
        let n = grid.n_theta();
        let nr = grid.n_r();
        let mut spec = vec![Complex64::new(0.0, 0.0); nr * n];
        for j in 0..nr {
            let row = &mut spec[j * n..(j + 1) * n];
            for (c, v) in row.iter_mut().zip(&rhs[j * n..(j + 1) * n]) {
                *c = Complex64::new(*v, 0.0);
            }
            grid.fft_forward(row);
        }
        let mut diag = vec![0.0; nr];
        let mut cp = vec![0.0; nr];
        let mut dp = vec![Complex64::new(0.0, 0.0); nr];
        for b in 0..n {
            let m = grid.wavenumber(b);
            let lambda = m * m;
            for j in 0..nr {
                diag[j] = self.pc_diag_radial[j] - lambda * self.pc_angular[j];
            }
            // Thomas sweep
            cp[0] = self.pc_upper[0] / diag[0];
            dp[0] = spec[b] / diag[0];
            for j in 1..nr {
                let denom = diag[j] - self.pc_lower[j] * cp[j - 1];
                cp[j] = self.pc_upper[j] / denom;
                dp[j] = (spec[j * n + b] - dp[j - 1] * self.pc_lower[j]) / denom;
            }
            spec[(nr - 1) * n + b] = dp[nr - 1];
            for j in (0..nr - 1).rev() {
                spec[j * n + b] = dp[j] - spec[(j + 1) * n + b] * cp[j];
            }
        }
        let mut out = vec![0.0; grid.n_nodes()];
        let scale = 1.0 / n as f64;
        for j in 0..nr {
            let row = &mut spec[j * n..(j + 1) * n];
            grid.fft_inverse(row);
            for (o, c) in out[j * n..(j + 1) * n].iter_mut().zip(row.iter()) {
                *o = c.re * scale;
            }
        }
        out
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let w = self.grid().quad_weights();
        a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
    }

    /// Weighted norm of the rounding error expected when evaluating `A x`:
    /// a small multiple of machine epsilon times `|A| |x|`, with the angular
    /// part bounded through the ring-centred values.
    fn rounding_floor(&self, x: &[f64]) -> f64 {
        let grid = self.grid();
        let n = grid.n_theta();
        let nr = grid.n_r();
        let h = grid.dr();
        let top = (n / 2) as f64;
        let mut bound = vec![0.0; grid.n_nodes()];
        for j in 0..nr {
            let r = grid.radius(j);
            let ring = &x[j * n..(j + 1) * n];
            let mean = ring.iter().sum::<f64>() / n as f64;
            let spread = ring.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
            for k in 0..n {
                let i = j * n + k;
                let lo = grid.face_radius(j) * self.beta_face[i] / (r * h * h);
                let mut hi = grid.face_radius(j + 1) * self.beta_face[i + n] / (r * h * h);
                if j == nr - 1 {
                    hi *= 2.0;
                }
                let below = if j > 0 { x[i - n].abs() } else { 0.0 };
                let above = if j + 1 < nr { x[i + n].abs() } else { 0.0 };
                bound[i] = lo * (below + x[i].abs())
                    + hi * (above + x[i].abs())
                    + self.beta_cell[i] * top * top * spread / (r * r);
            }
        }
        64.0 * f64::EPSILON * self.dot(&bound, &bound).sqrt()
    }

    /// Solves `A psi = f` with `psi = 0` on the wall.
    pub fn solve(&self, f: &ScalarField) -> Result<(ScalarField, usize)> {
        let grid = self.grid();
        f.check(grid, "stream right-hand side")?;
        let mut rhs = f.values.clone();
        for v in &mut rhs[grid.boundary_ring()] {
            *v = 0.0;
        }
        let bnorm = self.dot(&rhs, &rhs).sqrt();
        let mut x = vec![0.0; grid.n_nodes()];
        if bnorm == 0.0 {
            return Ok((ScalarField { values: x }, 0));
        }
        // CG on the SPD system -A x = -rhs; the preconditioner is -T^{-1}.
        // When the recursive residual converges the true residual is
        // recomputed and CG restarts from it.
        let mut r: Vec<f64> = rhs.iter().map(|v| -v).collect();
        let mut z: Vec<f64> = self.precondition(&r).into_iter().map(|v| -v).collect();
        let mut p = z.clone();
        let mut rz = self.dot(&r, &z);
        let mut rel = 1.0;
        let mut target = self.tolerance;
        for it in 1..=self.max_iterations {
            let kp: Vec<f64> = self.apply(&p).into_iter().map(|v| -v).collect();
            let pkp = self.dot(&p, &kp);
            if !(pkp > 0.0) {
                return Err(LakeError::Invalid("stream operator lost definiteness".into()));
            }
            let alpha = rz / pkp;
            for i in 0..x.len() {
                x[i] += alpha * p[i];
                r[i] -= alpha * kp[i];
            }
            rel = self.dot(&r, &r).sqrt() / bnorm;
            let restart = rel <= target;
            if restart {
                let ax = self.apply(&x);
                r = ax.iter().zip(&rhs).map(|(a, b)| a - b).collect();
                rel = self.dot(&r, &r).sqrt() / bnorm;
                // below the rounding floor of the operator itself the
                // residual carries no further information
                let floor = self.rounding_floor(&x) / bnorm;
                if rel <= self.tolerance.max(floor) {
                    return Ok((ScalarField { values: x }, it));
                }
                // recursive and true residual have drifted apart
                target *= 0.1;
            }
            z = self.precondition(&r).into_iter().map(|v| -v).collect();
            let rz_new = self.dot(&r, &z);
            let beta = if restart { 0.0 } else { rz_new / rz };
            rz = rz_new;
            for i in 0..p.len() {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(LakeError::SolverDiverged {
            iterations: self.max_iterations,
            residual: rel,
        })
    }

    /// `v = b_eps^{-1} perp-grad psi` with the collocated operators.
    pub fn velocity_from_stream(&self, psi: &ScalarField) -> VectorField {
        let grid = self.grid();
        let dt = grid.d_theta(&psi.values);
        let dr = grid.d_r(&psi.values);
        let n = grid.n_theta();
        let mut vr = vec![0.0; grid.n_nodes()];
        let mut vt = vec![0.0; grid.n_nodes()];
        for i in 0..grid.n_nodes() {
            let r = grid.radius(i / n);
            vr[i] = -self.beta_node[i] * dt[i] / r;
            vt[i] = self.beta_node[i] * dr[i];
        }
        let (x, y) = grid.from_polar(&vr, &vt);
        VectorField { x, y }
    }

    /// Velocity whose curl is `f`: solves for `psi` then applies the
    /// weighted perpendicular gradient.
    pub fn velocity_from_curl(&self, f: &ScalarField) -> Result<Recovery> {
        let (psi, iterations) = self.solve(f)?;
        let u = self.velocity_from_stream(&psi);
        u.check(self.grid(), "recovered velocity")?;
        Ok(Recovery { psi, u, iterations })
    }

    /// Velocity from potential vorticity: the curl is `b_eps omega`.
    pub fn velocity_from_vorticity(&self, omega: &ScalarField) -> Result<Recovery> {
        omega.check(self.grid(), "vorticity")?;
        let f = ScalarField {
            values: omega
                .values
                .iter()
                .zip(&self.bath.b_eps().values)
                .map(|(w, b)| w * b)
                .collect(),
        };
        self.velocity_from_curl(&f)
    }
}

/// Discrete `div(b_eps u)` with the collocated operators.
pub fn mass_flux_divergence(u: &VectorField, bath: &Bathymetry) -> Vec<f64> {
    let grid = bath.grid();
    let be = &bath.b_eps().values;
    let fx: Vec<f64> = u.x.iter().zip(be).map(|(a, b)| a * b).collect();
    let fy: Vec<f64> = u.y.iter().zip(be).map(|(a, b)| a * b).collect();
    grid.divergence(&fx, &fy)
}

/// Pointwise Frobenius norm of the collocated velocity gradient.
pub fn gradient_magnitude(grid: &Grid, u: &VectorField) -> Vec<f64> {
    let [a, b, c, d] = grid.jacobian(&u.x, &u.y);
    (0..a.len())
        .map(|i| (a[i] * a[i] + b[i] * b[i] + c[i] * c[i] + d[i] * d[i]).sqrt())
        .collect()
}

/// One line of the elliptic estimate probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub p: f64,
    pub sample_id: usize,
    pub n_r: usize,
    pub n_theta: usize,
    pub epsilon: f64,
    /// `||grad v||_p / (||f||_p + ||b v||_2)`, `None` when the denominator
    /// vanishes.
    pub ratio_grad: Option<f64>,
    /// `||v||_inf / (||f||_p + ||b v||_2)`.
    pub ratio_sup: Option<f64>,
}

/// Evaluates the elliptic estimate ratios for each sample and exponent.
pub fn elliptic_estimate_probe(
    op: &StreamOperator,
    samples: &[ScalarField],
    p_list: &[f64],
) -> Result<Vec<ProbeRow>> {
    if samples.is_empty() {
        return Err(LakeError::Invalid("probe needs at least one sample".into()));
    }
    if let Some(p) = p_list.iter().find(|p| !(**p > 2.0) || !p.is_finite()) {
        return Err(LakeError::InvalidParameter {
            name: "p",
            reason: format!("probe exponents must lie in (2, inf), got {p}"),
        });
    }
    let grid = op.grid();
    let w = grid.quad_weights();
    let be = &op.bathymetry().b_eps().values;
    let mut rows = Vec::new();
    for (id, f) in samples.iter().enumerate() {
        f.check(grid, "probe sample")?;
        let rec = op.velocity_from_curl(f)?;
        let grad = gradient_magnitude(grid, &rec.u);
        let mag = rec.u.magnitude();
        let bv: Vec<f64> = mag.iter().zip(be).map(|(m, b)| m * b).collect();
        let bv2 = lq_norm(&bv, w, 2.0);
        let vsup = mag.iter().cloned().fold(0.0, f64::max);
        for &p in p_list {
            let fp = lq_norm(&f.values, w, p);
            let denom = fp + bv2;
            let (rg, rs) = if denom > 0.0 {
                (Some(lq_norm(&grad, w, p) / denom), Some(vsup / denom))
            } else {
                (None, None)
            };
            rows.push(ProbeRow {
                p,
                sample_id: id,
                n_r: grid.n_r(),
                n_theta: grid.n_theta(),
                epsilon: op.bathymetry().epsilon(),
                ratio_grad: rg,
                ratio_sup: rs,
            });
        }
    }
    Ok(rows)
}

/// Smooth pseudo-random probe fields: random quartic polynomials in
/// `(x, y)`. Coefficients depend only on `seed`, so the same functions are
/// sampled on every grid.
pub fn probe_samples(grid: &Grid, count: usize, seed: u64) -> Vec<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let coeffs: Vec<(i32, i32, f64)> = (0..=4)
                .flat_map(|d| (0..=d).map(move |i| (i, d - i)))
                .map(|(i, j)| (i, j, 0.0))
                .collect::<Vec<_>>()
                .into_iter()
                .map(|(i, j, _)| (i, j, rng.gen_range(-1.0..1.0)))
                .collect();
            ScalarField::from_fn(grid, |x, y| {
                coeffs
                    .iter()
                    .map(|(i, j, c)| c * x.powi(*i) * y.powi(*j))
                    .sum()
            })
        })
        .collect()
}
