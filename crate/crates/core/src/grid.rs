//! Polar mesh of the unit disk, node-based fields and the discrete
//! differential operators shared by every other module.
//!
//! Layout: ring `j < n_r` sits at the cell centre `r_j = (j + 1/2) dr`,
//! `dr = 1 / n_r`; ring `n_r` is the boundary circle `r = 1`. Cell faces sit
//! at `rho_i = i dr`. The angular direction is periodic with an even number
//! of equispaced points and is differentiated pseudo-spectrally.
//!
//! Two families of radial operators live here:
//!
//! * finite-volume pairs (`fv_radial_gradient` / `fv_divergence`) that are
//!   exact adjoints in the quadrature inner product and assemble the
//!   elliptic operators;
//! * collocated centred operators (`d_r`, `gradient`, `divergence`, `curl`)
//!   used for velocity recovery, advection and diagnostics. Across the pole
//!   they reflect through `theta + pi`, so `d_r` and `d_theta` commute and
//!   the discrete divergence of a discrete perpendicular gradient vanishes.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LakeError, Result};

pub const MIN_RADIAL_CELLS: usize = 8;
pub const MIN_ANGULAR_CELLS: usize = 8;

#[derive(Clone)]
pub struct Grid {
    n_r: usize,
    n_theta: usize,
    dr: f64,
    dtheta: f64,
    r_nodes: Vec<f64>,
    theta_nodes: Vec<f64>,
    cos_t: Vec<f64>,
    sin_t: Vec<f64>,
    quad_weights: Vec<f64>,
    boundary_weights: Vec<f64>,
    mode_cap: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_r", &self.n_r)
            .field("n_theta", &self.n_theta)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_r == other.n_r && self.n_theta == other.n_theta
    }
}

/// Builds the staggered polar mesh with `n_r` cell rings and `n_theta`
/// angular points.
pub fn build_grid(n_r: usize, n_theta: usize) -> Result<Grid> {
    if n_r < MIN_RADIAL_CELLS {
        return Err(LakeError::InvalidGrid(format!(
            "n_r = {n_r} is below the minimum {MIN_RADIAL_CELLS}"
        )));
    }
    if n_theta < MIN_ANGULAR_CELLS {
        return Err(LakeError::InvalidGrid(format!(
            "n_theta = {n_theta} is below the minimum {MIN_ANGULAR_CELLS}"
        )));
    }
    if !n_theta.is_multiple_of(2) {
        return Err(LakeError::InvalidGrid(format!(
            "n_theta = {n_theta} must be even"
        )));
    }
    let dr = 1.0 / n_r as f64;
    let dtheta = 2.0 * PI / n_theta as f64;
    let mut r_nodes: Vec<f64> = (0..n_r).map(|j| (j as f64 + 0.5) * dr).collect();
    r_nodes.push(1.0);
    let theta_nodes: Vec<f64> = (0..n_theta).map(|k| k as f64 * dtheta).collect();
    let cos_t = theta_nodes.iter().map(|t| t.cos()).collect();
    let sin_t = theta_nodes.iter().map(|t| t.sin()).collect();

    let mut quad_weights = vec![0.0; (n_r + 1) * n_theta];
    for j in 0..n_r {
        let w = r_nodes[j] * dr * dtheta;
        quad_weights[j * n_theta..(j + 1) * n_theta].fill(w);
    }
    let boundary_weights = vec![dtheta; n_theta];

    // Largest angular wavenumber whose arc length on ring j is no finer
    // than the radial spacing; Nyquist is always removed.
    let top = n_theta / 2 - 1;
    let mode_cap = (0..=n_r)
        .map(|j| {
            if j == n_r {
                top
            } else {
                ((PI * (j as f64 + 0.5)).floor() as usize).clamp(1, top)
            }
        })
        .collect();

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n_theta);
    let inverse = planner.plan_fft_inverse(n_theta);

    Ok(Grid {
        n_r,
        n_theta,
        dr,
        dtheta,
        r_nodes,
        theta_nodes,
        cos_t,
        sin_t,
        quad_weights,
        boundary_weights,
        mode_cap,
        forward,
        inverse,
    })
}

impl Grid {
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }
    /// Ring radii; the last entry is the boundary circle.
    pub fn r_nodes(&self) -> &[f64] {
        &self.r_nodes
    }
    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }
    /// Area weights `r dr dtheta`; zero on the boundary ring.
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }
    /// Arclength weights of the boundary ring.
    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }
    pub fn n_nodes(&self) -> usize {
        (self.n_r + 1) * self.n_theta
    }
    pub fn n_interior(&self) -> usize {
        self.n_r * self.n_theta
    }
    #[inline]
    pub fn idx(&self, j: usize, k: usize) -> usize {
        j * self.n_theta + k
    }
    /// Ring index and angle index of a flat node index.
    #[inline]
    pub fn ring_angle(&self, i: usize) -> (usize, usize) {
        (i / self.n_theta, i % self.n_theta)
    }
    #[inline]
    pub fn radius(&self, j: usize) -> f64 {
        self.r_nodes[j]
    }
    /// Face radius `rho_i = i dr`, `i = 0..=n_r`.
    #[inline]
    pub fn face_radius(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }
    #[inline]
    pub fn cos_theta(&self, k: usize) -> f64 {
        self.cos_t[k]
    }
    #[inline]
    pub fn sin_theta(&self, k: usize) -> f64 {
        self.sin_t[k]
    }
    /// Cartesian position of node `i`.
    pub fn position(&self, i: usize) -> (f64, f64) {
        let (j, k) = self.ring_angle(i);
        let r = self.r_nodes[j];
        (r * self.cos_t[k], r * self.sin_t[k])
    }
    pub fn boundary_ring(&self) -> std::ops::Range<usize> {
        self.n_r * self.n_theta..(self.n_r + 1) * self.n_theta
    }
    /// Highest retained angular wavenumber on ring `j` when the polar
    /// filter is active.
    pub fn mode_cap(&self, j: usize) -> usize {
        self.mode_cap[j]
    }

    /// Smallest node spacing seen by the explicit scheme.
    pub fn min_spacing(&self, dealias: bool) -> f64 {
        if dealias {
            self.dr
        } else {
            self.dr.min(self.r_nodes[0] * self.dtheta)
        }
    }

    #[inline]
    fn opposite(&self, k: usize) -> usize {
        (k + self.n_theta / 2) % self.n_theta
    }

    /// Signed wavenumber of FFT bin `b`, Nyquist mapped to zero.
    #[inline]
    pub fn wavenumber(&self, b: usize) -> f64 {
        let n = self.n_theta;
        if b < n / 2 {
            b as f64
        } else if b == n / 2 {
            0.0
        } else {
            b as f64 - n as f64
        }
    }

    /// |m| of FFT bin `b` (Nyquist reported as n/2).
    #[inline]
    pub fn mode_of_bin(&self, b: usize) -> usize {
        let n = self.n_theta;
        if b <= n / 2 {
            b
        } else {
            n - b
        }
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }

    /// Applies `op(bin, coeff)` ring by ring in angular Fourier space.
    fn ring_spectral<F>(&self, f: &[f64], rings: std::ops::Range<usize>, mut op: F) -> Vec<f64>
    where
        F: FnMut(usize, usize, Complex64) -> Complex64,
    {
        let n = self.n_theta;
        let mut out = f.to_vec();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let scale = 1.0 / n as f64;
        for j in rings {
            let row = &f[j * n..(j + 1) * n];
            for (b, v) in buf.iter_mut().zip(row) {
                *b = Complex64::new(*v, 0.0);
            }
            self.forward.process(&mut buf);
            for (b, c) in buf.iter_mut().enumerate() {
                *c = op(j, b, *c);
            }
            self.inverse.process(&mut buf);
            for (o, c) in out[j * n..(j + 1) * n].iter_mut().zip(&buf) {
                *o = c.re * scale;
            }
        }
        out
    }

    /// Pseudo-spectral angular derivative `d/dtheta` on every ring.
    pub fn d_theta(&self, f: &[f64]) -> Vec<f64> {
        // ring means carry no derivative; removing them first keeps the
        // transform roundoff proportional to the angular variation
        let n = self.n_theta;
        let mut centred = f.to_vec();
        for ring in centred.chunks_mut(n) {
            let mean = ring.iter().sum::<f64>() / n as f64;
            ring.iter_mut().for_each(|v| *v -= mean);
        }
        self.ring_spectral(&centred, 0..self.n_r + 1, |_, b, c| {
            c * Complex64::new(0.0, self.wavenumber(b))
        })
    }

    /// Removes angular modes above the per-ring cap (polar filter) on the
    /// interior rings. With `dealias = false` only the Nyquist mode goes.
    pub fn filter(&self, f: &mut [f64], dealias: bool) {
        let top = self.n_theta / 2 - 1;
        let out = self.ring_spectral(f, 0..self.n_r, |j, b, c| {
            let cap = if dealias { self.mode_cap[j] } else { top };
            if self.mode_of_bin(b) > cap {
                Complex64::new(0.0, 0.0)
            } else {
                c
            }
        });
        f[..self.n_interior()].copy_from_slice(&out[..self.n_interior()]);
    }

    /// Collocated radial derivative, fourth order. Interior rings use the
    /// centred five-point stencil, reflected through the pole on rings 0
    /// and 1. The two outermost interior rings and the wall use one-sided
    /// stencils on the five outermost interior rings only, so boundary
    /// values never enter a derivative.
    pub fn d_r(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n_theta;
        let nr = self.n_r;
        let h = self.dr;
        let mut out = vec![0.0; f.len()];
        // value on ring `j` (possibly negative: mirrored through the pole)
        let at = |j: isize, k: usize| {
            if j < 0 {
                f[self.idx((-j - 1) as usize, self.opposite(k))]
            } else {
                f[self.idx(j as usize, k)]
            }
        };
        for j in 0..nr - 2 {
            let jj = j as isize;
            for k in 0..n {
                out[self.idx(j, k)] = (at(jj - 2, k) - 8.0 * at(jj - 1, k) + 8.0 * at(jj + 1, k)
                    - at(jj + 2, k))
                    / (12.0 * h);
            }
        }
        let xs: [f64; 5] = std::array::from_fn(|m| self.r_nodes[nr - 5 + m]);
        let stencils = [
            (nr - 2, fd_weights(xs[3], xs)),
            (nr - 1, fd_weights(xs[4], xs)),
            (nr, fd_weights(1.0, xs)),
        ];
        for (j, w) in stencils {
            for k in 0..n {
                out[self.idx(j, k)] = (0..5).map(|m| w[m] * f[self.idx(nr - 5 + m, k)]).sum();
            }
        }
        out
    }

    /// Cartesian gradient of a scalar node field.
    pub fn gradient(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let fr = self.d_r(f);
        let ft = self.d_theta(f);
        let mut gx = vec![0.0; f.len()];
        let mut gy = vec![0.0; f.len()];
        for i in 0..f.len() {
            let (j, k) = self.ring_angle(i);
            let (c, s) = (self.cos_t[k], self.sin_t[k]);
            let ang = ft[i] / self.r_nodes[j];
            gx[i] = c * fr[i] - s * ang;
            gy[i] = s * fr[i] + c * ang;
        }
        (gx, gy)
    }

    /// Polar components `(v_r, v_theta)` of a Cartesian vector field.
    pub fn to_polar(&self, vx: &[f64], vy: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut vr = vec![0.0; vx.len()];
        let mut vt = vec![0.0; vx.len()];
        for i in 0..vx.len() {
            let k = i % self.n_theta;
            let (c, s) = (self.cos_t[k], self.sin_t[k]);
            vr[i] = c * vx[i] + s * vy[i];
            vt[i] = -s * vx[i] + c * vy[i];
        }
        (vr, vt)
    }

    /// Cartesian components of a polar-component vector field.
    pub fn from_polar(&self, vr: &[f64], vt: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut vx = vec![0.0; vr.len()];
        let mut vy = vec![0.0; vr.len()];
        for i in 0..vr.len() {
            let k = i % self.n_theta;
            let (c, s) = (self.cos_t[k], self.sin_t[k]);
            vx[i] = c * vr[i] - s * vt[i];
            vy[i] = s * vr[i] + c * vt[i];
        }
        (vx, vy)
    }

    /// Collocated divergence `(1/r) d_r(r v_r) + (1/r) d_theta v_theta`.
    pub fn divergence_polar(&self, vr: &[f64], vt: &[f64]) -> Vec<f64> {
        let rvr: Vec<f64> = vr
            .iter()
            .enumerate()
            .map(|(i, v)| self.r_nodes[i / self.n_theta] * v)
            .collect();
        let a = self.d_r(&rvr);
        let b = self.d_theta(vt);
        a.iter()
            .zip(&b)
            .enumerate()
            .map(|(i, (a, b))| (a + b) / self.r_nodes[i / self.n_theta])
            .collect()
    }

    pub fn divergence(&self, vx: &[f64], vy: &[f64]) -> Vec<f64> {
        let (vr, vt) = self.to_polar(vx, vy);
        self.divergence_polar(&vr, &vt)
    }

    /// Collocated scalar curl `(1/r) d_r(r v_theta) - (1/r) d_theta v_r`.
    pub fn curl(&self, vx: &[f64], vy: &[f64]) -> Vec<f64> {
        let (vr, vt) = self.to_polar(vx, vy);
        let rvt: Vec<f64> = vt
            .iter()
            .enumerate()
            .map(|(i, v)| self.r_nodes[i / self.n_theta] * v)
            .collect();
        let a = self.d_r(&rvt);
        let b = self.d_theta(&vr);
        a.iter()
            .zip(&b)
            .enumerate()
            .map(|(i, (a, b))| (a - b) / self.r_nodes[i / self.n_theta])
            .collect()
    }

    /// Cartesian Jacobian `[du_x/dx, du_x/dy, du_y/dx, du_y/dy]`.
    pub fn jacobian(&self, vx: &[f64], vy: &[f64]) -> [Vec<f64>; 4] {
        let (a, b) = self.gradient(vx);
        let (c, d) = self.gradient(vy);
        [a, b, c, d]
    }

    /// Radial finite-volume gradient on faces. Face 0 (the pole) carries no
    /// area and is set to zero; face `n_r` uses the boundary ring value at
    /// half spacing.
    pub fn fv_radial_gradient(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n_theta;
        let nr = self.n_r;
        let h = self.dr;
        let mut g = vec![0.0; (nr + 1) * n];
        for i in 1..nr {
            for k in 0..n {
                g[i * n + k] = (f[self.idx(i, k)] - f[self.idx(i - 1, k)]) / h;
            }
        }
        for k in 0..n {
            g[nr * n + k] = (f[self.idx(nr, k)] - f[self.idx(nr - 1, k)]) / (0.5 * h);
        }
        g
    }

    /// Face weights of the finite-volume radial flux inner product.
    pub fn face_weight(&self, i: usize) -> f64 {
        let rho = self.face_radius(i);
        if i == self.n_r {
            rho * 0.5 * self.dr * self.dtheta
        } else {
            rho * self.dr * self.dtheta
        }
    }

    /// Finite-volume divergence at cell centres of a radial face flux and a
    /// cell-centred angular component. Boundary ring output is zero.
    pub fn fv_divergence(&self, flux_r: &[f64], v_theta: &[f64]) -> Vec<f64> {
        let n = self.n_theta;
        let nr = self.n_r;
        let h = self.dr;
        let dt = self.d_theta(v_theta);
        let mut out = vec![0.0; (nr + 1) * n];
        for j in 0..nr {
            let r = self.r_nodes[j];
            let lo = self.face_radius(j);
            let hi = self.face_radius(j + 1);
            for k in 0..n {
                let radial = (hi * flux_r[(j + 1) * n + k] - lo * flux_r[j * n + k]) / (r * h);
                out[self.idx(j, k)] = radial + dt[self.idx(j, k)] / r;
            }
        }
        out
    }

    /// Quadrature of a node field over the disk.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.quad_weights).map(|(a, w)| a * w).sum()
    }

    /// Arclength quadrature over the boundary ring of a node field.
    pub fn integrate_boundary(&self, f: &[f64]) -> f64 {
        f[self.boundary_ring()]
            .iter()
            .zip(&self.boundary_weights)
            .map(|(a, w)| a * w)
            .sum()
    }
}

/// Derivative weights at `x0` of the polynomial interpolant through `xs`.
pub fn fd_weights<const N: usize>(x0: f64, xs: [f64; N]) -> [f64; N] {
    let mut w = [0.0; N];
    for i in 0..N {
        let mut sum = 0.0;
        for k in 0..N {
            if k == i {
                continue;
            }
            let mut prod = 1.0 / (xs[i] - xs[k]);
            for l in 0..N {
                if l != i && l != k {
                    prod *= (x0 - xs[l]) / (xs[i] - xs[l]);
                }
            }
            sum += prod;
        }
        w[i] = sum;
    }
    w
}

/// Scalar values on every node of a [`Grid`], boundary ring last.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            values: vec![0.0; grid.n_nodes()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ScalarField {
            values: vec![c; grid.n_nodes()],
        }
    }

    /// Samples `f(x, y)` on every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.n_nodes())
            .map(|i| {
                let (x, y) = grid.position(i);
                f(x, y)
            })
            .collect();
        ScalarField { values }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        check_len(grid, values.len())?;
        Ok(ScalarField { values })
    }

    pub fn check(&self, grid: &Grid, what: &'static str) -> Result<()> {
        check_len(grid, self.values.len())?;
        check_finite(grid, &self.values, what)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        ScalarField {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// Cartesian vector components on every node of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            x: vec![0.0; grid.n_nodes()],
            y: vec![0.0; grid.n_nodes()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut v = VectorField::zeros(grid);
        for i in 0..grid.n_nodes() {
            let (x, y) = grid.position(i);
            let (a, b) = f(x, y);
            v.x[i] = a;
            v.y[i] = b;
        }
        v
    }

    pub fn check(&self, grid: &Grid, what: &'static str) -> Result<()> {
        check_len(grid, self.x.len())?;
        check_len(grid, self.y.len())?;
        check_finite(grid, &self.x, what)?;
        check_finite(grid, &self.y, what)
    }

    /// Pointwise magnitude.
    pub fn magnitude(&self) -> Vec<f64> {
        self.x.iter().zip(&self.y).map(|(a, b)| a.hypot(*b)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().into_iter().fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        VectorField {
            x: self.x.iter().map(|v| v * s).collect(),
            y: self.y.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a - b).collect(),
        }
    }
}

fn check_len(grid: &Grid, len: usize) -> Result<()> {
    if len != grid.n_nodes() {
        return Err(LakeError::ShapeMismatch {
            expected: grid.n_nodes(),
            actual: len,
        });
    }
    Ok(())
}

pub(crate) fn check_finite(grid: &Grid, values: &[f64], what: &'static str) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        let (ring, angle) = grid.ring_angle(i);
        return Err(LakeError::NonFinite { what, ring, angle });
    }
    Ok(())
}
