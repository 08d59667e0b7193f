//! Degenerate bathymetry `b = (1 - r^2)^a` on the unit disk and its
//! regularisation `b_eps = b + eps`. Every derivative is closed form.

use std::sync::Arc;

use crate::error::{LakeError, Result};
use crate::grid::{Grid, ScalarField, VectorField};

/// Radial depth profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `b = phi^a` with `phi = 1 - r^2`.
    Degenerate { a: f64 },
    /// Constant depth (test fixture; reduces the model to Navier-Stokes).
    Constant { depth: f64 },
}

impl Profile {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Profile::Degenerate { a } => (1.0 - r * r).max(0.0).powf(a),
            Profile::Constant { depth } => depth,
        }
    }

    /// `db/dr`.
    pub fn d1(&self, r: f64) -> f64 {
        r * self.d1_over_r(r)
    }

    /// `(db/dr) / r`, finite at the pole.
    pub fn d1_over_r(&self, r: f64) -> f64 {
        match *self {
            Profile::Degenerate { a } => -2.0 * a * (1.0 - r * r).max(0.0).powf(a - 1.0),
            Profile::Constant { .. } => 0.0,
        }
    }

    /// `d^2 b / dr^2`.
    pub fn d2(&self, r: f64) -> f64 {
        match *self {
            Profile::Degenerate { a } => {
                let phi = (1.0 - r * r).max(0.0);
                -2.0 * a * phi.powf(a - 1.0) + 4.0 * a * (a - 1.0) * r * r * phi.powf(a - 2.0)
            }
            Profile::Constant { .. } => 0.0,
        }
    }

    pub fn laplacian(&self, r: f64) -> f64 {
        self.d2(r) + self.d1_over_r(r)
    }
}

#[derive(Clone, Debug)]
pub struct Bathymetry {
    grid: Arc<Grid>,
    profile: Profile,
    epsilon: f64,
    b: ScalarField,
    b_eps: ScalarField,
    grad_b: VectorField,
    lap_b: ScalarField,
    grad_ln_b_eps: VectorField,
    kappa: Vec<f64>,
}

/// Samples `b = (1 - |x|^2)^a`, its regularisation and derived fields.
pub fn eval_bathymetry(grid: &Arc<Grid>, a: f64, epsilon: f64) -> Result<Bathymetry> {
    if !(a >= 2.0) || !a.is_finite() {
        return Err(LakeError::InvalidParameter {
            name: "a",
            reason: format!("a must be >= 2 (got {a})"),
        });
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(LakeError::InvalidParameter {
            name: "epsilon",
            reason: format!("epsilon must be >= 0 (got {epsilon})"),
        });
    }
    Ok(Bathymetry::from_profile(grid, Profile::Degenerate { a }, epsilon))
}

impl Bathymetry {
    /// Constant-depth fixture with `b = b_eps = depth`.
    pub fn constant(grid: &Arc<Grid>, depth: f64) -> Self {
        Bathymetry::from_profile(grid, Profile::Constant { depth }, 0.0)
    }

    pub fn from_profile(grid: &Arc<Grid>, profile: Profile, epsilon: f64) -> Self {
        let n = grid.n_nodes();
        let mut b = vec![0.0; n];
        let mut b_eps = vec![0.0; n];
        let mut gbx = vec![0.0; n];
        let mut gby = vec![0.0; n];
        let mut lap = vec![0.0; n];
        let mut glx = vec![0.0; n];
        let mut gly = vec![0.0; n];
        for i in 0..n {
            let (j, k) = grid.ring_angle(i);
            let r = grid.radius(j);
            let (c, s) = (grid.cos_theta(k), grid.sin_theta(k));
            let bv = profile.value(r);
            let be = bv + epsilon;
            let db = profile.d1(r);
            b[i] = bv;
            b_eps[i] = be;
            gbx[i] = db * c;
            gby[i] = db * s;
            lap[i] = profile.laplacian(r);
            glx[i] = db * c / be;
            gly[i] = db * s / be;
        }
        Bathymetry {
            grid: grid.clone(),
            profile,
            epsilon,
            b: ScalarField { values: b },
            b_eps: ScalarField { values: b_eps },
            grad_b: VectorField { x: gbx, y: gby },
            lap_b: ScalarField { values: lap },
            grad_ln_b_eps: VectorField { x: glx, y: gly },
            kappa: vec![1.0; grid.n_theta()],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn profile(&self) -> Profile {
        self.profile
    }
    pub fn a(&self) -> Option<f64> {
        match self.profile {
            Profile::Degenerate { a } => Some(a),
            Profile::Constant { .. } => None,
        }
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn b(&self) -> &ScalarField {
        &self.b
    }
    pub fn b_eps(&self) -> &ScalarField {
        &self.b_eps
    }
    pub fn grad_b(&self) -> &VectorField {
        &self.grad_b
    }
    pub fn lap_b(&self) -> &ScalarField {
        &self.lap_b
    }
    /// Boundary curvature samples (unit circle: identically one).
    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// `b_eps` at an arbitrary radius.
    pub fn b_eps_at(&self, r: f64) -> f64 {
        self.profile.value(r) + self.epsilon
    }

    /// Smallest regularised depth on the closed disk.
    pub fn min_b_eps(&self) -> f64 {
        self.b_eps.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `grad ln b_eps`; only defined when `b_eps` stays positive.
    pub fn grad_ln_b_eps(&self) -> Result<&VectorField> {
        self.require_log()?;
        Ok(&self.grad_ln_b_eps)
    }

    pub fn require_log(&self) -> Result<()> {
        if self.min_b_eps() > 0.0
            && self
                .grad_ln_b_eps
                .x
                .iter()
                .chain(&self.grad_ln_b_eps.y)
                .all(|v| v.is_finite())
        {
            Ok(())
        } else {
            Err(LakeError::DegenerateLog)
        }
    }

    /// Radial derivatives `(l', l'/r, l'')` of `l = ln b_eps` at radius `r`.
    pub fn ln_b_eps_derivs(&self, r: f64) -> (f64, f64, f64) {
        let be = self.b_eps_at(r);
        let d1 = self.profile.d1(r) / be;
        let d1r = self.profile.d1_over_r(r) / be;
        let d2 = self.profile.d2(r) / be - d1 * d1;
        (d1, d1r, d2)
    }

    /// Largest `|grad b|^2 / b` over nodes where `b > 0`.
    pub fn max_gradient_ratio(&self) -> f64 {
        (0..self.grid.n_nodes())
            .filter(|&i| self.b.values[i] > 0.0)
            .map(|i| {
                let g2 = self.grad_b.x[i].powi(2) + self.grad_b.y[i].powi(2);
                g2 / self.b.values[i]
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn grid() -> Arc<Grid> {
        Arc::new(build_grid(16, 32).unwrap())
    }

    #[test]
    fn profile_at_pole_and_mid_radius() {
        let p = Profile::Degenerate { a: 2.0 };
        assert_eq!(p.value(0.0), 1.0);
        assert_eq!(p.d1(0.0), 0.0);
        assert!((p.value(0.5) - 0.5625).abs() < 1e-15);
        // |b'| = 2 a r phi^{a-1} = 2*2*0.5*0.75
        assert!((p.d1(0.5).abs() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        for a in [2.0, 2.5, 3.0, 4.0] {
            let p = Profile::Degenerate { a };
            for r in [0.1, 0.4, 0.7, 0.9] {
                let h = 1e-5;
                let fd1 = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
                let fd2 = (p.value(r + h) - 2.0 * p.value(r) + p.value(r - h)) / (h * h);
                assert!((fd1 - p.d1(r)).abs() < 1e-8);
                assert!((fd2 - p.d2(r)).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn degenerate_on_the_wall() {
        let g = grid();
        let bath = eval_bathymetry(&g, 2.0, 0.0).unwrap();
        for i in g.boundary_ring() {
            assert_eq!(bath.b().values[i], 0.0);
            assert_eq!(bath.b_eps().values[i], 0.0);
        }
        assert!(bath.b().values.iter().all(|v| *v >= 0.0));
        assert_eq!(bath.grad_ln_b_eps().unwrap_err(), LakeError::DegenerateLog);
    }

    #[test]
    fn regularised_depth_bounded_below() {
        let g = grid();
        let bath = eval_bathymetry(&g, 3.0, 0.05).unwrap();
        assert!(bath.min_b_eps() >= 0.05);
        assert!(bath.grad_ln_b_eps().is_ok());
        assert!(bath.kappa().iter().all(|k| *k >= 0.0));
    }

    #[test]
    fn gradient_bound_holds() {
        let g = Arc::new(build_grid(64, 64).unwrap());
        for a in [2.0, 3.0, 4.0] {
            let bath = eval_bathymetry(&g, a, 0.0).unwrap();
            assert!(bath.max_gradient_ratio() <= 4.0 * a * a + 1e-9);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = grid();
        assert!(eval_bathymetry(&g, 1.5, 0.1).is_err());
        assert!(eval_bathymetry(&g, 2.0, -1e-3).is_err());
        assert!(eval_bathymetry(&g, f64::NAN, 0.1).is_err());
    }
}
