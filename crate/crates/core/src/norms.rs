//! Weighted Lebesgue norms and boundary integrals on the shared quadrature.

use crate::bathymetry::Bathymetry;
use crate::error::{LakeError, Result};
use crate::grid::{check_finite, ScalarField};

/// `(int b^{s q} |f|^q dA)^{1/q}`; `q = inf` gives the max norm over the
/// quadrature support.
pub fn weighted_norm(f: &ScalarField, bath: &Bathymetry, q: f64, s: f64) -> Result<f64> {
    let grid = bath.grid();
    f.check(grid, "weighted_norm input")?;
    if !(q >= 1.0) {
        return Err(LakeError::InvalidParameter {
            name: "q",
            reason: format!("q must be >= 1 (got {q})"),
        });
    }
    if !(s >= 0.0) {
        return Err(LakeError::InvalidParameter {
            name: "s",
            reason: format!("s must be >= 0 (got {s})"),
        });
    }
    let w = grid.quad_weights();
    if q.is_infinite() {
        return Ok(f
            .values
            .iter()
            .zip(w)
            .filter(|(_, w)| **w > 0.0)
            .fold(0.0, |m, (v, _)| m.max(v.abs())));
    }
    let b = &bath.b().values;
    let weighted: Vec<f64> = f
        .values
        .iter()
        .zip(b)
        .map(|(v, bv)| if s == 0.0 { v.abs() } else { bv.powf(s) * v.abs() })
        .collect();
    Ok(lq_norm(&weighted, w, q))
}

/// `(sum w |v|^q)^{1/q}`, scaled by the maximum to keep large `q` finite.
pub fn lq_norm(values: &[f64], weights: &[f64], q: f64) -> f64 {
    let vmax = values
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .fold(0.0f64, |m, (v, _)| m.max(v.abs()));
    if vmax == 0.0 {
        return 0.0;
    }
    let sum: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v.abs() / vmax).powf(q))
        .sum();
    vmax * sum.powf(1.0 / q)
}

/// Arclength integral of boundary samples, optionally weighted by `b_eps`.
pub fn boundary_integral(f: &[f64], bath: &Bathymetry, depth_weighted: bool) -> Result<f64> {
    let grid = bath.grid();
    if f.len() != grid.n_theta() {
        return Err(LakeError::ShapeMismatch {
            expected: grid.n_theta(),
            actual: f.len(),
        });
    }
    check_finite(grid, f, "boundary samples")?;
    let ring = grid.boundary_ring();
    let depth = &bath.b_eps().values[ring];
    Ok(f.iter()
        .zip(grid.boundary_weights())
        .zip(depth)
        .map(|((v, w), d)| if depth_weighted { v * w * d } else { v * w })
        .sum())
}
