//! Initial vorticity library.

use serde::{Deserialize, Serialize};

use crate::error::{LakeError, Result};
use crate::grid::{Grid, ScalarField};

/// Initial potential vorticity, selected by `kind` in the config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `A (1 - r^2)`: radial, hence a steady state of inviscid transport.
    Radial {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Off-centre Gaussian `A exp(-|x - c|^2 / w^2)`.
    Blob {
        #[serde(default = "blob_amplitude")]
        amplitude: f64,
        #[serde(default = "blob_centre")]
        centre: [f64; 2],
        #[serde(default = "blob_width")]
        width: f64,
    },
    /// Counter-rotating Gaussian pair straddling `centre`, separated along y.
    Dipole {
        #[serde(default = "blob_amplitude")]
        amplitude: f64,
        #[serde(default = "dipole_centre")]
        centre: [f64; 2],
        #[serde(default = "dipole_separation")]
        separation: f64,
        #[serde(default = "blob_width")]
        width: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn blob_amplitude() -> f64 {
    20.0
}
fn blob_centre() -> [f64; 2] {
    [0.3, 0.0]
}
fn blob_width() -> f64 {
    0.2
}
fn dipole_centre() -> [f64; 2] {
    [0.0, 0.0]
}
fn dipole_separation() -> f64 {
    0.3
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Blob {
            amplitude: blob_amplitude(),
            centre: blob_centre(),
            width: blob_width(),
        }
    }
}

fn gaussian(x: f64, y: f64, c: [f64; 2], w: f64) -> f64 {
    (-((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (w * w)).exp()
}

impl InitialData {
    pub fn name(&self) -> &'static str {
        match self {
            InitialData::Radial { .. } => "radial",
            InitialData::Blob { .. } => "blob",
            InitialData::Dipole { .. } => "dipole",
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, InitialData::Radial { .. })
    }

    /// Parameter violations, one message per offending key.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = |v: f64| v.is_finite();
        match *self {
            InitialData::Radial { amplitude } => {
                if !finite(amplitude) {
                    out.push("initial.amplitude must be finite".into());
                }
            }
            InitialData::Blob {
                amplitude,
                centre,
                width,
            }
            | InitialData::Dipole {
                amplitude,
                centre,
                width,
                ..
            } => {
                if !finite(amplitude) {
                    out.push("initial.amplitude must be finite".into());
                }
                if !(width > 0.0) || !finite(width) {
                    out.push(format!("initial.width must be > 0 (got {width})"));
                }
                if !(centre[0].hypot(centre[1]) < 1.0) {
                    out.push("initial.centre must lie inside the unit disk".into());
                }
            }
        }
        if let InitialData::Dipole { separation, .. } = *self {
            if !(separation > 0.0) || !separation.is_finite() {
                out.push(format!("initial.separation must be > 0 (got {separation})"));
            }
        }
        out
    }

    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        match *self {
            InitialData::Radial { amplitude } => amplitude * (1.0 - x * x - y * y),
            InitialData::Blob {
                amplitude,
                centre,
                width,
            } => amplitude * gaussian(x, y, centre, width),
            InitialData::Dipole {
                amplitude,
                centre,
                separation,
                width,
            } => {
                let h = 0.5 * separation;
                let up = [centre[0], centre[1] + h];
                let down = [centre[0], centre[1] - h];
                amplitude * (gaussian(x, y, up, width) - gaussian(x, y, down, width))
            }
        }
    }

    /// Samples the field, with the wall ring set to zero.
    pub fn sample(&self, grid: &Grid) -> Result<ScalarField> {
        let v = self.violations();
        if !v.is_empty() {
            return Err(LakeError::Config(v));
        }
        let mut f = ScalarField::from_fn(grid, |x, y| self.evaluate(x, y));
        for w in &mut f.values[grid.boundary_ring()] {
            *w = 0.0;
        }
        Ok(f)
    }
}
