//! Uniform 1-D mesh, the zero-flux Laplacian and piecewise-constant profiles.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialConfig {
    pub a: f64,
    pub b: f64,
    pub node_count: usize,
    pub diffusion: f64,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        SpatialConfig {
            a: 0.0,
            b: 100.0,
            node_count: 101,
            diffusion: 1.0,
        }
    }
}

impl SpatialConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.b > self.a) {
            return Err(Error::Config(format!(
                "domain must satisfy a < b (got a={}, b={})",
                self.a, self.b
            )));
        }
        if self.node_count < 3 {
            return Err(Error::Config(format!(
                "node_count must be at least 3 (got {})",
                self.node_count
            )));
        }
        if !(self.diffusion >= 0.0 && self.diffusion.is_finite()) {
            return Err(Error::Config(format!(
                "diffusion must be nonnegative (got {})",
                self.diffusion
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.node_count - 1) as f64
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Index of the node closest to `x`, or `None` when `x` is outside `[a, b]`.
    pub fn nearest_node(&self, x: f64) -> Option<usize> {
        if !(x >= self.a && x <= self.b) {
            return None;
        }
        let idx = ((x - self.a) / self.spacing()).round() as usize;
        Some(idx.min(self.node_count - 1))
    }
}

/// One value per grid node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(pub Vec<f64>);

impl Field {
    pub fn constant(len: usize, value: f64) -> Self {
        Field(vec![value; len])
    }

    pub fn zeros(len: usize) -> Self {
        Field::constant(len, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| *x == 0.0)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Deref for Field {
    type Target = Vec<f64>;
    fn deref(&self) -> &Vec<f64> {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

/// Node positions `a + i·spacing`; both endpoints are hit exactly.
pub fn build_grid(cfg: &SpatialConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = cfg.node_count;
    let h = cfg.spacing();
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                cfg.b
            } else {
                cfg.a + i as f64 * h
            }
        })
        .collect())
}

/// Second difference with mirror ghost nodes (`u[-1] = u[1]`, `u[n] = u[n-2]`).
pub fn laplacian_neumann(u: &[f64], spacing: f64) -> Result<Field> {
    let mut out = vec![0.0; u.len()];
    laplacian_neumann_into(u, spacing, &mut out)?;
    Ok(Field(out))
}

/// Writes the Neumann Laplacian of `u` into `out`.
pub fn laplacian_neumann_into(u: &[f64], spacing: f64, out: &mut [f64]) -> Result<()> {
    let n = u.len();
    if n < 3 {
        return Err(Error::Domain(format!(
            "Laplacian needs at least 3 nodes (got {n})"
        )));
    }
    if !(spacing > 0.0) {
        return Err(Error::Domain(format!("spacing must be positive (got {spacing})")));
    }
    if out.len() != n {
        return Err(Error::Domain("output length differs from input".into()));
    }
    let inv_h2 = 1.0 / (spacing * spacing);
    // (left + right) is commutative in IEEE arithmetic, so mirrored fields
    // produce mirrored results bit for bit.
    out[0] = 2.0 * (u[1] - u[0]) * inv_h2;
    for i in 1..n - 1 {
        out[i] = ((u[i - 1] + u[i + 1]) - 2.0 * u[i]) * inv_h2;
    }
    out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * inv_h2;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Two-level step: `high_value` on a fraction of the domain touching one
/// end, `low_value` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepProfile {
    pub high_value: f64,
    pub low_value: f64,
    pub boundary_fraction: f64,
    pub high_side: Side,
    /// Width of an optional logistic smoothing of the jump. Zero samples the
    /// sharp step.
    pub smoothing_width: f64,
}

impl StepProfile {
    pub fn new(high_value: f64, low_value: f64, boundary_fraction: f64, high_side: Side) -> Self {
        StepProfile {
            high_value,
            low_value,
            boundary_fraction,
            high_side,
            smoothing_width: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.boundary_fraction) {
            return Err(Error::Config(format!(
                "step boundary fraction must lie in [0, 1] (got {})",
                self.boundary_fraction
            )));
        }
        if !(self.smoothing_width >= 0.0) {
            return Err(Error::Config("smoothing width must be nonnegative".into()));
        }
        if !(self.high_value.is_finite() && self.low_value.is_finite()) {
            return Err(Error::Config("step amplitudes must be finite".into()));
        }
        Ok(())
    }
}

/// Samples a step profile at the given node positions.
///
/// Left steps are high where `x < a + fraction·(b-a)`, right steps where
/// `x >= b - fraction·(b-a)`. A node sitting exactly on a left jump gets the
/// low value.
pub fn sample_step_profile(p: &StepProfile, grid: &[f64]) -> Field {
    let (Some(&a), Some(&b)) = (grid.first(), grid.last()) else {
        return Field::default();
    };
    let len = b - a;
    let jump = match p.high_side {
        Side::Left => a + p.boundary_fraction * len,
        Side::Right => b - p.boundary_fraction * len,
    };
    let values = grid
        .iter()
        .map(|&x| {
            if p.smoothing_width > 0.0 && p.boundary_fraction > 0.0 {
                let signed = match p.high_side {
                    Side::Left => jump - x,
                    Side::Right => x - jump,
                };
                let w = 1.0 / (1.0 + (-signed / p.smoothing_width).exp());
                p.low_value + (p.high_value - p.low_value) * w
            } else {
                let high = match p.high_side {
                    Side::Left => x < jump,
                    Side::Right => p.boundary_fraction > 0.0 && x >= jump,
                };
                if high {
                    p.high_value
                } else {
                    p.low_value
                }
            }
        })
        .collect();
    Field(values)
}
