//! Line and radial grids with their quadrature weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// `[-R, R]` with Dirichlet ends; unknowns at the `n - 1` interior nodes.
    FullLine,
    /// `[0, R]` in the radius; unknowns at `r_i = i h`, `i = 0..n`, reflecting
    /// at the origin and Dirichlet at `R`.
    Radial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    geometry: Geometry,
    extent: f64,
    intervals: usize,
    h: f64,
    #[serde(skip)]
    coords: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
}

/// Area of the unit sphere in `R^d` (`d = 1` gives 2, the two endpoints).
pub fn unit_sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * unit_sphere_area(d - 2) / (d - 2) as f64,
    }
}

impl Grid {
    /// Full line for `dim == 1`, radial otherwise.
    pub fn new(dim: usize, extent: f64, intervals: usize) -> Result<Self> {
        if dim == 1 {
            Self::full_line(extent, intervals)
        } else {
            Self::radial(dim, extent, intervals)
        }
    }

    pub fn full_line(extent: f64, intervals: usize) -> Result<Self> {
        check(extent, intervals)?;
        let h = 2.0 * extent / intervals as f64;
        let coords: Vec<f64> = (1..intervals).map(|i| -extent + i as f64 * h).collect();
        let weights = vec![h; coords.len()];
        Ok(Grid {
            dim: 1,
            geometry: Geometry::FullLine,
            extent,
            intervals,
            h,
            coords,
            weights,
        })
    }

    pub fn radial(dim: usize, extent: f64, intervals: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Invalid("radial grids need dim >= 2".into()));
        }
        check(extent, intervals)?;
        let h = extent / intervals as f64;
        let coords: Vec<f64> = (0..intervals).map(|i| i as f64 * h).collect();
        let s = unit_sphere_area(dim) / dim as f64;
        let weights = coords
            .iter()
            .map(|&r| {
                let outer = r + 0.5 * h;
                let inner = (r - 0.5 * h).max(0.0);
                s * (outer.powi(dim as i32) - inner.powi(dim as i32))
            })
            .collect();
        Ok(Grid {
            dim,
            geometry: Geometry::Radial,
            extent,
            intervals,
            h,
            coords,
            weights,
        })
    }

    /// Rebuilds coordinate and weight tables (they are not serialized).
    pub fn rebuild(&self) -> Result<Self> {
        match self.geometry {
            Geometry::FullLine => Self::full_line(self.extent, self.intervals),
            Geometry::Radial => Self::radial(self.dim, self.extent, self.intervals),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Signed position for the full line, radius for radial grids.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `<f, g>_w = sum_i w_i f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// `sum_i w_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Piecewise-linear interpolation of nodal values, zero at the Dirichlet
    /// edge and beyond. `s` is the signed coordinate (full line) or radius.
    pub fn interpolate(&self, values: &[f64], s: f64) -> f64 {
        let (k, frac) = match self.cell(s) {
            Some(c) => c,
            None => return 0.0,
        };
        let a = self.node_value(values, k);
        let b = self.node_value(values, k + 1);
        a + frac * (b - a)
    }

    /// Cell index `k` (between extended nodes `k` and `k + 1`) and the
    /// fractional offset inside it; `None` outside the grid.
    pub(crate) fn cell(&self, s: f64) -> Option<(usize, f64)> {
        let u = match self.geometry {
            Geometry::FullLine => (s + self.extent) / self.h,
            Geometry::Radial => s.abs() / self.h,
        };
        if !(u >= 0.0) || u >= self.intervals as f64 {
            return None;
        }
        let k = u.floor() as usize;
        Some((k, u - k as f64))
    }

    /// Value at extended node `k`: for the full line node 0 is `-R` and node
    /// `n` is `R`; for radial grids node `n` is `R`.
    pub(crate) fn node_value(&self, values: &[f64], k: usize) -> f64 {
        match self.geometry {
            Geometry::FullLine => {
                if k == 0 || k >= self.intervals {
                    0.0
                } else {
                    values[k - 1]
                }
            }
            Geometry::Radial => {
                if k >= self.intervals {
                    0.0
                } else {
                    values[k]
                }
            }
        }
    }
}

fn check(extent: f64, intervals: usize) -> Result<()> {
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::Invalid(format!("grid extent must be positive, got {extent}")));
    }
    if intervals < 4 {
        return Err(Error::Invalid(format!(
            "grid needs at least 4 intervals, got {intervals}"
        )));
    }
    Ok(())
}
