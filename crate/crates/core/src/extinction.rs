//! Probabilities `Mⁿ(x) = P(N^x_∞ = n)` of a finite limiting population in
//! `d >= 3`, and their comparison with Monte Carlo.
//!
//! Two systems are solved. `Uncorrected` solves
//! `½ΔM¹ = v` with `M¹(∞) = 1` and `½ΔMⁿ = v Σ_{k<n} MᵏM^{n-k}` with
//! `Mⁿ(∞) = 0`. `FeynmanKac` is defined for `n = 1` only and solves
//! `½ΔM¹ = vM¹`, the equation of `E exp(-∫v(X_s)ds)`, the probability that
//! the first particle never splits. In both cases the far field is closed by
//! the harmonic decay `w'(R) = -(d-2)w(R)/R` of `w = 1 - M¹` (resp. `Mⁿ`).

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisOptions, Status, TheoremReport};
use crate::error::{Error, Result};
use crate::grid::{unit_sphere_area, Geometry, Grid};
use crate::mc_engine::{replica_rng, EnsembleStats, Survival};
use crate::rate_field::{norm, RateField};
use crate::stats::{mean, std_error};
use crate::tridiag::{ShiftedFactor, SymTridiag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Uncorrected,
    FeynmanKac,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Uncorrected => "uncorrected",
            Variant::FeynmanKac => "feynman_kac",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtinctionTable {
    pub variant: Variant,
    pub nmax: usize,
    pub grid: Grid,
    /// `values[n - 1]` holds `Mⁿ` at the radial nodes.
    #[serde(skip)]
    pub values: Vec<Vec<f64>>,
}

impl ExtinctionTable {
    /// `Mⁿ` at a point, by linear interpolation in the radius. Beyond the
    /// grid the harmonic far-field law is used.
    pub fn value_at(&self, n: usize, x: &[f64]) -> Result<f64> {
        if n == 0 || n > self.nmax {
            return Err(Error::MomentOutOfRange { n, nmax: self.nmax });
        }
        let v = &self.values[n - 1];
        let r = norm(x);
        let g = &self.grid;
        let last = g.len() - 1;
        let far = |y: f64| y * (g.coords()[last] / r).powi(g.dim() as i32 - 2);
        if r >= g.coords()[last] {
            return Ok(if n == 1 { 1.0 - far(1.0 - v[last]) } else { far(v[last]) });
        }
        let u = r / g.spacing();
        let k = u.floor() as usize;
        let t = u - k as f64;
        Ok(v[k] + t * (v[k + 1] - v[k]))
    }
}

/// Weighted-symmetric form of `½Δ` on the radial nodes `0..n-1`, with the
/// ghost node at `R` tied to the last unknown by exact harmonic decay.
fn closed_laplacian(grid: &Grid) -> (SymTridiag, Vec<f64>) {
    let d = grid.dim();
    let h = grid.spacing();
    let n = grid.len();
    let s = unit_sphere_area(d);
    let w = grid.weights();
    let face: Vec<f64> = grid
        .coords()
        .iter()
        .map(|&r| 0.5 * s * (r + 0.5 * h).powi(d as i32 - 1) / h)
        .collect();
    let ratio = ((n - 1) as f64 / n as f64).powi(d as i32 - 2);
    let sqrt_w: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let diag = (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { face[i - 1] };
            let right = if i + 1 == n { face[i] * (1.0 - ratio) } else { face[i] };
            -(left + right) / w[i]
        })
        .collect();
    let off = (0..n - 1).map(|i| face[i] / (sqrt_w[i] * sqrt_w[i + 1])).collect();
    (SymTridiag::new(diag, off), sqrt_w)
}

/// Solves `(V - ½Δ) u = rhs` (`V = diag(shift)`), where the operator is a
/// symmetric positive-definite M-matrix.
fn solve_elliptic(lap: &SymTridiag, sqrt_w: &[f64], shift: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    // factor 0·I - (B - V) = V - B
    let t = SymTridiag::new(
        lap.diag.iter().zip(shift).map(|(b, v)| b - v).collect(),
        lap.off.clone(),
    );
    let f = ShiftedFactor::new(&t, 0.0)
        .ok_or_else(|| Error::Invalid("elliptic operator is not positive definite".into()))?;
    let mut z: Vec<f64> = rhs.iter().zip(sqrt_w).map(|(g, s)| g * s).collect();
    f.solve_in_place(&mut z);
    Ok(z.iter().zip(sqrt_w).map(|(a, s)| a / s).collect())
}

pub fn solve_m(field: &RateField, grid: &Grid, nmax: usize, variant: Variant) -> Result<ExtinctionTable> {
    let d = field.dim();
    if d < 3 {
        return Err(Error::DimensionTooLow(d));
    }
    if grid.dim() != d || grid.geometry() != Geometry::Radial {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: grid.dim(),
        });
    }
    if grid.extent() <= field.support_radius() {
        return Err(Error::GridTooSmall {
            extent: grid.extent(),
            support: field.support_radius(),
        });
    }
    if nmax == 0 {
        return Err(Error::MomentOutOfRange { n: 0, nmax });
    }
    let (lap, sqrt_w) = closed_laplacian(grid);
    let h = grid.spacing();
    let v: Vec<f64> = grid.coords().iter().map(|&r| field.cell_rate(r, h)).collect();
    let zero = vec![0.0; v.len()];
    let nmax = match variant {
        Variant::Uncorrected => nmax,
        Variant::FeynmanKac => 1,
    };
    let mut values = Vec::with_capacity(nmax);
    // w = 1 - M¹: uncorrected -½Δw = v; Feynman–Kac (v - ½Δ)w = v
    let shift = if variant == Variant::FeynmanKac { &v } else { &zero };
    let w = solve_elliptic(&lap, &sqrt_w, shift, &v)?;
    values.push(w.iter().map(|x| 1.0 - x).collect::<Vec<f64>>());
    for n in 2..=nmax {
        // ½ΔMⁿ = S  ⇔  -½ΔMⁿ = -S
        let src: Vec<f64> = (0..v.len())
            .map(|i| -v[i] * (1..n).map(|k| values[k - 1][i] * values[n - k - 1][i]).sum::<f64>())
            .collect();
        values.push(solve_elliptic(&lap, &sqrt_w, &zero, &src)?);
    }
    Ok(ExtinctionTable {
        variant,
        nmax,
        grid: grid.clone(),
        values,
    })
}

/// Estimates `E exp(-∫_0^∞ v(X_s) ds)` for one Brownian particle from `x0`,
/// with weights accumulated by the trapezoid rule on steps of length `dt`.
/// Beyond radius `a + margin` the particle either escapes for good, with
/// probability `1 - (s/r)^{d-2}` (`s = a + margin/2`), or is moved to radius
/// `s`; the rate is radial, so the direction does not matter. Returns the
/// mean and its standard error.
pub fn feynman_kac_mc(field: &RateField, x0: &[f64], samples: usize, dt: f64, seed: u64) -> Result<(f64, f64)> {
    let d = field.dim();
    if d < 3 {
        return Err(Error::DimensionTooLow(d));
    }
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x0.len(),
        });
    }
    let a = field.support_radius();
    let margin = a.max(1.0);
    let outer = a + margin;
    let inner = a + 0.5 * margin;
    let sd = dt.sqrt();
    let weights: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = replica_rng(seed, k as u64);
            let mut x = x0.to_vec();
            let mut log_w: f64 = 0.0;
            let mut v_prev = field.eval_radius(norm(&x));
            loop {
                let r = norm(&x);
                if r > outer {
                    let back = (inner / r).powi(d as i32 - 2);
                    if rng.random::<f64>() >= back {
                        return (-log_w).exp();
                    }
                    for c in x.iter_mut() {
                        *c *= inner / r;
                    }
                    v_prev = field.eval_radius(inner);
                    continue;
                }
                for c in x.iter_mut() {
                    *c += sd * rng.sample::<f64, _>(StandardNormal);
                }
                let v_next = field.eval_radius(norm(&x));
                log_w += 0.5 * dt * (v_prev + v_next);
                v_prev = v_next;
                if log_w > 40.0 {
                    return 0.0;
                }
            }
        })
        .collect();
    Ok((mean(&weights), std_error(&weights)))
}

/// Compares `Mⁿ(x₀)` from each table with the fraction of replicas classified
/// finite with exactly `n` particles at the end. The report passes when the
/// Feynman–Kac table (if it covers `n`) is consistent; otherwise when the
/// uncorrected table is. Per-variant predictions and verdicts go to `details`.
pub fn compare_m_to_mc(
    tables: &[ExtinctionTable],
    stats: &EnsembleStats,
    n: usize,
    opts: &AnalysisOptions,
) -> Result<TheoremReport> {
    let ind: Vec<f64> = stats
        .replicas
        .iter()
        .map(|r| {
            f64::from(u8::from(
                r.survival == Survival::Finite && r.final_count == Some(n as u64),
            ))
        })
        .collect();
    let est = mean(&ind);
    let se = std_error(&ind).max(1e-300);
    let mut details = std::collections::BTreeMap::new();
    let mut verdict: Option<(Variant, f64, bool)> = None;
    for t in tables {
        if n > t.nmax {
            continue;
        }
        let pred = t.value_at(n, &stats.config.x0)?;
        let ok = (est - pred).abs() <= opts.tolerance.max(opts.z * se);
        details.insert(format!("{}_predicted", t.variant.name()), pred);
        details.insert(format!("{}_consistent", t.variant.name()), f64::from(u8::from(ok)));
        let better = match verdict {
            None => true,
            Some((v, _, _)) => v == Variant::Uncorrected && t.variant == Variant::FeynmanKac,
        };
        if better {
            verdict = Some((t.variant, pred, ok));
        }
    }
    let (variant, pred, ok) = verdict.ok_or(Error::MomentOutOfRange { n, nmax: 0 })?;
    let consistent: Vec<&str> = tables
        .iter()
        .filter(|t| details.get(&format!("{}_consistent", t.variant.name())) == Some(&1.0))
        .map(|t| t.variant.name())
        .collect();
    let note = if consistent.is_empty() {
        "no variant consistent".to_string()
    } else {
        format!("consistent: {}", consistent.join(", "))
    };
    Ok(TheoremReport {
        id: format!("extinction_{n}"),
        theorem: "Finite limit probabilities".into(),
        statistic: format!("fraction finite with {n} particle(s) vs M^{n}(x0) [{}]", variant.name()),
        predicted: pred,
        estimate: est,
        std_error: se,
        tolerance: opts.tolerance,
        z: opts.z,
        status: if ok { Status::Pass } else { Status::Fail },
        replicas: stats.replicas.len(),
        horizon: stats.config.t_end,
        details,
        note,
    })
}
