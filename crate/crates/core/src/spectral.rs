//! Discretization of `L = ½Δ + v`, its principal eigenpair, resolvents, and
//! a Crank–Nicolson propagator for `∂ρ/∂t = Lρ`.
//!
//! The operator is assembled in flux form, so it is symmetric with respect
//! to the weighted inner product `<f, g>_w = Σ w_i f_i g_i`. Internally all
//! work happens on the similar symmetric matrix `B = W^{1/2} A W^{-1/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{unit_sphere_area, Geometry, Grid};
use crate::rate_field::RateField;
use crate::region::Region;
use crate::tridiag::{solve_shifted_pivoting, ShiftedFactor, SymTridiag};

/// Weighted-symmetric tridiagonal discretization of `½Δ + v`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    field: RateField,
    grid: Grid,
    rate: Vec<f64>,
    sym: SymTridiag,
    sqrt_w: Vec<f64>,
}

pub fn discretize(field: &RateField, grid: &Grid) -> Result<OperatorMatrix> {
    if field.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: grid.dim(),
        });
    }
    if grid.extent() <= field.support_radius() {
        return Err(Error::GridTooSmall {
            extent: grid.extent(),
            support: field.support_radius(),
        });
    }
    let h = grid.spacing();
    let n = grid.len();
    let rate: Vec<f64> = grid.coords().iter().map(|&s| field.cell_rate(s.abs(), h)).collect();
    let w = grid.weights();
    let sqrt_w: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let (diag, off) = match grid.geometry() {
        Geometry::FullLine => {
            let c = 0.5 / (h * h);
            (rate.iter().map(|v| v - 2.0 * c).collect(), vec![c; n - 1])
        }
        Geometry::Radial => {
            let d = grid.dim();
            let s = unit_sphere_area(d);
            // flux coefficient through the face at r_i + h/2
            let face: Vec<f64> = grid
                .coords()
                .iter()
                .map(|&r| 0.5 * s * (r + 0.5 * h).powi(d as i32 - 1) / h)
                .collect();
            let diag = (0..n)
                .map(|i| {
                    let left = if i == 0 { 0.0 } else { face[i - 1] };
                    rate[i] - (left + face[i]) / w[i]
                })
                .collect();
            let off = (0..n - 1).map(|i| face[i] / (sqrt_w[i] * sqrt_w[i + 1])).collect();
            (diag, off)
        }
    };
    Ok(OperatorMatrix {
        field: field.clone(),
        grid: grid.clone(),
        rate,
        sym: SymTridiag::new(diag, off),
        sqrt_w,
    })
}

impl OperatorMatrix {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn field(&self) -> &RateField {
        &self.field
    }

    /// Nodal values of `v` used in the assembly.
    pub fn rate(&self) -> &[f64] {
        &self.rate
    }

    pub fn symmetric_form(&self) -> &SymTridiag {
        &self.sym
    }

    /// `A f` for a grid function `f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let z = self.symmetrize(f);
        let y = self.sym.apply(&z);
        self.unsymmetrize(&y)
    }

    /// Top eigenvalue by Sturm bisection.
    pub fn top_eigenvalue(&self) -> f64 {
        self.sym.eigenvalue_from_top(0)
    }

    fn symmetrize(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.sqrt_w).map(|(a, s)| a * s).collect()
    }

    fn unsymmetrize(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.sqrt_w).map(|(a, s)| a / s).collect()
    }
}

/// Principal eigenpair and the quantities derived from it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralData {
    /// Top eigenvalue of the assembled matrix.
    pub lambda0: f64,
    /// Richardson extrapolation of `lambda0` against the grid with twice the
    /// spacing (equal to `lambda0` when no coarse grid is available).
    pub lambda0_extrapolated: f64,
    /// Weighted sum `Σ w_i ψ_i`.
    pub mass: f64,
    /// Fitted decay rate of `log ψ` (of `log(r^{(d-1)/2} ψ)` for radial grids).
    pub tail_slope: f64,
    /// Prefactor `C` of the fitted tail `C r^{(1-d)/2} e^{tail_slope r}`.
    pub tail_prefactor: f64,
    pub tail_fitted: bool,
    pub second_eigenvalue: f64,
    /// `lambda0 - second_eigenvalue`.
    pub gap: f64,
    /// `‖Aψ - λ₀ψ‖_w`.
    pub residual: f64,
    pub iterations: usize,
    /// `ψ` at the outermost node divided by `max ψ`.
    pub boundary_ratio: f64,
    pub grid: Grid,
    #[serde(skip)]
    pub psi: Vec<f64>,
    #[serde(skip)]
    interp_mass: f64,
    #[serde(skip)]
    tail_mass: f64,
}

const MAX_ITERATIONS: usize = 200;

pub fn principal_eigenpair(matrix: &OperatorMatrix) -> Result<SpectralData> {
    let max_rate = matrix.field.max_rate();
    let threshold = 1e-6 * max_rate;
    let b = &matrix.sym;
    if max_rate == 0.0 || b.count_above(threshold) == 0 {
        return Err(Error::NoPositiveEigenvalue {
            top: b.eigenvalue_from_top(0),
            threshold,
        });
    }
    let n = b.len();
    let (_, upper) = b.gershgorin();
    let mut shift = upper + 1e-3 * upper.abs().max(1.0);
    let mut phi = vec![1.0 / (n as f64).sqrt(); n];
    let mut work = vec![0.0; n];
    let mut rho = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut stalled = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // a successful factorization certifies shift > λ₀, so the solve is
        // a positive map and φ stays positive
        let factor = match ShiftedFactor::new(b, shift) {
            Some(f) => f,
            None => return Err(Error::NonConvergence { iterations, residual }),
        };
        factor.solve_in_place(&mut phi);
        let nrm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
        phi.iter_mut().for_each(|x| *x /= nrm);
        b.apply_into(&phi, &mut work);
        rho = dot(&phi, &work);
        let res = work
            .iter()
            .zip(&phi)
            .map(|(y, x)| (y - rho * x).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = rho.abs().max(1.0);
        if res <= 1e-12 * scale {
            residual = res;
            break;
        }
        if res >= 0.5 * residual {
            stalled += 1;
            if stalled >= 4 {
                residual = residual.min(res);
                break;
            }
        } else {
            stalled = 0;
        }
        residual = res;
        // Rayleigh-quotient update, kept above λ₀ (λ₀ ≤ ρ + res/c for a
        // vector with component c along ψ)
        let candidate = rho + 2.0 * res + 1e-14 * scale;
        if candidate < shift && ShiftedFactor::new(b, candidate).is_some() {
            shift = candidate;
        }
    }
    if !(residual <= 1e-8 * rho.max(1.0)) {
        return Err(Error::NonConvergence { iterations, residual });
    }
    if rho < threshold {
        return Err(Error::NoPositiveEigenvalue { top: rho, threshold });
    }
    let lambda0 = rho;
    let psi = matrix.unsymmetrize(&phi);
    let second = if n > 1 {
        b.eigenvalue_from_top(1)
    } else {
        f64::NEG_INFINITY
    };
    let lambda0_extrapolated = extrapolate(matrix, lambda0);

    let grid = &matrix.grid;
    let mass = grid.integrate(&psi);
    let max_psi = psi.iter().cloned().fold(0.0, f64::max);
    let outer = match grid.geometry() {
        Geometry::FullLine => psi[0].max(psi[n - 1]),
        Geometry::Radial => psi[n - 1],
    };
    let (tail_slope, tail_prefactor, tail_fitted) = fit_tail(grid, &psi, matrix.field.support_radius(), lambda0);

    let mut data = SpectralData {
        lambda0,
        lambda0_extrapolated,
        mass,
        tail_slope,
        tail_prefactor,
        tail_fitted,
        second_eigenvalue: second,
        gap: lambda0 - second,
        residual,
        iterations,
        boundary_ratio: outer / max_psi,
        grid: grid.clone(),
        psi,
        interp_mass: 0.0,
        tail_mass: 0.0,
    };
    data.interp_mass = data.grid_integral_everything();
    data.tail_mass = data.tail_integral_beyond_grid();
    Ok(data)
}

fn extrapolate(matrix: &OperatorMatrix, lambda0: f64) -> f64 {
    let grid = &matrix.grid;
    let n = grid.intervals();
    if !n.is_multiple_of(2) || n < 16 {
        return lambda0;
    }
    let coarse = Grid::new(grid.dim(), grid.extent(), n / 2)
        .and_then(|g| discretize(&matrix.field, &g))
        .map(|m| m.top_eigenvalue());
    match coarse {
        Ok(lc) => (4.0 * lambda0 - lc) / 3.0,
        Err(_) => lambda0,
    }
}

/// Least-squares fit of the exponential tail over
/// `[a + 2/√(2λ₀), 0.8 R]`. Falls back to the analytic slope `-√(2λ₀)` when
/// the window holds fewer than three nodes.
fn fit_tail(grid: &Grid, psi: &[f64], support: f64, lambda0: f64) -> (f64, f64, bool) {
    let kappa = (2.0 * lambda0).sqrt();
    let lo = support + 2.0 / kappa;
    let hi = 0.8 * grid.extent();
    let half_power = 0.5 * (grid.dim() as f64 - 1.0);
    let pts: Vec<(f64, f64)> = grid
        .coords()
        .iter()
        .zip(psi)
        .filter(|(&s, &p)| s >= lo && s <= hi && p > 0.0)
        .map(|(&s, &p)| (s, p.ln() + half_power * s.ln()))
        .collect();
    if pts.len() < 3 {
        let anchor = grid
            .coords()
            .iter()
            .zip(psi)
            .filter(|(&s, _)| s >= support)
            .map(|(&s, &p)| (s, p))
            .next();
        let c = anchor.map_or(0.0, |(s, p)| p * s.powf(half_power) * (kappa * s).exp());
        return (-kappa, c, false);
    }
    let m = pts.len() as f64;
    let sx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let sy = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx = pts.iter().map(|p| (p.0 - sx).powi(2)).sum::<f64>();
    let sxy = pts.iter().map(|p| (p.0 - sx) * (p.1 - sy)).sum::<f64>();
    let slope = sxy / sxx;
    let intercept = sy - slope * sx;
    (slope, intercept.exp(), true)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `(μ - L) u = g`. Fails with `ShiftInsideSpectrum` unless `μ` lies
/// above the top eigenvalue, in which case the solve preserves `g >= 0`.
pub fn resolvent_apply(matrix: &OperatorMatrix, mu: f64, g: &[f64]) -> Result<Vec<f64>> {
    if matrix.sym.count_above(mu) > 0 {
        return Err(Error::ShiftInsideSpectrum { shift: mu });
    }
    let factor = ShiftedFactor::new(&matrix.sym, mu).ok_or(Error::ShiftInsideSpectrum { shift: mu })?;
    let mut z = matrix.symmetrize(g);
    factor.solve_in_place(&mut z);
    Ok(matrix.unsymmetrize(&z))
}

/// Crank–Nicolson integration of `∂ρ/∂t = ½Δρ + vρ` from `ρ(0) = g0` to
/// time `t`, with the step shortened so that it divides `t` evenly.
pub fn evolve_density(matrix: &OperatorMatrix, g0: &[f64], t: f64, dt: f64) -> Vec<f64> {
    assert!(t >= 0.0 && dt > 0.0, "time and step must be non-negative/positive");
    let steps = (t / dt).ceil().max(0.0) as usize;
    if steps == 0 {
        return g0.to_vec();
    }
    let dt = t / steps as f64;
    let b = &matrix.sym;
    let half = 0.5 * dt;
    let factor = ShiftedFactor::general(&b.diag, &b.off, &b.off, 1.0, -half);
    let mut z = matrix.symmetrize(g0);
    let mut rhs = vec![0.0; z.len()];
    for _ in 0..steps {
        b.apply_into(&z, &mut rhs);
        for (r, zi) in rhs.iter_mut().zip(&z) {
            *r = zi + half * *r;
        }
        z = match &factor {
            Some(f) => f.solve(&rhs),
            // dt λ₀ ≥ 2: (I - dt/2 B) is indefinite, fall back to pivoting
            None => {
                let scaled = SymTridiag::new(
                    b.diag.iter().map(|d| d * half).collect(),
                    b.off.iter().map(|o| o * half).collect(),
                );
                solve_shifted_pivoting(&scaled, 1.0, &rhs)
            }
        };
    }
    matrix.unsymmetrize(&z)
}

const GL4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_W: [f64; 4] = [
    0.347_854_845_137_453_8,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_8,
];

fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    GL4_X.iter().zip(&GL4_W).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// Area of `{|y| = r} ∩ B(c, ρ)` in `R^d` with `|c| = dist`.
fn sphere_ball_overlap(d: usize, r: f64, dist: f64, rho: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let full = unit_sphere_area(d) * r.powi(d as i32 - 1);
    if r + dist <= rho {
        return full;
    }
    if r >= dist + rho || r <= dist - rho {
        return 0.0;
    }
    let cos_t = ((r * r + dist * dist - rho * rho) / (2.0 * r * dist)).clamp(-1.0, 1.0);
    let theta = cos_t.acos();
    unit_sphere_area(d - 1) * r.powi(d as i32 - 1) * sin_power_integral(d - 2, theta)
}

/// `∫_0^θ sin^m(t) dt`.
fn sin_power_integral(m: usize, theta: f64) -> f64 {
    match m {
        0 => theta,
        1 => 1.0 - theta.cos(),
        _ => {
            let k = m as f64;
            -theta.sin().powi(m as i32 - 1) * theta.cos() / k + (k - 1.0) / k * sin_power_integral(m - 2, theta)
        }
    }
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Front speed `b = √(λ₀/2)`.
    pub fn front_speed(&self) -> f64 {
        (0.5 * self.lambda0).sqrt()
    }

    /// `ψ` at a point: grid interpolation inside, fitted tail law outside.
    pub fn psi_at(&self, x: &[f64]) -> f64 {
        let s = match self.grid.geometry() {
            Geometry::FullLine => x[0],
            Geometry::Radial => x.iter().map(|c| c * c).sum::<f64>().sqrt(),
        };
        self.psi_at_coordinate(s)
    }

    /// `ψ` at a signed coordinate (full line) or radius.
    #[inline]
    pub fn psi_at_coordinate(&self, s: f64) -> f64 {
        if s.abs() >= self.grid.extent() {
            self.tail(s.abs())
        } else {
            self.grid.interpolate(&self.psi, s)
        }
    }

    /// Fitted tail law `C r^{(1-d)/2} e^{slope r}`.
    pub fn tail(&self, r: f64) -> f64 {
        let p = 0.5 * (1.0 - self.dim() as f64);
        self.tail_prefactor * r.powf(p) * (self.tail_slope * r).exp()
    }

    /// `∫ ψ` over all space (grid interpolant plus the analytic tail).
    pub fn total_integral(&self) -> f64 {
        self.interp_mass + self.tail_mass
    }

    /// `∫_U ψ` with the analytic tail added where `U` leaves the grid.
    pub fn integral(&self, region: &Region) -> f64 {
        let r = self.grid.extent();
        if region.contains_ball(r) && !region.is_bounded() {
            return self.total_integral();
        }
        match self.grid.geometry() {
            Geometry::FullLine => match region {
                Region::Interval { lo, hi } => self.line_integral(*lo, *hi),
                Region::Ball { center, radius } => self.line_integral(center[0] - radius, center[0] + radius),
                Region::Box { lo, hi } => self.line_integral(lo[0], hi[0]),
            },
            Geometry::Radial => match region {
                Region::Ball { center, radius } => self.radial_ball_integral(center, *radius),
                Region::Box { lo, hi } => self.radial_box_integral(lo, hi),
                Region::Interval { .. } => unreachable!("validated: intervals are 1-D"),
            },
        }
    }

    /// `α(U) = ∫_U ψ / ∫ ψ`.
    pub fn alpha(&self, region: &Region) -> f64 {
        (self.integral(region) / self.total_integral()).clamp(0.0, 1.0)
    }

    /// `∫_{-R}^{x} ψ_interp` for `x ∈ [-R, R]` on the full line.
    fn line_cumulative(&self, x: f64) -> f64 {
        let g = &self.grid;
        let r = g.extent();
        let x = x.clamp(-r, r);
        let h = g.spacing();
        let (k, frac) = g.cell(x).unwrap_or((g.intervals(), 0.0));
        // whole cells 0..k
        let mut sum = 0.0;
        for j in 0..k {
            sum += 0.5 * h * (g.node_value(&self.psi, j) + g.node_value(&self.psi, j + 1));
        }
        if frac > 0.0 {
            let a = g.node_value(&self.psi, k);
            let b = g.node_value(&self.psi, k + 1);
            let dx = frac * h;
            sum += dx * (a + 0.5 * frac * (b - a));
        }
        sum
    }

    fn line_integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let r = self.grid.extent();
        let mut total = self.line_cumulative(hi) - self.line_cumulative(lo);
        let s = self.tail_slope;
        let c = self.tail_prefactor;
        // ∫_{u}^{v} C e^{s x} dx for R <= u < v
        let tail = |u: f64, v: f64| {
            if v <= u {
                0.0
            } else {
                let ev = if v.is_finite() { (s * v).exp() } else { 0.0 };
                c * (ev - (s * u).exp()) / s
            }
        };
        total += tail(lo.max(r), hi);
        total += tail((-hi).max(r), -lo);
        total
    }

    fn grid_integral_everything(&self) -> f64 {
        match self.grid.geometry() {
            Geometry::FullLine => self.line_cumulative(self.grid.extent()),
            Geometry::Radial => self.radial_ball_integral(&vec![0.0; self.dim()], self.grid.extent()),
        }
    }

    fn tail_integral_beyond_grid(&self) -> f64 {
        let r = self.grid.extent();
        match self.grid.geometry() {
            Geometry::FullLine => 2.0 * self.tail_prefactor * (self.tail_slope * r).exp() / -self.tail_slope,
            Geometry::Radial => {
                let s = unit_sphere_area(self.dim());
                let d = self.dim() as i32;
                let len = 40.0 / self.tail_slope.abs();
                let panels = 64;
                (0..panels)
                    .map(|i| {
                        let a = r + len * i as f64 / panels as f64;
                        let b = r + len * (i + 1) as f64 / panels as f64;
                        gauss_legendre(a, b, |x| self.tail(x) * s * x.powi(d - 1))
                    })
                    .sum()
            }
        }
    }

    fn radial_ball_integral(&self, center: &[f64], rho: f64) -> f64 {
        let d = self.dim();
        let dist = center.iter().map(|c| c * c).sum::<f64>().sqrt();
        let lo = (dist - rho).max(0.0);
        let hi = dist + rho;
        if hi <= lo {
            return 0.0;
        }
        let g = &self.grid;
        let r = g.extent();
        let h = g.spacing();
        let mut breaks: Vec<f64> = Vec::new();
        breaks.push(lo);
        let kink = (rho - dist).abs();
        let first = (lo / h).floor() as usize + 1;
        let mut k = first;
        while (k as f64) * h < hi.min(r) {
            breaks.push(k as f64 * h);
            k += 1;
        }
        if kink > lo && kink < hi {
            breaks.push(kink);
        }
        breaks.push(hi.min(r));
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        let psi = |x: f64| g.interpolate(&self.psi, x);
        let mut total = 0.0;
        for w in breaks.windows(2) {
            total += gauss_legendre(w[0], w[1], |x| psi(x) * sphere_ball_overlap(d, x, dist, rho));
        }
        if hi > r {
            let panels = 32;
            let start = lo.max(r);
            let len = hi - start;
            for i in 0..panels {
                let a = start + len * i as f64 / panels as f64;
                let b = start + len * (i + 1) as f64 / panels as f64;
                total += gauss_legendre(a, b, |x| self.tail(x) * sphere_ball_overlap(d, x, dist, rho));
            }
        }
        total
    }

    /// Tensor-product Gauss–Legendre over a box clipped to `[-R, R]^d`.
    fn radial_box_integral(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let d = self.dim();
        let r = self.grid.extent();
        let panels = match d {
            2 => 64,
            3 => 16,
            _ => 6,
        };
        let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(d);
        for k in 0..d {
            let a = lo[k].max(-r);
            let b = hi[k].min(r);
            if b <= a {
                return 0.0;
            }
            let mut pts = Vec::with_capacity(panels * 4);
            let len = (b - a) / panels as f64;
            for p in 0..panels {
                let c = a + (p as f64 + 0.5) * len;
                for (x, w) in GL4_X.iter().zip(&GL4_W) {
                    pts.push((c + 0.5 * len * x, 0.5 * len * w));
                }
            }
            axes.push(pts);
        }
        let mut idx = vec![0usize; d];
        let mut total = 0.0;
        loop {
            let mut r2 = 0.0;
            let mut w = 1.0;
            for k in 0..d {
                let (x, wk) = axes[k][idx[k]];
                r2 += x * x;
                w *= wk;
            }
            total += w * self.grid.interpolate(&self.psi, r2.sqrt());
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    return total;
                }
            }
        }
    }
}

/// `α(U)` for a region; see [`SpectralData::alpha`].
pub fn mass_and_alpha(spectral: &SpectralData, region: &Region) -> f64 {
    spectral.alpha(region)
}
