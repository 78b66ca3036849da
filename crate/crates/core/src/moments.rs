//! Moment profiles `f_n` of the martingale limit and the moving-window
//! normalizer `g(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::Region;
use crate::spectral::{resolvent_apply, OperatorMatrix, SpectralData};

/// `f_1 = ψ` and `f_n = Σ_{k=1}^{n-1} C(n,k) (nλ₀ - L)^{-1}(v f_k f_{n-k})`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentTable {
    pub nmax: usize,
    /// `f[n - 1]` holds `f_n` on the grid nodes.
    pub f: Vec<Vec<f64>>,
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
}

pub fn compute_f(matrix: &OperatorMatrix, spectral: &SpectralData, nmax: usize) -> Result<MomentTable> {
    if nmax == 0 {
        return Err(Error::MomentOutOfRange { n: 0, nmax });
    }
    let mut f = vec![spectral.psi.clone()];
    for n in 2..=nmax {
        let source = binomial_source(matrix, &f, n);
        let fn_ = resolvent_apply(matrix, n as f64 * spectral.lambda0, &source)?;
        f.push(fn_);
    }
    Ok(MomentTable { nmax, f })
}

/// `Σ_{k=1}^{n-1} C(n,k) v f_k f_{n-k}` at the grid nodes, given `f_1..f_{n-1}`.
pub fn binomial_source(matrix: &OperatorMatrix, f: &[Vec<f64>], n: usize) -> Vec<f64> {
    let v = matrix.rate();
    (0..v.len())
        .map(|i| {
            let s: f64 = (1..n).map(|k| binomial(n, k) * f[k - 1][i] * f[n - k - 1][i]).sum();
            v[i] * s
        })
        .collect()
}

impl MomentTable {
    pub fn get(&self, n: usize) -> Result<&[f64]> {
        if n == 0 || n > self.nmax {
            return Err(Error::MomentOutOfRange { n, nmax: self.nmax });
        }
        Ok(&self.f[n - 1])
    }
}

/// `E ξⁿ = (∫ψ)ⁿ f_n(x0)`.
pub fn xi_moment(table: &MomentTable, spectral: &SpectralData, n: usize, x0: &[f64]) -> Result<f64> {
    let fn_ = table.get(n)?;
    let value = if n == 1 {
        spectral.psi_at(x0)
    } else {
        let s = match spectral.grid.geometry() {
            crate::grid::Geometry::FullLine => x0[0],
            crate::grid::Geometry::Radial => crate::rate_field::norm(x0),
        };
        spectral.grid.interpolate(fn_, s)
    };
    Ok(spectral.total_integral().powi(n as i32) * value)
}

fn check_velocity(spectral: &SpectralData, velocity: &[f64]) -> Result<f64> {
    if velocity.len() != spectral.dim() {
        return Err(Error::DimensionMismatch {
            expected: spectral.dim(),
            got: velocity.len(),
        });
    }
    let speed = crate::rate_field::norm(velocity);
    let limit = spectral.front_speed();
    if speed >= limit {
        return Err(Error::VelocityTooFast { speed, limit });
    }
    Ok(speed)
}

fn window_alpha(spectral: &SpectralData, region: &Region, velocity: &[f64], t: f64) -> Result<f64> {
    region.validate(spectral.dim())?;
    if !region.is_bounded() {
        return Err(Error::Invalid("moving windows must be bounded".into()));
    }
    let shift: Vec<f64> = velocity.iter().map(|c| c * t).collect();
    Ok(spectral.alpha(&region.translated(&shift)))
}

/// `g(t) = e^{λ₀t} α(U + tv)`.
pub fn g_window(spectral: &SpectralData, region: &Region, velocity: &[f64], t: f64) -> Result<f64> {
    check_velocity(spectral, velocity)?;
    Ok((spectral.lambda0 * t).exp() * window_alpha(spectral, region, velocity, t)?)
}

/// `t^{(d-1)/2} e^{-(λ₀ - √(2λ₀)|v|)t} g(t)`, evaluated without forming the
/// exponentials separately.
pub fn g_window_normalized(spectral: &SpectralData, region: &Region, velocity: &[f64], t: f64) -> Result<f64> {
    let speed = check_velocity(spectral, velocity)?;
    let kappa = (2.0 * spectral.lambda0).sqrt();
    let alpha = window_alpha(spectral, region, velocity, t)?;
    let p = 0.5 * (spectral.dim() as f64 - 1.0);
    Ok(t.powf(p) * (kappa * speed * t).exp() * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{discretize, principal_eigenpair, Grid, RateField};

    fn setup() -> (OperatorMatrix, SpectralData) {
        let f = RateField::square_well(1, 1.0, 1.0).unwrap();
        let g = Grid::full_line(20.0, 2000).unwrap();
        let m = discretize(&f, &g).unwrap();
        let s = principal_eigenpair(&m).unwrap();
        (m, s)
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(6, 3), 20.0);
    }

    #[test]
    fn first_profile_is_psi_and_all_are_nonnegative() {
        let (m, s) = setup();
        let t = compute_f(&m, &s, 4).unwrap();
        assert_eq!(t.f[0], s.psi);
        assert!(t.f.iter().flatten().all(|&x| x >= 0.0));
    }

    #[test]
    fn recursion_is_satisfied() {
        let (m, s) = setup();
        let t = compute_f(&m, &s, 4).unwrap();
        for n in 2..=4 {
            let fn_ = &t.f[n - 1];
            let af = m.apply(fn_);
            let lhs: Vec<f64> = fn_.iter().zip(&af).map(|(f, a)| n as f64 * s.lambda0 * f - a).collect();
            let rhs = binomial_source(&m, &t.f, n);
            let scale = rhs.iter().cloned().fold(0.0, f64::max);
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).abs() <= 1e-8 * scale, "n={n}");
            }
        }
    }

    #[test]
    fn moment_range_is_checked() {
        let (m, s) = setup();
        let t = compute_f(&m, &s, 2).unwrap();
        assert!(xi_moment(&t, &s, 3, &[0.0]).is_err());
        let m1 = xi_moment(&t, &s, 1, &[0.0]).unwrap();
        assert!((m1 - s.psi_at(&[0.0]) * s.total_integral()).abs() < 1e-14);
        assert!(xi_moment(&t, &s, 2, &[50.0]).unwrap() == 0.0);
    }

    #[test]
    fn window_normalizer() {
        let (_, s) = setup();
        let u = Region::interval(-1.0, 1.0);
        let b = s.front_speed();
        assert_eq!(g_window(&s, &u, &[0.1], 0.0).unwrap(), s.alpha(&u));
        let g = g_window(&s, &u, &[0.0], 3.0).unwrap();
        assert!((g - (3.0 * s.lambda0).exp() * s.alpha(&u)).abs() < 1e-12 * g);
        assert!(matches!(
            g_window(&s, &u, &[b], 1.0),
            Err(Error::VelocityTooFast { .. })
        ));
        let big = Region::interval(-2.0, 2.0);
        for t in [1.0, 5.0, 20.0] {
            assert!(g_window(&s, &u, &[0.2], t).unwrap() <= g_window(&s, &big, &[0.2], t).unwrap());
        }
    }
}
