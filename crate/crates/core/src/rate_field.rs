//! Branching-rate profiles `v(x) >= 0` with compact support.
//!
//! Every profile is radial: `v(x)` depends on `|x|` only. In one dimension
//! that makes the profile even.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the rate profile as a function of the radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateProfile {
    /// `beta` on the closed ball of radius `a`, zero outside. Discontinuous.
    SquareWell { amplitude: f64, support_radius: f64 },
    /// `beta * (1 - (r/a)^2)^2` for `r <= a`, zero outside. C^1.
    SmoothBump { amplitude: f64, support_radius: f64 },
    /// Linear interpolation between `(radius, value)` nodes, zero past the
    /// last node and flat before the first.
    TabulatedRadial { radii: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateFieldRepr", into = "RateFieldRepr")]
pub struct RateField {
    dim: usize,
    profile: RateProfile,
    max_rate: f64,
    support: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RateFieldRepr {
    dim: usize,
    #[serde(flatten)]
    profile: RateProfile,
}

impl TryFrom<RateFieldRepr> for RateField {
    type Error = Error;

    fn try_from(repr: RateFieldRepr) -> Result<Self> {
        RateField::new(repr.dim, repr.profile)
    }
}

impl From<RateField> for RateFieldRepr {
    fn from(field: RateField) -> Self {
        RateFieldRepr {
            dim: field.dim,
            profile: field.profile,
        }
    }
}

impl RateField {
    pub fn new(dim: usize, profile: RateProfile) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        let (max_rate, support) = match &profile {
            RateProfile::SquareWell {
                amplitude,
                support_radius,
            }
            | RateProfile::SmoothBump {
                amplitude,
                support_radius,
            } => {
                check_finite_nonneg("amplitude", *amplitude)?;
                check_finite_nonneg("support_radius", *support_radius)?;
                if *amplitude == 0.0 || *support_radius == 0.0 {
                    (0.0, 0.0)
                } else {
                    (*amplitude, *support_radius)
                }
            }
            RateProfile::TabulatedRadial { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(Error::Invalid(
                        "tabulated profile needs equally many radii and values (at least one)".into(),
                    ));
                }
                if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Invalid(
                        "tabulated radii must be non-negative and strictly increasing".into(),
                    ));
                }
                for &v in values {
                    check_finite_nonneg("tabulated value", v)?;
                }
                let max = values.iter().cloned().fold(0.0, f64::max);
                let support = match values.iter().rposition(|&v| v > 0.0) {
                    None => 0.0,
                    // interpolation reaches zero at the next node, if there is one
                    Some(last) => radii[(last + 1).min(radii.len() - 1)],
                };
                (max, support)
            }
        };
        Ok(RateField {
            dim,
            profile,
            max_rate,
            support,
        })
    }

    pub fn square_well(dim: usize, amplitude: f64, support_radius: f64) -> Result<Self> {
        Self::new(
            dim,
            RateProfile::SquareWell {
                amplitude,
                support_radius,
            },
        )
    }

    pub fn smooth_bump(dim: usize, amplitude: f64, support_radius: f64) -> Result<Self> {
        Self::new(
            dim,
            RateProfile::SmoothBump {
                amplitude,
                support_radius,
            },
        )
    }

    pub fn tabulated_radial(dim: usize, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(dim, RateProfile::TabulatedRadial { radii, values })
    }

    /// `v ≡ 0`.
    pub fn zero(dim: usize) -> Self {
        Self::square_well(dim, 0.0, 0.0).expect("zero field is valid")
    }

    /// Reads a two-column `radius,value` CSV. Lines starting with `#` and a
    /// non-numeric header line are skipped.
    pub fn from_csv(dim: usize, text: &str) -> Result<Self> {
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(r), Some(v)) = (cols.next(), cols.next()) else {
                return Err(Error::Invalid(format!("line {}: expected two columns", lineno + 1)));
            };
            match (r.parse::<f64>(), v.parse::<f64>()) {
                (Ok(r), Ok(v)) => {
                    radii.push(r);
                    values.push(v);
                }
                _ if radii.is_empty() => continue, // header
                _ => return Err(Error::Invalid(format!("line {}: not numeric", lineno + 1))),
            }
        }
        Self::tabulated_radial(dim, radii, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> &RateProfile {
        &self.profile
    }

    /// `sup v`: exact for the closed-form profiles, max over nodes for tables.
    pub fn max_rate(&self) -> f64 {
        self.max_rate
    }

    /// Radius beyond which `v` vanishes; 0 for `v ≡ 0`.
    pub fn support_radius(&self) -> f64 {
        self.support
    }

    pub fn is_zero(&self) -> bool {
        self.max_rate == 0.0
    }

    pub fn is_continuous(&self) -> bool {
        match &self.profile {
            RateProfile::SquareWell { .. } => self.is_zero(),
            RateProfile::SmoothBump { .. } => true,
            RateProfile::TabulatedRadial { values, .. } => *values.last().unwrap() == 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval_radius(norm(x)))
    }

    #[inline]
    pub fn eval_radius(&self, r: f64) -> f64 {
        if r > self.support {
            return 0.0;
        }
        match &self.profile {
            RateProfile::SquareWell { amplitude, .. } => *amplitude,
            RateProfile::SmoothBump {
                amplitude,
                support_radius,
            } => {
                let s = r / support_radius;
                let q = 1.0 - s * s;
                amplitude * q * q
            }
            RateProfile::TabulatedRadial { radii, values } => interp_table(radii, values, r),
        }
    }

    /// Rate assigned to a grid cell `[r - h/2, r + h/2]`. The square well
    /// uses the fraction of the cell inside the well so that a node sitting
    /// on the jump gets `beta / 2`; smooth profiles use the point value.
    pub fn cell_rate(&self, r: f64, h: f64) -> f64 {
        match &self.profile {
            RateProfile::SquareWell { amplitude, .. } if !self.is_zero() => {
                let lo = r - 0.5 * h;
                let frac = ((self.support - lo) / h).clamp(0.0, 1.0);
                amplitude * frac
            }
            _ => self.eval_radius(r.abs()),
        }
    }
}

fn check_finite_nonneg(what: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "{what} must be finite and non-negative, got {x}"
        )))
    }
}

fn interp_table(radii: &[f64], values: &[f64], r: f64) -> f64 {
    if r <= radii[0] {
        return values[0];
    }
    let last = radii.len() - 1;
    if r > radii[last] {
        return 0.0;
    }
    // first node with radius >= r
    let j = radii.partition_point(|&x| x < r);
    let (r0, r1) = (radii[j - 1], radii[j]);
    let t = (r - r0) / (r1 - r0);
    values[j - 1] + t * (values[j] - values[j - 1])
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}
