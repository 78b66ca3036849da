//! Spatial regions used for counting particles and integrating `psi`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A region of `R^d`. Balls are open, intervals and boxes half-open
/// (`lo <= x < hi`), so adjacent intervals partition the line exactly.
/// Unbounded sides are written as `null` in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Interval {
        #[serde(with = "bound_lo")]
        lo: f64,
        #[serde(with = "bound_hi")]
        hi: f64,
    },
    Box {
        #[serde(with = "bounds_lo")]
        lo: Vec<f64>,
        #[serde(with = "bounds_hi")]
        hi: Vec<f64>,
    },
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Region::Interval { lo, hi }
    }

    /// All of `R^d`.
    pub fn everything(dim: usize) -> Self {
        if dim == 1 {
            Region::Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            }
        } else {
            Region::Box {
                lo: vec![f64::NEG_INFINITY; dim],
                hi: vec![f64::INFINITY; dim],
            }
        }
    }

    /// Dimension implied by the shape (intervals are one-dimensional).
    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } => center.len(),
            Region::Interval { .. } => 1,
            Region::Box { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            });
        }
        let ok = match self {
            Region::Ball { center, radius } => *radius >= 0.0 && center.iter().all(|c| c.is_finite()),
            Region::Interval { lo, hi } => lo < hi,
            Region::Box { lo, hi } => lo.len() == hi.len() && lo.iter().zip(hi).all(|(a, b)| a < b),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("degenerate region {self:?}")))
        }
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 < radius * radius
            }
            Region::Interval { lo, hi } => *lo <= x[0] && x[0] < *hi,
            Region::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v < *b),
        }
    }

    /// The region shifted by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Region {
        match self {
            Region::Ball { center, radius } => Region::Ball {
                center: center.iter().zip(shift).map(|(c, s)| c + s).collect(),
                radius: *radius,
            },
            Region::Interval { lo, hi } => Region::Interval {
                lo: lo + shift[0],
                hi: hi + shift[0],
            },
            Region::Box { lo, hi } => Region::Box {
                lo: lo.iter().zip(shift).map(|(c, s)| c + s).collect(),
                hi: hi.iter().zip(shift).map(|(c, s)| c + s).collect(),
            },
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            Region::Ball { .. } => true,
            Region::Interval { lo, hi } => lo.is_finite() && hi.is_finite(),
            Region::Box { lo, hi } => lo.iter().chain(hi).all(|v| v.is_finite()),
        }
    }

    /// True when the region contains the closed ball of radius `r` about the
    /// origin.
    pub fn contains_ball(&self, r: f64) -> bool {
        match self {
            Region::Ball { center, radius } => {
                let c: f64 = center.iter().map(|v| v * v).sum::<f64>().sqrt();
                c + r < *radius
            }
            Region::Interval { lo, hi } => *lo <= -r && r < *hi,
            Region::Box { lo, hi } => lo.iter().zip(hi).all(|(a, b)| *a <= -r && r < *b),
        }
    }
}

fn to_opt(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

macro_rules! bound_module {
    ($name:ident, $inf:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                match super::to_opt(*v) {
                    Some(x) => s.serialize_some(&x),
                    None => s.serialize_none(),
                }
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                Ok(Option::<f64>::deserialize(d)?.unwrap_or($inf))
            }
        }
    };
}

macro_rules! bounds_module {
    ($name:ident, $inf:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serialize, Serializer};

            pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
                let opts: Vec<Option<f64>> = v.iter().map(|x| super::to_opt(*x)).collect();
                opts.serialize(s)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
                Ok(Vec::<Option<f64>>::deserialize(d)?
                    .into_iter()
                    .map(|x| x.unwrap_or($inf))
                    .collect())
            }
        }
    };
}

bound_module!(bound_lo, f64::NEG_INFINITY);
bound_module!(bound_hi, f64::INFINITY);
bounds_module!(bounds_lo, f64::NEG_INFINITY);
bounds_module!(bounds_hi, f64::INFINITY);
