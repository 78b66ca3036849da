//! Run configuration: a single JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisOptions;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rate_field::RateField;
use crate::region::Region;

/// A rate field given inline, or a tabulated radial profile read from a
/// two-column CSV (radius, value). Relative paths resolve against the
/// configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Csv { dim: usize, csv: PathBuf },
    Inline(RateField),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub extent: f64,
    pub intervals: usize,
}

/// Observation schedule. The horizon is either absolute (`t_end`) or in
/// units of `1/λ₀` (`t_end_lambda`); observation times are `obs_times`, or
/// `obs_count` equally spaced times ending at the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub replicas: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_times: Option<Vec<f64>>,
    #[serde(default = "default_obs_count")]
    pub obs_count: usize,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub x0: Vec<f64>,
}

fn default_obs_count() -> usize {
    12
}

fn default_cap() -> usize {
    1_000_000
}

/// A moving window. The velocity is given directly, or as a fraction of the
/// front speed `b` along `direction`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub region: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSpec {
    pub nmax: usize,
    /// Moment orders compared with the ensemble.
    pub moment_orders: Vec<usize>,
    #[serde(flatten)]
    pub options: AnalysisOptions,
    /// Growth fits start at this many multiples of `1/λ₀`.
    pub tail_start_lambda: f64,
    /// Windows that must be occupied for the front check.
    pub covering_windows: Vec<usize>,
    /// Re-run the ensemble at twice the horizon for the dichotomy check.
    pub dichotomy_doubling: bool,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            nmax: 4,
            moment_orders: vec![1, 2],
            options: AnalysisOptions::default(),
            tail_start_lambda: 6.0,
            covering_windows: Vec::new(),
            dichotomy_doubling: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionSpec {
    pub extent: f64,
    pub intervals: usize,
    #[serde(default = "default_ext_nmax")]
    pub nmax: usize,
    #[serde(default = "default_fk_samples")]
    pub fk_samples: usize,
    #[serde(default = "default_fk_dt")]
    pub fk_dt: f64,
}

fn default_ext_nmax() -> usize {
    3
}

fn default_fk_samples() -> usize {
    20_000
}

fn default_fk_dt() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub field: FieldSpec,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub windows: Vec<WindowSpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extinction: Option<ExtinctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Directory of the configuration file, for relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn build_field(&self) -> Result<RateField> {
        match &self.field {
            FieldSpec::Inline(f) => Ok(f.clone()),
            FieldSpec::Csv { dim, csv } => {
                let path = if csv.is_absolute() {
                    csv.clone()
                } else {
                    self.base_dir.join(csv)
                };
                RateField::from_csv(*dim, &std::fs::read_to_string(path)?)
            }
        }
    }

    pub fn build_grid(&self, dim: usize) -> Result<Grid> {
        Grid::new(dim, self.grid.extent, self.grid.intervals)
    }

    /// Static checks that do not need the spectral solve.
    pub fn validate(&self) -> Result<RateField> {
        let field = self.build_field()?;
        let dim = field.dim();
        for r in &self.regions {
            r.validate(dim)?;
        }
        for w in &self.windows {
            w.region.validate(dim)?;
            match (&w.velocity, w.speed_fraction) {
                (Some(v), None) if v.len() == dim => {}
                (None, Some(_)) => {
                    if w.direction.as_ref().is_some_and(|d| d.len() != dim) {
                        return Err(Error::Invalid("window direction has the wrong dimension".into()));
                    }
                }
                _ => {
                    return Err(Error::Invalid(
                        "each window needs either a velocity of the field's dimension or a speed_fraction".into(),
                    ))
                }
            }
        }
        if let Some(mc) = &self.mc {
            if mc.seed.is_none() {
                return Err(Error::Invalid("mc.seed is required".into()));
            }
            if mc.t_end.is_some() == mc.t_end_lambda.is_some() {
                return Err(Error::Invalid(
                    "give exactly one of mc.t_end and mc.t_end_lambda".into(),
                ));
            }
            if mc.x0.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: mc.x0.len(),
                });
            }
        }
        if self.analysis.nmax == 0
            || self
                .analysis
                .moment_orders
                .iter()
                .any(|&n| n == 0 || n > self.analysis.nmax)
        {
            return Err(Error::Invalid("moment orders must lie in 1..=nmax".into()));
        }
        Ok(field)
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WELL: &str = r#"{
        "field": {"dim": 1, "kind": "square_well", "amplitude": 1.0, "support_radius": 1.0},
        "grid": {"extent": 20.0, "intervals": 400},
        "mc": {"replicas": 10, "t_end_lambda": 4.0, "seed": 1, "x0": [0.0]},
        "regions": [{"shape": "interval", "lo": 0.0, "hi": null}],
        "windows": [{"region": {"shape": "ball", "center": [0.0], "radius": 1.0}, "speed_fraction": 0.4}]
    }"#;

    #[test]
    fn parses_and_defaults() {
        let c = RunConfig::from_json(WELL).unwrap();
        assert_eq!(c.mc.as_ref().unwrap().cap, 1_000_000);
        assert_eq!(c.analysis.nmax, 4);
        assert_eq!(c.analysis.options.z, 3.0);
        c.validate().unwrap();
        let again = RunConfig::from_json(&c.canonical_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn seed_is_required() {
        let c = RunConfig::from_json(&WELL.replace(r#""seed": 1, "#, "")).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn csv_field() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("v.csv"), "0,0.7\n1,0.3\n2,0\n").unwrap();
        let text = r#"{"field": {"dim": 3, "csv": "v.csv"}, "grid": {"extent": 10.0, "intervals": 100}}"#;
        let cfg_path = dir.path().join("c.json");
        std::fs::write(&cfg_path, text).unwrap();
        let c = RunConfig::load(&cfg_path).unwrap();
        let f = c.validate().unwrap();
        assert_eq!(f.max_rate(), 0.7);
    }
}
