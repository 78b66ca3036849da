//! Python bindings. Regions, ensemble settings, and run configurations are
//! passed as JSON strings in the same format the command-line tool reads.

use std::path::PathBuf;

use branchdiff::config::RunConfig;
use branchdiff::output::TableFormat;
use branchdiff::pipeline::{self, RunOptions};
use branchdiff::{EnsembleConfig, Region};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: branchdiff::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Branching-rate field `v(x)`.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct RateField {
    inner: branchdiff::RateField,
}

#[pymethods]
impl RateField {
    /// Parses `{"dim": .., "kind": .., ...}`.
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        Ok(RateField {
            inner: from_json(json)?,
        })
    }

    #[staticmethod]
    fn square_well(dim: usize, amplitude: f64, support_radius: f64) -> PyResult<Self> {
        let inner = branchdiff::RateField::square_well(dim, amplitude, support_radius).map_err(py_err)?;
        Ok(RateField { inner })
    }

    #[staticmethod]
    fn smooth_bump(dim: usize, amplitude: f64, support_radius: f64) -> PyResult<Self> {
        let inner = branchdiff::RateField::smooth_bump(dim, amplitude, support_radius).map_err(py_err)?;
        Ok(RateField { inner })
    }

    #[staticmethod]
    fn tabulated(dim: usize, radii: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        let inner = branchdiff::RateField::tabulated_radial(dim, radii, values).map_err(py_err)?;
        Ok(RateField { inner })
    }

    #[staticmethod]
    fn zero(dim: usize) -> Self {
        RateField {
            inner: branchdiff::RateField::zero(dim),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn max_rate(&self) -> f64 {
        self.inner.max_rate()
    }

    #[getter]
    fn support_radius(&self) -> f64 {
        self.inner.support_radius()
    }

    fn eval(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&x).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("RateField({})", serde_json::to_string(&self.inner).unwrap_or_default())
    }
}

/// Principal eigenpair of `½Δ + v` and the limit-moment functions.
#[pyclass(frozen)]
struct Spectrum {
    inner: pipeline::Spectrum,
}

#[pymethods]
impl Spectrum {
    #[new]
    #[pyo3(signature = (field, extent, intervals, nmax = 4))]
    fn new(field: &RateField, extent: f64, intervals: usize, nmax: usize) -> PyResult<Self> {
        let grid = branchdiff::Grid::new(field.inner.dim(), extent, intervals).map_err(py_err)?;
        let matrix = branchdiff::discretize(&field.inner, &grid).map_err(py_err)?;
        let data = branchdiff::principal_eigenpair(&matrix).map_err(py_err)?;
        let moments = branchdiff::compute_f(&matrix, &data, nmax).map_err(py_err)?;
        Ok(Spectrum {
            inner: pipeline::Spectrum { matrix, data, moments },
        })
    }

    #[getter]
    fn lambda0(&self) -> f64 {
        self.inner.data.lambda0
    }

    #[getter]
    fn lambda0_extrapolated(&self) -> f64 {
        self.inner.data.lambda0_extrapolated
    }

    #[getter]
    fn gap(&self) -> f64 {
        self.inner.data.gap
    }

    #[getter]
    fn tail_slope(&self) -> f64 {
        self.inner.data.tail_slope
    }

    #[getter]
    fn front_speed(&self) -> f64 {
        self.inner.data.front_speed()
    }

    #[getter]
    fn psi_integral(&self) -> f64 {
        self.inner.data.total_integral()
    }

    #[getter]
    fn coords(&self) -> Vec<f64> {
        self.inner.matrix.grid().coords().to_vec()
    }

    #[getter]
    fn psi(&self) -> Vec<f64> {
        self.inner.data.psi.clone()
    }

    fn psi_at(&self, x: Vec<f64>) -> f64 {
        self.inner.data.psi_at(&x)
    }

    /// `∫_U ψ / ∫ ψ` for a region given as JSON.
    fn alpha(&self, region: &str) -> PyResult<f64> {
        let region: Region = from_json(region)?;
        region.validate(self.inner.data.dim()).map_err(py_err)?;
        Ok(self.inner.data.alpha(&region))
    }

    /// `f_n` on the grid.
    fn f(&self, n: usize) -> PyResult<Vec<f64>> {
        self.inner.moments.get(n).map(<[f64]>::to_vec).map_err(py_err)
    }

    /// `E ξⁿ` for a start point `x0`.
    fn xi_moment(&self, n: usize, x0: Vec<f64>) -> PyResult<f64> {
        branchdiff::xi_moment(&self.inner.moments, &self.inner.data, n, &x0).map_err(py_err)
    }
}

/// Monte Carlo ensemble.
#[pyclass(frozen)]
struct Ensemble {
    inner: branchdiff::EnsembleStats,
}

#[pymethods]
impl Ensemble {
    #[getter]
    fn obs_times(&self) -> Vec<f64> {
        self.inner.obs_times().to_vec()
    }

    /// Population per replica and observation; rows stop at an explosion.
    fn counts(&self) -> Vec<Vec<u64>> {
        self.inner.replicas.iter().map(|r| r.counts.clone()).collect()
    }

    fn max_radius(&self) -> Vec<Vec<f64>> {
        self.inner.replicas.iter().map(|r| r.max_radius.clone()).collect()
    }

    fn region_counts(&self, j: usize) -> PyResult<Vec<Vec<u64>>> {
        self.inner
            .replicas
            .iter()
            .map(|r| {
                r.region_counts
                    .get(j)
                    .cloned()
                    .ok_or_else(|| PyValueError::new_err("no such region"))
            })
            .collect()
    }

    /// Fractions classified finite, growing, and unclassified.
    fn survival_fractions(&self) -> (f64, f64, f64) {
        self.inner.survival_fractions()
    }

    fn exploded(&self) -> usize {
        self.inner.exploded()
    }

    fn to_json(&self) -> PyResult<String> {
        branchdiff::output::to_json(&self.inner).map_err(py_err)
    }
}

/// Runs an ensemble described by an `EnsembleConfig` JSON document. With a
/// spectrum, `Σψ(X_t)` is recorded as well.
#[pyfunction]
#[pyo3(signature = (field, config, spectrum = None))]
fn run_ensemble(py: Python<'_>, field: &RateField, config: &str, spectrum: Option<&Spectrum>) -> PyResult<Ensemble> {
    let config: EnsembleConfig = from_json(config)?;
    let psi = spectrum.map(|s| &s.inner.data);
    let inner = py
        .detach(|| branchdiff::run_ensemble(&field.inner, &config, psi))
        .map_err(py_err)?;
    Ok(Ensemble { inner })
}

/// `M¹ … M^nmax` on a radial grid; `variant` is `"uncorrected"` or
/// `"feynman_kac"`. Returns `(radii, [M¹, M², ...])`.
#[pyfunction]
#[pyo3(signature = (field, extent, intervals, variant = "feynman_kac", nmax = 1))]
fn solve_extinction(
    field: &RateField,
    extent: f64,
    intervals: usize,
    variant: &str,
    nmax: usize,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let variant = match variant {
        "uncorrected" => branchdiff::Variant::Uncorrected,
        "feynman_kac" => branchdiff::Variant::FeynmanKac,
        other => return Err(PyValueError::new_err(format!("unknown variant {other}"))),
    };
    let grid = branchdiff::Grid::radial(field.inner.dim(), extent, intervals).map_err(py_err)?;
    let t = branchdiff::solve_m(&field.inner, &grid, nmax, variant).map_err(py_err)?;
    Ok((t.grid.coords().to_vec(), t.values))
}

/// Monte Carlo estimate and standard error of the probability that the
/// first particle never splits.
#[pyfunction]
fn feynman_kac_mc(field: &RateField, x0: Vec<f64>, samples: usize, dt: f64, seed: u64) -> PyResult<(f64, f64)> {
    branchdiff::feynman_kac_mc(&field.inner, &x0, samples, dt, seed).map_err(py_err)
}

/// Runs a command-line subcommand on a configuration file and returns the
/// exit code.
#[pyfunction]
#[pyo3(signature = (command, config, out = None, seed = None, format = "csv"))]
fn run(
    py: Python<'_>,
    command: &str,
    config: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    format: &str,
) -> PyResult<i32> {
    let cfg = RunConfig::load(&config).map_err(py_err)?;
    let format = match format {
        "csv" => TableFormat::Csv,
        "json" => TableFormat::Json,
        other => return Err(PyValueError::new_err(format!("unknown format {other}"))),
    };
    let opts = RunOptions {
        out: pipeline::output_dir(&cfg, out.as_deref()),
        format,
        seed,
    };
    let cmd = match command {
        "spectrum" => pipeline::cmd_spectrum,
        "simulate" => pipeline::cmd_simulate,
        "verify" => pipeline::cmd_verify,
        "extinction" => pipeline::cmd_extinction,
        "all" => pipeline::cmd_all,
        other => return Err(PyValueError::new_err(format!("unknown command {other}"))),
    };
    let result = py.detach(|| cmd(&cfg, &opts));
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    Ok(pipeline::exit_code(&result))
}

#[pymodule]
fn branchdiff_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RateField>()?;
    m.add_class::<Spectrum>()?;
    m.add_class::<Ensemble>()?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(solve_extinction, m)?)?;
    m.add_function(wrap_pyfunction!(feynman_kac_mc, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
