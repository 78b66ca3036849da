//! End-to-end commands shared by the command-line tool and the Python
//! bindings: spectrum, simulate, verify, extinction, and all.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{
    dichotomy_check, domain_fraction_check, front_speed_check, growth_rate_fit, limit_moment_check, martingale_check,
    moving_window_check, trajectory_check, variance_stability_check, Status, TheoremReport,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::extinction::{compare_m_to_mc, feynman_kac_mc, solve_m, ExtinctionTable, Variant};
use crate::grid::Grid;
use crate::mc_engine::{run_ensemble, EnsembleConfig, EnsembleStats, Survival, Window};
use crate::moments::{compute_f, xi_moment, MomentTable};
use crate::output::{sha256_hex, to_json, write_file, Table, TableFormat};
use crate::rate_field::{norm, RateField};
use crate::spectral::{discretize, principal_eigenpair, OperatorMatrix, SpectralData};
use crate::stats::{mean, std_error};

/// Command-line overrides.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub format: TableFormat,
    pub seed: Option<u64>,
}

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    CheckFailure,
}

impl Outcome {
    fn and(self, other: Outcome) -> Outcome {
        if self == Outcome::Pass && other == Outcome::Pass {
            Outcome::Pass
        } else {
            Outcome::CheckFailure
        }
    }
}

/// Process exit code: 0 pass, 1 check failure, 2 configuration or regime
/// error.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::CheckFailure) => 1,
        Err(_) => 2,
    }
}

/// Spectral solve with everything derived from it.
pub struct Spectrum {
    pub matrix: OperatorMatrix,
    pub data: SpectralData,
    pub moments: MomentTable,
}

#[derive(Serialize)]
struct SpectrumHeader<'a> {
    lambda0: f64,
    lambda0_extrapolated: f64,
    mass: f64,
    psi_integral: f64,
    tail_slope: f64,
    tail_slope_predicted: f64,
    tail_prefactor: f64,
    tail_fitted: bool,
    gap: f64,
    second_eigenvalue: f64,
    residual: f64,
    iterations: usize,
    boundary_ratio: f64,
    front_speed: f64,
    grid: &'a Grid,
}

#[derive(Serialize)]
struct MomentSummary<'a> {
    x0: &'a [f64],
    xi_moments: Vec<f64>,
}

fn effective_config(cfg: &RunConfig, opts: &RunOptions) -> RunConfig {
    let mut c = cfg.clone();
    if let (Some(seed), Some(mc)) = (opts.seed, c.mc.as_mut()) {
        mc.seed = Some(seed);
    }
    c
}

fn start_point(cfg: &RunConfig, dim: usize) -> Vec<f64> {
    cfg.mc.as_ref().map_or(vec![0.0; dim], |m| m.x0.clone())
}

pub fn solve_spectrum(cfg: &RunConfig, field: &RateField) -> Result<Spectrum> {
    let grid = cfg.build_grid(field.dim())?;
    let matrix = discretize(field, &grid)?;
    let data = principal_eigenpair(&matrix)?;
    let moments = compute_f(&matrix, &data, cfg.analysis.nmax)?;
    Ok(Spectrum { matrix, data, moments })
}

fn write_spectrum(cfg: &RunConfig, sp: &Spectrum, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let d = &sp.data;
    let header = SpectrumHeader {
        lambda0: d.lambda0,
        lambda0_extrapolated: d.lambda0_extrapolated,
        mass: d.mass,
        psi_integral: d.total_integral(),
        tail_slope: d.tail_slope,
        tail_slope_predicted: -(2.0 * d.lambda0).sqrt(),
        tail_prefactor: d.tail_prefactor,
        tail_fitted: d.tail_fitted,
        gap: d.gap,
        second_eigenvalue: d.second_eigenvalue,
        residual: d.residual,
        iterations: d.iterations,
        boundary_ratio: d.boundary_ratio,
        front_speed: d.front_speed(),
        grid: &d.grid,
    };
    let mut files = vec![write_file(&opts.out, "spectrum.json", &to_json(&header)?)?];
    let coords = sp.matrix.grid().coords();
    let mut t = Table::new(["coordinate", "psi"]);
    for (x, p) in coords.iter().zip(&d.psi) {
        t.push(vec![*x, *p]);
    }
    files.push(t.write(&opts.out, "eigenfunction", opts.format)?);

    let nmax = sp.moments.nmax;
    let mut cols = vec!["coordinate".to_string()];
    cols.extend((1..=nmax).map(|n| format!("f{n}")));
    let mut m = Table::new(cols);
    for (i, x) in coords.iter().enumerate() {
        let mut row = vec![*x];
        row.extend(sp.moments.f.iter().map(|f| f[i]));
        m.push(row);
    }
    files.push(m.write(&opts.out, "moments", opts.format)?);
    let x0 = start_point(cfg, d.dim());
    let summary = MomentSummary {
        x0: &x0,
        xi_moments: (1..=nmax)
            .map(|n| xi_moment(&sp.moments, d, n, &x0))
            .collect::<Result<_>>()?,
    };
    files.push(write_file(&opts.out, "moments_summary.json", &to_json(&summary)?)?);
    if d.boundary_ratio > 1e-8 {
        eprintln!(
            "warning: psi at the grid edge is {:.3e} of its maximum; enlarge grid.extent",
            d.boundary_ratio
        );
    }
    Ok(files)
}

pub fn cmd_spectrum(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let field = cfg.validate()?;
    let sp = solve_spectrum(cfg, &field)?;
    write_spectrum(cfg, &sp, opts)?;
    Ok(Outcome::Pass)
}

/// Spectrum if the field is supercritical, `None` if it is not.
fn optional_spectrum(cfg: &RunConfig, field: &RateField) -> Result<Option<Spectrum>> {
    match solve_spectrum(cfg, field) {
        Ok(s) => Ok(Some(s)),
        Err(Error::NoPositiveEigenvalue { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Turns the configuration into engine input, resolving horizons given in
/// units of `1/λ₀` and velocities given as fractions of `b`.
pub fn ensemble_config(cfg: &RunConfig, spectral: Option<&SpectralData>) -> Result<EnsembleConfig> {
    let mc = cfg
        .mc
        .as_ref()
        .ok_or_else(|| Error::Invalid("configuration has no mc section".into()))?;
    let need = |what: &str| Error::Invalid(format!("{what} needs a supercritical field"));
    let t_end = match (mc.t_end, mc.t_end_lambda) {
        (Some(t), None) => t,
        (None, Some(k)) => k / spectral.ok_or_else(|| need("t_end_lambda"))?.lambda0,
        _ => {
            return Err(Error::Invalid(
                "give exactly one of mc.t_end and mc.t_end_lambda".into(),
            ))
        }
    };
    let obs_times = match &mc.obs_times {
        Some(t) => t.clone(),
        None => (1..=mc.obs_count)
            .map(|k| t_end * k as f64 / mc.obs_count as f64)
            .collect(),
    };
    let dim = mc.x0.len();
    let mut windows = Vec::with_capacity(cfg.windows.len());
    for w in &cfg.windows {
        let velocity = match (&w.velocity, w.speed_fraction) {
            (Some(v), _) => v.clone(),
            (None, Some(frac)) => {
                let b = spectral.ok_or_else(|| need("speed_fraction"))?.front_speed();
                let dir = w.direction.clone().unwrap_or_else(|| {
                    let mut e = vec![0.0; dim];
                    e[0] = 1.0;
                    e
                });
                let len = norm(&dir);
                dir.iter().map(|c| frac * b * c / len).collect()
            }
            (None, None) => return Err(Error::Invalid("window without velocity".into())),
        };
        if let Some(sp) = spectral {
            let speed = norm(&velocity);
            if speed >= sp.front_speed() {
                return Err(Error::VelocityTooFast {
                    speed,
                    limit: sp.front_speed(),
                });
            }
        }
        windows.push(Window {
            region: w.region.clone(),
            velocity,
        });
    }
    Ok(EnsembleConfig {
        replicas: mc.replicas,
        t_end,
        obs_times,
        cap: mc.cap,
        seed: mc.seed.ok_or_else(|| Error::Invalid("mc.seed is required".into()))?,
        x0: mc.x0.clone(),
        regions: cfg.regions.clone(),
        windows,
    })
}

fn trajectory_table(stats: &EnsembleStats, value: impl Fn(&crate::mc_engine::ReplicaRecord, usize) -> f64) -> Table {
    let mut cols = vec!["time".to_string()];
    cols.extend((0..stats.replicas.len()).map(|r| format!("r{r}")));
    let mut t = Table::new(cols);
    for (k, &time) in stats.obs_times().iter().enumerate() {
        let mut row = vec![time];
        row.extend(
            stats
                .replicas
                .iter()
                .map(|r| if r.observed() > k { value(r, k) } else { f64::NAN }),
        );
        t.push(row);
    }
    t
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    replicas: usize,
    t_end: f64,
    cap: usize,
    config_hash: String,
    lambda0: Option<f64>,
    cap_hits: usize,
    survival: BTreeMap<String, f64>,
    files: BTreeMap<String, String>,
}

fn hash_files(files: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for f in files {
        let name = f
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.insert(name, sha256_hex(&std::fs::read(f)?));
    }
    Ok(out)
}

fn write_ensemble(
    stats: &EnsembleStats,
    spectral: Option<&SpectralData>,
    config_hash: &str,
    opts: &RunOptions,
) -> Result<()> {
    let dir = &opts.out;
    let fmt = opts.format;
    let mut files = Vec::new();
    files.push(trajectory_table(stats, |r, k| r.counts[k] as f64).write(dir, "counts", fmt)?);
    files.push(trajectory_table(stats, |r, k| r.max_radius[k]).write(dir, "max_radius", fmt)?);
    for j in 0..stats.config.regions.len() {
        let t = trajectory_table(stats, |r, k| r.region_counts[j][k] as f64);
        files.push(t.write(dir, &format!("region_{j}"), fmt)?);
    }
    for j in 0..stats.config.windows.len() {
        let t = trajectory_table(stats, |r, k| r.window_counts[j][k] as f64);
        files.push(t.write(dir, &format!("window_{j}"), fmt)?);
    }
    if let Some(sp) = spectral {
        let l = sp.lambda0;
        let t = trajectory_table(stats, |r, k| r.psi_sum[k] * (-l * stats.obs_times()[k]).exp());
        files.push(t.write(dir, "psi_martingale", fmt)?);
    }
    let mut summary = Table::new(["time", "observed", "mean_count", "se_count"]);
    for (k, &time) in stats.obs_times().iter().enumerate() {
        let n: Vec<f64> = stats.observed_at(k).map(|r| r.counts[k] as f64).collect();
        let (m, se) = if n.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (mean(&n), std_error(&n))
        };
        summary.push(vec![time, n.len() as f64, m, se]);
    }
    files.push(summary.write(dir, "summary", fmt)?);
    let mut reps = Table::new([
        "replica",
        "survival",
        "exploded",
        "final_count",
        "last_branch",
        "branches",
    ]);
    for (i, r) in stats.replicas.iter().enumerate() {
        let code = match r.survival {
            Survival::Finite => 0.0,
            Survival::Growing => 1.0,
            Survival::Unclassified => 2.0,
        };
        reps.push(vec![
            i as f64,
            code,
            f64::from(u8::from(r.exploded)),
            r.final_count.map_or(f64::NAN, |c| c as f64),
            r.last_branch.unwrap_or(f64::NAN),
            r.branches as f64,
        ]);
    }
    files.push(reps.write(dir, "replicas", fmt)?);
    files.push(write_file(dir, "ensemble.json", &to_json(stats)?)?);
    let (fin, grow, unc) = stats.survival_fractions();
    let manifest = Manifest {
        seed: stats.config.seed,
        replicas: stats.replicas.len(),
        t_end: stats.config.t_end,
        cap: stats.config.cap,
        config_hash: config_hash.to_string(),
        lambda0: spectral.map(|s| s.lambda0),
        cap_hits: stats.exploded(),
        survival: BTreeMap::from([
            ("finite".to_string(), fin),
            ("growing".to_string(), grow),
            ("unclassified".to_string(), unc),
        ]),
        files: hash_files(&files)?,
    };
    write_file(dir, "manifest.json", &to_json(&manifest)?)?;
    Ok(())
}

fn simulate_with(
    cfg: &RunConfig,
    field: &RateField,
    spectral: Option<&SpectralData>,
    opts: &RunOptions,
) -> Result<EnsembleStats> {
    let ec = ensemble_config(cfg, spectral)?;
    let stats = run_ensemble(field, &ec, spectral)?;
    write_ensemble(&stats, spectral, &config_hash(cfg), opts)?;
    Ok(stats)
}

pub fn config_hash(cfg: &RunConfig) -> String {
    sha256_hex(cfg.canonical_json().as_bytes())
}

pub fn cmd_simulate(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let cfg = effective_config(cfg, opts);
    let field = cfg.validate()?;
    let sp = optional_spectrum(&cfg, &field)?;
    simulate_with(&cfg, &field, sp.as_ref().map(|s| &s.data), opts)?;
    Ok(Outcome::Pass)
}

/// Loads `ensemble.json` from the output directory when its manifest was
/// produced by the same configuration.
fn load_ensemble(cfg: &RunConfig, opts: &RunOptions) -> Option<EnsembleStats> {
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(opts.out.join("manifest.json")).ok()?).ok()?;
    if manifest.get("config_hash")?.as_str()? != config_hash(cfg) {
        return None;
    }
    serde_json::from_str(&std::fs::read_to_string(opts.out.join("ensemble.json")).ok()?).ok()
}

fn ensemble_for(cfg: &RunConfig, field: &RateField, sp: Option<&Spectrum>, opts: &RunOptions) -> Result<EnsembleStats> {
    match load_ensemble(cfg, opts) {
        Some(s) => Ok(s),
        None => simulate_with(cfg, field, sp.map(|s| &s.data), opts),
    }
}

/// All reports applicable to the configuration.
pub fn build_reports(
    cfg: &RunConfig,
    field: &RateField,
    sp: Option<&Spectrum>,
    stats: &EnsembleStats,
) -> Result<Vec<TheoremReport>> {
    let a = &cfg.analysis;
    let mut opts = a.options.clone();
    let data = sp.map(|s| &s.data);
    if let Some(d) = data {
        // Keep at least the last two observations in the growth fit.
        let times = stats.obs_times();
        let latest = if times.len() >= 2 { times[times.len() - 2] } else { 0.0 };
        opts.tail_start = (a.tail_start_lambda / d.lambda0).min(latest);
    }
    let mut reports = Vec::new();
    reports.push(growth_rate_fit(stats, data.map_or(0.0, |d| d.lambda0), &opts)?);
    if let Some(s) = sp {
        reports.push(martingale_check(stats, &s.data, &opts)?);
        if stats.obs_times().len() >= 2 {
            reports.push(variance_stability_check(stats, &s.data, &opts)?);
        }
        if stats.obs_times().len() >= 6 {
            reports.push(trajectory_check(stats, &s.data, &opts)?);
        }
    }
    for &n in &a.moment_orders {
        reports.push(limit_moment_check(stats, sp.map(|s| (&s.moments, &s.data)), n, &opts)?);
    }
    if let Some(d) = data {
        for j in 0..stats.config.regions.len() {
            reports.push(domain_fraction_check(stats, d, j, &opts)?);
        }
        for j in 0..stats.config.windows.len() {
            reports.push(moving_window_check(stats, d, j, &opts)?);
        }
    }
    reports.push(front_speed_check(stats, data, &a.covering_windows, &opts)?);
    let longer = if a.dichotomy_doubling {
        let mut ec = stats.config.clone();
        ec.t_end *= 2.0;
        ec.obs_times = vec![ec.t_end];
        Some(run_ensemble(field, &ec, None)?)
    } else {
        None
    };
    let never_branch = match (&cfg.extinction, field.dim() >= 3) {
        (Some(e), true) => {
            let g = Grid::radial(field.dim(), e.extent, e.intervals)?;
            let t = solve_m(field, &g, 1, Variant::FeynmanKac)?;
            Some(t.value_at(1, &stats.config.x0)?)
        }
        _ => None,
    };
    reports.push(dichotomy_check(field, stats, longer.as_ref(), never_branch, &opts)?);
    Ok(reports)
}

fn report_table(reports: &[TheoremReport]) -> String {
    let mut s = format!(
        "{:<22} {:<32} {:>14} {:>14} {:>12} {:>7} {:>18}\n",
        "id", "theorem", "predicted", "estimate", "std_error", "n", "status"
    );
    for r in reports {
        s.push_str(&format!(
            "{:<22} {:<32} {:>14.6e} {:>14.6e} {:>12.3e} {:>7} {:>18}\n",
            r.id,
            r.theorem,
            r.predicted,
            r.estimate,
            r.std_error,
            r.replicas,
            format!("{:?}", r.status)
        ));
    }
    s
}

fn check_outcome(reports: &[TheoremReport]) -> Outcome {
    if reports.iter().any(|r| r.status == Status::Fail) {
        Outcome::CheckFailure
    } else {
        Outcome::Pass
    }
}

fn write_reports(
    stats: &EnsembleStats,
    sp: Option<&Spectrum>,
    reports: &[TheoremReport],
    opts: &RunOptions,
) -> Result<()> {
    write_file(&opts.out, "reports.json", &to_json(reports)?)?;
    write_file(&opts.out, "reports.txt", &report_table(reports))?;
    if let Some(s) = sp {
        let d = &s.data;
        let x0 = &stats.config.x0;
        let n_pred = d.psi_at(x0) * d.total_integral();
        let mut growth = Table::new(["time", "mean", "se", "prediction"]);
        let mut mart = Table::new(["time", "mean", "se", "prediction"]);
        for (k, &t) in stats.obs_times().iter().enumerate() {
            let reps: Vec<_> = stats.observed_at(k).collect();
            let n: Vec<f64> = reps.iter().map(|r| r.counts[k] as f64).collect();
            let e = (-d.lambda0 * t).exp();
            let m: Vec<f64> = reps
                .iter()
                .map(|r| r.psi_sum.get(k).copied().unwrap_or(f64::NAN) * e)
                .collect();
            growth.push(vec![t, mean(&n), std_error(&n), n_pred / e]);
            mart.push(vec![t, mean(&m), std_error(&m), d.psi_at(x0)]);
        }
        growth.write(&opts.out, "check_growth", opts.format)?;
        mart.write(&opts.out, "check_martingale", opts.format)?;
    }
    Ok(())
}

pub fn cmd_verify(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let cfg = effective_config(cfg, opts);
    let field = cfg.validate()?;
    let sp = optional_spectrum(&cfg, &field)?;
    let stats = ensemble_for(&cfg, &field, sp.as_ref(), opts)?;
    let reports = build_reports(&cfg, &field, sp.as_ref(), &stats)?;
    write_reports(&stats, sp.as_ref(), &reports, opts)?;
    print!("{}", report_table(&reports));
    Ok(check_outcome(&reports))
}

#[derive(Serialize)]
struct ExtinctionSummary {
    x0: Vec<f64>,
    tables: Vec<ExtinctionHeader>,
    feynman_kac_mc: Option<(f64, f64)>,
    reports: Vec<TheoremReport>,
}

#[derive(Serialize)]
struct ExtinctionHeader {
    variant: Variant,
    nmax: usize,
    grid: Grid,
    at_x0: Vec<f64>,
    far_field: Vec<f64>,
}

pub fn solve_extinction(cfg: &RunConfig, field: &RateField) -> Result<Vec<ExtinctionTable>> {
    if field.dim() < 3 {
        return Err(Error::DimensionTooLow(field.dim()));
    }
    let (extent, intervals, nmax) = match &cfg.extinction {
        Some(e) => (e.extent, e.intervals, e.nmax),
        None => (cfg.grid.extent, cfg.grid.intervals, 3),
    };
    let grid = Grid::radial(field.dim(), extent, intervals)?;
    [Variant::Uncorrected, Variant::FeynmanKac]
        .into_iter()
        .map(|v| solve_m(field, &grid, nmax, v))
        .collect()
}

pub fn cmd_extinction(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let cfg = effective_config(cfg, opts);
    let field = cfg.validate()?;
    let tables = solve_extinction(&cfg, &field)?;
    let x0 = start_point(&cfg, field.dim());
    let mut headers = Vec::new();
    for t in &tables {
        let mut cols = vec!["radius".to_string()];
        cols.extend((1..=t.nmax).map(|n| format!("M{n}")));
        let mut table = Table::new(cols);
        for (i, r) in t.grid.coords().iter().enumerate() {
            let mut row = vec![*r];
            row.extend(t.values.iter().map(|v| v[i]));
            table.push(row);
        }
        table.write(&opts.out, &format!("extinction_{}", t.variant.name()), opts.format)?;
        headers.push(ExtinctionHeader {
            variant: t.variant,
            nmax: t.nmax,
            grid: t.grid.clone(),
            at_x0: (1..=t.nmax).map(|n| t.value_at(n, &x0)).collect::<Result<_>>()?,
            far_field: t.values.iter().map(|v| *v.last().expect("non-empty grid")).collect(),
        });
    }
    let mut outcome = Outcome::Pass;
    let mut reports = Vec::new();
    let mut fk_mc = None;
    if cfg.mc.is_some() {
        let spec = cfg.extinction.clone();
        let seed = cfg.mc.as_ref().and_then(|m| m.seed).unwrap_or(0);
        if let Some(e) = &spec {
            fk_mc = Some(feynman_kac_mc(&field, &x0, e.fk_samples, e.fk_dt, seed)?);
        }
        let sp = optional_spectrum(&cfg, &field)?;
        let stats = ensemble_for(&cfg, &field, sp.as_ref(), opts)?;
        let nmax = tables.iter().map(|t| t.nmax).max().unwrap_or(1);
        for n in 1..=nmax {
            reports.push(compare_m_to_mc(&tables, &stats, n, &cfg.analysis.options)?);
        }
        outcome = if reports[0].passed() {
            Outcome::Pass
        } else {
            Outcome::CheckFailure
        };
        if let (Some((m, se)), Some(fk)) = (fk_mc, tables.iter().find(|t| t.variant == Variant::FeynmanKac)) {
            let pred = fk.value_at(1, &x0)?;
            let ok = (m - pred).abs() <= cfg.analysis.options.tolerance.max(cfg.analysis.options.z * se);
            if !ok {
                outcome = Outcome::CheckFailure;
            }
        }
    }
    let summary = ExtinctionSummary {
        x0,
        tables: headers,
        feynman_kac_mc: fk_mc,
        reports,
    };
    write_file(&opts.out, "extinction.json", &to_json(&summary)?)?;
    Ok(outcome)
}

pub fn cmd_all(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let cfg = effective_config(cfg, opts);
    let field = cfg.validate()?;
    let sp = solve_spectrum(&cfg, &field)?;
    write_spectrum(&cfg, &sp, opts)?;
    let mut outcome = Outcome::Pass;
    if cfg.mc.is_some() {
        let stats = simulate_with(&cfg, &field, Some(&sp.data), opts)?;
        let reports = build_reports(&cfg, &field, Some(&sp), &stats)?;
        write_reports(&stats, Some(&sp), &reports, opts)?;
        print!("{}", report_table(&reports));
        outcome = check_outcome(&reports);
    }
    if field.dim() >= 3 && cfg.extinction.is_some() {
        outcome = outcome.and(cmd_extinction(&cfg, opts)?);
    }
    Ok(outcome)
}

/// Resolves the output directory: the flag wins over the configuration.
pub fn output_dir(cfg: &RunConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| {
            cfg.output.as_ref().map(|p| {
                if p.is_absolute() {
                    p.clone()
                } else {
                    cfg.base_dir.join(p)
                }
            })
        })
        .unwrap_or_else(|| PathBuf::from("out"))
}
