//! Verdicts comparing ensemble statistics with spectral predictions.
//!
//! Every predicted value is computed from spectral or moment data only.
//! Checks use the replicas that have data at the observation times they
//! need; exploded replicas are counted separately in `details`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc_engine::{EnsembleStats, ReplicaRecord, Survival};
use crate::moments::{g_window, xi_moment, MomentTable};
use crate::rate_field::RateField;
use crate::spectral::SpectralData;
use crate::stats::{covariance, linear_fit, mean, ratio_of_means, std_error, variance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// No positive eigenvalue, so the prediction does not exist.
    NotSupercritical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub id: String,
    pub theorem: String,
    pub statistic: String,
    pub predicted: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub tolerance: f64,
    pub z: f64,
    pub status: Status,
    pub replicas: usize,
    pub horizon: f64,
    pub details: BTreeMap<String, f64>,
    pub note: String,
}

impl TheoremReport {
    fn new(id: &str, theorem: &str, statistic: &str, stats: &EnsembleStats, opts: &AnalysisOptions) -> Self {
        TheoremReport {
            id: id.into(),
            theorem: theorem.into(),
            statistic: statistic.into(),
            predicted: f64::NAN,
            estimate: f64::NAN,
            std_error: f64::NAN,
            tolerance: opts.tolerance,
            z: opts.z,
            status: Status::Fail,
            replicas: 0,
            horizon: stats.obs_times().last().copied().unwrap_or(stats.config.t_end),
            details: BTreeMap::new(),
            note: String::new(),
        }
    }

    /// `|estimate - predicted| <= max(tolerance, z·se)`.
    fn gate_two_sided(mut self) -> Self {
        let ok = (self.estimate - self.predicted).abs() <= self.tolerance.max(self.z * self.std_error);
        self.status = if ok { Status::Pass } else { Status::Fail };
        self
    }

    fn require(mut self, ok: bool, why: &str) -> Self {
        if !ok && self.status == Status::Pass {
            self.status = Status::Fail;
        }
        if !ok {
            self.push_note(why);
        }
        self
    }

    fn push_note(&mut self, msg: &str) {
        if !self.note.is_empty() {
            self.note.push_str("; ");
        }
        self.note.push_str(msg);
    }

    fn not_supercritical(mut self) -> Self {
        self.status = Status::NotSupercritical;
        self.push_note("no positive eigenvalue: prediction undefined");
        self
    }

    fn fail(mut self, why: &str) -> Self {
        self.status = Status::Fail;
        self.push_note(why);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    fn detail(&mut self, key: &str, value: f64) {
        self.details.insert(key.into(), value);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    pub z: f64,
    pub tolerance: f64,
    /// Growth fits use observation times at or after this time.
    pub tail_start: f64,
    /// Half-width of the front band as a fraction of `b`.
    pub front_delta: f64,
    pub front_confidence: f64,
    /// Replicas count as surviving at the final horizon when they hold at
    /// least this many particles.
    pub survival_min_count: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            z: 3.0,
            tolerance: 0.0,
            tail_start: 0.0,
            front_delta: 0.15,
            front_confidence: 0.95,
            survival_min_count: 100,
        }
    }
}

/// Smallest reported standard error, so that exact agreement still has a
/// positive error bar.
const SE_FLOOR: f64 = 1e-300;

fn complete_through(stats: &EnsembleStats, k: usize) -> Vec<&ReplicaRecord> {
    stats.observed_at(k).collect()
}

fn final_index(stats: &EnsembleStats) -> Result<usize> {
    stats
        .obs_times()
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::Invalid("ensemble has no observation times".into()))
}

fn count_excluded(report: &mut TheoremReport, stats: &EnsembleStats, used: usize) {
    report.detail("excluded_replicas", (stats.replicas.len() - used) as f64);
}

/// Least-squares slope of `log mean N_t` over the observation times at or
/// after `opts.tail_start`. The standard error follows from the delta method
/// with the full covariance of the per-time means.
pub fn growth_rate_fit(stats: &EnsembleStats, predicted: f64, opts: &AnalysisOptions) -> Result<TheoremReport> {
    let mut rep = TheoremReport::new(
        "growth_rate",
        "mean growth at rate λ₀",
        "slope of log mean N_t",
        stats,
        opts,
    );
    let idx: Vec<usize> = (0..stats.obs_times().len())
        .filter(|&k| stats.obs_times()[k] >= opts.tail_start)
        .collect();
    if idx.len() < 2 {
        return Err(Error::Invalid("growth fit needs at least two observation times".into()));
    }
    let last = *idx.last().unwrap();
    let reps = complete_through(stats, last);
    if reps.len() < 2 {
        return Ok(rep.fail("fewer than two replicas reached the fit window"));
    }
    let series: Vec<Vec<f64>> = idx
        .iter()
        .map(|&k| reps.iter().map(|r| r.counts[k] as f64).collect())
        .collect();
    let means: Vec<f64> = series.iter().map(|s| mean(s)).collect();
    let t: Vec<f64> = idx.iter().map(|&k| stats.obs_times()[k]).collect();
    let logs: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let (slope, _) = linear_fit(&t, &logs);
    let tm = mean(&t);
    let sxx: f64 = t.iter().map(|x| (x - tm).powi(2)).sum();
    let c: Vec<f64> = t.iter().zip(&means).map(|(x, m)| (x - tm) / (sxx * m)).collect();
    let n = reps.len() as f64;
    let mut var = 0.0;
    for j in 0..c.len() {
        for k in 0..c.len() {
            var += c[j] * c[k] * covariance(&series[j], &series[k]) / n;
        }
    }
    rep.predicted = predicted;
    rep.estimate = slope;
    rep.std_error = var.max(0.0).sqrt().max(SE_FLOOR);
    rep.replicas = reps.len();
    rep.detail("fit_start", t[0]);
    rep.detail("fit_end", t[t.len() - 1]);
    count_excluded(&mut rep, stats, reps.len());
    Ok(rep.gate_two_sided())
}

/// Scaled counts `N_t e^{-λ₀t}` at observation `k` for the given replicas.
fn scaled_counts(reps: &[&ReplicaRecord], stats: &EnsembleStats, lambda0: f64, k: usize) -> Vec<f64> {
    let e = (-lambda0 * stats.obs_times()[k]).exp();
    reps.iter().map(|r| r.counts[k] as f64 * e).collect()
}

/// `E[(N_T e^{-λ₀T})ⁿ]` at the last observation against `(∫ψ)ⁿ f_n(x₀)`.
pub fn limit_moment_check(
    stats: &EnsembleStats,
    moments: Option<(&MomentTable, &SpectralData)>,
    n: usize,
    opts: &AnalysisOptions,
) -> Result<TheoremReport> {
    let id = format!("limit_moment_{n}");
    let mut rep = TheoremReport::new(
        &id,
        "limit moments of N_t e^{-λ₀t}",
        "mean of (N_T e^{-λ₀T})^n",
        stats,
        opts,
    );
    let (table, sp) = match moments {
        Some(m) => m,
        None => {
            let k = final_index(stats)?;
            let reps = complete_through(stats, k);
            rep.estimate = mean(&reps.iter().map(|r| r.counts[k] as f64).collect::<Vec<_>>());
            rep.replicas = reps.len();
            return Ok(rep.not_supercritical());
        }
    };
    let k = final_index(stats)?;
    let reps = complete_through(stats, k);
    if reps.len() < 2 {
        return Ok(rep.fail("fewer than two replicas reached the final horizon"));
    }
    let w: Vec<f64> = scaled_counts(&reps, stats, sp.lambda0, k)
        .into_iter()
        .map(|x| x.powi(n as i32))
        .collect();
    rep.predicted = xi_moment(table, sp, n, &stats.config.x0)?;
    rep.estimate = mean(&w);
    rep.std_error = std_error(&w).max(SE_FLOOR);
    rep.replicas = reps.len();
    count_excluded(&mut rep, stats, reps.len());
    Ok(rep.gate_two_sided())
}

/// Replicas observed at `k` that hold at least `opts.survival_min_count`
/// particles. Replicas whose single particle is still away from the support
/// have `n_T(U)/N_T` far from its limit for a long time; the threshold
/// restricts to replicas that have started to grow.
fn surviving<'a>(stats: &'a EnsembleStats, k: usize, opts: &AnalysisOptions) -> Vec<&'a ReplicaRecord> {
    stats
        .observed_at(k)
        .filter(|r| r.counts[k] >= opts.survival_min_count)
        .collect()
}

/// Mean of `n_T(U)/N_T` over surviving replicas at the last observation
/// against `α(U)`.
pub fn domain_fraction_check(
    stats: &EnsembleStats,
    spectral: &SpectralData,
    region: usize,
    opts: &AnalysisOptions,
) -> Result<TheoremReport> {
    let u = stats
        .config
        .regions
        .get(region)
        .ok_or_else(|| Error::Invalid(format!("no region with index {region}")))?;
    let id = format!("domain_fraction_{region}");
    let mut rep = TheoremReport::new(&id, "spatial fraction tends to α(U)", "mean of n_T(U)/N_T", stats, opts);
    let k = final_index(stats)?;
    let reps = surviving(stats, k, opts);
    if reps.len() < 2 {
        return Ok(rep.fail("fewer than two surviving replicas at the final horizon"));
    }
    let frac: Vec<f64> = reps
        .iter()
        .map(|r| r.region_counts[region][k] as f64 / r.counts[k] as f64)
        .collect();
    rep.predicted = spectral.alpha(u);
    rep.estimate = mean(&frac);
    rep.std_error = std_error(&frac).max(SE_FLOOR);
    rep.replicas = reps.len();
    count_excluded(&mut rep, stats, reps.len());
    Ok(rep.gate_two_sided())
}

/// Ratio of the two estimators of `Eξ`: mean of `n_t(U + tv)/g(t)` over mean
/// of `N_t e^{-λ₀t}`, at the last observation; the ratio at the last three
/// observations is reported as its drift.
pub fn moving_window_check(
    stats: &EnsembleStats,
    spectral: &SpectralData,
    window: usize,
    opts: &AnalysisOptions,
) -> Result<TheoremReport> {
    let w = stats
        .config
        .windows
        .get(window)
        .ok_or_else(|| Error::Invalid(format!("no window with index {window}")))?;
    let id = format!("moving_window_{window}");
    let mut rep = TheoremReport::new(
        &id,
        "moving window grows like g(t)",
        "mean n_t(U+tv)/g(t) over mean N_t e^{-λ₀t}",
        stats,
        opts,
    );
    let last = final_index(stats)?;
    let reps = complete_through(stats, last);
    if reps.len() < 2 {
        return Ok(rep.fail("fewer than two replicas reached the final horizon"));
    }
    let ratio_at = |k: usize| -> Result<(f64, f64)> {
        let g = g_window(spectral, &w.region, &w.velocity, stats.obs_times()[k])?;
        let x: Vec<f64> = reps.iter().map(|r| r.window_counts[window][k] as f64 / g).collect();
        let y = scaled_counts(&reps, stats, spectral.lambda0, k);
        Ok(ratio_of_means(&x, &y))
    };
    let (r, se) = ratio_at(last)?;
    let first = last.saturating_sub(2);
    let recent: Vec<f64> = (first..=last)
        .map(|k| ratio_at(k).map(|p| p.0))
        .collect::<Result<_>>()?;
    let hi = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = recent.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.predicted = 1.0;
    rep.estimate = r;
    rep.std_error = se.max(SE_FLOOR);
    rep.replicas = reps.len();
    rep.detail("speed", crate::rate_field::norm(&w.velocity));
    rep.detail("front_speed", spectral.front_speed());
    rep.detail("drift_last_three", hi - lo);
    count_excluded(&mut rep, stats, reps.len());
    Ok(rep.gate_two_sided())
}

/// Fraction of surviving replicas with `R_T/T` within `b(1 ± δ)` at the
/// last observation; passes when it reaches the configured confidence. Windows
/// listed in `covering` must also hold a particle in that fraction of
/// replicas.
pub fn front_speed_check(
    stats: &EnsembleStats,
    spectral: Option<&SpectralData>,
    covering: &[usize],
    opts: &AnalysisOptions,
) -> Result<TheoremReport> {
    let mut rep = TheoremReport::new(
        "front_speed",
        "front speed b",
        "fraction with R_T/T in b(1 ± δ)",
        stats,
        opts,
    );
    let k = final_index(stats)?;
    let reps = surviving(stats, k, opts);
    let sp = match spectral {
        Some(s) => s,
        None => return Ok(rep.not_supercritical()),
    };
    let b = sp.front_speed();
    let t = stats.obs_times()[k];
    rep.predicted = opts.front_confidence;
    rep.replicas = reps.len();
    rep.detail("front_speed", b);
    rep.detail("band_lo", b * (1.0 - opts.front_delta));
    rep.detail("band_hi", b * (1.0 + opts.front_delta));
    rep.detail("exploded", stats.exploded() as f64);
    count_excluded(&mut rep, stats, reps.len());
    if reps.is_empty() {
        return Ok(rep.fail("no surviving replica reached the final horizon below the cap"));
    }
    let inside: Vec<f64> = reps
        .iter()
        .map(|r| {
            let s = r.max_radius[k] / t;
            f64::from(u8::from((s - b).abs() <= opts.front_delta * b))
        })
        .collect();
    let speeds: Vec<f64> = reps.iter().map(|r| r.max_radius[k] / t).collect();
    rep.detail("mean_speed", mean(&speeds));
    rep.estimate = mean(&inside);
    rep.std_error = std_error(&inside).max(SE_FLOOR);
    rep.status = if rep.estimate >= rep.predicted {
        Status::Pass
    } else {
        Status::Fail
    };
    for &j in covering {
        if j >= stats.config.windows.len() {
            return Err(Error::Invalid(format!("no window with index {j}")));
        }
        let hit = reps.iter().filter(|r| r.window_counts[j][k] >= 1).count() as f64 / reps.len() as f64;
        rep.detail(&format!("covering_{j}"), hit);
        rep = rep.require(hit >= opts.front_confidence, &format!("window {j} empty too often"));
    }
    Ok(rep)
}

fn finite_indicator(r: &ReplicaRecord) -> f64 {
    f64::from(u8::from(r.survival == Survival::Finite))
}

/// Growth/finiteness dichotomy. `longer` is the same ensemble (same seed
/// and replica count) run to a longer horizon, so that horizon effects are
/// measured on paired replicas. `never_branch` is the independently computed
/// probability that the first particle never splits.
pub fn dichotomy_check(
    field: &RateField,
    stats: &EnsembleStats,
    longer: Option<&EnsembleStats>,
    never_branch: Option<f64>,
    opts: &AnalysisOptions,
) -> Result<TheoremReport> {
    let mut rep = TheoremReport::new("dichotomy", "growth or finite limit", "finite fraction", stats, opts);
    let (fin, grow, unc) = stats.survival_fractions();
    let n = stats.replicas.len();
    let f: Vec<f64> = stats.replicas.iter().map(finite_indicator).collect();
    rep.replicas = n;
    rep.estimate = fin;
    rep.std_error = std_error(&f).max(SE_FLOOR);
    rep.detail("finite", fin);
    rep.detail("growing", grow);
    rep.detail("unclassified", unc);
    rep.detail("return_distance", stats.return_distance);
    if field.is_zero() {
        rep.predicted = 1.0;
        return Ok(rep.gate_two_sided());
    }
    rep.status = Status::Pass;
    rep = rep.require(unc < 0.01, "unclassified fraction is not below 1%");
    let transient = stats.dim >= 3;
    if let Some(long) = longer {
        if long.replicas.len() != n || long.config.seed != stats.config.seed || long.config.t_end <= stats.config.t_end
        {
            return Err(Error::Invalid(
                "horizon comparison needs the same seed and replicas at a longer horizon".into(),
            ));
        }
        let diff: Vec<f64> = long
            .replicas
            .iter()
            .zip(&stats.replicas)
            .map(|(a, b)| finite_indicator(a) - finite_indicator(b))
            .collect();
        let d = mean(&diff);
        let se = std_error(&diff);
        rep.detail("finite_longer", long.survival_fractions().0);
        rep.detail("finite_change", d);
        rep.detail("finite_change_se", se);
        rep.detail("unclassified_longer", long.survival_fractions().2);
        if transient {
            rep = rep.require(
                d.abs() < 2.0 * se.max(SE_FLOOR) || d == 0.0,
                "finite fraction drifts under horizon doubling",
            );
        } else {
            rep = rep.require(
                d < 0.0 || fin == 0.0,
                "finite fraction does not shrink under horizon doubling",
            );
        }
    }
    if transient {
        rep.predicted = never_branch.unwrap_or(0.0);
        rep = rep.require(fin > 0.0, "no finite replicas");
        if let Some(p) = never_branch {
            let floor = p - opts.z * rep.std_error;
            rep = rep.require(fin >= floor, "finite fraction below the never-branch probability");
        }
    } else {
        rep.predicted = 0.0;
    }
    Ok(rep)
}

/// `e^{-λ₀t} Σψ(X_i(t))` has mean `ψ(x₀)` at every observation time.
pub fn martingale_check(
    stats: &EnsembleStats,
    spectral: &SpectralData,
    opts: &AnalysisOptions,
) -> Result<TheoremReport> {
    let mut rep = TheoremReport::new(
        "psi_martingale",
        "ψ-martingale",
        "mean of e^{-λ₀t} Σψ(X_t)",
        stats,
        opts,
    );
    let last = final_index(stats)?;
    let reps = complete_through(stats, last);
    if reps.len() < 2 || reps[0].psi_sum.is_empty() {
        return Ok(rep.fail("no martingale data recorded"));
    }
    let pred = spectral.psi_at(&stats.config.x0);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut first: Vec<f64> = Vec::new();
    let mut worst_flat: f64 = 0.0;
    for k in 0..=last {
        let e = (-spectral.lambda0 * stats.obs_times()[k]).exp();
        let m: Vec<f64> = reps.iter().map(|r| r.psi_sum[k] * e).collect();
        let (mk, se) = (mean(&m), std_error(&m));
        let z = (mk - pred).abs() / se.max(SE_FLOOR);
        worst = worst.max(z);
        ok &= (mk - pred).abs() <= opts.tolerance.max(opts.z * se);
        if k == 0 {
            first = m.clone();
        } else {
            let diff: Vec<f64> = m.iter().zip(&first).map(|(a, b)| a - b).collect();
            worst_flat = worst_flat.max(mean(&diff).abs() / std_error(&diff).max(SE_FLOOR));
        }
        rep.detail(&format!("mean_t{k:02}"), mk);
        if k == last {
            rep.estimate = mk;
            rep.std_error = se.max(SE_FLOOR);
        }
    }
    rep.predicted = pred;
    rep.replicas = reps.len();
    rep.detail("max_z_vs_prediction", worst);
    rep.detail("max_z_vs_first_time", worst_flat);
    count_excluded(&mut rep, stats, reps.len());
    rep.status = if ok { Status::Pass } else { Status::Fail };
    Ok(rep)
}

/// Variance of `N_t e^{-λ₀t}` at the last two observations; passes when the
/// paired difference is below two standard errors.
pub fn variance_stability_check(
    stats: &EnsembleStats,
    spectral: &SpectralData,
    opts: &AnalysisOptions,
) -> Result<TheoremReport> {
    let mut rep = TheoremReport::new(
        "variance_stability",
        "L² convergence of N_t e^{-λ₀t}",
        "change of Var(N_t e^{-λ₀t})",
        stats,
        opts,
    );
    let last = final_index(stats)?;
    if last == 0 {
        return Err(Error::Invalid("variance stability needs two observation times".into()));
    }
    let reps = complete_through(stats, last);
    if reps.len() < 3 {
        return Ok(rep.fail("too few replicas reached the final horizon"));
    }
    let a = scaled_counts(&reps, stats, spectral.lambda0, last - 1);
    let b = scaled_counts(&reps, stats, spectral.lambda0, last);
    let (ma, mb) = (mean(&a), mean(&b));
    let d: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (y - mb).powi(2) - (x - ma).powi(2))
        .collect();
    rep.predicted = 0.0;
    rep.estimate = variance(&b) - variance(&a);
    rep.std_error = std_error(&d).max(SE_FLOOR);
    rep.z = 2.0;
    rep.replicas = reps.len();
    rep.detail("variance_previous", variance(&a));
    rep.detail("variance_final", variance(&b));
    count_excluded(&mut rep, stats, reps.len());
    let ok = rep.estimate.abs() < rep.z * rep.std_error;
    rep.status = if ok { Status::Pass } else { Status::Fail };
    Ok(rep)
}

/// Trajectory-wise convergence of `N_t e^{-λ₀t}`: the mean over replicas of
/// the relative sup-deviation across the last three observations must be
/// smaller than across the three observations before them.
pub fn trajectory_check(
    stats: &EnsembleStats,
    spectral: &SpectralData,
    opts: &AnalysisOptions,
) -> Result<TheoremReport> {
    let mut rep = TheoremReport::new(
        "trajectory",
        "almost-sure convergence",
        "mean sup-deviation of N_t e^{-λ₀t}",
        stats,
        opts,
    );
    let last = final_index(stats)?;
    if last < 5 {
        return Err(Error::Invalid("trajectory check needs six observation times".into()));
    }
    let reps = complete_through(stats, last);
    if reps.len() < 2 {
        return Ok(rep.fail("fewer than two replicas reached the final horizon"));
    }
    let w: Vec<Vec<f64>> = (0..=last)
        .map(|k| scaled_counts(&reps, stats, spectral.lambda0, k))
        .collect();
    let sup_dev = |end: usize| -> Vec<f64> {
        (0..reps.len())
            .map(|i| {
                let base = w[end][i];
                (end - 2..=end)
                    .map(|k| (w[k][i] - base).abs() / base)
                    .fold(0.0, f64::max)
            })
            .collect()
    };
    let late = sup_dev(last);
    let early = sup_dev(last - 3);
    let diff: Vec<f64> = late.iter().zip(&early).map(|(a, b)| a - b).collect();
    rep.predicted = mean(&early);
    rep.estimate = mean(&late);
    rep.std_error = std_error(&diff).max(SE_FLOOR);
    rep.replicas = reps.len();
    count_excluded(&mut rep, stats, reps.len());
    rep.status = if rep.estimate < rep.predicted {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc_engine::{run_ensemble, EnsembleConfig};
    use crate::region::Region;

    fn free_ensemble() -> (RateField, EnsembleStats) {
        let f = RateField::zero(1);
        let cfg = EnsembleConfig {
            replicas: 20,
            t_end: 4.0,
            obs_times: vec![1.0, 2.0, 3.0, 4.0],
            cap: 10,
            seed: 5,
            x0: vec![0.0],
            regions: vec![Region::everything(1)],
            windows: vec![],
        };
        let s = run_ensemble(&f, &cfg, None).unwrap();
        (f, s)
    }

    #[test]
    fn free_motion_has_zero_growth() {
        let (_, s) = free_ensemble();
        let r = growth_rate_fit(&s, 0.0, &AnalysisOptions::default()).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!(r.passed() && r.std_error > 0.0);
    }

    #[test]
    fn free_motion_is_not_supercritical() {
        let (f, s) = free_ensemble();
        let opts = AnalysisOptions::default();
        assert_eq!(
            limit_moment_check(&s, None, 1, &opts).unwrap().status,
            Status::NotSupercritical
        );
        assert_eq!(
            front_speed_check(&s, None, &[], &opts).unwrap().status,
            Status::NotSupercritical
        );
        let d = dichotomy_check(&f, &s, None, None, &opts).unwrap();
        assert_eq!(d.estimate, 1.0);
        assert!(d.passed());
    }
}
