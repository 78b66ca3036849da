//! Exact Monte Carlo of branching Brownian motion with splitting rate `v(x)`.
//!
//! Near the support, branch times are produced by thinning a Poisson clock
//! of rate `v_max`; Gaussian increments are drawn only at candidate times and
//! observation times, so there is no time-discretization bias. Far from the
//! support (where `v = 0`) a particle is moved in one exact step: the
//! projection of its path onto the outward direction is a 1-D Brownian
//! motion, and the support lies behind the tangent plane at distance `a`,
//! so the first passage to that plane is sampled in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::rate_field::{norm, RateField};
use crate::region::Region;
use crate::spectral::SpectralData;

/// Particle positions at one time, stored flat (`dim` coordinates each).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSnapshot {
    pub time: f64,
    pub dim: usize,
    pub replica: usize,
    pub exploded: bool,
    pub positions: Vec<f64>,
}

impl ParticleSnapshot {
    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn particles(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim)
    }

    /// Largest distance from the origin.
    pub fn max_radius(&self) -> f64 {
        self.particles().map(norm).fold(0.0, f64::max)
    }
}

pub fn count_in(snapshot: &ParticleSnapshot, region: &Region) -> Result<u64> {
    if region.dim() != snapshot.dim {
        return Err(Error::DimensionMismatch {
            expected: snapshot.dim,
            got: region.dim(),
        });
    }
    Ok(snapshot.particles().filter(|x| region.contains(x)).count() as u64)
}

/// How a replica ended, judged at the final time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Survival {
    /// No branch in the last 20% of the horizon and every particle far
    /// enough from the support that a return is unlikely.
    Finite,
    /// Exploded, or branched in the last 20% of the horizon.
    Growing,
    Unclassified,
}

/// Distance from the support beyond which the chance that a Brownian
/// particle ever returns is below `10^-3` (`d >= 3`); zero on the line and
/// unbounded in the plane.
pub fn return_distance(dim: usize, support: f64) -> f64 {
    match dim {
        1 => 0.0,
        2 => f64::INFINITY,
        d => support * 1000f64.powf(1.0 / (d as f64 - 2.0)),
    }
}

/// Outcome of one replica besides what the observer saw.
#[derive(Clone, Debug)]
pub struct ReplicaOutcome {
    pub exploded: bool,
    /// Time of the last accepted split, if any.
    pub last_branch: Option<f64>,
    pub branches: u64,
    /// Positions at `t_end` (absent after an explosion).
    pub last: Option<ParticleSnapshot>,
}

/// Simulates one replica from a single particle at `x0`. `observe` is called
/// with the exact configuration at every observation time reached before
/// the population exceeds `cap`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_replica<R: Rng + ?Sized>(
    field: &RateField,
    x0: &[f64],
    t_end: f64,
    obs_times: &[f64],
    cap: usize,
    replica: usize,
    rng: &mut R,
    mut observe: impl FnMut(&ParticleSnapshot),
) -> ReplicaOutcome {
    let dim = field.dim();
    assert_eq!(x0.len(), dim, "start point has the wrong dimension");
    assert!(cap >= 1, "cap must be positive");
    assert!(
        obs_times.windows(2).all(|w| w[0] <= w[1]) && obs_times.last().is_none_or(|&t| t <= t_end),
        "observation times must be sorted and not exceed t_end"
    );
    let mut mover = Mover::new(field);
    let mut snap = ParticleSnapshot {
        time: 0.0,
        dim,
        replica,
        exploded: false,
        positions: x0.to_vec(),
    };
    let mut starts: Vec<f64> = Vec::new();
    let mut cur = vec![0.0; dim];
    let mut stops: Vec<(f64, bool)> = obs_times.iter().map(|&t| (t, true)).collect();
    if stops.last().is_none_or(|&(t, _)| t < t_end) {
        stops.push((t_end, false));
    }
    for (t1, is_obs) in stops {
        if t1 > snap.time {
            let t0 = snap.time;
            starts.clear();
            starts.resize(snap.len(), t0);
            let mut i = 0;
            while i < starts.len() {
                cur.copy_from_slice(&snap.positions[i * dim..(i + 1) * dim]);
                let mut s = starts[i];
                while let Some(tb) = mover.advance(&mut cur, &mut s, t1, rng) {
                    snap.positions.extend_from_slice(&cur);
                    starts.push(tb);
                    if starts.len() > cap {
                        snap.exploded = true;
                        return ReplicaOutcome {
                            exploded: true,
                            last_branch: mover.last_branch,
                            branches: mover.branches,
                            last: None,
                        };
                    }
                }
                snap.positions[i * dim..(i + 1) * dim].copy_from_slice(&cur);
                i += 1;
            }
            snap.time = t1;
        }
        if is_obs {
            observe(&snap);
        }
    }
    ReplicaOutcome {
        exploded: false,
        last_branch: mover.last_branch,
        branches: mover.branches,
        last: Some(snap),
    }
}

/// Collects every observed snapshot of one replica.
pub fn simulate_replica_snapshots<R: Rng + ?Sized>(
    field: &RateField,
    x0: &[f64],
    t_end: f64,
    obs_times: &[f64],
    cap: usize,
    rng: &mut R,
) -> (Vec<ParticleSnapshot>, ReplicaOutcome) {
    let mut out = Vec::new();
    let outcome = simulate_replica(field, x0, t_end, obs_times, cap, 0, rng, |s| out.push(s.clone()));
    (out, outcome)
}

struct Mover<'a> {
    field: &'a RateField,
    vmax: f64,
    support: f64,
    margin: f64,
    last_branch: Option<f64>,
    branches: u64,
    gauss: Vec<f64>,
}

impl<'a> Mover<'a> {
    fn new(field: &'a RateField) -> Self {
        let vmax = field.max_rate();
        Mover {
            field,
            vmax,
            support: field.support_radius(),
            margin: if vmax > 0.0 { 1.0 / vmax.sqrt() } else { 0.0 },
            last_branch: None,
            branches: 0,
            gauss: vec![0.0; field.dim()],
        }
    }

    /// Moves the particle at `x` from time `*s` towards `t1`. Returns the
    /// time of the next split (with `x` and `*s` at that moment), or `None`
    /// once `t1` is reached.
    fn advance<R: Rng + ?Sized>(&mut self, x: &mut [f64], s: &mut f64, t1: f64, rng: &mut R) -> Option<f64> {
        if self.vmax == 0.0 {
            gaussian_step(x, (t1 - *s).sqrt(), rng);
            *s = t1;
            return None;
        }
        while *s < t1 {
            let r = norm(x);
            if r - self.support > self.margin {
                self.skip(x, r, s, t1, rng);
                continue;
            }
            let remaining = t1 - *s;
            let e: f64 = rng.sample::<f64, _>(Exp1) / self.vmax;
            if e >= remaining {
                gaussian_step(x, remaining.sqrt(), rng);
                *s = t1;
                return None;
            }
            gaussian_step(x, e.sqrt(), rng);
            *s += e;
            let rate = self.field.eval_radius(norm(x));
            if rate > 0.0 && (rate >= self.vmax || rng.random::<f64>() * self.vmax < rate) {
                self.last_branch = Some(*s);
                self.branches += 1;
                return Some(*s);
            }
        }
        None
    }

    /// Exact move of a particle outside the support: either to its first
    /// contact with the tangent plane `{y·u = a}` (`u = x/|x|`), or to `t1`
    /// conditioned on no contact.
    fn skip<R: Rng + ?Sized>(&mut self, x: &mut [f64], r: f64, s: &mut f64, t1: f64, rng: &mut R) {
        let a = self.support;
        let d0 = r - a;
        let remaining = t1 - *s;
        let p_hit = erfc(d0 / (2.0 * remaining).sqrt());
        let u: f64 = rng.random();
        let (proj, dt) = if u < p_hit {
            // τ = d0²/Z² with |Z| = √2 erfc⁻¹(U) is the passage time; τ ≤ Δ ⇔ U < p_hit
            let z = erfc_inv(u);
            let tau = (d0 * d0 / (2.0 * z * z)).min(remaining);
            (a, tau)
        } else {
            let sd = remaining.sqrt();
            let y = loop {
                let y = r + sd * rng.sample::<f64, _>(StandardNormal);
                if y > a && rng.random::<f64>() < -(-2.0 * d0 * (y - a) / remaining).exp_m1() {
                    break y;
                }
            };
            (y, remaining)
        };
        let dim = x.len();
        if dim == 1 {
            x[0] = proj * x[0].signum();
        } else {
            for g in self.gauss.iter_mut() {
                *g = rng.sample(StandardNormal);
            }
            let along: f64 = self.gauss.iter().zip(x.iter()).map(|(g, c)| g * c).sum::<f64>() / r;
            let sd = dt.sqrt();
            for (c, g) in x.iter_mut().zip(&self.gauss) {
                let unit = *c / r;
                *c = proj * unit + sd * (g - along * unit);
            }
        }
        *s = if dt >= remaining { t1 } else { *s + dt };
    }
}

#[inline]
fn gaussian_step<R: Rng + ?Sized>(x: &mut [f64], sd: f64, rng: &mut R) {
    for c in x.iter_mut() {
        *c += sd * rng.sample::<f64, _>(StandardNormal);
    }
}

/// A window `U + t·velocity` counted at each observation time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub region: Region,
    pub velocity: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub replicas: usize,
    pub t_end: f64,
    pub obs_times: Vec<f64>,
    pub cap: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub windows: Vec<Window>,
}

impl EnsembleConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Invalid("replicas must be at least 1".into()));
        }
        if self.cap == 0 {
            return Err(Error::Invalid("cap must be at least 1".into()));
        }
        if self.x0.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.x0.len(),
            });
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Invalid("t_end must be positive".into()));
        }
        let sorted = self.obs_times.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.obs_times.iter().all(|&t| t > 0.0 && t <= self.t_end);
        if !sorted || !in_range {
            return Err(Error::Invalid(
                "obs_times must be increasing and lie in (0, t_end]".into(),
            ));
        }
        for r in &self.regions {
            r.validate(dim)?;
        }
        for w in &self.windows {
            w.region.validate(dim)?;
            if w.velocity.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: w.velocity.len(),
                });
            }
        }
        Ok(())
    }
}

/// Per-replica trajectories. Vectors indexed by observation cover only the
/// observation times reached before an explosion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub stream: u64,
    pub counts: Vec<u64>,
    /// `region_counts[j][k]`: particles in region `j` at observation `k`.
    pub region_counts: Vec<Vec<u64>>,
    pub window_counts: Vec<Vec<u64>>,
    pub max_radius: Vec<f64>,
    /// `Σ_i ψ(X_i(t))`; empty when no spectral data was supplied.
    pub psi_sum: Vec<f64>,
    pub exploded: bool,
    pub last_branch: Option<f64>,
    pub branches: u64,
    /// Population at `t_end` (absent after an explosion).
    pub final_count: Option<u64>,
    pub survival: Survival,
}

impl ReplicaRecord {
    /// Number of observation times with data.
    pub fn observed(&self) -> usize {
        self.counts.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub config: EnsembleConfig,
    pub dim: usize,
    /// Distance used by the survival classification.
    pub return_distance: f64,
    pub replicas: Vec<ReplicaRecord>,
}

fn classify(field: &RateField, t_end: f64, outcome: &ReplicaOutcome, return_distance: f64) -> Survival {
    if outcome.exploded {
        return Survival::Growing;
    }
    if field.is_zero() {
        return Survival::Finite;
    }
    if outcome.last_branch.is_some_and(|t| t > 0.8 * t_end) {
        return Survival::Growing;
    }
    let far = outcome.last.as_ref().is_some_and(|snap| {
        snap.particles()
            .all(|x| norm(x) - field.support_radius() > return_distance)
    });
    if far {
        Survival::Finite
    } else {
        Survival::Unclassified
    }
}

/// RNG for one replica: the ChaCha stream `replica` under key `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Runs one replica and reduces its snapshots to a record.
pub fn run_replica(
    field: &RateField,
    config: &EnsembleConfig,
    psi: Option<&SpectralData>,
    replica: usize,
) -> ReplicaRecord {
    let mut rng = replica_rng(config.seed, replica as u64);
    let nobs = config.obs_times.len();
    let mut rec = ReplicaRecord {
        stream: replica as u64,
        counts: Vec::with_capacity(nobs),
        region_counts: vec![Vec::with_capacity(nobs); config.regions.len()],
        window_counts: vec![Vec::with_capacity(nobs); config.windows.len()],
        max_radius: Vec::with_capacity(nobs),
        psi_sum: Vec::with_capacity(if psi.is_some() { nobs } else { 0 }),
        exploded: false,
        last_branch: None,
        branches: 0,
        final_count: None,
        survival: Survival::Unclassified,
    };
    let outcome = simulate_replica(
        field,
        &config.x0,
        config.t_end,
        &config.obs_times,
        config.cap,
        replica,
        &mut rng,
        |snap| {
            rec.counts.push(snap.len() as u64);
            for (j, r) in config.regions.iter().enumerate() {
                rec.region_counts[j].push(snap.particles().filter(|x| r.contains(x)).count() as u64);
            }
            for (j, w) in config.windows.iter().enumerate() {
                let shift: Vec<f64> = w.velocity.iter().map(|c| c * snap.time).collect();
                let moved = w.region.translated(&shift);
                rec.window_counts[j].push(snap.particles().filter(|x| moved.contains(x)).count() as u64);
            }
            rec.max_radius.push(snap.max_radius());
            if let Some(sp) = psi {
                rec.psi_sum.push(snap.particles().map(|x| sp.psi_at(x)).sum());
            }
        },
    );
    let dist = return_distance(field.dim(), field.support_radius());
    rec.survival = classify(field, config.t_end, &outcome, dist);
    rec.exploded = outcome.exploded;
    rec.last_branch = outcome.last_branch;
    rec.branches = outcome.branches;
    rec.final_count = outcome.last.as_ref().map(|s| s.len() as u64);
    rec
}

/// Runs all replicas in parallel. Each replica owns its RNG stream and the
/// results are collected in replica order, so the output does not depend on
/// the number of worker threads.
pub fn run_ensemble(field: &RateField, config: &EnsembleConfig, psi: Option<&SpectralData>) -> Result<EnsembleStats> {
    config.validate(field.dim())?;
    if let Some(sp) = psi {
        if sp.dim() != field.dim() {
            return Err(Error::DimensionMismatch {
                expected: field.dim(),
                got: sp.dim(),
            });
        }
    }
    let replicas: Vec<ReplicaRecord> = (0..config.replicas)
        .into_par_iter()
        .map(|k| run_replica(field, config, psi, k))
        .collect();
    Ok(EnsembleStats {
        config: config.clone(),
        dim: field.dim(),
        return_distance: return_distance(field.dim(), field.support_radius()),
        replicas,
    })
}

impl EnsembleStats {
    pub fn obs_times(&self) -> &[f64] {
        &self.config.obs_times
    }

    /// Fractions of (finite, growing, unclassified) replicas.
    pub fn survival_fractions(&self) -> (f64, f64, f64) {
        let n = self.replicas.len() as f64;
        let count = |s: Survival| self.replicas.iter().filter(|r| r.survival == s).count() as f64 / n;
        (
            count(Survival::Finite),
            count(Survival::Growing),
            count(Survival::Unclassified),
        )
    }

    pub fn exploded(&self) -> usize {
        self.replicas.iter().filter(|r| r.exploded).count()
    }

    /// Replicas with data at observation `k`.
    pub fn observed_at(&self, k: usize) -> impl Iterator<Item = &ReplicaRecord> {
        self.replicas.iter().filter(move |r| r.observed() > k)
    }
}
