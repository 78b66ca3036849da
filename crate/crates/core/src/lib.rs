//! Branching Brownian motion in a localized branching-rate field: spectral
//! theory of `½Δ + v`, limit moments, exact Monte Carlo simulation, and
//! statistical checks of the long-time behaviour.

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod extinction;
pub mod grid;
pub mod mc_engine;
pub mod moments;
pub mod output;
pub mod pipeline;
pub mod rate_field;
pub mod region;
pub mod spectral;
pub mod stats;
pub mod tridiag;

pub use analysis::{AnalysisOptions, Status, TheoremReport};
pub use error::{Error, Result};
pub use extinction::{compare_m_to_mc, feynman_kac_mc, solve_m, ExtinctionTable, Variant};
pub use grid::{Geometry, Grid};
pub use mc_engine::{
    count_in, run_ensemble, simulate_replica, EnsembleConfig, EnsembleStats, ParticleSnapshot, Survival, Window,
};
pub use moments::{compute_f, g_window, xi_moment, MomentTable};
pub use rate_field::{RateField, RateProfile};
pub use region::Region;
pub use spectral::{discretize, principal_eigenpair, resolvent_apply, OperatorMatrix, SpectralData};
