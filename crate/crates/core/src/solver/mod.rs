//! Relaxed Walrasian equilibrium search.
//!
//! Every solver evaluates prices through [`min_residual`], which picks, for a
//! fixed price, the lotteries in each agent's relaxed demand face whose
//! aggregate barycentric excess is closest to the market-constraint cone.
//! A price is an equilibrium exactly when that distance is zero. Solvers only
//! *propose* certificates; [`verify_certificate`] re-derives every clause of
//! the equilibrium definition from the economy and the certificate alone.

mod residual;
mod simplicial;
mod tatonnement;
mod verify;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::Lottery;
use crate::economy::{ConstraintMode, Price};
use crate::scalar::{positive_part_norm, norm2, Scalar};

pub use residual::{min_residual, min_residual_with_slack, MinResidual};
pub use simplicial::simplicial_solve;
pub(crate) use simplicial::lattice_points;
pub use tatonnement::tatonnement_solve;
pub use verify::{certify, verify_certificate, walras_value_check, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Tatonnement,
    Simplicial,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Tatonnement => f.write_str("tatonnement"),
            Method::Simplicial => f.write_str("simplicial"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Price updates per start (tatonnement).
    pub max_iters: usize,
    /// Number of tatonnement starting prices.
    pub starts: usize,
    pub seed: u64,
    /// Lattice points retained per refinement level (simplicial).
    pub beam: usize,
    /// Largest commodity dimension accepted by the simplicial search.
    pub max_dim: usize,
    /// Certificate tolerance on the residual violation and optimality gaps.
    pub tol_cert: f64,
    /// Overrides the economy's market constraint when set.
    pub mode: Option<ConstraintModeConfig>,
    /// Initial tatonnement step; step k is `eta0 / sqrt(k + 1)`.
    pub eta0: f64,
    /// Frank-Wolfe gap tolerance inside `min_residual`.
    pub fw_tol: f64,
    /// Frank-Wolfe sweep cap inside `min_residual`.
    pub fw_max_iters: usize,
    /// Lattice denominator of the coarsest simplicial level.
    pub initial_denominator: u64,
    /// The simplicial search stops at mesh `2^-finest_mesh_exp`.
    pub finest_mesh_exp: u32,
    /// Extra simplicial levels spent trying to shrink the optimality gaps of
    /// a certificate that only verifies with near-optimal lotteries.
    pub polish_levels: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            starts: 8,
            seed: 0,
            beam: 8,
            max_dim: 4,
            tol_cert: 1e-6,
            mode: None,
            eta0: 1.0,
            fw_tol: 1e-10,
            fw_max_iters: 10_000,
            initial_denominator: 8,
            finest_mesh_exp: 20,
            polish_levels: 24,
        }
    }
}

/// Serializable mirror of [`ConstraintMode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintModeConfig {
    Exact,
    FreeDisposal,
}

impl From<ConstraintModeConfig> for ConstraintMode {
    fn from(m: ConstraintModeConfig) -> Self {
        match m {
            ConstraintModeConfig::Exact => ConstraintMode::Exact,
            ConstraintModeConfig::FreeDisposal => ConstraintMode::FreeDisposal,
        }
    }
}

impl From<ConstraintMode> for ConstraintModeConfig {
    fn from(m: ConstraintMode) -> Self {
        match m {
            ConstraintMode::Exact => ConstraintModeConfig::Exact,
            ConstraintMode::FreeDisposal => ConstraintModeConfig::FreeDisposal,
        }
    }
}

/// Aggregate barycentric excess `z = sum mu_i bary(lambda_i) - sum mu_i omega_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessResidual<S> {
    pub excess: Vec<S>,
    /// `|| max(z, 0) ||_2`; zero iff `z` lies in the negative orthant.
    pub violation: S,
}

impl<S: Scalar> ExcessResidual<S> {
    pub fn from_excess(excess: Vec<S>) -> Self {
        let violation = positive_part_norm(&excess);
        Self { excess, violation }
    }

    pub fn norm(&self) -> S {
        norm2(&self.excess)
    }

    /// Distance to the constraint set: the violation under free disposal,
    /// the full norm under exact clearing.
    pub fn distance(&self, mode: ConstraintMode) -> S {
        match mode {
            ConstraintMode::FreeDisposal => self.violation,
            ConstraintMode::Exact => self.norm(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub method: Option<Method>,
    /// Prices at which `min_residual` was evaluated.
    pub evaluations: usize,
    /// Tatonnement steps (summed over starts) or simplicial levels visited.
    pub iterations: usize,
    /// Index of the successful start (tatonnement) or level (simplicial).
    pub accepted_at: Option<usize>,
    /// Whether the Frank-Wolfe solve at the certified price converged.
    pub residual_converged: bool,
    /// Running minimum of the violation, one entry per start or level.
    /// Stored as plain `f64` so traces compare across scalar types.
    pub best_violation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCertificate<S> {
    pub price: Price<S>,
    pub selection: Vec<Lottery<S>>,
    pub residual: ExcessResidual<S>,
    /// `V*(t, p) - EU(lambda(t))` per agent.
    pub per_agent_optimality_gap: Vec<S>,
    /// `<p, omega(t)> - <p, bary(lambda(t))>` per agent.
    pub per_agent_budget_slack: Vec<S>,
    pub mode: ConstraintMode,
    pub solver_trace: SolverTrace,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError<S: Scalar> {
    #[error("no verified equilibrium found (best distance {:e})", .best.residual.distance(.best.mode).to_f64_lossy())]
    NotFound { best: Box<EquilibriumCertificate<S>> },
    #[error("commodity dimension {dimension} exceeds max_dim {max_dim}")]
    DimensionTooLarge { dimension: usize, max_dim: usize },
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

impl<S: Scalar> SolveError<S> {
    /// Best candidate found before giving up, when there is one.
    pub fn best(&self) -> Option<&EquilibriumCertificate<S>> {
        match self {
            SolveError::NotFound { best } => Some(best),
            _ => None,
        }
    }
}

/// Lattice prices stay exactly representable in `f64` up to this depth.
pub(crate) const MAX_MESH_EXP: u32 = 50;

/// Whether every agent's lottery is optimal up to its utility tolerance,
/// not merely up to the certificate tolerance.
pub(crate) fn gaps_within_utility_tolerance<S: Scalar>(
    economy: &crate::Economy<S>,
    cert: &EquilibriumCertificate<S>,
) -> bool {
    economy.agents().iter().zip(&cert.per_agent_optimality_gap).all(|(a, &g)| g <= a.utility_tolerance())
}

/// Largest optimality gap of a certificate.
pub(crate) fn max_gap<S: Scalar>(cert: &EquilibriumCertificate<S>) -> S {
    cert.per_agent_optimality_gap.iter().copied().fold(S::zero(), S::max)
}

/// Verified certificate at `price` using the least face slack that still
/// clears the market, or `None` when even slack `tol / 2` does not.
///
/// Slacks tried form the ladder `tol/2, tol/8, ..., tol/2 * 4^-12`, then the
/// exact faces; the residual is monotone in the slack, so the smallest
/// verifying rung is found by bisection. Also returns the number of
/// `min_residual` evaluations spent.
pub(crate) fn tightest_certificate<S: Scalar>(
    economy: &crate::Economy<S>,
    price: &Price<S>,
    mode: ConstraintMode,
    tol: S,
    config: &SolverConfig,
) -> (Option<EquilibriumCertificate<S>>, usize) {
    const RUNGS: usize = 14;
    let fw_tol = S::from_f64_lossy(config.fw_tol);
    let four = S::from_f64_lossy(4.0);
    let slack_at = |k: usize| -> Option<S> {
        if k + 1 == RUNGS {
            None
        } else {
            Some(tol / (S::one() + S::one()) / four.powi(k as i32))
        }
    };
    let mut evaluations = 0;
    let mut attempt = |k: usize| {
        evaluations += 1;
        let r = min_residual_with_slack(economy, price, mode, slack_at(k), fw_tol, config.fw_max_iters);
        if r.residual.distance(mode) > tol {
            return None;
        }
        let trace = SolverTrace { residual_converged: r.converged, ..SolverTrace::default() };
        let cert = certify(economy, price.clone(), r.selection, mode, trace);
        verify_certificate(economy, &cert, tol).passed().then_some(cert)
    };
    let Some(mut best) = attempt(0) else {
        return (None, evaluations);
    };
    // Invariant: rung `lo` verifies; rungs past `hi` are unexplored or fail.
    let (mut lo, mut hi) = (0, RUNGS - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        match attempt(mid) {
            Some(cert) => {
                best = cert;
                lo = mid;
            }
            None => hi = mid - 1,
        }
    }
    (Some(best), evaluations)
}

pub(crate) fn effective_mode<S: Scalar>(economy: &crate::Economy<S>, config: &SolverConfig) -> ConstraintMode {
    config.mode.map(Into::into).unwrap_or(economy.mode())
}

pub(crate) fn check_config(config: &SolverConfig) -> Result<(), String> {
    if !(config.tol_cert > 0.0) {
        return Err("tol_cert must be positive".into());
    }
    if config.beam == 0 {
        return Err("beam must be at least 1".into());
    }
    if config.starts == 0 {
        return Err("starts must be at least 1".into());
    }
    if config.initial_denominator == 0 {
        return Err("initial_denominator must be at least 1".into());
    }
    if config.finest_mesh_exp > MAX_MESH_EXP {
        return Err(format!("finest_mesh_exp must be at most {MAX_MESH_EXP}"));
    }
    Ok(())
}
