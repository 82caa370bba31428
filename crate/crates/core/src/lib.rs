//! Lottery (relaxed) Walrasian equilibria for exchange economies with a finite
//! consumption set and arbitrary, possibly nonconvex, preferences.
//!
//! Agents may consume lotteries over bundles and rank them by expected
//! utility; budgets price the mean bundle. With that relaxation an equilibrium
//! with free disposal always exists, and when agents are slices of a
//! continuum it can be purified back into an ordinary Walrasian equilibrium.
//!
//! The numerical core is generic over [`Scalar`] (`f64` and `f32`); the
//! aliases below fix the scalar for the common cases. File formats and the
//! command-line tool work in `f64`.

pub mod demand;
pub mod economy;
pub mod io;
pub mod purification;
pub mod scalar;
pub mod scenarios;
pub mod solver;

pub use demand::{
    barycenter, budget_set, characterization_check, expected_utility, gamma_check, pure_demand,
    relaxed_budget_check, relaxed_demand_face, relaxed_value, satiation_lottery_check, CharacterizationReport,
    DemandError, DemandFace, PureDemandVariant,
};
pub use economy::{
    mean_endowment, satiation_set, validate_assumption1, validate_assumption2iii, validate_assumption3, Agent,
    CommodityVector, ConstraintMode, ConsumptionSet, EconomyError, Price, PriceError, ValidationReport,
};
pub use purification::{density_refine, round_purify, split_purify, PurificationReport, SliceAllocation};
pub use scalar::Scalar;
pub use scenarios::{
    envy_check, make_envy_free_economy, make_indivisible_economy, random_economy, GeneratorParams,
};
pub use solver::{
    min_residual, simplicial_solve, tatonnement_solve, verify_certificate, walras_value_check,
    EquilibriumCertificate, ExcessResidual, Method, SolveError, SolverConfig,
};

pub use economy::Economy;
pub use demand::Lottery;

pub type Economy64 = Economy<f64>;
pub type Economy32 = Economy<f32>;
pub type Lottery64 = Lottery<f64>;
pub type Lottery32 = Lottery<f32>;
pub type Price64 = Price<f64>;
pub type Price32 = Price<f32>;
pub type Certificate64 = EquilibriumCertificate<f64>;
pub type Certificate32 = EquilibriumCertificate<f32>;
pub type SliceAllocation64 = SliceAllocation<f64>;
