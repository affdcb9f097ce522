//! Deterministic equilibrium portfolio strategies under random risk aversion.
//!
//! The engine is organized around a small pipeline:
//!
//! * [`riskdist`]: the law of the random risk aversion `R` and its
//!   transform-level quantities (Laplace transform, weighted moment, CDF).
//! * [`kernel`]: the preference kernel `h`, its reciprocal-square integral
//!   `H`, the inverse `H^{-1}`, the objective exponent `L`, and regime
//!   classification of `H` at zero and infinity.
//! * [`market`]: deterministic piecewise-constant market coefficients and
//!   the accumulated-opportunity curve with its generalized inverse.
//! * [`equilibrium`]: regime classification, strategy curves, the
//!   `T0`-indexed family, optimal-equilibrium selection, and the objective.
//! * [`statics`]: comparative statics under stochastic orders: pointwise
//!   comparison, single-crossing detection, reversal horizons, aggregation.
//! * [`verify`]: independent oracles: Monte Carlo wealth simulation and
//!   the first-order perturbation slope test.

pub mod config;
pub mod equilibrium;
pub mod error;
pub mod kernel;
pub mod market;
pub mod numeric;
pub mod riskdist;
pub mod statics;
pub mod verify;

pub use config::Tolerances;
pub use equilibrium::{
    classify, exposure_asymptotics, kernel_sequence_convergence, optimal_equilibrium,
    solve_family_member, solve_unique, AsymptoticsReport,
    EquilibriumReport, OptimalOutcome, Regime, StrategyCurve, TeeSet,
};
pub use error::EqportError;
pub use kernel::{HInfinity, HZeroRegime, PreferenceKernel};
pub use market::{MarketModel, OpportunityCurve};
pub use riskdist::{Mean, OrderVerdict, RiskAversionDistribution};
pub use statics::{
    compare_pointwise, find_crossing, reversal_horizon, solve_best, ComparisonReport,
    CrossingOutcome, CrossingReport, ReversalOutcome, SweepParam, TwoPointLaw,
};
pub use verify::{
    equilibrium_certificate, mc_objective, perturbation_slope, CertificateConfig,
    CertificateReport, McEstimate, PerturbationProbe, SimConfig, SlopeReport,
};
