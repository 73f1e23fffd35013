//! Sequential two-part tariffs for buyers with matroid-constrained additive
//! values: distributions, matroids, mechanisms, exact oracles, bound
//! certificates and the symmetric-agent synthesis pipeline.

pub mod coretail;
pub mod dist;
pub mod error;
pub mod instance;
pub mod lp;
pub mod matroid;
pub mod mechanism;
pub mod oracle;
pub mod rational;
pub mod rng;
pub mod symmetric;
pub mod valuation;

pub use dist::{IronedCurve, ProductDist, Side, ValueDist};
pub use error::{Error, Result};
pub use matroid::{ItemSet, Matroid, MatroidSpec};
pub use mechanism::{
    run_sequential, run_single, satisfies_ex_ante, stitch, Agent, EvalMode, ExAnteConstraint, Mechanism,
    SequentialTariff, TwoPartTariff,
};
pub use rational::Rational;
pub use valuation::{BuyerType, Demand};
