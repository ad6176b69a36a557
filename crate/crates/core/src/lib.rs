//! Online two-stage stochastic optimization with long-term constraints.
//!
//! Each period a first-stage decision `c` is committed before the type `θ`
//! is revealed, then a second-stage decision `x ∈ K(θ, c)` is taken. Over the
//! horizon the averages of `g(c, x)` must stay below (packing) or above
//! (covering) targets `β`. Two primal-dual algorithms are provided:
//!
//! * [`algorithms::ial_run`] uses predictions of the per-period distributions
//!   to derive per-period targets, then runs Hedge over the constraints.
//! * [`algorithms::dal_run`] needs no predictions and runs OGD (or EXP3 for a
//!   finite first-stage set) against Hedge.
//!
//! [`benchmark`] computes hindsight and fluid benchmarks, and [`scenarios`]
//! builds the resource-allocation experiments and lower-bound constructions.

pub mod algorithms;
pub mod benchmark;
pub mod error;
pub mod inner;
pub mod learners;
pub mod model;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
pub use model::{
    Direction, DiscreteDistribution, Distribution, FirstStageSet, ProblemInstance, TypeRealization,
};
