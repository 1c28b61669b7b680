//! Near-optimal item pricing for a single unit-demand buyer whose item
//! values are independent.
//!
//! The solver anchors the value distributions, truncates them to a balanced
//! range, discretizes values and prices onto geometric grids, and searches
//! price vectors with a dynamic program over rounded winning distributions.
//! Exact, brute-force and Monte-Carlo evaluators check the result.

pub mod anchoring;
pub mod discretization;
pub mod distributions;
pub mod dp;
pub mod error;
pub mod iid;
pub mod oracle;
pub mod pipeline;
pub mod rational;
pub mod reductions;
pub mod report;
pub mod winning;

pub use distributions::{CdfOracle, Class, DiscreteDistribution, Instance, Item, TieBreak};
pub use error::{Error, Result};
pub use rational::Rational;
