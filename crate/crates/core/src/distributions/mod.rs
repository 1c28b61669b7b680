//! Value distributions: exact discrete laws and parametric CDF oracles.

mod discrete;
mod instance;
mod oracle;
mod shape;

pub use discrete::DiscreteDistribution;
pub use instance::{Class, Instance, Item, TieBreak};
pub use oracle::{CdfOracle, Clamp, Family, ANCHOR_C1, ANCHOR_C2};
pub use shape::{check_shape, ShapeClass, ShapeReport};
