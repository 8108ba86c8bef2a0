//! Exact inference for hybrid probabilistic programs by bit blasting.
//!
//! Continuous densities are compiled into fixed-point numbers whose bits are
//! formulas over a handful of weighted coin flips per bit. Queries are then
//! answered exactly on the discrete program by weighted model counting over
//! binary decision diagrams.

pub mod bdd;
pub mod compiler;
pub mod context;
pub mod error;
pub mod fixedpoint;
pub mod lang;
pub mod library;
pub mod numeric;
pub mod oracle;
pub mod quadrature;
pub mod query;

pub use bdd::{Bdd, LevelHint, NodeRef, VarLabel, WeightMap};
pub use compiler::{GeneralizedGamma, MixedGamma};
pub use context::{BoolRv, InferenceContext};
pub use error::{Error, Result};
pub use fixedpoint::{BitVectorDist, FixedPointFormat, OverflowPolicy};
pub use query::PosteriorTable;
