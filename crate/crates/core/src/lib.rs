//! Oscillation functionals, weighted Hardy-type operators and endpoint
//! embeddings for rearrangement-invariant spaces on `(0,1)`.
//!
//! Functions are sampled on geometric grids and stored as piecewise-constant
//! cell means together with node values; decreasing rearrangements keep an
//! exact level-set profile so norms and masses are computed without binning
//! error.

pub mod error;
pub mod grid;
pub mod operators;
pub mod quad;
pub mod regimes;
pub mod spaces;
pub mod weights;

pub use error::{Result, RioError};
pub use grid::{Grid, GridFunction, Integral, Profile};
pub use spaces::{Space, SpaceKind};
pub use weights::{DeviationFunction, Weight};


