//! Indicator-based diversity optimization.
//!
//! Max-Min, Riesz s-energy and Solow-Polasky diversity over finite
//! similarity spaces, executable checks of their theoretical properties,
//! exact and greedy subset selection, and a NOAH-style multiobjective
//! optimizer with the tooling to reproduce its case study.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod contributions;
pub mod error;
pub mod indicators;
pub mod metric;
pub mod noah;
pub mod properties;
pub mod selection;

pub use error::{Error, Result};
pub use indicators::{evaluate, Indicator, Orientation};
pub use metric::{DistanceMatrix, Graph, Norm, SpaceKind};
