//! Numerics for a partially hyperbolic skew product over a three-symbol horseshoe.
//!
//! The fiber dynamics is the iterated function system `{f0, f1, f2}` on [0, 1].
//! The crate validates the hypotheses on the fiber maps, scans the central
//! Lyapunov spectrum over periodic orbits, brackets the topological pressure of
//! `-t log |f'|` by cylinder sums and locates its first-order phase transition.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod fiber;
pub mod ifs;
pub mod measures;
pub mod symbolic;
pub mod thermo;

pub use error::{Error, Result};
pub use fiber::{FiberMap, MapKind, Profile, ProfileShape, Shape, SystemParams};
pub use ifs::Ifs;
pub use symbolic::{SymbolSet, Word};
