//! Symbolic engine for the unified velocity-momentum formalism of
//! higher-order Lagrangian field theories.
//!
//! Starting from a bundle signature `(m, n, k)` and a Lagrangian on the
//! `k`-th jet bundle, the crate builds the velocity-momentum space, derives
//! the coefficient equations of the dynamical equation, analyses the
//! constraint submanifolds and regularity, and produces the Euler-Lagrange
//! equations together with an independent numeric check.

pub mod analysis;
pub mod corpus;
pub mod eleuler;
pub mod equations;
pub mod error;
pub mod extalg;
pub mod jetmodel;
pub mod multiindex;
pub mod problem;
pub mod report;
pub mod srassembler;
pub mod symexpr;

pub use error::{Error, Result};

pub type Rational = num_rational::BigRational;
