//! Allowable sequences of permutations whose flips all avoid a central window.
//!
//! The crate builds such sequences by replaying a recursive block
//! construction flip by flip, verifies them with an independent streaming
//! checker, and cross-checks the pieces against brute-force oracles and a
//! planar point-set model.

pub mod engine;
pub mod error;
pub mod format;
pub mod geom;
pub mod lemmas;
pub mod oracle;
pub mod seq;

pub use error::{Error, Result};
