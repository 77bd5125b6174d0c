//! Greedy sparse recovery (OMP and OLS) with exact-recovery and bad-recovery
//! certificates, a small-scale basis pursuit oracle, and seeded Monte Carlo
//! experiments over random and convolutive dictionaries.
//!
//! Atom indices are 0-based throughout.

pub mod bp;
pub mod certificates;
pub mod dictionaries;
pub mod error;
pub mod experiments;
pub mod greedy;
pub mod linalg;

pub use error::{Error, Result};
