//! Interval bounds and minimax classification for Manski's maximum score
//! binary choice model with discretely distributed covariates.
//!
//! The pipeline runs in five steps:
//!
//! 1. [`data`] groups observations by support point and estimates
//!    `g(x_j) = E[(Y - tau) 1{X = x_j}]` (or its fixed-design analogue).
//! 2. [`confidence`] builds rectangular confidence regions for the vector of
//!    `g(x_j)` values (Hoeffding or Bonferroni/normal, iid or clustered).
//! 3. [`bounds`] turns the region into sign constraints on `b'x_j` and
//!    bounds a linear functional `r'b` with two linear programs solved by
//!    [`lp`].
//! 4. [`classify`] applies the abstaining (minimax) or randomized
//!    (minimax-regret) decision rule to the resulting interval.
//! 5. [`dgp`] and [`experiment`] replicate the Monte Carlo designs.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bounds;
pub mod classify;
pub mod confidence;
pub mod data;
pub mod dgp;
mod error;
pub mod experiment;
pub mod lp;
pub mod normal;

pub use error::{Error, Result};
