//! Supervised contrastive regression at desk scale.
//!
//! This crate implements a contrastive loss for regression problems that
//! ranks batch rows by label distance, together with everything needed to
//! study it end to end: an analytic gradient, the ordering theory behind the
//! loss (a closed-form lower bound, near-tight similarity constructions, and
//! a `delta`-ordering checker), from-scratch feedforward networks, and a
//! small training pipeline with SupCon / NT-Xent / direct-regression
//! baselines on synthetic data.
//!
//! Start with the runnable examples (`cargo run --release --example ...`)
//! or the `supcr` binary, which exposes dataset generation, training,
//! evaluation, theory verification, gradient checking, embedding export,
//! and a loss micro-benchmark as subcommands.

// validation guards are written as `!(x > 0.0)` so NaN fails them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod loss;
pub mod model;
pub mod pairwise;
pub mod theory;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
