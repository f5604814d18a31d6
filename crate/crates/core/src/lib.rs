//! Zone-specific CSI-feedback simulation library.
//!
//! Deterministic end-to-end pipeline for studying zone-aware channel
//! state information compression in massive MIMO: synthetic
//! zone-structured channel generation, angular-delay preprocessing,
//! position-based zone partitioning, per-zone fully-connected
//! autoencoders trained from scratch, mobility-driven model-switching
//! overhead accounting, and reproducible experiment orchestration.

// Validation throughout this crate writes `!(x > 0.0)` instead of
// `x <= 0.0` so that NaN fails closed; the lint's preferred rewrite
// would silently accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autoenc;
pub mod config;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod mobility;
pub mod rng;
pub mod scene;
pub mod transform;
pub mod zoning;

pub use error::{Error, Result};
