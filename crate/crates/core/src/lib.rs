//! Confidence regions for excursion sets of signals whose estimation error
//! converges to a piecewise continuous limit.
//!
//! Modules, bottom up:
//! - [`domain`]: grids, masks, closures, suprema with the empty-set convention.
//! - [`piecewise`]: piecewise fields, restrained-bound checks, limit sets.
//! - [`randfield`]: Gaussian field simulation and the multiplier bootstrap.
//! - [`regions`]: the generic threshold rule and its three applications.
//! - [`experiments`]: coverage harness, worked examples, condition diagnostics.

pub mod domain;
pub mod experiments;
pub mod piecewise;
pub mod randfield;
pub mod regions;
