//! Spectral continuation toolkit for 2π-periodic traveling waves of the
//! bidirectional Whitham equation.
//!
//! Profiles solve `K φ = φ(c - φ/2)(c - φ)` where `K` is the Fourier
//! multiplier with symbol `tanh(ξ)/ξ`. The branch of even, single-crested
//! waves bifurcating from `c₁ = √tanh 1` is followed by pseudo-arclength
//! continuation until the crest reaches `γ = c(1 - 1/√3)`, where the limiting
//! wave has a logarithmic cusp `γ - φ(x) ≍ |x log|x||`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuation;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod kernel;
pub mod profile;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{CollocationGrid, WaveProfile};

/// Toolkit version recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
