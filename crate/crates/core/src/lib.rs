//! Core algorithms for finite systems of Brownian particles interacting
//! through Riesz/Coulomb pair potentials.
//!
//! The crate covers the full pipeline from equilibrium sampling to path
//! statistics:
//!
//! * [`potentials`] — the Riesz potential family `Ψ_γ` (logarithmic at
//!   `γ = 2`), its gradient `−x/|x|^γ`, fundamental solutions, and the
//!   `(β, γ, d)` regime classifier.
//! * [`pointfields`] — finite-`N` log-gas Metropolis sampling (the
//!   `(β, γ, d) = (2, 2, 2)` instance is the Ginibre eigenvalue density)
//!   and Poisson controls.
//! * [`drift`] — conditionally convergent truncated drift sums, accumulated
//!   in increasing distance from the truncation center, with per-shell
//!   partial sums exposed as data.
//! * [`dynamics`] — a tamed Euler–Maruyama integrator with per-particle
//!   noise streams and minimum-separation step rejection.
//! * [`diagnostics`] — tagged-particle mean squared displacement, diffusive
//!   rescaling, power-law exponent fits, and number-variance statistics.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature for embedded or sandboxed use. All sampling and
//! integration is deterministic given the seeds, with stream derivation
//! rules documented in [`seeds`].

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod drift;
pub mod dynamics;
mod point;
pub mod pointfields;
pub mod potentials;
pub mod seeds;
pub mod special;

pub use point::Point;
