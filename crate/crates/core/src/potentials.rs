//! The Riesz/Coulomb potential family.
//!
//! The pair potential `Ψ_γ` is fixed by its gradient `∇Ψ_γ(x) = −x/|x|^γ`,
//! which makes it logarithmic at `γ = 2` and a power law otherwise:
//!
//! ```text
//! Ψ_γ(x) = |x|^(2−γ) / (γ − 2)    (γ ≠ 2)
//! Ψ_2(x) = −log |x|
//! ```
//!
//! Equivalently `Ψ_γ = (σ_γ/2) G_γ` where `G_γ` is the fundamental solution
//! of `−½Δ` on `R^γ` and `σ_γ = 2π^(γ/2)/Γ(γ/2)` the unit-sphere surface
//! volume. The sign convention is the one-component-plasma one: like charges
//! repel.
//!
//! Everything here is a pure function of its arguments; the singularity at
//! `x = 0` is a hard error, never clipped. Taming is a dynamics-level
//! policy.

use crate::point::Point;
use crate::special;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

/// Errors from the potential family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialError {
    /// The Riesz exponent must be a positive finite real.
    InvalidGamma(f64),
    /// The inverse temperature must be a positive finite real.
    InvalidBeta(f64),
    /// Only dimensions 1 and 2 are supported.
    UnsupportedDimension(usize),
    /// Harmonic coefficients must be finite and non-negative.
    InvalidCoefficient(f64),
    /// Potential or gradient evaluated at `x = 0`.
    Singularity,
}

impl fmt::Display for PotentialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialError::InvalidGamma(g) => write!(f, "riesz exponent must be > 0, got {g}"),
            PotentialError::InvalidBeta(b) => {
                write!(f, "inverse temperature must be > 0, got {b}")
            }
            PotentialError::UnsupportedDimension(d) => {
                write!(f, "unsupported spatial dimension {d} (expected 1 or 2)")
            }
            PotentialError::InvalidCoefficient(c) => {
                write!(f, "harmonic coefficient must be >= 0, got {c}")
            }
            PotentialError::Singularity => write!(f, "potential evaluated at x = 0"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PotentialError {}

/// Confining (free) potential `Φ`.
///
/// Only the two shapes the interacting-Brownian-motion equations actually
/// use: none, and the harmonic well `Φ(x) = c|x|²/2` whose gradient is
/// exactly `c·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FreePotential {
    None,
    Harmonic { coeff: f64 },
}

impl FreePotential {
    pub fn value<const D: usize>(&self, x: Point<D>) -> f64 {
        match self {
            FreePotential::None => 0.0,
            FreePotential::Harmonic { coeff } => 0.5 * coeff * x.norm_sq(),
        }
    }

    pub fn gradient<const D: usize>(&self, x: Point<D>) -> Point<D> {
        match self {
            FreePotential::None => Point::zero(),
            FreePotential::Harmonic { coeff } => x * *coeff,
        }
    }
}

/// Parameter regime of a `(β, γ, d)` triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `γ = d`: the genuinely electrostatic case (Ginibre is `(2, 2, 2)`).
    StrictCoulomb,
    /// `d ≤ γ ≤ d + 2`, outside classical Ruelle-class Gibbs theory.
    Coulomb,
    /// `γ > d + 2`: short-range, classical theory applies.
    RuelleRegime,
    /// `γ < d`.
    SubRiesz,
}

/// Interaction parameters: Riesz exponent `γ`, inverse temperature `β`, and
/// the free potential `Φ`. The spatial dimension is the const parameter `D`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSpec<const D: usize> {
    gamma: f64,
    beta: f64,
    free: FreePotential,
}

impl<const D: usize> PotentialSpec<D> {
    pub fn new(gamma: f64, beta: f64, free: FreePotential) -> Result<Self, PotentialError> {
        if D != 1 && D != 2 {
            return Err(PotentialError::UnsupportedDimension(D));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(PotentialError::InvalidGamma(gamma));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(PotentialError::InvalidBeta(beta));
        }
        if let FreePotential::Harmonic { coeff } = free {
            if !(coeff >= 0.0) || !coeff.is_finite() {
                return Err(PotentialError::InvalidCoefficient(coeff));
            }
        }
        Ok(PotentialSpec { gamma, beta, free })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn free(&self) -> FreePotential {
        self.free
    }

    pub const fn dim(&self) -> usize {
        D
    }

    /// Deterministic, total regime classification. `StrictCoulomb` takes
    /// precedence over the (non-strict) `Coulomb` band `d ≤ γ ≤ d + 2`.
    pub fn classify(&self) -> Regime {
        let d = D as f64;
        if self.gamma == d {
            Regime::StrictCoulomb
        } else if self.gamma < d {
            Regime::SubRiesz
        } else if self.gamma <= d + 2.0 {
            Regime::Coulomb
        } else {
            Regime::RuelleRegime
        }
    }
}

/// Surface volume `σ_γ = 2π^(γ/2)/Γ(γ/2)` of the unit sphere in `R^γ`.
pub fn surface_volume(gamma: f64) -> Result<f64, PotentialError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(PotentialError::InvalidGamma(gamma));
    }
    Ok(2.0 * PI.powf(gamma / 2.0) / special::gamma(gamma / 2.0))
}

/// Fundamental solution `G_γ` of `−½Δ` on `R^γ`, evaluated at `x ≠ 0`.
pub fn fundamental_solution<const D: usize>(
    gamma: f64,
    x: Point<D>,
) -> Result<f64, PotentialError> {
    let sigma = surface_volume(gamma)?;
    let r = x.norm();
    if r == 0.0 {
        return Err(PotentialError::Singularity);
    }
    if gamma == 2.0 {
        Ok(-(2.0 / sigma) * r.ln())
    } else {
        Ok((2.0 / sigma) * r.powf(2.0 - gamma) / (gamma - 2.0))
    }
}

/// Riesz pair potential `Ψ_γ(x) = (σ_γ/2) G_γ(x)`; the `σ_γ` factors cancel.
pub fn psi<const D: usize>(gamma: f64, x: Point<D>) -> Result<f64, PotentialError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(PotentialError::InvalidGamma(gamma));
    }
    let r = x.norm();
    if r == 0.0 {
        return Err(PotentialError::Singularity);
    }
    Ok(psi_from_dist_sq(gamma, r * r))
}

/// `Ψ_γ` from the squared pair distance. Callers guarantee `dist_sq > 0`.
///
/// This is the hot path of the log-gas energy: at `γ = 2` it avoids the
/// square root entirely via `−log r = −½ log r²`.
#[inline]
pub fn psi_from_dist_sq(gamma: f64, dist_sq: f64) -> f64 {
    debug_assert!(dist_sq > 0.0);
    if gamma == 2.0 {
        -0.5 * dist_sq.ln()
    } else {
        dist_sq.powf(0.5 * (2.0 - gamma)) / (gamma - 2.0)
    }
}

/// Gradient `∇Ψ_γ(x) = −x/|x|^γ`, evaluated at `x ≠ 0`.
pub fn grad_psi<const D: usize>(gamma: f64, x: Point<D>) -> Result<Point<D>, PotentialError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(PotentialError::InvalidGamma(gamma));
    }
    let r_sq = x.norm_sq();
    if r_sq == 0.0 {
        return Err(PotentialError::Singularity);
    }
    Ok(x * -inv_dist_pow(gamma, r_sq))
}

/// `|x|^(−γ)` from the squared distance, with an exact fast path at `γ = 2`.
#[inline]
pub fn inv_dist_pow(gamma: f64, dist_sq: f64) -> f64 {
    if gamma == 2.0 {
        1.0 / dist_sq
    } else {
        dist_sq.powf(-0.5 * gamma)
    }
}
