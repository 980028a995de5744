//! Truncated drift sums with an explicit summation-order contract.
//!
//! The interaction drift of the dynamics is the conditionally convergent
//! series `(β/2) Σ_j (x − s_j)/|x − s_j|^γ`, truncated either over the ball
//! `{|x − s_j| < r}` around the evaluation point or over `{|s_j| < r}`
//! around the origin (the latter paired with a harmonic restoring term).
//! Conditional convergence makes the summation order part of the contract:
//! terms are always accumulated in increasing distance from the truncation
//! center, ties broken by slot index, so identical inputs give bit-identical
//! results.

use crate::point::Point;
use crate::pointfields::Configuration;
use crate::potentials::{inv_dist_pow, FreePotential, PotentialError, PotentialSpec};
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
pub enum DriftError {
    /// Evaluation point coincides with an included particle.
    Singularity { slot: usize },
    /// Truncation radius must be positive and finite.
    InvalidRadius(f64),
    /// Radius schedule must be non-empty, strictly increasing, and end at
    /// the scheme radius.
    InvalidSchedule,
    /// Label out of range for the configuration.
    UnknownLabel(usize),
    /// The identity-gap observable requires the particle strictly inside
    /// the cutoff ball.
    OutsideCutoff { norm: f64, radius: f64 },
    Potential(PotentialError),
}

impl fmt::Display for DriftError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftError::Singularity { slot } => {
                write!(f, "evaluation point coincides with particle in slot {slot}")
            }
            DriftError::InvalidRadius(r) => {
                write!(f, "truncation radius must be positive and finite, got {r}")
            }
            DriftError::InvalidSchedule => write!(
                f,
                "radius schedule must be non-empty, strictly increasing, and end at the scheme radius"
            ),
            DriftError::UnknownLabel(l) => write!(f, "label {l} out of range"),
            DriftError::OutsideCutoff { norm, radius } => {
                write!(f, "particle at |x| = {norm} not strictly inside cutoff {radius}")
            }
            DriftError::Potential(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DriftError {}

impl From<PotentialError> for DriftError {
    fn from(e: PotentialError) -> Self {
        DriftError::Potential(e)
    }
}

/// Which ball decides term inclusion (and the accumulation order).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncationCenter {
    /// Sum over `{j : |x − s_j| < r}`; the plain interacting form.
    Particle,
    /// Sum over `{j : |s_j| < r}`; meaningful together with the harmonic
    /// restoring term of the confined form.
    Origin,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationScheme {
    pub center: TruncationCenter,
    pub radius: f64,
}

impl TruncationScheme {
    pub fn new(center: TruncationCenter, radius: f64) -> Result<Self, DriftError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(DriftError::InvalidRadius(radius));
        }
        Ok(TruncationScheme { center, radius })
    }

    pub fn particle(radius: f64) -> Result<Self, DriftError> {
        Self::new(TruncationCenter::Particle, radius)
    }

    pub fn origin(radius: f64) -> Result<Self, DriftError> {
        Self::new(TruncationCenter::Origin, radius)
    }
}

/// Running value of the truncated drift at one schedule radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShellPartial<const D: usize> {
    pub radius: f64,
    pub partial: Point<D>,
}

/// Drift value together with the partial sums that witnessed it.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftResult<const D: usize> {
    /// Equals the final shell partial.
    pub value: Point<D>,
    pub shell_partials: Vec<ShellPartial<D>>,
    /// Pair terms included at the full truncation radius.
    pub terms_used: usize,
}

/// Truncated ISDE drift
/// `b(x) = (β/2)[ −∇Φ(x) − Σ_{included, j≠exclude} ∇Ψ_γ(x − s_j) ]`
/// with per-shell partial sums recorded at each schedule radius.
///
/// `exclude` is a label (not a position); the schedule must be strictly
/// increasing and end exactly at `scheme.radius`, so `value` is the last
/// partial. Note `−∇Ψ_γ(x − s) = (x − s)/|x − s|^γ`.
pub fn drift_at<const D: usize>(
    x: Point<D>,
    config: &Configuration<D>,
    exclude: Option<usize>,
    spec: &PotentialSpec<D>,
    scheme: TruncationScheme,
    radius_schedule: &[f64],
) -> Result<DriftResult<D>, DriftError> {
    if !(scheme.radius > 0.0) || !scheme.radius.is_finite() {
        return Err(DriftError::InvalidRadius(scheme.radius));
    }
    if radius_schedule.is_empty()
        || radius_schedule.windows(2).any(|w| w[1] <= w[0])
        || *radius_schedule.last().unwrap() != scheme.radius
    {
        return Err(DriftError::InvalidSchedule);
    }
    let terms = gather_terms(x, config, exclude, scheme)?;

    let gamma = spec.gamma();
    let half_beta = 0.5 * spec.beta();
    let base = spec.free().gradient(x) * -half_beta;

    let mut shell_partials = Vec::with_capacity(radius_schedule.len());
    let mut acc = Point::<D>::zero();
    let mut next = 0usize;
    for &r in radius_schedule {
        while next < terms.len() && terms[next].dist < r {
            let t = &terms[next];
            // (x − s_j)/|x − s_j|^γ accumulated in increasing-distance order
            acc += t.diff * inv_dist_pow(gamma, t.diff_sq);
            next += 1;
        }
        shell_partials.push(ShellPartial {
            radius: r,
            partial: base + acc * half_beta,
        });
    }
    Ok(DriftResult {
        value: shell_partials.last().unwrap().partial,
        shell_partials,
        terms_used: next,
    })
}

/// The drift value alone, truncated at `scheme.radius`. Same summation
/// order as [`drift_at`]; this is the integrator's inner call.
pub fn drift_value<const D: usize>(
    x: Point<D>,
    config: &Configuration<D>,
    exclude: Option<usize>,
    spec: &PotentialSpec<D>,
    scheme: TruncationScheme,
) -> Result<Point<D>, DriftError> {
    if !(scheme.radius > 0.0) || !scheme.radius.is_finite() {
        return Err(DriftError::InvalidRadius(scheme.radius));
    }
    let terms = gather_terms(x, config, exclude, scheme)?;
    let gamma = spec.gamma();
    let half_beta = 0.5 * spec.beta();
    let mut acc = Point::<D>::zero();
    for t in &terms {
        acc += t.diff * inv_dist_pow(gamma, t.diff_sq);
    }
    Ok((spec.free().gradient(x) * -1.0 + acc) * half_beta)
}

struct Term<const D: usize> {
    /// Distance from the truncation center (ordering key).
    dist: f64,
    slot: usize,
    /// `x − s_j`.
    diff: Point<D>,
    diff_sq: f64,
}

fn gather_terms<const D: usize>(
    x: Point<D>,
    config: &Configuration<D>,
    exclude: Option<usize>,
    scheme: TruncationScheme,
) -> Result<Vec<Term<D>>, DriftError> {
    let excluded_slot = match exclude {
        Some(label) => Some(
            config
                .slot_of_label(label)
                .ok_or(DriftError::UnknownLabel(label))?,
        ),
        None => None,
    };
    let r = scheme.radius;
    let mut terms: Vec<Term<D>> = Vec::new();
    for (slot, s) in config.points().iter().enumerate() {
        if Some(slot) == excluded_slot {
            continue;
        }
        let diff = x - *s;
        let diff_sq = diff.norm_sq();
        let dist = match scheme.center {
            TruncationCenter::Particle => diff_sq.sqrt(),
            TruncationCenter::Origin => s.norm(),
        };
        if dist < r {
            if diff_sq == 0.0 {
                return Err(DriftError::Singularity { slot });
            }
            terms.push(Term {
                dist,
                slot,
                diff,
                diff_sq,
            });
        }
    }
    terms.sort_by(|a, b| a.dist.total_cmp(&b.dist).then(a.slot.cmp(&b.slot)));
    Ok(terms)
}

/// Gap `|A(r) − B(r)|` between the two truncated drifts the same process
/// solves in the plural-ISDE identity (planar strict-Coulomb case, γ = 2):
///
/// * `A(r)`: particle-centered sum, no free potential;
/// * `B(r)`: origin-centered sum plus the harmonic restoring term.
///
/// Both carry the `β/2` factor; the stated identity is the `β = 2` case and
/// other `β` scale the restoring term accordingly.
pub fn drift_identity_gap(
    config: &Configuration<2>,
    label: usize,
    r: f64,
    beta: f64,
) -> Result<f64, DriftError> {
    let x = config
        .point_of_label(label)
        .ok_or(DriftError::UnknownLabel(label))?;
    if !(x.norm() < r) {
        return Err(DriftError::OutsideCutoff {
            norm: x.norm(),
            radius: r,
        });
    }
    let spec_a = PotentialSpec::<2>::new(2.0, beta, FreePotential::None)?;
    let spec_b = PotentialSpec::<2>::new(2.0, beta, FreePotential::Harmonic { coeff: 1.0 })?;
    let a = drift_value(x, config, Some(label), &spec_a, TruncationScheme::particle(r)?)?;
    let b = drift_value(x, config, Some(label), &spec_b, TruncationScheme::origin(r)?)?;
    Ok((a - b).norm())
}

/// Logarithmic derivative of the equilibrium field,
/// `d^μ(x, s) = −β{ ∇Φ(x) + Σ ∇Ψ_γ(x − s_j) }` under the scheme;
/// equals twice the ISDE drift.
pub fn log_derivative<const D: usize>(
    x: Point<D>,
    config: &Configuration<D>,
    exclude: Option<usize>,
    spec: &PotentialSpec<D>,
    scheme: TruncationScheme,
) -> Result<Point<D>, DriftError> {
    Ok(drift_value(x, config, exclude, spec, scheme)? * 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointfields::{sample_loggas_mcmc, LogGasDensity};
    use approx::assert_relative_eq;

    fn p1(x: f64) -> Point<1> {
        Point::new([x])
    }

    fn p2(x: f64, y: f64) -> Point<2> {
        Point::new([x, y])
    }

    fn spec1(free: FreePotential) -> PotentialSpec<1> {
        PotentialSpec::new(2.0, 2.0, free).unwrap()
    }

    fn spec2(free: FreePotential) -> PotentialSpec<2> {
        PotentialSpec::new(2.0, 2.0, free).unwrap()
    }

    #[test]
    fn single_term_one_dimensional() {
        // d=1, γ=2, β=2, Φ=None, x=1, config={−1}: (x−s)/|x−s|² = 2/4 = 0.5
        let cfg = Configuration::new(alloc::vec![p1(-1.0)]).unwrap();
        let spec = spec1(FreePotential::None);
        let out = drift_at(
            p1(1.0),
            &cfg,
            None,
            &spec,
            TruncationScheme::particle(10.0).unwrap(),
            &[10.0],
        )
        .unwrap();
        assert_eq!(out.value, p1(0.5));
        assert_eq!(out.terms_used, 1);
    }

    #[test]
    fn odd_symmetry_cancels_pairs() {
        // config invariant under rotation by π around the origin
        let cfg = Configuration::new(alloc::vec![
            p2(1.0, 0.5),
            p2(-1.0, -0.5),
            p2(0.3, -2.0),
            p2(-0.3, 2.0),
        ])
        .unwrap();
        let spec = spec2(FreePotential::None);
        let out = drift_value(
            Point::zero(),
            &cfg,
            None,
            &spec,
            TruncationScheme::particle(50.0).unwrap(),
        )
        .unwrap();
        assert!(out.norm() < 1e-15);
    }

    #[test]
    fn empty_inclusion_leaves_free_potential_term() {
        let cfg = Configuration::new(alloc::vec![p2(5.0, 0.0)]).unwrap();
        let spec = spec2(FreePotential::Harmonic { coeff: 1.0 });
        // radius too small to include the particle: b = (β/2)(−∇Φ) = −x
        let out = drift_value(
            p2(1.0, 2.0),
            &cfg,
            None,
            &spec,
            TruncationScheme::particle(0.5).unwrap(),
        )
        .unwrap();
        assert_eq!(out, p2(-1.0, -2.0));
    }

    #[test]
    fn shell_partials_record_running_value() {
        let cfg = Configuration::new(alloc::vec![p1(0.5), p1(-2.0), p1(6.0)]).unwrap();
        let spec = spec1(FreePotential::None);
        let out = drift_at(
            p1(0.0),
            &cfg,
            None,
            &spec,
            TruncationScheme::particle(8.0).unwrap(),
            &[1.0, 4.0, 8.0],
        )
        .unwrap();
        // terms in increasing distance: 0.5 (d=0.5), −2 (d=2), 6 (d=6)
        let t1 = (p1(0.0) - p1(0.5)) * (1.0 / 0.25);
        let t2 = (p1(0.0) - p1(-2.0)) * (1.0 / 4.0);
        let t3 = (p1(0.0) - p1(6.0)) * (1.0 / 36.0);
        assert_eq!(out.shell_partials.len(), 3);
        assert_eq!(out.shell_partials[0].partial, t1);
        assert_eq!(out.shell_partials[1].partial, t1 + t2);
        assert_eq!(out.shell_partials[2].partial, t1 + t2 + t3);
        assert_eq!(out.value, out.shell_partials[2].partial);
        assert_eq!(out.terms_used, 3);
    }

    #[test]
    fn schedule_must_increase_and_end_at_radius() {
        let cfg = Configuration::new(alloc::vec![p1(1.0)]).unwrap();
        let spec = spec1(FreePotential::None);
        let scheme = TruncationScheme::particle(8.0).unwrap();
        for bad in [&[][..], &[4.0, 2.0][..], &[4.0][..], &[4.0, 4.0][..]] {
            assert_eq!(
                drift_at(p1(0.0), &cfg, None, &spec, scheme, bad).unwrap_err(),
                DriftError::InvalidSchedule
            );
        }
    }

    #[test]
    fn exclusion_is_by_label_and_singularity_is_detected() {
        let cfg = Configuration::new(alloc::vec![p2(2.0, 0.0), p2(0.1, 0.0)]).unwrap();
        let spec = spec2(FreePotential::None);
        let scheme = TruncationScheme::particle(10.0).unwrap();
        // label 0 is the point nearest the origin, (0.1, 0)
        let x = p2(0.1, 0.0);
        let ok = drift_value(x, &cfg, Some(0), &spec, scheme).unwrap();
        assert_relative_eq!(ok[0], (0.1 - 2.0) / (1.9 * 1.9), max_relative = 1e-14);
        assert_eq!(
            drift_value(x, &cfg, None, &spec, scheme).unwrap_err(),
            DriftError::Singularity { slot: 1 }
        );
        assert_eq!(
            drift_value(x, &cfg, Some(5), &spec, scheme).unwrap_err(),
            DriftError::UnknownLabel(5)
        );
    }

    #[test]
    fn summation_is_bit_deterministic() {
        let spec = spec2(FreePotential::None);
        let density = LogGasDensity::new(
            PotentialSpec::<2>::new(2.0, 2.0, FreePotential::Harmonic { coeff: 1.0 }).unwrap(),
            32,
        )
        .unwrap();
        let cfg = sample_loggas_mcmc(density, 30, 30, 0.8, 77).unwrap();
        let scheme = TruncationScheme::particle(12.0).unwrap();
        let a = drift_at(p2(0.01, 0.02), &cfg, None, &spec, scheme, &[3.0, 6.0, 12.0]).unwrap();
        let b = drift_at(p2(0.01, 0.02), &cfg, None, &spec, scheme, &[3.0, 6.0, 12.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_forces_are_antisymmetric() {
        let cfg = Configuration::new(alloc::vec![p2(0.7, -0.2), p2(-0.4, 0.9)]).unwrap();
        let spec = spec2(FreePotential::None);
        let scheme = TruncationScheme::particle(100.0).unwrap();
        // labels: 0 = (0.7,−0.2) (norm² 0.53), 1 = (−0.4,0.9) (norm² 0.97)
        let on_0 = drift_value(p2(0.7, -0.2), &cfg, Some(0), &spec, scheme).unwrap();
        let on_1 = drift_value(p2(-0.4, 0.9), &cfg, Some(1), &spec, scheme).unwrap();
        assert_eq!(on_0, -on_1);
    }

    #[test]
    fn centered_schemes_agree_up_to_restoring_term() {
        // when r exceeds |x| + max_j |s_j| the inclusion sets coincide and
        // B = A − (β/2)·x exactly in exact arithmetic; float order differs,
        // so compare with a tight tolerance
        let density = LogGasDensity::new(
            PotentialSpec::<2>::new(2.0, 2.0, FreePotential::Harmonic { coeff: 1.0 }).unwrap(),
            24,
        )
        .unwrap();
        let cfg = sample_loggas_mcmc(density, 40, 40, 0.8, 3).unwrap();
        let x = cfg.point_of_label(0).unwrap();
        let r = 10.0 * (x.norm() + cfg.points().iter().map(|p| p.norm()).fold(0.0, f64::max));
        let spec_a = spec2(FreePotential::None);
        let spec_b = spec2(FreePotential::Harmonic { coeff: 1.0 });
        let a = drift_value(x, &cfg, Some(0), &spec_a, TruncationScheme::particle(r).unwrap())
            .unwrap();
        let b =
            drift_value(x, &cfg, Some(0), &spec_b, TruncationScheme::origin(r).unwrap()).unwrap();
        let expected = a - x; // β = 2 ⇒ β/2 = 1
        assert_relative_eq!(b[0], expected[0], epsilon = 1e-10, max_relative = 1e-10);
        assert_relative_eq!(b[1], expected[1], epsilon = 1e-10, max_relative = 1e-10);
    }

    #[test]
    fn identity_gap_examples() {
        // lone particle: gap = |0 − (−x_i)| = |x_i|
        let cfg = Configuration::new(alloc::vec![p2(0.3, -0.4)]).unwrap();
        let gap = drift_identity_gap(&cfg, 0, 2.0, 2.0).unwrap();
        assert_relative_eq!(gap, 0.5, max_relative = 1e-14);

        // symmetric under z ↦ −z with x_i = 0: both drifts vanish
        let cfg = Configuration::new(alloc::vec![
            p2(0.0, 0.0),
            p2(1.0, 0.2),
            p2(-1.0, -0.2),
            p2(-0.5, 1.1),
            p2(0.5, -1.1),
        ])
        .unwrap();
        let gap = drift_identity_gap(&cfg, 0, 5.0, 2.0).unwrap();
        assert!(gap < 1e-14);

        // cutoff violation
        let cfg = Configuration::new(alloc::vec![p2(3.0, 0.0)]).unwrap();
        assert!(matches!(
            drift_identity_gap(&cfg, 0, 2.0, 2.0),
            Err(DriftError::OutsideCutoff { .. })
        ));
    }

    #[test]
    fn log_derivative_is_twice_the_drift() {
        let cfg = Configuration::new(alloc::vec![p1(-1.0)]).unwrap();
        let spec = spec1(FreePotential::None);
        let scheme = TruncationScheme::particle(10.0).unwrap();
        let b = drift_value(p1(1.0), &cfg, None, &spec, scheme).unwrap();
        let d = log_derivative(p1(1.0), &cfg, None, &spec, scheme).unwrap();
        assert_eq!(d, b * 2.0);
        // two-particle arithmetic: −β·∇Ψ term = −2·(−2/4) = 1
        assert_eq!(d, p1(1.0));
    }

    #[test]
    fn log_derivative_free_potential_only() {
        let cfg = Configuration::<2>::new(Vec::new()).unwrap();
        let spec = spec2(FreePotential::Harmonic { coeff: 1.0 });
        let d = log_derivative(
            p2(1.0, 0.0),
            &cfg,
            None,
            &spec,
            TruncationScheme::particle(1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(d, p2(-2.0, 0.0));
    }

    #[test]
    fn log_derivative_matches_energy_gradient() {
        // route 1: distance-ordered truncated sum; route 2: analytic gradient
        // of the log-gas energy in natural slot order
        let spec =
            PotentialSpec::<2>::new(2.0, 2.0, FreePotential::Harmonic { coeff: 1.0 }).unwrap();
        let density = LogGasDensity::new(spec, 16).unwrap();
        let cfg = sample_loggas_mcmc(density, 30, 30, 0.8, 41).unwrap();
        let r = 1e6;
        for label in [0usize, 7, 15] {
            let slot = cfg.slot_of_label(label).unwrap();
            let x = cfg.point_of_label(label).unwrap();
            let d = log_derivative(
                x,
                &cfg,
                Some(label),
                &spec,
                TruncationScheme::particle(r).unwrap(),
            )
            .unwrap();
            let g = density.energy_gradient(&cfg, slot).unwrap();
            for c in 0..2 {
                assert_relative_eq!(d[c], -g[c], epsilon = 1e-9, max_relative = 1e-9);
            }
        }
    }
}
