//! Finite-`N` surrogates of the equilibrium random point fields: the
//! harmonically confined log-gas sampled by single-particle Metropolis
//! (whose `(β, γ, d) = (2, 2, 2)` instance is the finite-`N` Ginibre
//! eigenvalue density), plus Poisson controls.
//!
//! The unnormalized equilibrium weight is `exp(−E)` with
//! `E = β [ Σ_i Φ(s_i) + Σ_{i<j} Ψ_γ(s_i − s_j) ]`, matching the `β/2`
//! drift convention of the dynamics module (gradient flow of `(β/2)·H`
//! under unit-variance noise leaves `exp(−βH)` invariant).

use crate::point::Point;
use crate::potentials::{psi_from_dist_sq, PotentialError, PotentialSpec};
use crate::seeds;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
pub enum PointFieldError {
    /// Two points in a configuration coincide exactly.
    DuplicatePoints { a: usize, b: usize },
    /// `label_order` is not a permutation of `0..n`.
    InvalidLabelOrder,
    /// Log-gas sampling needs at least two particles.
    TooFewParticles(usize),
    /// Sweep or count arguments out of range.
    InvalidSweeps,
    /// Proposal scale must be finite and non-negative.
    InvalidProposalScale(f64),
    /// Window has no volume.
    DegenerateWindow,
    /// Poisson intensity must be positive and finite.
    InvalidIntensity(f64),
    /// Initial configuration has non-finite energy.
    NonFiniteEnergy,
    /// Configuration size does not match the declared particle count.
    WrongParticleCount { expected: usize, got: usize },
    /// Operation defined only in dimension 2.
    WrongDimension { expected: usize, got: usize },
    /// Statistics requested on an empty configuration.
    EmptyConfiguration,
    Potential(PotentialError),
}

impl fmt::Display for PointFieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointFieldError::DuplicatePoints { a, b } => {
                write!(f, "points {a} and {b} coincide exactly")
            }
            PointFieldError::InvalidLabelOrder => write!(f, "label order is not a permutation"),
            PointFieldError::TooFewParticles(n) => {
                write!(f, "log-gas sampling needs n >= 2, got {n}")
            }
            PointFieldError::InvalidSweeps => write!(f, "sweep count must be >= 1"),
            PointFieldError::InvalidProposalScale(s) => {
                write!(f, "proposal scale must be finite and >= 0, got {s}")
            }
            PointFieldError::DegenerateWindow => write!(f, "sampling window has no volume"),
            PointFieldError::InvalidIntensity(i) => {
                write!(f, "intensity must be positive and finite, got {i}")
            }
            PointFieldError::NonFiniteEnergy => {
                write!(f, "initial configuration has non-finite energy")
            }
            PointFieldError::WrongParticleCount { expected, got } => {
                write!(f, "expected {expected} particles, got {got}")
            }
            PointFieldError::WrongDimension { expected, got } => {
                write!(f, "operation requires dimension {expected}, got {got}")
            }
            PointFieldError::EmptyConfiguration => write!(f, "configuration is empty"),
            PointFieldError::Potential(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PointFieldError {}

impl From<PotentialError> for PointFieldError {
    fn from(e: PotentialError) -> Self {
        PointFieldError::Potential(e)
    }
}

/// A finite labeled point set in `R^D`.
///
/// `label_order[i]` is the index into `points` of the particle carrying
/// label `i`. Under the default labeling, labels enumerate points by
/// increasing distance from the origin (ties broken lexicographically).
/// Points are pairwise distinct.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration<const D: usize> {
    points: Vec<Point<D>>,
    label_order: Vec<usize>,
}

impl<const D: usize> Configuration<D> {
    /// Builds a configuration with the default (radial) labeling.
    pub fn new(points: Vec<Point<D>>) -> Result<Self, PointFieldError> {
        check_distinct(&points)?;
        let label_order = radial_order(&points);
        Ok(Configuration {
            points,
            label_order,
        })
    }

    /// Builds a configuration with an explicit labeling.
    pub fn with_label_order(
        points: Vec<Point<D>>,
        label_order: Vec<usize>,
    ) -> Result<Self, PointFieldError> {
        check_distinct(&points)?;
        if !is_permutation(&label_order, points.len()) {
            return Err(PointFieldError::InvalidLabelOrder);
        }
        Ok(Configuration {
            points,
            label_order,
        })
    }

    /// Internal constructor for states whose invariants are maintained by
    /// the caller (integrator frames).
    pub(crate) fn from_parts_unchecked(points: Vec<Point<D>>, label_order: Vec<usize>) -> Self {
        Configuration {
            points,
            label_order,
        }
    }

    /// Same points, default labeling: sorted by increasing distance from the
    /// origin, ties broken by lexicographic coordinate order.
    pub fn relabel(&self) -> Self {
        Configuration {
            points: self.points.clone(),
            label_order: radial_order(&self.points),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub const fn dim(&self) -> usize {
        D
    }

    pub fn points(&self) -> &[Point<D>] {
        &self.points
    }

    pub fn label_order(&self) -> &[usize] {
        &self.label_order
    }

    pub fn point_of_label(&self, label: usize) -> Option<Point<D>> {
        self.label_order.get(label).map(|&slot| self.points[slot])
    }

    pub fn slot_of_label(&self, label: usize) -> Option<usize> {
        self.label_order.get(label).copied()
    }

    /// Smallest pairwise distance, `None` for fewer than two points.
    pub fn min_pair_distance(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                let d = (self.points[i] - self.points[j]).norm_sq();
                if d < best {
                    best = d;
                }
            }
        }
        Some(best.sqrt())
    }

    pub fn sum_norm_sq(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sq()).sum()
    }
}

fn check_distinct<const D: usize>(points: &[Point<D>]) -> Result<(), PointFieldError> {
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i] == points[j] {
                return Err(PointFieldError::DuplicatePoints { a: i, b: j });
            }
        }
    }
    Ok(())
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = alloc::vec![false; n];
    for &slot in order {
        if slot >= n || seen[slot] {
            return false;
        }
        seen[slot] = true;
    }
    true
}

fn radial_order<const D: usize>(points: &[Point<D>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .norm_sq()
            .total_cmp(&points[b].norm_sq())
            .then_with(|| points[a].lex_cmp(&points[b]))
            .then(Ordering::Equal)
    });
    order
}

/// Unnormalized log-gas equilibrium density
/// `exp(−β[ Σ Φ(s_i) + Σ_{i<j} Ψ_γ(s_i − s_j) ])` on `n` particles.
#[derive(Clone, Copy, Debug)]
pub struct LogGasDensity<const D: usize> {
    spec: PotentialSpec<D>,
    n: usize,
}

impl<const D: usize> LogGasDensity<D> {
    pub fn new(spec: PotentialSpec<D>, n: usize) -> Result<Self, PointFieldError> {
        if n < 2 {
            return Err(PointFieldError::TooFewParticles(n));
        }
        Ok(LogGasDensity { spec, n })
    }

    pub fn spec(&self) -> &PotentialSpec<D> {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Full energy, summed in natural slot order (`i < j`). Returns
    /// `+inf` when two points coincide exactly.
    pub fn energy(&self, config: &Configuration<D>) -> Result<f64, PointFieldError> {
        if config.len() != self.n {
            return Err(PointFieldError::WrongParticleCount {
                expected: self.n,
                got: config.len(),
            });
        }
        Ok(self.energy_of_points(config.points()))
    }

    pub(crate) fn energy_of_points(&self, points: &[Point<D>]) -> f64 {
        let gamma = self.spec.gamma();
        let free = self.spec.free();
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            acc += free.value(*p);
            for q in points.iter().skip(i + 1) {
                let d2 = (*p - *q).norm_sq();
                if d2 == 0.0 {
                    return f64::INFINITY;
                }
                acc += psi_from_dist_sq(gamma, d2);
            }
        }
        self.spec.beta() * acc
    }

    /// Analytic gradient of the energy with respect to the point in `slot`:
    /// `β [ ∇Φ(s) + Σ_{j≠slot} ∇Ψ_γ(s − s_j) ]`, natural slot order.
    pub fn energy_gradient(
        &self,
        config: &Configuration<D>,
        slot: usize,
    ) -> Result<Point<D>, PointFieldError> {
        if config.len() != self.n {
            return Err(PointFieldError::WrongParticleCount {
                expected: self.n,
                got: config.len(),
            });
        }
        let gamma = self.spec.gamma();
        let s = config.points()[slot];
        let mut acc = self.spec.free().gradient(s);
        for (j, q) in config.points().iter().enumerate() {
            if j == slot {
                continue;
            }
            let diff = s - *q;
            let d2 = diff.norm_sq();
            if d2 == 0.0 {
                return Err(PointFieldError::Potential(PotentialError::Singularity));
            }
            // ∇Ψ_γ(diff) = −diff/|diff|^γ
            acc += diff * -crate::potentials::inv_dist_pow(gamma, d2);
        }
        Ok(acc * self.spec.beta())
    }

    /// Energy change of moving `slot` to `to`, in O(n). `+inf` when the
    /// proposal collapses onto another point.
    pub(crate) fn move_delta(&self, points: &[Point<D>], slot: usize, to: Point<D>) -> f64 {
        let gamma = self.spec.gamma();
        let free = self.spec.free();
        let from = points[slot];
        let mut acc = free.value(to) - free.value(from);
        for (j, q) in points.iter().enumerate() {
            if j == slot {
                continue;
            }
            let d2_new = (to - *q).norm_sq();
            if d2_new == 0.0 {
                return f64::INFINITY;
            }
            let d2_old = (from - *q).norm_sq();
            acc += psi_from_dist_sq(gamma, d2_new) - psi_from_dist_sq(gamma, d2_old);
        }
        self.spec.beta() * acc
    }
}

/// Default burn-in for log-gas chains: `100·n` sweeps.
pub fn default_burn_in(n: usize) -> usize {
    100 * n
}

/// Default Metropolis proposal scale at bulk intensity `rho`: `0.5/√rho`.
pub fn default_proposal_scale(intensity: f64) -> f64 {
    0.5 / intensity.sqrt()
}

/// Single-particle Gaussian-proposal Metropolis chain for [`LogGasDensity`].
///
/// One sweep proposes a move for every slot in order `0..n`. Acceptance uses
/// incremental O(n) energy differences; runs are reproducible from the seed.
pub struct LogGasChain<const D: usize> {
    density: LogGasDensity<D>,
    points: Vec<Point<D>>,
    rng: ChaCha8Rng,
    proposal_scale: f64,
    energy: f64,
    proposed: u64,
    accepted: u64,
}

impl<const D: usize> LogGasChain<D> {
    /// Starts from points drawn uniformly in the ball of radius `√n`, which
    /// matches the Ginibre droplet for the `(2, 2, 2)` instance.
    pub fn new(
        density: LogGasDensity<D>,
        proposal_scale: f64,
        seed: u64,
    ) -> Result<Self, PointFieldError> {
        let mut rng = seeds::run_rng(seed);
        let n = density.n();
        let radius = (n as f64).sqrt();
        let window = Window::Ball {
            center: Point::zero(),
            radius,
        };
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            points.push(window.sample_uniform(&mut rng));
        }
        Self::from_points(density, points, proposal_scale, rng)
    }

    /// Starts from an existing configuration (slot order preserved).
    pub fn new_from(
        density: LogGasDensity<D>,
        config: &Configuration<D>,
        proposal_scale: f64,
        seed: u64,
    ) -> Result<Self, PointFieldError> {
        if config.len() != density.n() {
            return Err(PointFieldError::WrongParticleCount {
                expected: density.n(),
                got: config.len(),
            });
        }
        Self::from_points(
            density,
            config.points().to_vec(),
            proposal_scale,
            seeds::run_rng(seed),
        )
    }

    fn from_points(
        density: LogGasDensity<D>,
        points: Vec<Point<D>>,
        proposal_scale: f64,
        rng: ChaCha8Rng,
    ) -> Result<Self, PointFieldError> {
        if !(proposal_scale >= 0.0) || !proposal_scale.is_finite() {
            return Err(PointFieldError::InvalidProposalScale(proposal_scale));
        }
        let energy = density.energy_of_points(&points);
        if !energy.is_finite() {
            return Err(PointFieldError::NonFiniteEnergy);
        }
        Ok(LogGasChain {
            density,
            points,
            rng,
            proposal_scale,
            energy,
            proposed: 0,
            accepted: 0,
        })
    }

    pub fn sweep(&mut self) {
        for slot in 0..self.points.len() {
            self.proposed += 1;
            let mut prop = self.points[slot];
            for c in 0..D {
                let z: f64 = self.rng.sample(StandardNormal);
                prop.0[c] += self.proposal_scale * z;
            }
            let delta = self.density.move_delta(&self.points, slot, prop);
            // exact collapse has delta = +inf and is always rejected
            let accept = delta <= 0.0 || self.rng.random::<f64>() < (-delta).exp();
            if accept {
                self.points[slot] = prop;
                self.energy += delta;
                self.accepted += 1;
            }
        }
    }

    pub fn run_sweeps(&mut self, sweeps: usize) {
        for _ in 0..sweeps {
            self.sweep();
        }
    }

    pub fn points(&self) -> &[Point<D>] {
        &self.points
    }

    /// Snapshot with the default radial labeling.
    pub fn config(&self) -> Result<Configuration<D>, PointFieldError> {
        Configuration::new(self.points.clone())
    }

    /// Running incrementally-updated energy.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn density(&self) -> &LogGasDensity<D> {
        &self.density
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Runs `burn_in + sweeps` Metropolis sweeps and returns the final state.
pub fn sample_loggas_mcmc<const D: usize>(
    density: LogGasDensity<D>,
    sweeps: usize,
    burn_in: usize,
    proposal_scale: f64,
    seed: u64,
) -> Result<Configuration<D>, PointFieldError> {
    if sweeps < 1 {
        return Err(PointFieldError::InvalidSweeps);
    }
    let mut chain = LogGasChain::new(density, proposal_scale, seed)?;
    chain.run_sweeps(burn_in + sweeps);
    chain.config()
}

/// Sampling window for Poisson controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window<const D: usize> {
    Cuboid { min: Point<D>, max: Point<D> },
    Ball { center: Point<D>, radius: f64 },
}

impl<const D: usize> Window<D> {
    pub fn volume(&self) -> f64 {
        match self {
            Window::Cuboid { min, max } => {
                let mut v = 1.0;
                for c in 0..D {
                    v *= max[c] - min[c];
                }
                v
            }
            Window::Ball { radius, .. } => match D {
                1 => 2.0 * radius,
                2 => core::f64::consts::PI * radius * radius,
                _ => f64::NAN,
            },
        }
    }

    fn validate(&self) -> Result<(), PointFieldError> {
        let ok = match self {
            Window::Cuboid { min, max } => {
                (0..D).all(|c| max[c] > min[c] && max[c].is_finite() && min[c].is_finite())
            }
            Window::Ball { center, radius } => {
                *radius > 0.0 && radius.is_finite() && center.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(PointFieldError::DegenerateWindow)
        }
    }

    /// One uniform draw (rejection from the bounding cuboid for balls).
    fn sample_uniform(&self, rng: &mut ChaCha8Rng) -> Point<D> {
        match self {
            Window::Cuboid { min, max } => {
                let mut p = Point::zero();
                for c in 0..D {
                    let u: f64 = rng.random();
                    p.0[c] = min[c] + u * (max[c] - min[c]);
                }
                p
            }
            Window::Ball { center, radius } => loop {
                let mut p = Point::zero();
                for c in 0..D {
                    let u: f64 = rng.random();
                    p.0[c] = (2.0 * u - 1.0) * radius;
                }
                if p.norm_sq() < radius * radius {
                    return *center + p;
                }
            },
        }
    }
}

/// Poisson point sample: count `~ Poisson(intensity·volume)`, positions
/// i.i.d. uniform in the window. Deterministic given the seed; `N = 0`
/// is a legal outcome.
pub fn sample_poisson<const D: usize>(
    intensity: f64,
    window: Window<D>,
    seed: u64,
) -> Result<Configuration<D>, PointFieldError> {
    if !(intensity > 0.0) || !intensity.is_finite() {
        return Err(PointFieldError::InvalidIntensity(intensity));
    }
    window.validate()?;
    let mut rng = seeds::run_rng(seed);
    let mean = intensity * window.volume();
    let poisson = Poisson::new(mean).map_err(|_| PointFieldError::InvalidIntensity(intensity))?;
    let count: f64 = rng.sample(poisson);
    let count = count as usize;
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        points.push(window.sample_uniform(&mut rng));
    }
    Configuration::new(points)
}

/// Squared-radius statistics of a planar configuration, for comparison
/// against the independent Ginibre eigenvalue oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiiStats {
    pub sum_sq: f64,
    pub sorted_sq: Vec<f64>,
}

pub fn ginibre_radii_check<const D: usize>(
    config: &Configuration<D>,
) -> Result<RadiiStats, PointFieldError> {
    if D != 2 {
        return Err(PointFieldError::WrongDimension {
            expected: 2,
            got: D,
        });
    }
    if config.is_empty() {
        return Err(PointFieldError::EmptyConfiguration);
    }
    let mut sorted_sq: Vec<f64> = config.points().iter().map(|p| p.norm_sq()).collect();
    sorted_sq.sort_by(f64::total_cmp);
    Ok(RadiiStats {
        sum_sq: sorted_sq.iter().sum(),
        sorted_sq,
    })
}
