//! Tamed Euler–Maruyama integration of the finite-`N` truncated ISDEs.
//!
//! One step of the scheme, for every particle simultaneously from the
//! pre-step state:
//!
//! ```text
//! X^i ← X^i + b_tamed(X^i)·dt + √dt·ξ_i,   b_tamed = b·min(1, M/|b|)
//! ```
//!
//! with `b` the truncated drift of [`crate::drift`] and `ξ_i` standard
//! Gaussian per coordinate. If any post-step pair distance falls below the
//! configured minimum separation the whole step is rejected and retried
//! with fresh noise (up to 100 times). Per-particle noise comes from
//! independent ChaCha streams keyed by `(seed, slot)` so that permutation
//! tests and parallel drift evaluation cannot change the draws.

use crate::drift::{drift_value, DriftError, TruncationScheme};
use crate::point::Point;
use crate::pointfields::Configuration;
use crate::potentials::PotentialSpec;
use crate::seeds;
use alloc::vec::Vec;
use core::fmt;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[allow(unused_imports)]
use num_traits::Float;

const MAX_STEP_RETRIES: u32 = 100;

#[derive(Clone, Debug, PartialEq)]
pub enum DynamicsError {
    /// Integrator settings out of range.
    InvalidConfig(&'static str),
    /// A step could not find an admissible update in 100 retries; carries
    /// the offending pair and their distance.
    StepFailure {
        step_index: u64,
        slot_a: usize,
        slot_b: usize,
        distance: f64,
    },
    Drift(DriftError),
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::InvalidConfig(what) => write!(f, "invalid integrator config: {what}"),
            DynamicsError::StepFailure {
                step_index,
                slot_a,
                slot_b,
                distance,
            } => write!(
                f,
                "step {step_index}: particles {slot_a} and {slot_b} at distance {distance} \
                 below the minimum separation after {MAX_STEP_RETRIES} retries"
            ),
            DynamicsError::Drift(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DynamicsError {}

impl From<DriftError> for DynamicsError {
    fn from(e: DriftError) -> Self {
        DynamicsError::Drift(e)
    }
}

/// Soft-limit warnings produced by [`IntegratorConfig::validate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConfigWarning {
    /// `dt·M` above the documented stability guard 0.1.
    TamingStability { dt_times_cap: f64 },
}

impl fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigWarning::TamingStability { dt_times_cap } => write!(
                f,
                "dt x taming_cap = {dt_times_cap} exceeds the 0.1 stability guard"
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: u64,
    /// Taming cap `M`: maximum drift magnitude per particle.
    pub taming_cap: f64,
    /// Step-rejection threshold `δ` on post-step pair distances.
    pub min_separation: f64,
    pub record_every: u64,
    pub seed: u64,
}

impl IntegratorConfig {
    /// Hard validation plus soft warnings (`dt·M ≤ 0.1` is a warning, not
    /// an error).
    pub fn validate(&self) -> Result<Vec<ConfigWarning>, DynamicsError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(DynamicsError::InvalidConfig("dt must be positive"));
        }
        if !(self.taming_cap > 0.0) || !self.taming_cap.is_finite() {
            return Err(DynamicsError::InvalidConfig("taming_cap must be positive"));
        }
        if !(self.min_separation >= 0.0) || !self.min_separation.is_finite() {
            return Err(DynamicsError::InvalidConfig(
                "min_separation must be non-negative",
            ));
        }
        if self.record_every == 0 {
            return Err(DynamicsError::InvalidConfig("record_every must be >= 1"));
        }
        let mut warnings = Vec::new();
        let guard = self.dt * self.taming_cap;
        if guard > 0.1 {
            warnings.push(ConfigWarning::TamingStability {
                dt_times_cap: guard,
            });
        }
        Ok(warnings)
    }
}

/// Counters reported alongside a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimStats {
    pub steps_taken: u64,
    pub drift_evaluations: u64,
    /// Evaluations where `|b| > M` forced taming.
    pub tamed_evaluations: u64,
    /// Whole-step rejections from the minimum-separation check.
    pub rejected_steps: u64,
}

impl SimStats {
    pub fn tamed_fraction(&self) -> f64 {
        if self.drift_evaluations == 0 {
            0.0
        } else {
            self.tamed_evaluations as f64 / self.drift_evaluations as f64
        }
    }

    pub fn rejected_fraction(&self) -> f64 {
        if self.steps_taken == 0 {
            0.0
        } else {
            self.rejected_steps as f64 / self.steps_taken as f64
        }
    }
}

/// Time-indexed labeled snapshots plus full provenance.
///
/// Labels are stable across frames: the particle with label `i` is the same
/// particle at every time.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const D: usize> {
    times: Vec<f64>,
    frames: Vec<Configuration<D>>,
    spec: PotentialSpec<D>,
    scheme: TruncationScheme,
    integrator: IntegratorConfig,
    stats: SimStats,
}

impl<const D: usize> Trajectory<D> {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[Configuration<D>] {
        &self.frames
    }

    pub fn spec(&self) -> &PotentialSpec<D> {
        &self.spec
    }

    pub fn scheme(&self) -> TruncationScheme {
        self.scheme
    }

    pub fn integrator(&self) -> IntegratorConfig {
        self.integrator
    }

    pub fn stats(&self) -> SimStats {
        self.stats
    }

    pub fn particle_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.len())
    }

    /// Position of label `tag` at frame `k`.
    pub fn tagged_position(&self, k: usize, tag: usize) -> Option<Point<D>> {
        self.frames.get(k).and_then(|f| f.point_of_label(tag))
    }

    /// True when two trajectories were produced by the same harness (same
    /// grid, spec, scheme, and integrator settings up to the seed).
    pub fn same_harness(&self, other: &Self) -> bool {
        self.times == other.times
            && self.spec == other.spec
            && self.scheme == other.scheme
            && self.integrator.dt == other.integrator.dt
            && self.integrator.steps == other.integrator.steps
            && self.integrator.record_every == other.integrator.record_every
            && self.integrator.taming_cap == other.integrator.taming_cap
            && self.integrator.min_separation == other.integrator.min_separation
    }

    /// Rebuilds a trajectory from its serialized parts. Frames are trusted
    /// (the writer validated them); provenance is carried as-is.
    pub fn from_parts(
        times: Vec<f64>,
        frames: Vec<Configuration<D>>,
        spec: PotentialSpec<D>,
        scheme: TruncationScheme,
        integrator: IntegratorConfig,
        stats: SimStats,
    ) -> Self {
        Trajectory {
            times,
            frames,
            spec,
            scheme,
            integrator,
            stats,
        }
    }
}

/// Stepping state for one realization.
pub struct Simulator<const D: usize> {
    spec: PotentialSpec<D>,
    scheme: TruncationScheme,
    icfg: IntegratorConfig,
    points: Vec<Point<D>>,
    label_order: Vec<usize>,
    /// label carried by each slot (inverse of `label_order`)
    slot_labels: Vec<usize>,
    streams: Vec<ChaCha8Rng>,
    step_index: u64,
    stats: SimStats,
    // scratch buffers reused across steps
    drifts: Vec<Point<D>>,
    candidate: Vec<Point<D>>,
}

impl<const D: usize> Simulator<D> {
    pub fn new(
        initial: Configuration<D>,
        spec: PotentialSpec<D>,
        scheme: TruncationScheme,
        icfg: IntegratorConfig,
    ) -> Result<Self, DynamicsError> {
        icfg.validate()?;
        let n = initial.len();
        let label_order = initial.label_order().to_vec();
        let mut slot_labels = alloc::vec![0usize; n];
        for (label, &slot) in label_order.iter().enumerate() {
            slot_labels[slot] = label;
        }
        let streams = (0..n)
            .map(|slot| seeds::particle_stream(icfg.seed, slot))
            .collect();
        let points = initial.points().to_vec();
        Ok(Simulator {
            spec,
            scheme,
            icfg,
            points,
            label_order,
            slot_labels,
            streams,
            step_index: 0,
            stats: SimStats::default(),
            drifts: alloc::vec![Point::zero(); n],
            candidate: alloc::vec![Point::zero(); n],
        })
    }

    pub fn state(&self) -> Configuration<D> {
        Configuration::from_parts_unchecked(self.points.clone(), self.label_order.clone())
    }

    pub fn stats(&self) -> SimStats {
        self.stats
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.icfg.dt
    }

    /// One tamed Euler–Maruyama step with simultaneous update and
    /// minimum-separation rejection.
    pub fn step(&mut self) -> Result<(), DynamicsError> {
        let n = self.points.len();
        let dt = self.icfg.dt;
        let sqrt_dt = dt.sqrt();
        let cap = self.icfg.taming_cap;

        // drifts at the pre-step state; unchanged across noise retries
        let state = self.state();
        for slot in 0..n {
            let b = drift_value(
                self.points[slot],
                &state,
                Some(self.slot_labels[slot]),
                &self.spec,
                self.scheme,
            )?;
            self.stats.drift_evaluations += 1;
            let norm = b.norm();
            self.drifts[slot] = if norm > cap {
                self.stats.tamed_evaluations += 1;
                b * (cap / norm)
            } else {
                b
            };
        }

        let mut attempt = 0u32;
        loop {
            for slot in 0..n {
                let mut p = self.points[slot] + self.drifts[slot] * dt;
                for c in 0..D {
                    let z: f64 = self.streams[slot].sample(StandardNormal);
                    p.0[c] += sqrt_dt * z;
                }
                self.candidate[slot] = p;
            }
            match closest_violation(&self.candidate, self.icfg.min_separation) {
                None => break,
                Some((a, b, dist)) => {
                    attempt += 1;
                    self.stats.rejected_steps += 1;
                    if attempt >= MAX_STEP_RETRIES {
                        return Err(DynamicsError::StepFailure {
                            step_index: self.step_index,
                            slot_a: a,
                            slot_b: b,
                            distance: dist,
                        });
                    }
                }
            }
        }

        core::mem::swap(&mut self.points, &mut self.candidate);
        self.step_index += 1;
        self.stats.steps_taken += 1;
        Ok(())
    }

    /// Runs the configured number of steps, recording every
    /// `record_every`-th state (plus the initial one).
    pub fn run(mut self) -> Result<Trajectory<D>, DynamicsError> {
        let record_every = self.icfg.record_every;
        let frame_count = (self.icfg.steps / record_every) as usize + 1;
        let mut times = Vec::with_capacity(frame_count);
        let mut frames = Vec::with_capacity(frame_count);
        times.push(0.0);
        frames.push(self.state());
        for step in 1..=self.icfg.steps {
            self.step()?;
            if step % record_every == 0 {
                times.push(step as f64 * self.icfg.dt);
                frames.push(self.state());
            }
        }
        Ok(Trajectory {
            times,
            frames,
            spec: self.spec,
            scheme: self.scheme,
            integrator: self.icfg,
            stats: self.stats,
        })
    }
}

fn closest_violation<const D: usize>(
    points: &[Point<D>],
    min_separation: f64,
) -> Option<(usize, usize, f64)> {
    if min_separation <= 0.0 {
        return None;
    }
    let threshold = min_separation * min_separation;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d2 = (points[i] - points[j]).norm_sq();
            if d2 < threshold {
                return Some((i, j, d2.sqrt()));
            }
        }
    }
    None
}

/// One step from `state`, with fresh noise streams derived from
/// `icfg.seed`. Identical to the first step of [`simulate`].
pub fn step<const D: usize>(
    state: Configuration<D>,
    spec: PotentialSpec<D>,
    scheme: TruncationScheme,
    icfg: IntegratorConfig,
) -> Result<Configuration<D>, DynamicsError> {
    let mut sim = Simulator::new(state, spec, scheme, icfg)?;
    sim.step()?;
    Ok(sim.state())
}

/// Integrates `initial` for `icfg.steps` steps; deterministic given
/// `icfg.seed`.
pub fn simulate<const D: usize>(
    initial: Configuration<D>,
    spec: PotentialSpec<D>,
    scheme: TruncationScheme,
    icfg: IntegratorConfig,
) -> Result<Trajectory<D>, DynamicsError> {
    Simulator::new(initial, spec, scheme, icfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::TruncationCenter;
    use crate::potentials::FreePotential;

    fn p1(x: f64) -> Point<1> {
        Point::new([x])
    }

    fn p2(x: f64, y: f64) -> Point<2> {
        Point::new([x, y])
    }

    fn free_spec1() -> PotentialSpec<1> {
        PotentialSpec::new(2.0, 2.0, FreePotential::None).unwrap()
    }

    fn icfg(steps: u64, seed: u64) -> IntegratorConfig {
        IntegratorConfig {
            dt: 1e-4,
            steps,
            taming_cap: 50.0,
            min_separation: 1e-4,
            record_every: 1,
            seed,
        }
    }

    #[test]
    fn config_validation_and_warning() {
        let mut cfg = icfg(1, 0);
        assert!(cfg.validate().unwrap().is_empty());
        cfg.dt = 0.01;
        cfg.taming_cap = 50.0;
        let warnings = cfg.validate().unwrap();
        assert_eq!(
            warnings,
            alloc::vec![ConfigWarning::TamingStability { dt_times_cap: 0.5 }]
        );
        cfg.dt = -1.0;
        assert!(cfg.validate().is_err());
        cfg.dt = 1e-4;
        cfg.record_every = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_steps_yields_single_frame() {
        let initial = Configuration::new(alloc::vec![p1(0.5)]).unwrap();
        let spec = free_spec1();
        let scheme = TruncationScheme::particle(10.0).unwrap();
        let traj = simulate(initial.clone(), spec, scheme, icfg(0, 9)).unwrap();
        assert_eq!(traj.times(), &[0.0]);
        assert_eq!(traj.frames().len(), 1);
        assert_eq!(traj.frames()[0], initial);
    }

    #[test]
    fn same_seed_bit_identical_trajectories() {
        let initial = Configuration::new(alloc::vec![p1(-0.7), p1(0.7)]).unwrap();
        let spec = free_spec1();
        let scheme = TruncationScheme::particle(10.0).unwrap();
        let a = simulate(initial.clone(), spec, scheme, icfg(200, 11)).unwrap();
        let b = simulate(initial.clone(), spec, scheme, icfg(200, 11)).unwrap();
        assert_eq!(a, b);
        let c = simulate(initial, spec, scheme, icfg(200, 12)).unwrap();
        assert_ne!(a.frames(), c.frames());
    }

    #[test]
    fn frame_count_truncates() {
        let initial = Configuration::new(alloc::vec![p1(0.0)]).unwrap();
        let spec = free_spec1();
        let scheme = TruncationScheme::particle(10.0).unwrap();
        let mut cfg = icfg(10, 1);
        cfg.record_every = 4;
        let traj = simulate(initial, spec, scheme, cfg).unwrap();
        // floor(10/4) + 1 = 3 frames at t = 0, 4dt, 8dt
        assert_eq!(traj.frames().len(), 3);
        assert_eq!(traj.times().len(), 3);
        assert!((traj.times()[2] - 8.0e-4).abs() < 1e-18);
    }

    /// Hand-rolled single step reproducing the scheme from the documented
    /// stream rule; independent of the Simulator internals.
    fn manual_step_1d(
        points: &[Point<1>],
        drift: impl Fn(usize) -> f64,
        cfg: &IntegratorConfig,
    ) -> Vec<Point<1>> {
        let sqrt_dt = cfg.dt.sqrt();
        points
            .iter()
            .enumerate()
            .map(|(slot, p)| {
                let mut rng = seeds::particle_stream(cfg.seed, slot);
                let z: f64 = rng.sample(StandardNormal);
                let b = drift(slot);
                let tamed = if b.abs() > cfg.taming_cap {
                    b.signum() * cfg.taming_cap
                } else {
                    b
                };
                p1(p[0] + tamed * cfg.dt + sqrt_dt * z)
            })
            .collect()
    }

    #[test]
    fn step_matches_manual_euler_update() {
        // symmetric pair at ±a: drift on each is antisymmetric, and the
        // midpoint displacement is pure noise
        let a = 0.8;
        let initial = Configuration::new(alloc::vec![p1(-a), p1(a)]).unwrap();
        let spec = free_spec1();
        let scheme = TruncationScheme::particle(100.0).unwrap();
        let cfg = icfg(1, 37);
        let stepped = step(initial.clone(), spec, scheme, cfg).unwrap();
        // β/2 = 1; the only pair term is 1/(x_i − x_j)
        let expect = manual_step_1d(
            initial.points(),
            |slot| {
                let (xi, xj) = if slot == 0 { (-a, a) } else { (a, -a) };
                1.0 / (xi - xj)
            },
            &cfg,
        );
        assert_eq!(stepped.points(), &expect[..]);

        // drift contributions cancel in the midpoint: committed midpoint
        // minus noise midpoint equals the initial midpoint exactly
        let noise_mid: f64 = {
            let mut z = [0.0f64; 2];
            for (slot, zi) in z.iter_mut().enumerate() {
                let mut rng = seeds::particle_stream(cfg.seed, slot);
                *zi = rng.sample(StandardNormal);
            }
            cfg.dt.sqrt() * (z[0] + z[1]) / 2.0
        };
        let mid_after = (stepped.points()[0][0] + stepped.points()[1][0]) / 2.0;
        assert!((mid_after - noise_mid).abs() < 1e-15);
    }

    #[test]
    fn taming_caps_drift_magnitude() {
        // two particles 1e-3 apart: |pair drift| = 1000 > M = 50
        let initial = Configuration::new(alloc::vec![p1(0.0), p1(1e-3)]).unwrap();
        let spec = free_spec1();
        let scheme = TruncationScheme::particle(10.0).unwrap();
        let mut cfg = icfg(1, 5);
        cfg.min_separation = 0.0;
        let mut sim = Simulator::new(initial, spec, scheme, cfg).unwrap();
        sim.step().unwrap();
        assert_eq!(sim.stats().tamed_evaluations, 2);
        // update magnitude bounded by M·dt plus the noise
        let moved = sim.state();
        for (before, after) in [0.0, 1e-3].iter().zip(moved.points()) {
            assert!((after[0] - before).abs() < 50.0 * cfg.dt + 10.0 * cfg.dt.sqrt());
        }
    }

    #[test]
    fn rejection_retries_and_fails_with_pair() {
        // δ larger than anything two near particles can escape in one step
        let initial = Configuration::new(alloc::vec![p1(0.0), p1(1e-3)]).unwrap();
        let spec = free_spec1();
        let scheme = TruncationScheme::particle(10.0).unwrap();
        let mut cfg = icfg(1, 5);
        cfg.min_separation = 1.0;
        let err = step(initial, spec, scheme, cfg).unwrap_err();
        match err {
            DynamicsError::StepFailure {
                step_index,
                slot_a,
                slot_b,
                ..
            } => {
                assert_eq!(step_index, 0);
                assert_eq!((slot_a, slot_b), (0, 1));
            }
            other => panic!("expected StepFailure, got {other:?}"),
        }
    }

    #[test]
    fn free_particle_is_brownian() {
        // N=1, Φ=None: increments have mean 0 and per-coordinate variance dt
        let initial = Configuration::new(alloc::vec![p2(0.0, 0.0)]).unwrap();
        let spec = PotentialSpec::<2>::new(2.0, 2.0, FreePotential::None).unwrap();
        let scheme = TruncationScheme::particle(10.0).unwrap();
        let steps = 100_000u64;
        let cfg = IntegratorConfig {
            dt: 1e-4,
            steps,
            taming_cap: 50.0,
            min_separation: 0.0,
            record_every: 1,
            seed: 314,
        };
        let traj = simulate(initial, spec, scheme, cfg).unwrap();
        let mut sum = [0.0f64; 2];
        let mut sum_sq = [0.0f64; 2];
        for w in traj.frames().windows(2) {
            let inc = w[1].points()[0] - w[0].points()[0];
            for c in 0..2 {
                sum[c] += inc[c];
                sum_sq[c] += inc[c] * inc[c];
            }
        }
        let n = steps as f64;
        for c in 0..2 {
            let mean = sum[c] / n;
            let var = sum_sq[c] / n - mean * mean;
            // 3σ bands: mean ~ N(0, dt/n), var estimator sd ≈ dt·√(2/n)
            assert!(mean.abs() < 3.0 * (cfg.dt / n).sqrt(), "mean {mean}");
            assert!(
                (var - cfg.dt).abs() < 3.0 * cfg.dt * (2.0 / n).sqrt(),
                "var {var}"
            );
        }
        assert_eq!(traj.stats().tamed_evaluations, 0);
        assert_eq!(traj.stats().rejected_steps, 0);
    }

    #[test]
    fn label_permutation_permutes_trajectories_exactly() {
        let pts = alloc::vec![p2(0.2, 0.1), p2(-0.8, 0.4), p2(0.5, -0.9), p2(-0.1, -0.3)];
        let base = Configuration::new(pts.clone()).unwrap();
        let order = base.label_order().to_vec();
        // permute labels: label i of `permuted` is label perm[i] of `base`
        let perm = alloc::vec![2usize, 0, 3, 1];
        let permuted_order: Vec<usize> = perm.iter().map(|&i| order[i]).collect();
        let permuted = Configuration::with_label_order(pts, permuted_order).unwrap();

        let spec = PotentialSpec::<2>::new(2.0, 2.0, FreePotential::Harmonic { coeff: 1.0 })
            .unwrap();
        let scheme = TruncationScheme::new(TruncationCenter::Origin, 1e6).unwrap();
        let cfg = icfg(50, 99);
        let ta = simulate(base, spec, scheme, cfg).unwrap();
        let tb = simulate(permuted, spec, scheme, cfg).unwrap();
        // same physical paths, frame by frame
        for (fa, fb) in ta.frames().iter().zip(tb.frames()) {
            assert_eq!(fa.points(), fb.points());
        }
        // tagged paths permute: label i of tb is label perm[i] of ta
        for (i, &pi) in perm.iter().enumerate() {
            for k in 0..ta.frames().len() {
                assert_eq!(
                    tb.tagged_position(k, i).unwrap(),
                    ta.tagged_position(k, pi).unwrap()
                );
            }
        }
    }
}
