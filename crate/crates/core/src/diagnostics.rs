//! Trajectory and point-process statistics: tagged-particle mean squared
//! displacement, diffusive rescaling, power-law exponent fits with
//! bootstrap confidence widths, and number-variance rigidity statistics.

use crate::drift::TruncationScheme;
use crate::dynamics::{self, DynamicsError, IntegratorConfig, Trajectory};
use crate::point::Point;
use crate::pointfields::{
    Configuration, LogGasChain, LogGasDensity, PointFieldError,
};
use crate::potentials::{PotentialSpec, Regime};
use crate::seeds;
use alloc::vec::Vec;
use core::fmt;
use rand::Rng;

#[allow(unused_imports)]
use num_traits::Float;

/// Fixed seed for the default bootstrap resampling (documented so published
/// half-widths are reproducible).
pub const DEFAULT_BOOTSTRAP_SEED: u64 = 0x0b007;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub enum DiagnosticsError {
    EmptyInput,
    /// Trajectories do not share time grid and harness provenance.
    MismatchedGrids,
    TagOutOfRange(usize),
    /// Fit window holds fewer than 5 grid points.
    WindowTooSmall { points: usize },
    /// Log-log fit requires strictly positive msd values in the window.
    NonPositiveMsd { time: f64 },
    /// `ε` must lie in (0, 1].
    InvalidEpsilon(f64),
    /// Requested time maps outside the recorded horizon.
    HorizonExceeded { requested: f64, horizon: f64 },
    /// Requested time does not land on the recorded grid.
    OffGrid { requested: f64 },
    /// Radii must be strictly increasing and positive.
    InvalidRadii,
    /// Variance needs at least two samples.
    TooFewReplicas(usize),
    PointField(PointFieldError),
    Dynamics(DynamicsError),
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::EmptyInput => write!(f, "empty input"),
            DiagnosticsError::MismatchedGrids => {
                write!(f, "trajectories do not share time grid and provenance")
            }
            DiagnosticsError::TagOutOfRange(t) => write!(f, "tag label {t} out of range"),
            DiagnosticsError::WindowTooSmall { points } => {
                write!(f, "fit window holds {points} grid points, need at least 5")
            }
            DiagnosticsError::NonPositiveMsd { time } => {
                write!(f, "msd at t = {time} is not positive; cannot fit log-log")
            }
            DiagnosticsError::InvalidEpsilon(e) => {
                write!(f, "epsilon must be in (0, 1], got {e}")
            }
            DiagnosticsError::HorizonExceeded { requested, horizon } => {
                write!(f, "time {requested} beyond recorded horizon {horizon}")
            }
            DiagnosticsError::OffGrid { requested } => {
                write!(f, "time {requested} does not land on the recorded grid")
            }
            DiagnosticsError::InvalidRadii => {
                write!(f, "radii must be positive and strictly increasing")
            }
            DiagnosticsError::TooFewReplicas(n) => {
                write!(f, "need at least two samples, got {n}")
            }
            DiagnosticsError::PointField(e) => write!(f, "{e}"),
            DiagnosticsError::Dynamics(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DiagnosticsError {}

impl From<PointFieldError> for DiagnosticsError {
    fn from(e: PointFieldError) -> Self {
        DiagnosticsError::PointField(e)
    }
}

impl From<DynamicsError> for DiagnosticsError {
    fn from(e: DynamicsError) -> Self {
        DiagnosticsError::Dynamics(e)
    }
}

/// Path of one labeled particle.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggedPath<const D: usize> {
    pub times: Vec<f64>,
    pub positions: Vec<Point<D>>,
}

/// Extracts the path of label `tag` from a trajectory.
pub fn tagged_path<const D: usize>(
    traj: &Trajectory<D>,
    tag: usize,
) -> Result<TaggedPath<D>, DiagnosticsError> {
    if tag >= traj.particle_count() {
        return Err(DiagnosticsError::TagOutOfRange(tag));
    }
    let positions = traj
        .frames()
        .iter()
        .map(|f| f.point_of_label(tag).expect("label checked above"))
        .collect();
    Ok(TaggedPath {
        times: traj.times().to_vec(),
        positions,
    })
}

/// Tagged-particle mean squared displacement, averaged over replicas.
///
/// Retains the per-replica squared displacements so confidence widths can
/// be bootstrapped later.
#[derive(Clone, Debug, PartialEq)]
pub struct MsdSeries {
    pub times: Vec<f64>,
    pub msd: Vec<f64>,
    pub replicas: usize,
    pub tag: usize,
    per_replica: Vec<Vec<f64>>,
}

impl MsdSeries {
    /// Builds a series from per-replica squared displacements (replica-major).
    pub fn from_replica_series(
        times: Vec<f64>,
        per_replica: Vec<Vec<f64>>,
        tag: usize,
    ) -> Result<Self, DiagnosticsError> {
        if per_replica.is_empty() || times.is_empty() {
            return Err(DiagnosticsError::EmptyInput);
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DiagnosticsError::MismatchedGrids);
        }
        if per_replica.iter().any(|r| r.len() != times.len()) {
            return Err(DiagnosticsError::MismatchedGrids);
        }
        let replicas = per_replica.len();
        let mut msd = alloc::vec![0.0f64; times.len()];
        for series in &per_replica {
            for (acc, v) in msd.iter_mut().zip(series) {
                *acc += v;
            }
        }
        for v in msd.iter_mut() {
            *v /= replicas as f64;
        }
        Ok(MsdSeries {
            times,
            msd,
            replicas,
            tag,
            per_replica,
        })
    }

    pub fn per_replica(&self) -> &[Vec<f64>] {
        &self.per_replica
    }
}

/// MSD of label `tag` over replica trajectories sharing one harness.
pub fn msd<const D: usize>(
    trajectories: &[Trajectory<D>],
    tag: usize,
) -> Result<MsdSeries, DiagnosticsError> {
    let first = trajectories.first().ok_or(DiagnosticsError::EmptyInput)?;
    if trajectories.iter().any(|t| !t.same_harness(first)) {
        return Err(DiagnosticsError::MismatchedGrids);
    }
    let mut per_replica = Vec::with_capacity(trajectories.len());
    for traj in trajectories {
        let path = tagged_path(traj, tag)?;
        let origin = path.positions[0];
        per_replica.push(
            path.positions
                .iter()
                .map(|p| (*p - origin).norm_sq())
                .collect(),
        );
    }
    MsdSeries::from_replica_series(first.times().to_vec(), per_replica, tag)
}

/// Diffusive rescaling `t ↦ ε·X(t/ε²)` applied to a whole recorded path:
/// the output grid is `{ε²·t_k}` and the values are `ε·X(t_k)`.
pub fn rescale<const D: usize>(
    path: &TaggedPath<D>,
    epsilon: f64,
) -> Result<TaggedPath<D>, DiagnosticsError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(DiagnosticsError::InvalidEpsilon(epsilon));
    }
    Ok(TaggedPath {
        times: path.times.iter().map(|t| t * epsilon * epsilon).collect(),
        positions: path.positions.iter().map(|p| *p * epsilon).collect(),
    })
}

/// Diffusive rescaling evaluated on an explicit grid: each requested `t`
/// must satisfy `t/ε² ≤ horizon` and land on the recorded grid.
pub fn rescale_on<const D: usize>(
    path: &TaggedPath<D>,
    epsilon: f64,
    times: &[f64],
) -> Result<TaggedPath<D>, DiagnosticsError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(DiagnosticsError::InvalidEpsilon(epsilon));
    }
    let horizon = *path.times.last().ok_or(DiagnosticsError::EmptyInput)?;
    let mut positions = Vec::with_capacity(times.len());
    for &t in times {
        let s = t / (epsilon * epsilon);
        if s > horizon * (1.0 + 1e-12) {
            return Err(DiagnosticsError::HorizonExceeded {
                requested: t,
                horizon: horizon * epsilon * epsilon,
            });
        }
        let k = grid_index(&path.times, s).ok_or(DiagnosticsError::OffGrid { requested: t })?;
        positions.push(path.positions[k] * epsilon);
    }
    Ok(TaggedPath {
        times: times.to_vec(),
        positions,
    })
}

fn grid_index(times: &[f64], s: f64) -> Option<usize> {
    let idx = times.partition_point(|&t| t < s);
    for k in [idx.saturating_sub(1), idx, idx + 1] {
        if let Some(&t) = times.get(k) {
            if (t - s).abs() <= 1e-9 * (1.0 + s.abs()) {
                return Some(k);
            }
        }
    }
    None
}

/// Power-law fit of an [`MsdSeries`] over a time window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    /// Bootstrap-over-replicas 95% confidence half-width.
    pub half_width: f64,
}

/// Least-squares slope of `log msd` vs `log t` over `[window.0, window.1]`,
/// with a seeded bootstrap (1000 resamples over replicas) half-width.
pub fn msd_exponent(
    series: &MsdSeries,
    window: (f64, f64),
) -> Result<ExponentFit, DiagnosticsError> {
    msd_exponent_seeded(
        series,
        window,
        DEFAULT_BOOTSTRAP_RESAMPLES,
        DEFAULT_BOOTSTRAP_SEED,
    )
}

pub fn msd_exponent_seeded(
    series: &MsdSeries,
    window: (f64, f64),
    resamples: usize,
    seed: u64,
) -> Result<ExponentFit, DiagnosticsError> {
    let idx: Vec<usize> = series
        .times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= window.0 && t <= window.1 && t > 0.0)
        .map(|(k, _)| k)
        .collect();
    if idx.len() < 5 {
        return Err(DiagnosticsError::WindowTooSmall { points: idx.len() });
    }
    let log_t: Vec<f64> = idx.iter().map(|&k| series.times[k].ln()).collect();
    for &k in &idx {
        if series.msd[k] <= 0.0 {
            return Err(DiagnosticsError::NonPositiveMsd {
                time: series.times[k],
            });
        }
    }
    let log_m: Vec<f64> = idx.iter().map(|&k| series.msd[k].ln()).collect();
    let exponent = ols_slope(&log_t, &log_m);

    // bootstrap over replicas
    let r = series.replicas;
    let mut rng = seeds::run_rng(seed);
    let mut slopes = Vec::with_capacity(resamples);
    let mut resampled = alloc::vec![0.0f64; idx.len()];
    for _ in 0..resamples {
        resampled.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..r {
            let pick = rng.random_range(0..r);
            let series_r = &series.per_replica[pick];
            for (acc, &k) in resampled.iter_mut().zip(&idx) {
                *acc += series_r[k];
            }
        }
        if resampled.iter().any(|&v| v <= 0.0) {
            continue; // degenerate resample; cannot take logs
        }
        let logs: Vec<f64> = resampled.iter().map(|v| (v / r as f64).ln()).collect();
        slopes.push(ols_slope(&log_t, &logs));
    }
    let half_width = if slopes.len() < 2 {
        0.0
    } else {
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let var = slopes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
            / (slopes.len() - 1) as f64;
        1.96 * var.sqrt()
    };
    Ok(ExponentFit {
        exponent,
        half_width,
    })
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    sxy / sxx
}

/// Counts-in-balls statistics over i.i.d. configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceSeries {
    pub radii: Vec<f64>,
    pub count_mean: Vec<f64>,
    pub count_variance: Vec<f64>,
    pub replicas: usize,
    /// Set when the radius exceeds the `0.5·√N` droplet bulk guard.
    pub bulk_warning: Vec<bool>,
}

impl VarianceSeries {
    /// Variance/mean per radius (1 for an ideal Poisson process).
    pub fn dispersion_index(&self) -> Vec<f64> {
        self.count_mean
            .iter()
            .zip(&self.count_variance)
            .map(|(m, v)| if *m > 0.0 { v / m } else { f64::NAN })
            .collect()
    }
}

/// Mean and variance across `configs` of the point count in the ball of
/// each radius about `center`.
pub fn number_variance<const D: usize>(
    configs: &[Configuration<D>],
    radii: &[f64],
    center: Point<D>,
) -> Result<VarianceSeries, DiagnosticsError> {
    if configs.len() < 2 {
        return Err(DiagnosticsError::TooFewReplicas(configs.len()));
    }
    if radii.is_empty()
        || radii.iter().any(|r| !(*r > 0.0))
        || radii.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(DiagnosticsError::InvalidRadii);
    }
    let mean_n =
        configs.iter().map(|c| c.len() as f64).sum::<f64>() / configs.len() as f64;
    let guard = 0.5 * mean_n.sqrt();
    let mut count_mean = Vec::with_capacity(radii.len());
    let mut count_variance = Vec::with_capacity(radii.len());
    let mut bulk_warning = Vec::with_capacity(radii.len());
    for &r in radii {
        let r2 = r * r;
        let counts: Vec<f64> = configs
            .iter()
            .map(|c| {
                c.points()
                    .iter()
                    .filter(|p| (**p - center).norm_sq() < r2)
                    .count() as f64
            })
            .collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0);
        count_mean.push(mean);
        count_variance.push(var);
        bulk_warning.push(r > guard);
    }
    Ok(VarianceSeries {
        radii: radii.to_vec(),
        count_mean,
        count_variance,
        replicas: configs.len(),
        bulk_warning,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
///
/// Panics on empty input.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "ks_statistic: empty sample");
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        // consume every sample equal to the current smallest value on both
        // sides before comparing the empirical CDFs
        let v = if sa[i] <= sb[j] { sa[i] } else { sb[j] };
        while i < sa.len() && sa[i] == v {
            i += 1;
        }
        while j < sb.len() && sb[j] == v {
            j += 1;
        }
        let fa = i as f64 / sa.len() as f64;
        let fb = j as f64 / sb.len() as f64;
        sup = sup.max((fa - fb).abs());
    }
    sup
}

/// Median of a non-empty sample (average of the middle two for even sizes).
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median: empty sample");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Harness shared by the two arms of a self-diffusion comparison.
#[derive(Clone, Copy, Debug)]
pub struct CompareHarness {
    pub n: usize,
    pub replicas: usize,
    /// Metropolis sweeps used to equilibrate each replica (`n ≥ 2` only).
    pub burn_in: usize,
    pub proposal_scale: f64,
    pub scheme: TruncationScheme,
    /// Template integrator; per-replica seeds are derived from `seed`.
    pub integrator: IntegratorConfig,
    /// Exponent fit window.
    pub window: (f64, f64),
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct MsdSummary {
    pub regime: Regime,
    pub exponent: f64,
    pub half_width: f64,
    /// `(t, msd(t)/t)` at the decade boundaries of the fit window.
    pub msd_over_t: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub a: MsdSummary,
    pub b: MsdSummary,
}

/// Runs matched tagged-particle MSD experiments for two interaction specs
/// on the shared harness and reports exponents plus the `msd(t)/t` trend.
///
/// Each replica `r` equilibrates with sampler seed `derive(seed, 2r)` and
/// integrates with dynamics seed `derive(seed, 2r+1)`. With `n = 1` the
/// single particle starts at the origin and the run is a pure control.
pub fn self_diffusion_compare<const D: usize>(
    spec_a: &PotentialSpec<D>,
    spec_b: &PotentialSpec<D>,
    harness: &CompareHarness,
) -> Result<CompareReport, DiagnosticsError> {
    Ok(CompareReport {
        a: msd_experiment(spec_a, harness)?,
        b: msd_experiment(spec_b, harness)?,
    })
}

/// One arm of the comparison; also used on its own for single-spec runs.
pub fn msd_experiment<const D: usize>(
    spec: &PotentialSpec<D>,
    harness: &CompareHarness,
) -> Result<MsdSummary, DiagnosticsError> {
    let mut trajectories = Vec::with_capacity(harness.replicas);
    for r in 0..harness.replicas {
        trajectories.push(msd_replica(spec, harness, r)?);
    }
    summarize_msd(spec, harness, &trajectories)
}

/// A single replica of the MSD experiment (exposed so callers can fan
/// replicas out across threads and then summarize).
pub fn msd_replica<const D: usize>(
    spec: &PotentialSpec<D>,
    harness: &CompareHarness,
    replica: usize,
) -> Result<Trajectory<D>, DiagnosticsError> {
    let sampler_seed = seeds::derive_seed(harness.seed, 2 * replica as u64);
    let dynamics_seed = seeds::derive_seed(harness.seed, 2 * replica as u64 + 1);
    let initial = if harness.n == 1 {
        Configuration::new(alloc::vec![Point::zero()])?
    } else {
        let density = LogGasDensity::new(*spec, harness.n)?;
        let mut chain = LogGasChain::new(density, harness.proposal_scale, sampler_seed)?;
        chain.run_sweeps(harness.burn_in);
        chain.config()?
    };
    let mut icfg = harness.integrator;
    icfg.seed = dynamics_seed;
    Ok(dynamics::simulate(initial, *spec, harness.scheme, icfg)?)
}

/// Fits the pooled MSD of replica trajectories over the harness window.
pub fn summarize_msd<const D: usize>(
    spec: &PotentialSpec<D>,
    harness: &CompareHarness,
    trajectories: &[Trajectory<D>],
) -> Result<MsdSummary, DiagnosticsError> {
    let series = msd(trajectories, 0)?;
    let fit = msd_exponent(&series, harness.window)?;
    let (lo, hi) = harness.window;
    let mid = (lo * hi).sqrt();
    let mut msd_over_t = Vec::new();
    for target in [lo, mid, hi] {
        if let Some(k) = nearest_index(&series.times, target) {
            let t = series.times[k];
            if t > 0.0 {
                msd_over_t.push((t, series.msd[k] / t));
            }
        }
    }
    Ok(MsdSummary {
        regime: spec.classify(),
        exponent: fit.exponent,
        half_width: fit.half_width,
        msd_over_t,
    })
}

fn nearest_index(times: &[f64], target: f64) -> Option<usize> {
    if times.is_empty() {
        return None;
    }
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (k, &t) in times.iter().enumerate() {
        let d = (t - target).abs();
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    Some(best)
}
