//! Experiment configuration: TOML file, environment, and flag overrides.
//!
//! Precedence (lowest to highest): built-in defaults, `--config` file,
//! `RIESZGAS_OUT` environment variable, command-line flags. Every field has
//! a default; the fully-defaulted config runs the Ginibre drift-check at
//! N = 256. The resolved config round-trips losslessly through TOML and is
//! embedded verbatim in every output header.

use crate::error::CliError;
use rieszgas_core::drift::{TruncationCenter, TruncationScheme};
use rieszgas_core::dynamics::IntegratorConfig;
use rieszgas_core::potentials::{FreePotential, PotentialSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Environment variable overriding the output prefix.
pub const OUT_ENV_VAR: &str = "RIESZGAS_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Sample,
    DriftCheck,
    Simulate,
    Msd,
    Rigidity,
    Compare,
}

impl Experiment {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "sample" => Ok(Experiment::Sample),
            "drift-check" => Ok(Experiment::DriftCheck),
            "simulate" => Ok(Experiment::Simulate),
            "msd" => Ok(Experiment::Msd),
            "rigidity" => Ok(Experiment::Rigidity),
            "compare" => Ok(Experiment::Compare),
            other => Err(CliError::UnknownExperiment(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Sample => "sample",
            Experiment::DriftCheck => "drift-check",
            Experiment::Simulate => "simulate",
            Experiment::Msd => "msd",
            Experiment::Rigidity => "rigidity",
            Experiment::Compare => "compare",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreeKind {
    None,
    Harmonic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Particle,
    Origin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Loggas,
    Poisson,
}

/// Interaction model block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub dim: usize,
    pub gamma: f64,
    pub beta: f64,
    pub free: FreeKind,
    pub free_coeff: f64,
    pub n: usize,
    pub scheme: SchemeKind,
    /// Drift truncation radius; the default covers any desk-scale droplet.
    pub radius: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 2,
            gamma: 2.0,
            beta: 2.0,
            free: FreeKind::Harmonic,
            free_coeff: 1.0,
            n: 256,
            scheme: SchemeKind::Origin,
            radius: 1e9,
        }
    }
}

impl ModelConfig {
    pub fn free_potential(&self) -> FreePotential {
        match self.free {
            FreeKind::None => FreePotential::None,
            FreeKind::Harmonic => FreePotential::Harmonic {
                coeff: self.free_coeff,
            },
        }
    }

    pub fn spec<const D: usize>(&self) -> Result<PotentialSpec<D>, CliError> {
        PotentialSpec::<D>::new(self.gamma, self.beta, self.free_potential())
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn truncation(&self) -> Result<TruncationScheme, CliError> {
        let center = match self.scheme {
            SchemeKind::Particle => TruncationCenter::Particle,
            SchemeKind::Origin => TruncationCenter::Origin,
        };
        TruncationScheme::new(center, self.radius).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Metropolis sampler block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Equilibration sweeps before any observable is recorded.
    pub burn_in: usize,
    /// Post-burn-in sweeps (sample experiment) or recorded snapshots
    /// spacing source for rigidity.
    pub sweeps: usize,
    /// Gaussian proposal scale; default is `0.5/√(1/π)`, the documented
    /// rule at Ginibre bulk intensity.
    pub proposal_scale: f64,
    /// Sweeps between recorded snapshots (rigidity experiment).
    pub record_stride: usize,
    /// Poisson control intensity; default is the Ginibre bulk value `1/π`.
    pub intensity: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            kind: SamplerKind::Loggas,
            burn_in: 1000,
            sweeps: 200,
            proposal_scale: 0.5 / (1.0 / std::f64::consts::PI).sqrt(),
            record_stride: 25,
            intensity: 1.0 / std::f64::consts::PI,
        }
    }
}

/// Integrator block; `seed` is derived from the master seed per replica.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorBlock {
    pub dt: f64,
    pub steps: u64,
    pub taming_cap: f64,
    pub min_separation: f64,
    pub record_every: u64,
}

impl Default for IntegratorBlock {
    fn default() -> Self {
        IntegratorBlock {
            dt: 1e-4,
            steps: 10_000,
            taming_cap: 50.0,
            min_separation: 1e-4,
            record_every: 40,
        }
    }
}

impl IntegratorBlock {
    pub fn with_seed(&self, seed: u64) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            steps: self.steps,
            taming_cap: self.taming_cap,
            min_separation: self.min_separation,
            record_every: self.record_every,
            seed,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// Per-experiment knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub replicas: usize,
    /// Shell radii for drift-check partial sums and rigidity statistics.
    pub radii: Vec<f64>,
    /// Identity-gap radii as fractions of `√N`.
    pub gap_fractions: Vec<f64>,
    /// Number of Poisson control samples.
    pub poisson_seeds: usize,
    /// Exponent fit window; `0` means the final decade `[T/10, T]`.
    pub window_lo: f64,
    pub window_hi: f64,
    /// Riesz exponent of the short-range control arm of `compare`.
    pub control_gamma: f64,
    /// Replicas for the non-interacting (`n = 1`) control of `compare`.
    pub control_replicas: usize,
    /// Tagged label for msd experiments.
    pub tag: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            replicas: 50,
            radii: vec![4.0, 8.0, 16.0],
            gap_fractions: vec![0.2, 0.8],
            poisson_seeds: 400,
            window_lo: 0.0,
            window_hi: 0.0,
            control_gamma: 5.0,
            control_replicas: 1024,
            tag: 0,
        }
    }
}

/// Fully resolved experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Absent in a file means "set by the subcommand"; the generic `run`
    /// subcommand requires it.
    pub experiment: Option<Experiment>,
    pub seed: u64,
    /// Worker threads for replica-level parallelism; 0 = all cores.
    pub threads: usize,
    /// Output path prefix; files are written as `<out>.<name>.<ext>`.
    pub out: String,
    pub format: OutputFormat,
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    pub integrator: IntegratorBlock,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            seed: 1,
            threads: 0,
            out: "out/rieszgas".to_string(),
            format: OutputFormat::Csv,
            model: ModelConfig::default(),
            sampler: SamplerConfig::default(),
            integrator: IntegratorBlock::default(),
            run: RunConfig::default(),
        }
    }
}

/// Flag-level overrides (every field optional; flags win over the file).
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub format: Option<OutputFormat>,
    pub n: Option<usize>,
    pub dim: Option<usize>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub replicas: Option<usize>,
    pub steps: Option<u64>,
    pub dt: Option<f64>,
    pub record_every: Option<u64>,
    pub burn_in: Option<usize>,
    pub sweeps: Option<usize>,
    pub proposal_scale: Option<f64>,
    pub scheme: Option<SchemeKind>,
    pub radius: Option<f64>,
    pub free: Option<FreeKind>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply_env(&mut self) {
        if let Ok(out) = std::env::var(OUT_ENV_VAR) {
            if !out.is_empty() {
                self.out = out;
            }
        }
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(self.seed, o.seed);
        set!(self.threads, o.threads);
        set!(self.format, o.format);
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        set!(self.model.n, o.n);
        set!(self.model.dim, o.dim);
        set!(self.model.gamma, o.gamma);
        set!(self.model.beta, o.beta);
        set!(self.model.scheme, o.scheme);
        set!(self.model.radius, o.radius);
        set!(self.model.free, o.free);
        set!(self.run.replicas, o.replicas);
        set!(self.integrator.steps, o.steps);
        set!(self.integrator.dt, o.dt);
        set!(self.integrator.record_every, o.record_every);
        set!(self.sampler.burn_in, o.burn_in);
        set!(self.sampler.sweeps, o.sweeps);
        set!(self.sampler.proposal_scale, o.proposal_scale);
    }

    /// Cross-field checks that TOML typing cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.model.dim != 1 && self.model.dim != 2 {
            return Err(CliError::Config(format!(
                "model.dim must be 1 or 2, got {}",
                self.model.dim
            )));
        }
        if self.out.is_empty() {
            return Err(CliError::Config("output prefix is empty".into()));
        }
        if self.run.radii.is_empty() || self.run.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(
                "run.radii must be non-empty and strictly increasing".into(),
            ));
        }
        if self.run.gap_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(CliError::Config(
                "run.gap_fractions must lie strictly between 0 and 1".into(),
            ));
        }
        // surface integrator errors early, as config errors
        self.integrator
            .with_seed(0)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// Exponent fit window: explicit values, or the final decade.
    pub fn msd_window(&self) -> (f64, f64) {
        if self.run.window_lo > 0.0 && self.run.window_hi > self.run.window_lo {
            (self.run.window_lo, self.run.window_hi)
        } else {
            let horizon = self.integrator.horizon();
            (horizon / 10.0, horizon)
        }
    }
}

/// Resolves the effective config for one invocation.
pub fn resolve(
    experiment_from_cli: Option<Experiment>,
    config_path: Option<&Path>,
    overrides: &Overrides,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match config_path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(exp) = experiment_from_cli {
        cfg.experiment = Some(exp);
    }
    if cfg.experiment.is_none() {
        return Err(CliError::Config(
            "no experiment: pass a subcommand or set `experiment` in the config file".into(),
        ));
    }
    cfg.apply_env();
    cfg.apply_overrides(overrides);
    cfg.validate()?;
    Ok(cfg)
}
