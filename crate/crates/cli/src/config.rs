//! Run configuration: one JSON document drives every subcommand.
// Negated comparisons like !(x > 0.0) deliberately catch NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use anyhow::{bail, Context};
use curlgff::bounds::BoundParams;
use curlgff::bump::BumpSpec;
use curlgff::field::{Interpolation, TorusGrid};
use curlgff::sde::{EnvironmentMode, SimConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub bump: BumpSpec,
    pub grid: TorusGrid,
    /// Spectral normalization of the environment; the default ties the
    /// field increments to 2 log|x|.
    #[serde(default = "default_norm")]
    pub norm: f64,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub bounds: BoundParams,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub iterate: IterateSection,
    #[serde(default)]
    pub sandwich: SandwichSection,
    #[serde(default)]
    pub quadcheck: QuadcheckSection,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub report: ReportSection,
}

fn default_norm() -> f64 {
    2.0 * std::f64::consts::PI
}

fn default_seed() -> u64 {
    1
}

fn default_lambdas() -> Vec<f64> {
    vec![0.5, 0.2, 0.1]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    #[serde(default = "default_ppd")]
    pub points_per_decade: usize,
    /// Explicit record times override the log-spaced default.
    #[serde(default)]
    pub record_times: Option<Vec<f64>>,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default = "default_batches")]
    pub n_batches: usize,
    #[serde(default)]
    pub environment: EnvironmentMode,
    /// Run the dt/2 pilot before long ensembles.
    #[serde(default = "default_true")]
    pub step_size_pilot: bool,
    #[serde(default = "default_pilot_paths")]
    pub pilot_paths: usize,
}

fn default_ppd() -> usize {
    16
}
fn default_batches() -> usize {
    32
}
fn default_true() -> bool {
    true
}
fn default_pilot_paths() -> usize {
    1000
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: 0.01,
            horizon: 10.0,
            n_paths: 10_000,
            points_per_decade: default_ppd(),
            record_times: None,
            interpolation: Interpolation::Bicubic,
            n_batches: default_batches(),
            environment: EnvironmentMode::Annealed,
            step_size_pilot: true,
            pilot_paths: default_pilot_paths(),
        }
    }
}

impl SimSection {
    pub fn to_sim_config(&self, master_seed: u64) -> SimConfig {
        SimConfig {
            dt: self.dt,
            horizon: self.horizon,
            n_paths: self.n_paths,
            master_seed,
            record_times: self.record_times.clone().unwrap_or_else(|| {
                SimConfig::log_spaced_records(self.dt, self.horizon, self.points_per_decade)
            }),
            interpolation: self.interpolation,
            n_batches: self.n_batches,
            environment: self.environment,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    /// Ensemble CSV to read; produced by `simulate`.
    #[serde(default)]
    pub input_csv: Option<String>,
    /// Window for the log-scaling fit; defaults to the last two decades.
    #[serde(default)]
    pub fit_window: Option<(f64, f64)>,
    #[serde(default)]
    pub allow_tail_extrapolation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateSection {
    #[serde(default = "default_level_cap")]
    pub level_cap: usize,
}

fn default_level_cap() -> usize {
    48
}

impl Default for IterateSection {
    fn default() -> Self {
        IterateSection { level_cap: default_level_cap() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichSection {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    192
}

impl Default for SandwichSection {
    fn default() -> Self {
        SandwichSection { resolution: default_resolution() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadcheckSection {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_samples() -> usize {
    200
}

impl Default for QuadcheckSection {
    fn default() -> Self {
        QuadcheckSection { samples: default_samples(), seed: default_seed() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    #[serde(default = "default_cov_seeds")]
    pub covariance_seeds: usize,
    #[serde(default = "default_separations")]
    pub separations: Vec<[f64; 2]>,
    /// Persist the sampled realization as a binary container.
    #[serde(default = "default_true")]
    pub save_field: bool,
}

fn default_cov_seeds() -> usize {
    200
}

fn default_separations() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [2.0, 2.0], [4.0, 0.0]]
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            covariance_seeds: default_cov_seeds(),
            separations: default_separations(),
            save_field: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Envelope constants for the headline bracket columns.
    #[serde(default = "default_c_minus")]
    pub c_minus: f64,
    #[serde(default = "default_c_plus")]
    pub c_plus: f64,
}

fn default_c_minus() -> f64 {
    0.1
}
fn default_c_plus() -> f64 {
    10.0
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { c_minus: default_c_minus(), c_plus: default_c_plus() }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).context("config schema violation")?;
        Ok(cfg)
    }

    /// Cross-module validation shared by all subcommands.
    pub fn validate(&self, command: &str) -> anyhow::Result<()> {
        self.bump.validate()?;
        self.grid.validate_for(&self.bump)?;
        self.bounds.validate()?;
        if !(self.norm >= 0.0) {
            bail!("norm must be nonnegative");
        }
        if self.lambdas.iter().any(|l| !(*l > 0.0)) {
            bail!("lambdas must be positive");
        }
        match command {
            "simulate" | "sandwich" => {
                let sim = self.sim.to_sim_config(self.master_seed);
                sim.validate(&self.bump)?;
                if command == "sandwich" {
                    // the Laplace side needs lambda T >= 20 for every lambda
                    for &l in &self.lambdas {
                        if l * self.sim.horizon < 20.0 {
                            bail!(
                                "lambda {l} with horizon {} gives lambda*T = {} < 20; \
                                 the Laplace estimate would be truncation-dominated",
                                self.sim.horizon,
                                l * self.sim.horizon
                            );
                        }
                    }
                }
            }
            "iterate" | "report" => {
                for &l in &self.lambdas {
                    if !(l < 1.0) {
                        bail!("resolvent iteration needs lambda < 1, got {l}");
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}
