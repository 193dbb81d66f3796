//! Experiment configuration. Parsing is strict: unknown keys, missing
//! physical parameters and mismatched schema versions are all rejected
//! before any computation starts.

use std::path::{Path, PathBuf};

use degenlab::data::DataRecipe;
use degenlab::harness::strichartz::TimeWindow;
use degenlab::io::SCHEMA_VERSION;
use degenlab::radial::RadialOptions;
use degenlab::solver::NullHook;
use degenlab::{DispersionProfile, SpectralGrid, SymbolSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckProfile,
    KernelDecay,
    Strichartz,
    Bilinear,
    GenericBound,
    Resonance,
    Sectors,
    Vpnorm,
    Solve,
    Picard,
    Scatter,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::CheckProfile,
        Command::KernelDecay,
        Command::Strichartz,
        Command::Bilinear,
        Command::GenericBound,
        Command::Resonance,
        Command::Sectors,
        Command::Vpnorm,
        Command::Solve,
        Command::Picard,
        Command::Scatter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CheckProfile => "check-profile",
            Command::KernelDecay => "kernel-decay",
            Command::Strichartz => "strichartz",
            Command::Bilinear => "bilinear",
            Command::GenericBound => "generic-bound",
            Command::Resonance => "resonance",
            Command::Sectors => "sectors",
            Command::Vpnorm => "vpnorm",
            Command::Solve => "solve",
            Command::Picard => "picard",
            Command::Scatter => "scatter",
        }
    }
}

/// Optional acceptance limits; each command reads the ones that apply to it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Acceptance {
    /// Largest allowed `max/min` of the command's normalized quantity.
    pub band_max: Option<f64>,
    /// Allowed interval for the command's primary fitted slope.
    pub slope_range: Option<[f64; 2]>,
    pub components_max: Option<usize>,
    pub ratio_max: Option<f64>,
    pub lipschitz_max: Option<f64>,
    #[serde(default)]
    pub require_decrease: bool,
    /// Largest relative mismatch between the differentiated and analytic mass rates.
    pub rate_tol: Option<f64>,
    /// Largest relative distance to the free flow when the nonlinearity is switched off.
    pub linear_tol: Option<f64>,
    /// Smallest allowed ratio of the `k1 == k2` row to the widest-gap row with the same `k2`.
    pub degenerate_min: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub command: Command,
    pub seed: u64,
    pub profile: DispersionProfile,
    #[serde(default)]
    pub grid: Option<SpectralGrid>,
    pub sweep: serde_json::Value,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub acceptance: Acceptance,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckProfileSweep {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    2000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDecaySweep {
    pub k_fixed: i32,
    pub t_values: Vec<f64>,
    pub t_fixed: f64,
    pub k_values: Vec<i32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Radial,
    Lattice,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrichartzSweep {
    pub ks: Vec<i32>,
    pub window: TimeWindow,
    pub backend: BackendKind,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub recipe: Option<DataRecipe>,
    #[serde(default = "default_reps")]
    pub repetitions: u64,
    #[serde(default = "RadialOptions::for_norms")]
    pub radial: RadialOptions,
}

fn default_reps() -> u64 {
    3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearSweep {
    pub pairs: Vec<(i32, i32)>,
    pub t_final: f64,
    pub dt: f64,
    pub recipe: DataRecipe,
    #[serde(default = "default_reps")]
    pub repetitions: u64,
    #[serde(default)]
    pub conjugate: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericBoundSweep {
    pub first: SymbolSpec,
    pub second: SymbolSpec,
    pub samples: usize,
    pub curve_draws: usize,
    pub theta_samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSweep {
    pub pairs: Vec<(i32, i32)>,
    pub draws: usize,
    #[serde(default = "default_theta_samples")]
    pub theta_samples: usize,
}

fn default_theta_samples() -> usize {
    1024
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorsSweep {
    pub m: i32,
    pub k: i32,
    pub draws: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub id: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VpnormSweep {
    #[serde(default)]
    pub series: Vec<SeriesSpec>,
    #[serde(default)]
    pub random: Option<RandomSeries>,
    pub p: Vec<f64>,
}

/// Seeded Gaussian random walks with uniform lengths in `[2, max_len]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSeries {
    pub count: usize,
    pub max_len: usize,
}

/// Initial datum: `P_{<=M}` data of `L^2` norm `amplitude`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub recipe: DataRecipe,
    pub window: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSweep {
    pub epsilon: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub null: NullHook,
    pub data: DataSpec,
    #[serde(default)]
    pub snapshots: bool,
    /// Rerun at `dt/2` and `dt/8` and report the observed order.
    #[serde(default)]
    pub order_check: bool,
}

fn default_stride() -> usize {
    8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSearchSpec {
    pub lo: f64,
    pub hi: f64,
    pub bisections: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSweep {
    pub epsilon: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub n_iters: usize,
    pub data: DataSpec,
    #[serde(default)]
    pub search: Option<EpsilonSearchSpec>,
    /// Amplitudes at which the first contraction ratio is measured and fitted
    /// against `epsilon` on log-log axes.
    #[serde(default)]
    pub scaling: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSweep {
    pub epsilon: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub data: DataSpec,
    /// Size of the second datum's offset for the Lipschitz check.
    #[serde(default)]
    pub perturbation: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::validation("config_not_found", format!("{} does not exist", path.display()))
            } else {
                CliError::validation("config_unreadable", format!("{}: {e}", path.display()))
            }
        })?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::validation("config_parse", format!("{}: {e}", path.display())))?;
        Self::from_value(value)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_value(value).map_err(|e| CliError::validation("schema", e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::validation(
                "schema",
                format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", cfg.schema_version),
            ));
        }
        cfg.profile.validate().map_err(CliError::from)?;
        cfg.check_sweep()?;
        Ok(cfg)
    }

    /// Parses the sweep block as the type its command expects.
    pub fn check_sweep(&self) -> Result<(), CliError> {
        match self.command {
            Command::CheckProfile => self.sweep::<CheckProfileSweep>().map(drop),
            Command::KernelDecay => self.sweep::<KernelDecaySweep>().map(drop),
            Command::Strichartz => self.sweep::<StrichartzSweep>().map(drop),
            Command::Bilinear => self.sweep::<BilinearSweep>().map(drop),
            Command::GenericBound => self.sweep::<GenericBoundSweep>().map(drop),
            Command::Resonance => self.sweep::<ResonanceSweep>().map(drop),
            Command::Sectors => self.sweep::<SectorsSweep>().map(drop),
            Command::Vpnorm => self.sweep::<VpnormSweep>().map(drop),
            Command::Solve => self.sweep::<SolveSweep>().map(drop),
            Command::Picard => self.sweep::<PicardSweep>().map(drop),
            Command::Scatter => self.sweep::<ScatterSweep>().map(drop),
        }
    }

    /// The command-specific sweep block.
    pub fn sweep<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.sweep.clone())
            .map_err(|e| CliError::validation("schema", format!("sweep for {}: {e}", self.command.name())))
    }

    pub fn grid(&self) -> Result<SpectralGrid, CliError> {
        let g = self
            .grid
            .ok_or_else(|| CliError::validation("schema", format!("{} needs a grid block", self.command.name())))?;
        // re-run the constructor checks on deserialized values
        SpectralGrid::new(g.n, g.l).map_err(CliError::from)
    }
}
