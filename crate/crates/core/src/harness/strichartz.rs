//! `||e^{ith(D)} P_k u_0||_{L^4_{t,x}}` against `2^{-beta k/8}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::data::{shell_datum, stream, DataRecipe};
use crate::error::{Error, Result};
use crate::field::{Propagator, SpacetimeAccumulator, SpectralGrid};
use crate::fit::{log2_fit, FitResult};
use crate::harness::{band, symmetric_times};
use crate::kernel::dispersive_time;
use crate::profile::DispersionProfile;
use crate::radial::{RadialData, RadialOptions, RadialWave};
use crate::symbol::SymbolSpec;

/// Time window for one shell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeWindow {
    /// `[-T, T]` for every shell.
    Fixed { t: f64 },
    /// `[-c tau_k, c tau_k]` with `tau_k = 2^{-(beta+2)k}`, the time the shell
    /// needs to disperse radially.
    Dispersive { factor: f64 },
}

impl TimeWindow {
    pub fn length(&self, beta: u32, k: i32) -> f64 {
        match *self {
            Self::Fixed { t } => t,
            Self::Dispersive { factor } => factor * dispersive_time(beta, k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum StrichartzBackend {
    /// Radial bump data, 1D Bessel reduction; any shell is resolvable.
    Radial,
    /// Lattice data on a periodic grid with uniform time sampling.
    Lattice { grid: SpectralGrid, dt: f64, recipe: DataRecipe, repetitions: u64 },
}

#[derive(Clone, Debug)]
pub struct StrichartzConfig {
    pub profile: DispersionProfile,
    pub ks: Vec<i32>,
    pub window: TimeWindow,
    pub backend: StrichartzBackend,
    pub seed: u64,
    pub radial_options: RadialOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzRow {
    pub beta: u32,
    pub k: i32,
    #[serde(rename = "T")]
    pub t: f64,
    pub norm: f64,
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrichartzReport {
    pub rows: Vec<StrichartzRow>,
    /// `log2 norm` against `k`.
    pub fit: FitResult,
    /// `max ratio / min ratio`.
    pub band: f64,
}

/// `norm * 2^(beta k/8)`.
pub fn strichartz_ratio(beta: u32, k: i32, norm: f64) -> f64 {
    norm * 2f64.powf(beta as f64 * k as f64 / 8.0)
}

/// Space-time `L^4` norm of the free wave from a radial `P_k` bump on `[-T, T]`.
pub fn radial_l4(profile: &DispersionProfile, k: i32, t_final: f64, opts: RadialOptions) -> Result<f64> {
    let mut wave = RadialWave::new(profile, RadialData::shell_bump(k));
    wave.opts = opts;
    // the head panel resolves the initial spreading time of the shell
    wave.spacetime_l4(t_final, 2f64.powi(-k), 16)
}

/// Space-time `L^4` norm of `e^{ith(D)} u_0` sampled on a uniform time grid.
pub fn lattice_l4(prop: &Propagator, u0: &crate::field::Field, t_final: f64, dt: f64) -> Result<f64> {
    let (times, weights) = symmetric_times(t_final, dt);
    let mut acc = SpacetimeAccumulator::new(4.0);
    for (&t, &w) in times.iter().zip(&weights) {
        let u = prop.propagate(u0, t)?.into_space();
        acc.add(&u, w)?;
    }
    let n = acc.norm();
    if !n.is_finite() {
        return Err(Error::Overflow("space-time L4 norm is not finite".into()));
    }
    Ok(n)
}

/// One row of the sweep; lattice shells are checked for resolvability first.
pub fn strichartz_row(cfg: &StrichartzConfig, k: i32) -> Result<StrichartzRow> {
    let beta = cfg.profile.beta;
    let t_final = cfg.window.length(beta, k);
    let norm = match &cfg.backend {
        StrichartzBackend::Radial => radial_l4(&cfg.profile, k, t_final, cfg.radial_options)?,
        StrichartzBackend::Lattice { grid, dt, recipe, repetitions } => {
            grid.check_resolvable(k)?;
            let prop = Propagator::new(&cfg.profile, *grid);
            let spec = SymbolSpec::PK { k };
            let reps = (*repetitions).max(1);
            let mut power = 0.0;
            for rep in 0..reps {
                let mut rng = stream(cfg.seed, rep);
                let u0 = shell_datum(*grid, &spec, *recipe, 2f64.powi(1 - k), &mut rng)?;
                power += lattice_l4(&prop, &u0, t_final, *dt)?.powi(4);
            }
            (power / reps as f64).powf(0.25)
        }
    };
    Ok(StrichartzRow { beta, k, t: t_final, norm, ratio: strichartz_ratio(beta, k, norm), seed: cfg.seed })
}

pub fn strichartz_report(rows: Vec<StrichartzRow>) -> Result<StrichartzReport> {
    let ks: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.norm).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    Ok(StrichartzReport { fit: log2_fit(&ks, &norms)?, band: band(&ratios), rows })
}

pub fn strichartz_l4(cfg: &StrichartzConfig) -> Result<StrichartzReport> {
    if let StrichartzBackend::Lattice { grid, .. } = &cfg.backend {
        for &k in &cfg.ks {
            grid.check_resolvable(k)?;
        }
    }
    let rows = cfg.ks.iter().map(|&k| strichartz_row(cfg, k)).collect::<Result<Vec<_>>>()?;
    strichartz_report(rows)
}

/// The radial backend's `P_k` bump sampled on the lattice, for cross-checks.
pub fn lattice_bump(grid: SpectralGrid, k: i32) -> crate::field::Field {
    let a = RadialData::shell_bump(k);
    crate::field::Field::from_symbol(grid, |xi| Complex64::new(a.amp(xi[0].hypot(xi[1])), 0.0))
}
