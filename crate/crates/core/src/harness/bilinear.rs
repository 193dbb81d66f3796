//! `||(e^{ith}P_{<=k1}u)(e^{ith}P_{k2}v)||_{L^2_{t,x}}` against
//! `2^{-beta k2/4} 2^{(k1-k2)/4}`.

use serde::{Deserialize, Serialize};

use crate::data::{shell_datum, stream, DataRecipe};
use crate::error::{Error, Result};
use crate::field::{Field, Propagator, SpectralGrid};
use crate::fit::{least_squares, FitResult};
use crate::harness::{band, symmetric_times};
use crate::profile::DispersionProfile;
use crate::symbol::SymbolSpec;

#[derive(Clone, Debug)]
pub struct BilinearConfig {
    pub profile: DispersionProfile,
    pub grid: SpectralGrid,
    /// `(k1, k2)` pairs; `k1 == k2` is the degenerate (non-transversal) control.
    pub pairs: Vec<(i32, i32)>,
    pub t_final: f64,
    pub dt: f64,
    pub recipe: DataRecipe,
    pub repetitions: u64,
    pub seed: u64,
    /// Replace the second flow by its complex conjugate.
    pub conjugate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearRow {
    pub beta: u32,
    pub k1: i32,
    pub k2: i32,
    pub gap: i32,
    pub norm: f64,
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BilinearReport {
    pub rows: Vec<BilinearRow>,
    /// `max / min` ratio over the separated pairs.
    pub band: f64,
    /// `log2 norm` against `k2` over pairs sharing the most common `k1`.
    pub k2_fit: Option<FitResult>,
    /// `log2 norm` against `k1` over pairs sharing the most common `k2`.
    pub k1_fit: Option<FitResult>,
    /// Pairs whose gap is below the nominal 10, recorded rather than rejected.
    pub warnings: Vec<String>,
}

/// `norm 2^{beta k2/4} 2^{(k2-k1)/4}`.
pub fn bilinear_ratio(beta: u32, k1: i32, k2: i32, norm: f64) -> f64 {
    norm * 2f64.powf(beta as f64 * k2 as f64 / 4.0) * 2f64.powf((k2 - k1) as f64 / 4.0)
}

/// `L^2_{t,x}` norm of the product of two free waves over `[-T, T]`.
///
/// `|u conj(v)| = |u v|` pointwise, so the conjugate variant only differs
/// through rounding; it is kept as an explicit switch for completeness.
pub fn bilinear_norm(prop: &Propagator, u0: &Field, v0: &Field, t_final: f64, dt: f64, conjugate: bool) -> Result<f64> {
    if u0.grid != v0.grid {
        return Err(Error::GridMismatch);
    }
    let (times, weights) = symmetric_times(t_final, dt);
    let dx2 = u0.grid.cell_area();
    let mut sum = 0.0;
    for (&t, &w) in times.iter().zip(&weights) {
        let u = prop.propagate(u0, t)?.into_space();
        let mut v = prop.propagate(v0, t)?.into_space();
        if conjugate {
            v = v.conj();
        }
        let s: f64 = u.values.iter().zip(&v.values).map(|(a, b)| (a * b).norm_sqr()).sum();
        sum += w * s * dx2;
    }
    let n = sum.sqrt();
    if !n.is_finite() {
        return Err(Error::Overflow("bilinear norm is not finite".into()));
    }
    Ok(n)
}

/// Data pair for `(k1, k2)`: `P_{<=k1}` and `P_{k2}` projections of seeded data,
/// each windowed in space at twice its own scale.
pub fn pair_data(grid: SpectralGrid, k1: i32, k2: i32, recipe: DataRecipe, seed: u64, rep: u64) -> Result<(Field, Field)> {
    let mut rng = stream(seed, rep);
    let u = shell_datum(grid, &SymbolSpec::ChiLeqK { k: k1 }, recipe, 2f64.powi(1 - k1), &mut rng)?;
    let v = shell_datum(grid, &SymbolSpec::PK { k: k2 }, recipe, 2f64.powi(1 - k2), &mut rng)?;
    Ok((u, v))
}

/// Rejects unordered or unresolvable pairs before any work is done.
pub fn check_pairs(grid: SpectralGrid, pairs: &[(i32, i32)]) -> Result<()> {
    for &(k1, k2) in pairs {
        if k1 > k2 {
            return Err(Error::Precondition(format!("k1 = {k1} exceeds k2 = {k2}")));
        }
        grid.check_resolvable(k1)?;
        grid.check_resolvable(k2)?;
    }
    Ok(())
}

pub fn bilinear_row(cfg: &BilinearConfig, prop: &Propagator, k1: i32, k2: i32) -> Result<BilinearRow> {
    check_pairs(cfg.grid, &[(k1, k2)])?;
    let beta = cfg.profile.beta;
    let reps = cfg.repetitions.max(1);
    let mut power = 0.0;
    for rep in 0..reps {
        let (u, v) = pair_data(cfg.grid, k1, k2, cfg.recipe, cfg.seed, rep)?;
        power += bilinear_norm(prop, &u, &v, cfg.t_final, cfg.dt, cfg.conjugate)?.powi(2);
    }
    let norm = (power / reps as f64).sqrt();
    Ok(BilinearRow { beta, k1, k2, gap: k2 - k1, norm, ratio: bilinear_ratio(beta, k1, k2, norm), seed: cfg.seed })
}

pub fn bilinear_report(rows: Vec<BilinearRow>) -> BilinearReport {
    let warnings = rows
        .iter()
        .filter(|r| r.gap > 0 && r.gap < 10)
        .map(|r| format!("pair ({},{}) uses gap {} < 10", r.k1, r.k2, r.gap))
        .collect();
    let separated: Vec<f64> = rows.iter().filter(|r| r.gap > 0).map(|r| r.ratio).collect();
    let k2_fit = fit_along(&rows, |r| r.k1, |r| r.k2);
    let k1_fit = fit_along(&rows, |r| r.k2, |r| r.k1);
    BilinearReport { band: band(&separated), k2_fit, k1_fit, warnings, rows }
}

pub fn bilinear_l2(cfg: &BilinearConfig) -> Result<BilinearReport> {
    check_pairs(cfg.grid, &cfg.pairs)?;
    let prop = Propagator::new(&cfg.profile, cfg.grid);
    let rows = cfg.pairs.iter().map(|&(k1, k2)| bilinear_row(cfg, &prop, k1, k2)).collect::<Result<Vec<_>>>()?;
    Ok(bilinear_report(rows))
}

/// Fits `log2 norm` against `x(row)` over the separated rows sharing the
/// most frequent value of `key(row)`; `None` with fewer than 3 such rows.
fn fit_along(rows: &[BilinearRow], key: impl Fn(&BilinearRow) -> i32, x: impl Fn(&BilinearRow) -> i32) -> Option<FitResult> {
    let sep: Vec<&BilinearRow> = rows.iter().filter(|r| r.gap > 0).collect();
    let mut best: Option<(i32, usize)> = None;
    for r in &sep {
        let c = sep.iter().filter(|s| key(s) == key(r)).count();
        if best.is_none_or(|(_, n)| c > n) {
            best = Some((key(r), c));
        }
    }
    let (value, _) = best?;
    let chosen: Vec<&&BilinearRow> = sep.iter().filter(|r| key(r) == value).collect();
    let xs: Vec<f64> = chosen.iter().map(|r| x(r) as f64).collect();
    let ys: Vec<f64> = chosen.iter().map(|r| r.norm.log2()).collect();
    least_squares(&xs, &ys).ok()
}
