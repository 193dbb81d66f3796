//! Time integration of
//! `u(t) = e^{ith(D)}u_0 + i int_0^t e^{i(t-s)h(D)} A(D)(|P u|^2 P u)(s) ds`,
//! with `P = P_{<=M}`, Picard contraction measurements, scattering and mass
//! diagnostics.
//!
//! The nonlinearity only reads and writes frequencies in `supp P_{<=M}`, so
//! the state is kept on that annulus; the rest of `u_0` evolves linearly and
//! is carried separately.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{fft2, Field, Propagator, Rep, SparseField, SpectralGrid};
use crate::profile::DispersionProfile;
use crate::symbol::{support_indices, SymbolSpec};
use crate::variation::{y0_norm, TimeSeries};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    InteractionRk4,
    Picard,
}

/// Multiplier in front of the cubic term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullHook {
    /// `A(D)`.
    #[default]
    Standard,
    /// `A = 0`: the flow is linear.
    Zero,
    /// `A(-D)`, the multiplier of the time-reversed equation.
    Reflected,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub profile: DispersionProfile,
    pub grid: SpectralGrid,
    #[serde(rename = "M")]
    pub m: i32,
    pub dt: f64,
    /// Final time; negative values integrate backwards.
    #[serde(rename = "T_final")]
    pub t_final: f64,
    pub scheme: Scheme,
    /// Upper bound on `||u_0||_2`.
    pub epsilon: f64,
    /// Snapshot every `stride` steps.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub null: NullHook,
}

fn default_stride() -> usize {
    8
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if self.m >= 0 {
            return Err(Error::Precondition(format!("M must be negative, got {}", self.m)));
        }
        if self.m != self.profile.m {
            return Err(Error::Precondition(format!("M = {} differs from the profile's M = {}", self.m, self.profile.m)));
        }
        if 2f64.powi(self.m + 4) >= self.profile.delta {
            return Err(Error::Precondition(format!("2^(M+4) = {} is not below delta = {}", 2f64.powi(self.m + 4), self.profile.delta)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Precondition(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final != 0.0) {
            return Err(Error::Precondition(format!("T_final must be finite and nonzero, got {}", self.t_final)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Precondition(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.stride == 0 {
            return Err(Error::Precondition("stride must be at least 1".into()));
        }
        // cubic products reach |xi| <= 3 r_max; aliases land back on the
        // annulus unless the period N/L exceeds 4 r_max
        let r_max = 1.0 + 0.75 * 2f64.powi(self.m);
        let period = self.grid.n as f64 / self.grid.l;
        if period <= 4.0 * r_max {
            return Err(Error::InvalidGrid(format!(
                "N/L = {period} aliases the cubic term onto the annulus; need more than {}",
                4.0 * r_max
            )));
        }
        Ok(())
    }

    fn steps(&self) -> (usize, f64) {
        let steps = (self.t_final.abs() / self.dt).ceil().max(1.0) as usize;
        (steps, self.t_final / steps as f64)
    }
}

/// `A(D)(|P u|^2 P u)` restricted to `supp P`.
pub struct Nonlinearity {
    pub grid: SpectralGrid,
    pub support: Arc<Vec<usize>>,
    p: Vec<f64>,
    a: Vec<f64>,
    a_max: f64,
    scratch: RefCell<Vec<Complex64>>,
}

impl Nonlinearity {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        let grid = cfg.grid;
        let p_full = SymbolSpec::ChiLeqK { k: cfg.m }.tabulate(grid);
        let support = Arc::new(support_indices(&p_full));
        if support.is_empty() {
            return Err(Error::Precondition(format!("P_<=M with M = {} has no lattice points", cfg.m)));
        }
        let null = SymbolSpec::NullA { beta: cfg.profile.beta, m: cfg.m };
        let p: Vec<f64> = support.iter().map(|&i| p_full[i]).collect();
        let a: Vec<f64> = support
            .iter()
            .map(|&i| {
                let xi = grid.xi(i);
                match cfg.null {
                    NullHook::Standard => null.eval(xi),
                    NullHook::Zero => 0.0,
                    NullHook::Reflected => null.eval([-xi[0], -xi[1]]),
                }
            })
            .collect();
        let a_max = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self { grid, support, p, a, a_max, scratch: RefCell::new(Vec::new()) })
    }

    /// Returns the nonlinearity and `||P u||_inf`.
    pub fn apply(&self, u: &SparseField) -> (SparseField, f64) {
        let n = self.grid.n;
        let mut buf = self.scratch.borrow_mut();
        buf.clear();
        buf.resize(self.grid.len(), Complex64::new(0.0, 0.0));
        for ((&i, &z), &p) in self.support.iter().zip(&u.values).zip(&self.p) {
            buf[i] = z * p;
        }
        fft2(&mut buf, n, false);
        let to_space = 1.0 / (2.0 * std::f64::consts::PI * self.grid.l * self.grid.l);
        let mut peak: f64 = 0.0;
        for z in buf.iter_mut() {
            let m = z.norm_sqr();
            peak = peak.max(m);
            *z *= m;
        }
        fft2(&mut buf, n, true);
        let scale = to_space.powi(3) * self.grid.cell_area() / (2.0 * std::f64::consts::PI);
        let values = self.support.iter().zip(&self.a).map(|(&i, &a)| buf[i] * (a * scale)).collect();
        (SparseField { grid: self.grid, support: self.support.clone(), values }, peak.sqrt() * to_space)
    }

    /// Lipschitz constant of the cubic term near a state with `||P u||_inf = w`.
    pub fn lipschitz(&self, w_inf: f64) -> f64 {
        3.0 * self.a_max * w_inf * w_inf
    }

    pub fn gather(&self, u: &Field) -> SparseField {
        SparseField::gather(u, self.support.clone())
    }
}

/// Dense evaluation of the nonlinearity on the full grid.
pub fn nonlinearity(cfg: &SolverConfig, u: &Field) -> Result<Field> {
    if u.grid != cfg.grid {
        return Err(Error::GridMismatch);
    }
    let mut w = u.clone();
    w.multiply(&SymbolSpec::ChiLeqK { k: cfg.m }.tabulate(cfg.grid));
    w.make_space();
    w.values.iter_mut().for_each(|z| *z *= z.norm_sqr());
    w.make_frequency();
    let null = SymbolSpec::NullA { beta: cfg.profile.beta, m: cfg.m };
    let a: Vec<f64> = (0..cfg.grid.len())
        .map(|i| {
            let xi = cfg.grid.xi(i);
            match cfg.null {
                NullHook::Standard => null.eval(xi),
                NullHook::Zero => 0.0,
                NullHook::Reflected => null.eval([-xi[0], -xi[1]]),
            }
        })
        .collect();
    w.multiply(&a);
    Ok(w)
}

/// Snapshots of a solution: the annulus part in the lab frame plus the
/// linearly evolving remainder of the datum.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SparseField>,
    /// `u_0` with the annulus removed, at time zero.
    pub free: Arc<Field>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Full frequency field at snapshot `i`.
    pub fn snapshot(&self, prop: &Propagator, i: usize) -> Result<Field> {
        let mut f = prop.propagate(&self.free, self.times[i])?;
        for (&j, &z) in self.states[i].support.iter().zip(&self.states[i].values) {
            f.values[j] = z;
        }
        Ok(f)
    }

    pub fn l2(&self, i: usize) -> f64 {
        let a = self.free.l2();
        let b = self.states[i].l2();
        (a * a + b * b).sqrt()
    }

    /// The annulus part as a time series; times are ascending even for
    /// backward runs.
    pub fn series(&self) -> Result<TimeSeries<SparseField>> {
        let mut pairs: Vec<(f64, SparseField)> = self.times.iter().copied().zip(self.states.iter().cloned()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (t, s) = pairs.into_iter().unzip();
        TimeSeries::new(t, s)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PicardReport {
    /// Stored times.
    pub times: Vec<f64>,
    /// `||u^(j+1) - u^(j)||` in `L^inf_t L^2_x` on the stored grid.
    pub diffs_linf: Vec<f64>,
    /// The same differences in the `Y^0` proxy.
    pub diffs_y0: Vec<f64>,
    /// `diffs[j] / diffs[j-1]`; stops once differences reach round-off.
    pub ratios_linf: Vec<f64>,
    pub ratios_y0: Vec<f64>,
    /// Shell cut used by the `Y^0` proxy.
    pub k_min: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardRow {
    pub iteration: usize,
    pub diff_linf: f64,
    pub diff_y0: f64,
    pub ratio_linf: Option<f64>,
    pub ratio_y0: Option<f64>,
}

impl PicardReport {
    /// Row `j` holds `||u^(j+1) - u^(j)||` and, from `j = 1`, the ratio to row `j - 1`.
    pub fn rows(&self) -> Vec<PicardRow> {
        (0..self.diffs_linf.len())
            .map(|j| PicardRow {
                iteration: j,
                diff_linf: self.diffs_linf[j],
                diff_y0: self.diffs_y0[j],
                ratio_linf: j.checked_sub(1).and_then(|i| self.ratios_linf.get(i).copied()),
                ratio_y0: j.checked_sub(1).and_then(|i| self.ratios_y0.get(i).copied()),
            })
            .collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios_linf.iter().chain(&self.ratios_y0).fold(0.0, |m, &r| m.max(r))
    }
}

/// Iterates of the Duhamel map on the stored grid, in the lab frame.
pub struct PicardRun {
    pub report: PicardReport,
    pub iterates: Vec<Vec<SparseField>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CauchyRow {
    pub t_j: f64,
    pub t_k: f64,
    pub dist: f64,
}

#[derive(Clone, Debug)]
pub struct ScatteringReport {
    /// `e^{-iTh}u(T)`.
    pub u_plus: Field,
    pub rows: Vec<CauchyRow>,
    /// Sup over pairs in `[T/4, T/2]`.
    pub early_sup: f64,
    /// Sup over pairs in `[T/2, T]`.
    pub late_sup: f64,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    pub t: f64,
    pub norm: f64,
    pub mass: f64,
    /// Differentiated `||u||^2` from neighbouring snapshots.
    pub fd_rate: f64,
    /// `2 Re <i N(u), u>`.
    pub analytic_rate: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsilonSearch {
    pub eps0: f64,
    /// Last passing and first failing sizes.
    pub bracket: (f64, f64),
    /// `(epsilon, max ratio)`; failed runs record infinity.
    pub trials: Vec<(f64, f64)>,
}

pub struct Solver {
    pub cfg: SolverConfig,
    pub prop: Propagator,
    pub nonlin: Nonlinearity,
}

impl Solver {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg: cfg.clone(), prop: Propagator::new(&cfg.profile, cfg.grid), nonlin: Nonlinearity::new(cfg)? })
    }

    fn check_size(&self, u0: &Field) -> Result<()> {
        if u0.grid != self.cfg.grid {
            return Err(Error::GridMismatch);
        }
        let n = u0.l2();
        if n > self.cfg.epsilon * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!("||u0|| = {n} exceeds epsilon = {}", self.cfg.epsilon)));
        }
        Ok(())
    }

    fn split(&self, u0: &Field) -> (SparseField, Arc<Field>) {
        let mut free = u0.clone();
        free.make_frequency();
        for &i in self.nonlin.support.iter() {
            free.values[i] = Complex64::new(0.0, 0.0);
        }
        (self.nonlin.gather(u0), Arc::new(free))
    }

    /// Interaction-picture vector field `i e^{-ith} N(e^{ith} v)` and `||P u||_inf`.
    fn rhs(&self, t: f64, v: &SparseField) -> (SparseField, f64) {
        let mut u = v.clone();
        u.propagate(&self.prop, t);
        let (mut g, peak) = self.nonlin.apply(&u);
        g.propagate(&self.prop, -t);
        g.values.iter_mut().for_each(|z| *z *= I);
        (g, peak)
    }

    pub fn solve(&self, u0: &Field) -> Result<Trajectory> {
        self.check_size(u0)?;
        let (mut v, free) = self.split(u0);
        let (steps, h) = self.cfg.steps();
        let mut times = vec![0.0];
        let mut states = vec![v.clone()];
        for n in 0..steps {
            let t = n as f64 * h;
            let (k1, peak) = self.rhs(t, &v);
            if h.abs() * self.nonlin.lipschitz(peak) >= 1.0 {
                return Err(Error::Precondition(format!(
                    "dt = {} times the local Lipschitz bound {} is not below 1 at t = {t}",
                    h.abs(),
                    self.nonlin.lipschitz(peak)
                )));
            }
            let stage = |k: &SparseField, c: f64| {
                let mut s = v.clone();
                s.add_scaled(k, Complex64::new(c, 0.0));
                s
            };
            let (k2, _) = self.rhs(t + h / 2.0, &stage(&k1, h / 2.0));
            let (k3, _) = self.rhs(t + h / 2.0, &stage(&k2, h / 2.0));
            let (k4, _) = self.rhs(t + h, &stage(&k3, h));
            let before = v.l2();
            for (c, k) in [(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)] {
                v.add_scaled(k, Complex64::new(c * h / 6.0, 0.0));
            }
            let after = v.l2();
            let t_next = (n + 1) as f64 * h;
            if after > 1.5 * before || !after.is_finite() {
                return Err(Error::StepRejected { t: t_next, before, after });
            }
            if (n + 1) % self.cfg.stride == 0 || n + 1 == steps {
                let mut u = v.clone();
                u.propagate(&self.prop, t_next);
                times.push(t_next);
                states.push(u);
            }
        }
        Ok(Trajectory { times, states, free })
    }

    /// Smallest shell cut the grid resolves, but not below `M`.
    pub fn y0_cut(&self) -> i32 {
        let mut k = self.cfg.m;
        while self.cfg.grid.check_resolvable(k).is_err() && k < 0 {
            k += 1;
        }
        k
    }

    /// Runs `n_iters` applications of the Duhamel map starting from the
    /// linear flow; the time integral is the trapezoid rule on the `dt` grid.
    pub fn picard(&self, u0: &Field, n_iters: usize) -> Result<PicardRun> {
        self.check_size(u0)?;
        self.picard_unchecked(u0, n_iters)
    }

    fn picard_unchecked(&self, u0: &Field, n_iters: usize) -> Result<PicardRun> {
        if n_iters == 0 {
            return Err(Error::Precondition("at least one Picard iteration is needed".into()));
        }
        let (v0, _) = self.split(u0);
        let (steps, h) = self.cfg.steps();
        let grid_times: Vec<f64> = (0..=steps).map(|n| n as f64 * h).collect();
        let stored: Vec<usize> = (0..=steps).filter(|&n| n % self.cfg.stride == 0 || n == steps).collect();
        // iterates are v0 + D^j; differences are taken between the Duhamel
        // parts so the datum cancels exactly
        let zero = SparseField::zeros(self.cfg.grid, v0.support.clone());
        let mut duhamel = vec![zero.clone(); steps + 1];
        let mut parts = vec![stored.iter().map(|_| zero.clone()).collect::<Vec<_>>()];
        for _ in 0..n_iters {
            let g: Vec<SparseField> = grid_times
                .iter()
                .zip(&duhamel)
                .map(|(&t, d)| {
                    let mut v = v0.clone();
                    v.add_scaled(d, Complex64::new(1.0, 0.0));
                    self.rhs(t, &v).0
                })
                .collect();
            let mut next = Vec::with_capacity(steps + 1);
            let mut acc = zero.clone();
            next.push(acc.clone());
            for n in 1..=steps {
                acc.add_scaled(&g[n - 1], Complex64::new(h / 2.0, 0.0));
                acc.add_scaled(&g[n], Complex64::new(h / 2.0, 0.0));
                next.push(acc.clone());
            }
            duhamel = next;
            parts.push(stored.iter().map(|&n| duhamel[n].clone()).collect());
        }
        let times: Vec<f64> = stored.iter().map(|&n| grid_times[n]).collect();
        let to_lab = |path: Vec<SparseField>| -> Vec<SparseField> {
            path.into_iter()
                .zip(&times)
                .map(|(mut u, &t)| {
                    u.propagate(&self.prop, t);
                    u
                })
                .collect()
        };
        let k_min = self.y0_cut();
        let mut diffs_linf = Vec::new();
        let mut diffs_y0 = Vec::new();
        for (j, w) in parts.windows(2).enumerate() {
            let d: Vec<SparseField> = w[1].iter().zip(&w[0]).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
            let linf = d.iter().map(|x| x.l2()).fold(0.0, f64::max);
            if !linf.is_finite() {
                return Err(Error::Divergence { iteration: j, ratio: f64::INFINITY });
            }
            diffs_linf.push(linf);
            let series = TimeSeries::new(times.clone(), to_lab(d))?;
            let series = if h < 0.0 { reversed(series)? } else { series };
            diffs_y0.push(y0_norm(&self.prop, &series, k_min)?.total);
        }
        let iterates = parts
            .into_iter()
            .map(|path| {
                to_lab(
                    path.into_iter()
                        .map(|mut d| {
                            d.add_scaled(&v0, Complex64::new(1.0, 0.0));
                            d
                        })
                        .collect(),
                )
            })
            .collect();
        // relative round-off of the Duhamel sums
        let ratios_linf = ratios(&diffs_linf, 1e-13 * diffs_linf[0])?;
        let ratios_y0 = ratios(&diffs_y0, 1e-13 * diffs_y0[0])?;
        let report = PicardReport { times, diffs_linf, diffs_y0, ratios_linf, ratios_y0, k_min };
        Ok(PicardRun { report, iterates })
    }

    /// Largest `epsilon` in `[lo, hi]` (log-bisection) for which every Picard
    /// ratio of `epsilon * shape / ||shape||` is at most 1/2.
    pub fn epsilon0(&self, shape: &Field, n_iters: usize, lo: f64, hi: f64, bisections: usize) -> Result<EpsilonSearch> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Precondition(format!("invalid bracket [{lo}, {hi}]")));
        }
        let unit = shape.l2();
        if !(unit > 0.0) {
            return Err(Error::Precondition("shape has zero norm".into()));
        }
        let mut trials = Vec::new();
        let mut probe = |eps: f64| -> Result<bool> {
            let mut u = shape.clone();
            u.scale(Complex64::new(eps / unit, 0.0));
            let worst = match self.picard_unchecked(&u, n_iters) {
                Ok(run) => run.report.max_ratio(),
                Err(Error::Divergence { .. } | Error::Overflow(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            trials.push((eps, worst));
            Ok(worst <= 0.5)
        };
        if !probe(lo)? {
            return Err(Error::Precondition(format!("Picard ratios exceed 1/2 already at epsilon = {lo}")));
        }
        if probe(hi)? {
            return Ok(EpsilonSearch { eps0: hi, bracket: (hi, hi), trials });
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..bisections {
            let mid = (a * b).sqrt();
            if probe(mid)? {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(EpsilonSearch { eps0: a, bracket: (a, b), trials })
    }

    /// Profiles `e^{-it_k h} u(t_k)` compared over the late half of the run.
    pub fn scattering(&self, traj: &Trajectory) -> Result<ScatteringReport> {
        let t_final = *traj.times.last().ok_or(Error::EmptySeries)?;
        let profiles: Vec<SparseField> = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, u)| {
                let mut v = u.clone();
                v.propagate(&self.prop, -t);
                v
            })
            .collect();
        let span = t_final.abs();
        let mut rows = Vec::new();
        let (mut early_sup, mut late_sup) = (0.0f64, 0.0f64);
        for j in 0..traj.len() {
            for k in j + 1..traj.len() {
                let (a, b) = (traj.times[j].abs(), traj.times[k].abs());
                if a.min(b) < span / 4.0 {
                    continue;
                }
                let dist = profiles[j].l2_dist(&profiles[k])?;
                if a.max(b) <= span / 2.0 {
                    early_sup = early_sup.max(dist);
                }
                if a.min(b) >= span / 2.0 {
                    late_sup = late_sup.max(dist);
                }
                rows.push(CauchyRow { t_j: traj.times[j], t_k: traj.times[k], dist });
            }
        }
        let warning = (late_sup > early_sup)
            .then(|| format!("late-window Cauchy sup {late_sup:e} exceeds early-window sup {early_sup:e}"));
        let mut u_plus = (*traj.free).clone();
        let last = profiles.last().ok_or(Error::EmptySeries)?;
        for (&i, &z) in last.support.iter().zip(&last.values) {
            u_plus.values[i] = z;
        }
        Ok(ScatteringReport { u_plus, rows, early_sup, late_sup, warning })
    }

    pub fn mass_drift(&self, traj: &Trajectory) -> Result<Vec<MassRow>> {
        let free = traj.free.l2().powi(2);
        let w = self.cfg.grid.freq_cell();
        let masses: Vec<f64> = traj.states.iter().map(|u| free + u.l2().powi(2)).collect();
        let mut rows = Vec::with_capacity(traj.len());
        for (i, u) in traj.states.iter().enumerate() {
            let (n, _) = self.nonlin.apply(u);
            let inner: Complex64 = n.values.iter().zip(&u.values).map(|(a, b)| a * b.conj()).sum::<Complex64>() * w;
            rows.push(MassRow {
                t: traj.times[i],
                norm: masses[i].sqrt(),
                mass: masses[i],
                fd_rate: stencil_derivative(&traj.times, &masses, i),
                analytic_rate: 2.0 * (I * inner).re,
            });
        }
        Ok(rows)
    }
}

fn reversed(s: TimeSeries<SparseField>) -> Result<TimeSeries<SparseField>> {
    let mut t = s.times;
    let mut v = s.snapshots;
    t.reverse();
    v.reverse();
    TimeSeries::new(t, v)
}

fn ratios(diffs: &[f64], floor: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for j in 1..diffs.len() {
        if diffs[j - 1] <= floor || diffs[j] <= floor {
            break;
        }
        let r = diffs[j] / diffs[j - 1];
        if r > 1.0 {
            return Err(Error::Divergence { iteration: j, ratio: r });
        }
        out.push(r);
    }
    Ok(out)
}

/// Derivative at `ts[i]` of the polynomial through up to five neighbouring
/// samples (centered where possible).
pub fn stencil_derivative(ts: &[f64], ys: &[f64], i: usize) -> f64 {
    let n = ts.len();
    if n < 2 {
        return 0.0;
    }
    let width = n.min(5);
    let start = i.saturating_sub(width / 2).min(n - width);
    let xs = &ts[start..start + width];
    let vs = &ys[start..start + width];
    let x = ts[i];
    let mut d = 0.0;
    for j in 0..width {
        // d/dx of the j-th Lagrange basis polynomial at x
        let mut denom = 1.0;
        for m in 0..width {
            if m != j {
                denom *= xs[j] - xs[m];
            }
        }
        let mut num = 0.0;
        for skip in 0..width {
            if skip == j {
                continue;
            }
            let mut prod = 1.0;
            for m in 0..width {
                if m != j && m != skip {
                    prod *= x - xs[m];
                }
            }
            num += prod;
        }
        d += vs[j] * num / denom;
    }
    d
}

pub fn solve(cfg: &SolverConfig, u0: &Field) -> Result<Trajectory> {
    Solver::new(cfg)?.solve(u0)
}

pub fn picard_iterate(cfg: &SolverConfig, u0: &Field, n_iters: usize) -> Result<PicardRun> {
    Solver::new(cfg)?.picard(u0, n_iters)
}

pub fn scattering_state(cfg: &SolverConfig, traj: &Trajectory) -> Result<ScatteringReport> {
    Solver::new(cfg)?.scattering(traj)
}

pub fn mass_drift(cfg: &SolverConfig, traj: &Trajectory) -> Result<Vec<MassRow>> {
    Solver::new(cfg)?.mass_drift(traj)
}

/// Dense field from an annulus state.
pub fn densify(u: &SparseField) -> Field {
    let mut f = u.scatter();
    f.rep = Rep::Frequency;
    f
}
