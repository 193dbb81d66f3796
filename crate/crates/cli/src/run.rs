//! One handler per command. Every handler validates its inputs before any
//! heavy computation, writes its artifacts under the output directory and
//! returns the acceptance checks it evaluated.

use std::path::{Path, PathBuf};

use degenlab::data::{shell_datum, stream};
use degenlab::field::{Field, SpectralGrid};
use degenlab::harness::bilinear::{bilinear_report, bilinear_row, check_pairs, BilinearConfig, BilinearRow};
use degenlab::harness::resonance::{generic_bilinear_bound, length_band, resonance_sweep, LemmaAnnuli};
use degenlab::harness::sectors::sector_decomposition_check;
use degenlab::harness::strichartz::{strichartz_report, strichartz_row, StrichartzBackend, StrichartzConfig};
use degenlab::harness::band;
use degenlab::io::{self, Manifest, SCHEMA_VERSION};
use degenlab::fit::least_squares;
use degenlab::kernel::decay_fit;
use degenlab::profile::{check_assumptions, AssumptionCheck};
use degenlab::solver::{Scheme, Solver, SolverConfig};
use degenlab::variation::{random_series, vp_norm, vp_norm_bruteforce, TimeSeries, VpRow};
use degenlab::{Propagator, SymbolSpec};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::config::*;
use crate::error::{CliError, EXIT_ACCEPTANCE, EXIT_OK};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, max: f64) -> Self {
        Self { name: name.into(), value, limit: format!("<= {max}"), pass: value <= max }
    }

    fn within(name: &str, value: f64, [lo, hi]: [f64; 2]) -> Self {
        Self { name: name.into(), value, limit: format!("[{lo}, {hi}]"), pass: (lo..=hi).contains(&value) }
    }

    fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, limit: "== 1".into(), pass: ok }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub command: String,
    pub out_dir: PathBuf,
    pub artifacts: Vec<String>,
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_OK
        } else {
            EXIT_ACCEPTANCE
        }
    }
}

/// `--out`, then `DEGENLAB_OUT`, then the config's `output`, then `out/<command>`.
pub fn out_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    if let Some(p) = &opts.out {
        return p.clone();
    }
    if let Some(p) = std::env::var_os("DEGENLAB_OUT").filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("out").join(cfg.command.name()))
}

/// Loads `path`, checks that it is a `command` config when one is given, and runs it.
pub fn run_path(path: &Path, command: Option<Command>, opts: &RunOptions) -> Result<Outcome, CliError> {
    let cfg = ExperimentConfig::load(path)?;
    if let Some(c) = command {
        if c != cfg.command {
            return Err(CliError::validation(
                "command_mismatch",
                format!("{} is a {} config, not {}", path.display(), cfg.command.name(), c.name()),
            ));
        }
    }
    run_config(&cfg, opts)
}

pub fn run_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let started = io::unix_seconds();
    let dir = out_dir(&cfg, opts);
    let mut ctx = Ctx { cfg: &cfg, dir: dir.clone(), jobs: opts.jobs.max(1), artifacts: Vec::new(), checks: Vec::new() };
    let summary = match cfg.command {
        Command::CheckProfile => check_profile(&mut ctx),
        Command::KernelDecay => kernel_decay(&mut ctx),
        Command::Strichartz => strichartz(&mut ctx),
        Command::Bilinear => bilinear(&mut ctx),
        Command::GenericBound => generic_bound(&mut ctx),
        Command::Resonance => resonance(&mut ctx),
        Command::Sectors => sectors(&mut ctx),
        Command::Vpnorm => vpnorm(&mut ctx),
        Command::Solve => solve(&mut ctx),
        Command::Picard => picard(&mut ctx),
        Command::Scatter => scatter(&mut ctx),
    }?;
    let result = json!({
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command.name(),
        "pass": ctx.checks.iter().all(|c| c.pass),
        "checks": ctx.checks,
        "summary": summary,
    });
    ctx.json("result.json", &result)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: cfg.command.name().into(),
        cfg: serde_json::to_value(&cfg).map_err(|e| CliError::internal("io", e.to_string()))?,
        seeds: vec![cfg.seed],
        git_describe: io::git_describe(),
        started,
        finished: io::unix_seconds(),
        artifacts: ctx.artifacts.clone(),
    };
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(Outcome { command: cfg.command.name().into(), out_dir: dir, artifacts: ctx.artifacts, checks: ctx.checks, summary })
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    jobs: usize,
    artifacts: Vec<String>,
    checks: Vec<Check>,
}

impl Ctx<'_> {
    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        io::write_csv(&self.dir.join(name), rows)?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        io::write_json(&self.dir.join(name), value)?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn band_check(&mut self, name: &str, value: f64) {
        if let Some(max) = self.cfg.acceptance.band_max {
            self.checks.push(Check::at_most(name, value, max));
        }
    }

    fn slope_check(&mut self, name: &str, value: f64) {
        if let Some(range) = self.cfg.acceptance.slope_range {
            self.checks.push(Check::within(name, value, range));
        }
    }
}

/// Order-preserving map over `items` on up to `jobs` scoped threads.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every slot is filled")).collect()
}

fn check_profile(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: CheckProfileSweep = ctx.cfg.sweep()?;
    let report = check_assumptions(&ctx.cfg.profile, &AssumptionCheck::for_profile(&ctx.cfg.profile, s.samples));
    ctx.json("check_profile.json", &report)?;
    ctx.checks.push(Check::flag("assumptions", report.pass));
    Ok(json!({ "pass": report.pass, "failures": report.failures.len() }))
}

fn kernel_decay(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: KernelDecaySweep = ctx.cfg.sweep()?;
    let fit = decay_fit(&ctx.cfg.profile, s.k_fixed, &s.t_values, s.t_fixed, &s.k_values)?;
    ctx.csv("kernel_decay.csv", &fit.rows)?;
    let b = band(&fit.rows.iter().map(|r| r.normalized_c).collect::<Vec<_>>());
    ctx.json("kernel_fit.json", &json!({ "t_fit": fit.t_fit, "k_fit": fit.k_fit, "band": b }))?;
    ctx.band_check("normalized_band", b);
    ctx.slope_check("t_slope", fit.t_fit.slope);
    Ok(json!({ "t_slope": fit.t_fit.slope, "k_slope": fit.k_fit.slope, "band": b }))
}

fn strichartz(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: StrichartzSweep = ctx.cfg.sweep()?;
    let backend = match s.backend {
        BackendKind::Radial => StrichartzBackend::Radial,
        BackendKind::Lattice => {
            let grid = ctx.cfg.grid()?;
            for &k in &s.ks {
                grid.check_resolvable(k)?;
            }
            let dt = s.dt.ok_or_else(|| CliError::validation("schema", "lattice backend needs dt"))?;
            let recipe = s.recipe.ok_or_else(|| CliError::validation("schema", "lattice backend needs recipe"))?;
            StrichartzBackend::Lattice { grid, dt, recipe, repetitions: s.repetitions }
        }
    };
    let cfg = StrichartzConfig {
        profile: ctx.cfg.profile.clone(),
        ks: s.ks.clone(),
        window: s.window,
        backend,
        seed: ctx.cfg.seed,
        radial_options: s.radial,
    };
    let rows = par_map(&s.ks, ctx.jobs, |&k| strichartz_row(&cfg, k)).into_iter().collect::<Result<Vec<_>, _>>()?;
    let report = strichartz_report(rows)?;
    ctx.csv("strichartz.csv", &report.rows)?;
    ctx.json("strichartz_fit.json", &json!({ "fit": report.fit, "band": report.band }))?;
    ctx.band_check("ratio_band", report.band);
    ctx.slope_check("k_slope", report.fit.slope);
    Ok(json!({ "band": report.band, "slope": report.fit.slope }))
}

fn bilinear(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: BilinearSweep = ctx.cfg.sweep()?;
    let grid = ctx.cfg.grid()?;
    check_pairs(grid, &s.pairs)?;
    let cfg = BilinearConfig {
        profile: ctx.cfg.profile.clone(),
        grid,
        pairs: s.pairs.clone(),
        t_final: s.t_final,
        dt: s.dt,
        recipe: s.recipe,
        repetitions: s.repetitions,
        seed: ctx.cfg.seed,
        conjugate: s.conjugate,
    };
    let prop = Propagator::new(&cfg.profile, grid);
    let rows = par_map(&s.pairs, ctx.jobs, |&(k1, k2)| bilinear_row(&cfg, &prop, k1, k2))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let report = bilinear_report(rows);
    ctx.csv("bilinear.csv", &report.rows)?;
    ctx.json(
        "bilinear_fit.json",
        &json!({ "band": report.band, "k1_fit": report.k1_fit, "k2_fit": report.k2_fit, "warnings": report.warnings }),
    )?;
    ctx.band_check("ratio_band", report.band);
    if let Some(fit) = &report.k2_fit {
        ctx.slope_check("k2_slope", fit.slope);
    }
    let factor = degenerate_factor(&report.rows);
    if let Some(min) = ctx.cfg.acceptance.degenerate_min {
        let value = factor.ok_or_else(|| {
            CliError::validation("validation", "degenerate_min needs a k1 == k2 pair and a separated pair with the same k2")
        })?;
        ctx.checks.push(Check { name: "degenerate_factor".into(), value, limit: format!(">= {min}"), pass: value >= min });
    }
    Ok(json!({ "band": report.band, "degenerate_factor": factor, "warnings": report.warnings.len() }))
}

/// Ratio of the degenerate row to the widest-gap row sharing its `k2`.
pub fn degenerate_factor(rows: &[BilinearRow]) -> Option<f64> {
    rows.iter()
        .filter(|d| d.gap == 0)
        .filter_map(|d| {
            let sep = rows.iter().filter(|r| r.k2 == d.k2 && r.gap > 0).max_by_key(|r| r.gap)?;
            Some(d.ratio / sep.ratio)
        })
        .reduce(f64::min)
}

fn generic_bound(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: GenericBoundSweep = ctx.cfg.sweep()?;
    let bound = generic_bilinear_bound(
        &ctx.cfg.profile,
        &s.first,
        &s.second,
        s.samples,
        s.curve_draws,
        s.theta_samples,
        ctx.cfg.seed,
    )?;
    ctx.json("generic_bound.json", &bound)?;
    Ok(json!({ "theta": bound.theta, "l": bound.l, "bound": bound.bound }))
}

fn resonance(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: ResonanceSweep = ctx.cfg.sweep()?;
    for &(k1, k2) in &s.pairs {
        if k1 >= k2 {
            return Err(CliError::validation("validation", format!("pair ({k1},{k2}) needs k1 < k2")));
        }
    }
    let profile = &ctx.cfg.profile;
    let seed = ctx.cfg.seed;
    let out = par_map(&s.pairs, ctx.jobs, |&(k1, k2)| {
        resonance_sweep(profile, LemmaAnnuli { k1, k2 }, s.draws, s.theta_samples, seed)
    });
    let rows: Vec<_> = out.iter().flat_map(|(r, _)| r.iter().cloned()).collect();
    let summaries: Vec<_> = out.into_iter().map(|(_, s)| s).collect();
    let b = length_band(&summaries);
    let components = summaries.iter().map(|s| s.max_components).max().unwrap_or(0);
    ctx.csv("resonance.csv", &rows)?;
    ctx.json("resonance_summary.json", &json!({ "pairs": summaries, "band": b }))?;
    if let Some(max) = ctx.cfg.acceptance.components_max {
        ctx.checks.push(Check::at_most("max_components", components as f64, max as f64));
    }
    ctx.band_check("length_band", b);
    Ok(json!({ "band": b, "max_components": components }))
}

fn sectors(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: SectorsSweep = ctx.cfg.sweep()?;
    let grid = ctx.cfg.grid()?;
    grid.check_resolvable(s.k)?;
    let report = sector_decomposition_check(grid, s.m, s.k, s.draws, ctx.cfg.seed);
    ctx.json("sectors.json", &report)?;
    let failures = report.q_failures + report.t_failures + report.r_overlaps;
    ctx.checks.push(Check::at_most("partition_failures", failures as f64, 0.0));
    ctx.checks.push(Check::at_most("pairing_distance", report.pairing.d_non_antipodal as f64, 8.0));
    Ok(json!({ "partition_failures": failures, "d_non_antipodal": report.pairing.d_non_antipodal }))
}

fn vpnorm(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: VpnormSweep = ctx.cfg.sweep()?;
    let mut series = s.series.clone();
    if let Some(r) = &s.random {
        for (i, values) in random_series(ctx.cfg.seed, r.count, r.max_len).into_iter().enumerate() {
            series.push(SeriesSpec { id: format!("random_{i:04}"), values, times: None });
        }
    }
    if series.is_empty() {
        return Err(CliError::validation("validation", "vpnorm needs at least one series"));
    }
    let mut rows = Vec::new();
    let mut oracle_ok = true;
    let mut monotone = true;
    for spec in &series {
        let times = spec.times.clone().unwrap_or_else(|| (0..spec.values.len()).map(|i| i as f64).collect());
        let series = TimeSeries::new(times, spec.values.clone())?;
        let mut ps = s.p.clone();
        ps.sort_by(f64::total_cmp);
        let mut last = f64::INFINITY;
        for &p in &ps {
            let norm = vp_norm(&series, p)?;
            rows.push(VpRow { series_id: spec.id.clone(), p, k: None, norm, method: "dp".into() });
            if series.len() <= 14 {
                let brute = vp_norm_bruteforce(&series, p)?;
                rows.push(VpRow { series_id: spec.id.clone(), p, k: None, norm: brute, method: "bruteforce".into() });
                oracle_ok &= brute == norm;
            }
            monotone &= norm <= last;
            last = norm;
        }
    }
    ctx.csv("vp.csv", &rows)?;
    ctx.checks.push(Check::flag("oracle_agreement", oracle_ok));
    ctx.checks.push(Check::flag("monotone_in_p", monotone));
    Ok(json!({ "rows": rows.len() }))
}

fn solver_config(ctx: &Ctx, scheme: Scheme, epsilon: f64, dt: f64, t_final: f64, stride: usize) -> Result<SolverConfig, CliError> {
    let cfg = SolverConfig {
        profile: ctx.cfg.profile.clone(),
        grid: ctx.cfg.grid()?,
        m: ctx.cfg.profile.m,
        dt,
        t_final,
        scheme,
        epsilon,
        stride,
        null: Default::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// `amplitude` times a unit `P_{<=M}` datum drawn from substream `rep`.
fn datum(grid: SpectralGrid, m: i32, data: &DataSpec, seed: u64, rep: u64) -> Result<Field, CliError> {
    if !(data.amplitude > 0.0) || !(data.window > 0.0) {
        return Err(CliError::validation("validation", "data amplitude and window must be positive"));
    }
    let mut u = shell_datum(grid, &SymbolSpec::ChiLeqK { k: m }, data.recipe, data.window, &mut stream(seed, rep))?;
    u.scale(Complex64::new(data.amplitude, 0.0));
    Ok(u)
}

fn solve(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: SolveSweep = ctx.cfg.sweep()?;
    let mut cfg = solver_config(ctx, Scheme::InteractionRk4, s.epsilon, s.dt, s.t_final, s.stride)?;
    cfg.null = s.null;
    let u0 = datum(cfg.grid, cfg.m, &s.data, ctx.cfg.seed, 0)?;
    let solver = Solver::new(&cfg)?;
    let traj = solver.solve(&u0)?;
    let mass = solver.mass_drift(&traj)?;
    ctx.csv("mass.csv", &mass)?;
    if s.snapshots {
        let dir = ctx.dir.join("trajectory");
        for i in 0..traj.len() {
            let stem = format!("u_{i:05}");
            io::write_snapshot(&dir, &stem, &traj.snapshot(&solver.prop, i)?, traj.times[i])?;
            ctx.artifacts.push(format!("trajectory/{stem}.bin"));
        }
    }
    let drift = mass.iter().map(|r| (r.mass - mass[0].mass).abs()).fold(0.0, f64::max);
    let rate_scale = mass.iter().map(|r| r.analytic_rate.abs()).fold(0.0, f64::max);
    let rate_gap = mass.iter().map(|r| (r.fd_rate - r.analytic_rate).abs()).fold(0.0, f64::max);
    let rate_rel = if rate_scale > 0.0 { rate_gap / rate_scale } else { rate_gap };
    let mut summary = json!({
        "snapshots": traj.len(),
        "final_norm": traj.l2(traj.len() - 1),
        "mass_drift": drift,
        "rate_mismatch": rate_rel,
    });
    if let Some(tol) = ctx.cfg.acceptance.rate_tol {
        ctx.checks.push(Check::at_most("rate_mismatch", rate_rel, tol));
    }
    if let Some(tol) = ctx.cfg.acceptance.linear_tol {
        let mut worst = 0.0f64;
        for i in 0..traj.len() {
            let free = solver.prop.propagate(&u0, traj.times[i])?;
            worst = worst.max(traj.snapshot(&solver.prop, i)?.l2_dist(&free)? / u0.l2());
        }
        summary["linear_distance"] = json!(worst);
        ctx.checks.push(Check::at_most("linear_distance", worst, tol));
    }
    if s.order_check {
        let last = |dt: f64| -> Result<_, CliError> {
            let c = SolverConfig { dt, stride: usize::MAX, ..cfg.clone() };
            let t = Solver::new(&c)?.solve(&u0)?;
            Ok(t.states.last().cloned().expect("final state is stored"))
        };
        let reference = last(s.dt / 8.0)?;
        let e1 = last(s.dt)?.l2_dist(&reference)?;
        let e2 = last(s.dt / 2.0)?.l2_dist(&reference)?;
        let order = (e1 / e2).log2();
        summary["dt_order"] = json!(order);
        summary["dt_errors"] = json!([e1, e2]);
        ctx.slope_check("dt_order", order);
    }
    Ok(summary)
}

fn picard(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: PicardSweep = ctx.cfg.sweep()?;
    if s.n_iters < 2 {
        return Err(CliError::validation("validation", "picard needs at least 2 iterations"));
    }
    let cfg = solver_config(ctx, Scheme::Picard, s.epsilon, s.dt, s.t_final, s.stride)?;
    let u0 = datum(cfg.grid, cfg.m, &s.data, ctx.cfg.seed, 0)?;
    let solver = Solver::new(&cfg)?;
    let run = solver.picard(&u0, s.n_iters)?;
    ctx.csv("picard.csv", &run.report.rows())?;
    let max_ratio = run.report.max_ratio();
    if let Some(max) = ctx.cfg.acceptance.ratio_max {
        ctx.checks.push(Check::at_most("max_ratio", max_ratio, max));
    }
    let mut summary = json!({ "max_ratio": max_ratio, "k_min": run.report.k_min });
    if !s.scaling.is_empty() {
        if s.scaling.len() < 3 || s.scaling.iter().any(|&a| !(a > 0.0 && a <= s.epsilon)) {
            return Err(CliError::validation("validation", "scaling needs at least 3 amplitudes in (0, epsilon]"));
        }
        let mut rows = Vec::new();
        for &a in &s.scaling {
            let mut u = u0.clone();
            u.scale(Complex64::new(a / u0.l2(), 0.0));
            let r = solver.picard(&u, 2)?.report;
            let rho1 = *r.ratios_linf.first().ok_or_else(|| CliError::internal("numerical", "first ratio lost to round-off"))?;
            rows.push(ScalingRow { epsilon: a, rho1 });
        }
        let xs: Vec<f64> = rows.iter().map(|r| r.epsilon.log2()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.rho1.log2()).collect();
        let fit = least_squares(&xs, &ys)?;
        ctx.csv("picard_scaling.csv", &rows)?;
        summary["rho1_exponent"] = json!(fit.slope);
        ctx.slope_check("rho1_exponent", fit.slope);
    }
    if let Some(search) = &s.search {
        if !(search.lo > 0.0 && search.lo < search.hi) {
            return Err(CliError::validation("validation", "search needs 0 < lo < hi"));
        }
        let mut shape = u0.clone();
        shape.scale(Complex64::new(1.0 / u0.l2(), 0.0));
        let found = solver.epsilon0(&shape, s.n_iters, search.lo, search.hi, search.bisections)?;
        ctx.json("eps0.json", &found)?;
        summary["eps0"] = json!(found.eps0);
        shape.scale(Complex64::new(found.eps0, 0.0));
        let at_eps0 = Solver::new(&SolverConfig { epsilon: found.eps0 * (1.0 + 1e-12), ..cfg.clone() })?.picard(&shape, s.n_iters)?;
        ctx.csv("picard_eps0.csv", &at_eps0.report.rows())?;
        let worst = at_eps0.report.max_ratio();
        summary["max_ratio_eps0"] = json!(worst);
        if let Some(max) = ctx.cfg.acceptance.ratio_max {
            ctx.checks.push(Check::at_most("max_ratio_eps0", worst, max));
        }
    }
    Ok(summary)
}

#[derive(Serialize)]
struct ScalingRow {
    epsilon: f64,
    rho1: f64,
}

fn scatter(ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    let s: ScatterSweep = ctx.cfg.sweep()?;
    let cfg = solver_config(ctx, Scheme::InteractionRk4, s.epsilon, s.dt, s.t_final, s.stride)?;
    let u0 = datum(cfg.grid, cfg.m, &s.data, ctx.cfg.seed, 0)?;
    let solver = Solver::new(&cfg)?;
    let report = solver.scattering(&solver.solve(&u0)?)?;
    ctx.csv("cauchy.csv", &report.rows)?;
    io::write_snapshot(&ctx.dir, "u_plus", &report.u_plus, cfg.t_final)?;
    ctx.artifacts.push("u_plus.bin".into());
    let mut summary = json!({
        "early_sup": report.early_sup,
        "late_sup": report.late_sup,
        "warning": report.warning,
    });
    if ctx.cfg.acceptance.require_decrease {
        ctx.checks.push(Check::at_most("late_over_early", report.late_sup / report.early_sup, 1.0));
    }
    if let Some(h) = s.perturbation {
        let mut v0 = u0.clone();
        v0.add_scaled(&datum(cfg.grid, cfg.m, &DataSpec { amplitude: h, ..s.data.clone() }, ctx.cfg.seed, 1)?, Complex64::new(1.0, 0.0))?;
        let other = solver.scattering(&solver.solve(&v0)?)?;
        let lip = report.u_plus.l2_dist(&other.u_plus)? / u0.l2_dist(&v0)?;
        summary["lipschitz"] = json!(lip);
        if let Some(max) = ctx.cfg.acceptance.lipschitz_max {
            ctx.checks.push(Check::at_most("lipschitz", lip, max));
        }
    }
    Ok(summary)
}
