//! Independent oracles for the radial reductions and the solver.

use std::f64::consts::PI;

use degenlab::data::{shell_datum, stream, DataRecipe};
use degenlab::fit::least_squares;
use degenlab::harness::band;
use degenlab::harness::sectors::{cyclic, sector_of};
use degenlab::harness::strichartz::{lattice_bump, lattice_l4, radial_l4};
use degenlab::kernel::{kernel_at, required_nodes, window};
use degenlab::radial::RadialOptions;
use degenlab::solver::{NullHook, Scheme, Solver, SolverConfig};
use degenlab::variation::{vp_norm, vp_norm_bruteforce, TimeSeries};
use degenlab::{DispersionProfile, Field, Propagator, Radial, SpectralGrid, SymbolSpec};
use num_complex::Complex64;
use proptest::prelude::*;

/// `(2 pi)^-2 \sum e^{i x.xi + i t gamma(|xi|)} chi_k(xi)^2 h^2` over a square lattice.
fn kernel_2d(p: &DispersionProfile, k: i32, t: f64, x: [f64; 2], h: f64) -> Complex64 {
    let w = window(k);
    let reach = 3.0 * 2f64.powi(k);
    let n = ((1.0 + reach) / h).ceil() as i64;
    let mut s = Complex64::new(0.0, 0.0);
    for i in -n..=n {
        for j in -n..=n {
            let xi = [i as f64 * h, j as f64 * h];
            if (xi[0].hypot(xi[1]) - 1.0).abs() >= reach {
                continue;
            }
            let c = w.eval(xi);
            if c == 0.0 {
                continue;
            }
            let phase = x[0] * xi[0] + x[1] * xi[1] + t * p.gamma(xi[0].hypot(xi[1]));
            s += Complex64::from_polar(c * c, phase);
        }
    }
    s * h * h / (4.0 * PI * PI)
}

#[test]
fn radial_kernel_matches_planar_sum() {
    for beta in [1, 2] {
        let p = DispersionProfile::model(beta, 0.6, -5).unwrap();
        let k = -4;
        let h = 1.0 / 2048.0;
        let origin = kernel_2d(&p, k, 0.0, [0.0, 0.0], h).norm();
        for (t, rho) in [(10.0, 0.0), (10.0, 7.0), (100.0, 60.0), (100.0, 100.0)] {
            let nodes = required_nodes(k, t);
            let radial = kernel_at(&p, k, t, rho, nodes, 1);
            let theta: f64 = 0.7;
            let planar = kernel_2d(&p, k, t, [rho * theta.cos(), rho * theta.sin()], h);
            assert!((radial - planar).norm() <= 1e-6 * origin, "beta={beta} t={t} rho={rho}: {radial} vs {planar}");
        }
    }
}

#[test]
fn radial_l4_matches_lattice() {
    let p = DispersionProfile::model(1, 0.6, -5).unwrap();
    let grid = SpectralGrid::new(512, 64.0).unwrap();
    let k = -3;
    let prop = Propagator::new(&p, grid);
    let lattice = lattice_l4(&prop, &lattice_bump(grid, k), 20.0, 0.25).unwrap();
    let radial = radial_l4(&p, k, 20.0, RadialOptions::for_norms()).unwrap();
    assert!((lattice - radial).abs() <= 1e-3 * radial, "{lattice} vs {radial}");
}

fn solver(eps: f64, t_final: f64, null: NullHook) -> Solver {
    Solver::new(&SolverConfig {
        profile: DispersionProfile::model(1, 0.6, -5).unwrap(),
        grid: SpectralGrid::new(256, 32.0).unwrap(),
        m: -5,
        dt: 0.25,
        t_final,
        scheme: Scheme::InteractionRk4,
        epsilon: eps,
        stride: 8,
        null,
    })
    .unwrap()
}

fn datum(grid: SpectralGrid, amp: f64, seed: u64) -> Field {
    let mut u = shell_datum(grid, &SymbolSpec::ChiLeqK { k: -5 }, DataRecipe::Random, 8.0, &mut stream(seed, 0)).unwrap();
    u.scale(Complex64::new(amp, 0.0));
    u
}

fn final_state(s: &Solver, u0: &Field) -> Field {
    let traj = s.solve(u0).unwrap();
    traj.snapshot(&s.prop, traj.len() - 1).unwrap()
}

#[test]
fn backward_run_returns_to_the_datum() {
    let fwd = solver(10.0, 16.0, NullHook::Standard);
    let u0 = datum(fwd.cfg.grid, 8.0, 1);
    let end = final_state(&fwd, &u0);
    let back = solver(10.0, -16.0, NullHook::Standard);
    let start = final_state(&back, &end);
    assert!(start.l2_dist(&u0).unwrap() <= 1e-9 * u0.l2());
}

#[test]
fn reflected_multiplier_reverses_time_through_conjugation() {
    // conj(u(-t)) solves the equation with A(-D) when the profile is even
    let fwd = solver(10.0, 16.0, NullHook::Standard);
    let u0 = datum(fwd.cfg.grid, 8.0, 2);
    let a = final_state(&fwd, &u0);
    let mirror = solver(10.0, -16.0, NullHook::Reflected);
    let b = final_state(&mirror, &reflect_conj(&u0));
    assert!(reflect_conj(&b).l2_dist(&a).unwrap() <= 1e-9 * u0.l2());
}

/// `f -> conj(f(x))` in frequency, `xi -> conj(f_hat(-xi))`.
fn reflect_conj(f: &Field) -> Field {
    let g = f.grid;
    let mut out = f.clone();
    for (idx, z) in out.values.iter_mut().enumerate() {
        let (i, j) = (idx / g.n, idx % g.n);
        let mi = g.storage_index(-g.signed_index(i));
        let mj = g.storage_index(-g.signed_index(j));
        *z = f.values[mi * g.n + mj].conj();
    }
    out
}

#[test]
fn nonlinear_departure_is_cubic_in_size() {
    let s = solver(10.0, 16.0, NullHook::Standard);
    let gap = |amp: f64| {
        let u0 = datum(s.cfg.grid, amp, 3);
        final_state(&s, &u0).l2_dist(&s.prop.propagate(&u0, 16.0).unwrap()).unwrap()
    };
    let ratio = gap(0.2) / gap(0.1);
    assert!((ratio - 8.0).abs() <= 0.1, "{ratio}");
}

#[test]
fn solution_is_phase_covariant() {
    let s = solver(10.0, 8.0, NullHook::Standard);
    let u0 = datum(s.cfg.grid, 8.0, 4);
    let c = Complex64::from_polar(1.0, 1.1);
    let mut v0 = u0.clone();
    v0.scale(c);
    let mut a = final_state(&s, &u0);
    a.scale(c);
    assert!(final_state(&s, &v0).l2_dist(&a).unwrap() <= 1e-12 * u0.l2());
}

#[test]
fn refining_dt_converges() {
    let coarse = final_state(&solver(10.0, 16.0, NullHook::Standard), &datum(SpectralGrid::new(256, 32.0).unwrap(), 8.0, 5));
    let fine = {
        let mut cfg = solver(10.0, 16.0, NullHook::Standard).cfg;
        cfg.dt = 0.125;
        let s = Solver::new(&cfg).unwrap();
        final_state(&s, &datum(cfg.grid, 8.0, 5))
    };
    assert!(coarse.l2_dist(&fine).unwrap() <= 1e-8 * coarse.l2());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn picard_contracts_for_small_data(amp in 0.01f64..0.5, seed in 0u64..1000) {
        let s = solver(1.0, 16.0, NullHook::Standard);
        let run = s.picard(&datum(s.cfg.grid, amp, seed), 4).unwrap();
        prop_assert!(run.report.max_ratio() <= 0.5);
        let d = &run.report.diffs_linf;
        prop_assert!(d.windows(2).all(|w| w[1] <= w[0]));
    }
}

proptest! {
    #[test]
    fn dp_matches_exhaustive_search(values in prop::collection::vec(-5.0f64..5.0, 1..11), p in 1.01f64..6.0) {
        let s = TimeSeries::indexed(values).unwrap();
        prop_assert_eq!(vp_norm(&s, p).unwrap(), vp_norm_bruteforce(&s, p).unwrap());
    }

    #[test]
    fn vp_norm_is_monotone_in_p(values in prop::collection::vec(-5.0f64..5.0, 1..40), p in 1.01f64..5.0, dp in 0.0f64..3.0) {
        let s = TimeSeries::indexed(values).unwrap();
        prop_assert!(vp_norm(&s, p + dp).unwrap() <= vp_norm(&s, p).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn vp_norm_is_homogeneous(values in prop::collection::vec(-5.0f64..5.0, 1..30), c in -4.0f64..4.0) {
        let s = TimeSeries::indexed(values.clone()).unwrap();
        let t = TimeSeries::indexed(values.iter().map(|v| c * v).collect()).unwrap();
        let (a, b) = (vp_norm(&t, 2.0).unwrap(), c.abs() * vp_norm(&s, 2.0).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn least_squares_recovers_lines(a in -5.0f64..5.0, b in -5.0f64..5.0, n in 3usize..20) {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.7 - 3.0).collect();
        let y: Vec<f64> = x.iter().map(|x| a * x + b).collect();
        let fit = least_squares(&x, &y).unwrap();
        prop_assert!((fit.slope - a).abs() <= 1e-9 && (fit.intercept - b).abs() <= 1e-9);
    }

    #[test]
    fn band_is_at_least_one(v in prop::collection::vec(0.01f64..100.0, 1..20)) {
        prop_assert!(band(&v) >= 1.0);
    }

    #[test]
    fn sectors_are_rotation_covariant(phi in 0.0f64..std::f64::consts::TAU, n in 4u32..64, r in 0.1f64..2.0) {
        let a = sector_of([r * phi.cos(), r * phi.sin()], n);
        let b = sector_of([-r * phi.cos(), -r * phi.sin()], n);
        prop_assert!(a < n && b < n);
        prop_assert!(cyclic(a, b, n) == cyclic(b, a, n));
        prop_assert!((cyclic(a, b, n) as i64 - (n / 2) as i64).abs() <= 1);
    }
}
