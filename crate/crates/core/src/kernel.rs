//! The shell-localized propagator kernel
//! `K(t, x) = (2 pi)^-2 \int e^{i x.xi} e^{i t h(xi)} chi_k(xi)^2 dxi`,
//! reduced to the radial integral
//! `K(t, rho) = (2 pi)^-1 \int e^{i t gamma(r)} J_0(r rho) chi_k(r)^2 r dr`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::j0;
use crate::error::{Error, Result};
use crate::fit::{log2_fit, FitResult};
use crate::profile::{DispersionProfile, Radial};
use crate::quadrature::{composite, GaussLegendre};
use crate::symbol::SymbolSpec;

/// Gauss points per panel.
const PANEL_ORDER: usize = 16;
/// Panels per support interval regardless of phase, so cutoff transitions are resolved.
const MIN_PANELS: usize = 32;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelRequest {
    pub profile: DispersionProfile,
    pub k: i32,
    pub t: f64,
    pub radii: Vec<f64>,
    pub nodes: usize,
}

/// `chi_k = P_{k-2 <= . <= k+2}`, the widened shell window.
pub fn window(k: i32) -> SymbolSpec {
    SymbolSpec::PRange { lo: k - 2, hi: k + 2 }
}

pub fn window_radial(k: i32, r: f64) -> f64 {
    window(k).eval([r, 0.0])
}

/// The two radial intervals carrying the window, `2^(k-4) < |r-1| < 3 2^k`.
pub fn window_intervals(k: i32) -> [(f64, f64); 2] {
    let a = 2f64.powi(k - 4);
    let b = 3.0 * 2f64.powi(k);
    [((1.0 - b).max(0.0), 1.0 - a), (1.0 + a, 1.0 + b)]
}

/// Splits one side of the window into transition, plateau, transition
/// pieces; the flag marks transitions.
fn split_transitions(k: i32, a: f64, b: f64) -> Vec<(f64, f64, bool)> {
    let inner = (2f64.powi(k - 4), 1.5 * 2f64.powi(k - 4));
    let outer = (2f64.powi(k + 1), 3.0 * 2f64.powi(k));
    let pts = if a >= 1.0 {
        [1.0 + inner.0, 1.0 + inner.1, 1.0 + outer.0, 1.0 + outer.1]
    } else {
        [1.0 - outer.1, 1.0 - outer.0, 1.0 - inner.1, 1.0 - inner.0]
    };
    let mut out = Vec::new();
    for i in 0..3 {
        let lo = pts[i].max(a);
        let hi = pts[i + 1].min(b);
        if hi > lo {
            out.push((lo, hi, i != 1));
        }
    }
    out
}

/// Minimum node count for a given `(k, t)`.
pub fn required_nodes(k: i32, t: f64) -> usize {
    (64.0 * (t.abs() * 2f64.powi(k)).max(1.0)).ceil() as usize
}

fn sup_gamma_d1<P: Radial + ?Sized>(p: &P, a: f64, b: f64) -> f64 {
    (0..=64).map(|i| p.gamma_d1(a + (b - a) * i as f64 / 64.0).abs()).fold(0.0, f64::max)
}

/// Quadrature nodes and `chi_k^2 r dr / (2 pi)` weights, sized so that each
/// panel sees a phase change below `pi/2` for `|t| gamma'` and `rho`.
pub struct RadialRule {
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl RadialRule {
    pub fn new<P: Radial + ?Sized>(p: &P, k: i32, t: f64, rho: f64, min_nodes: usize, refine: usize) -> Self {
        let gl = GaussLegendre::new(PANEL_ORDER);
        let ivals = window_intervals(k);
        let total: f64 = ivals.iter().map(|(a, b)| b - a).sum();
        let floor_panels = min_nodes.div_ceil(PANEL_ORDER);
        let mut r = Vec::new();
        let mut w = Vec::new();
        for &(a, b) in &ivals {
            let rate = 8f64.max(4.0 * t.abs() * sup_gamma_d1(p, a, b)).max(4.0 * rho);
            let share = ((b - a) / total * floor_panels as f64).ceil() as usize;
            let per_interval = (((b - a) * rate).ceil() as usize).max(MIN_PANELS).max(share);
            // transitions of the window get their own panels
            let pieces = split_transitions(k, a, b);
            for (lo, hi, transition) in pieces {
                let frac = (hi - lo) / (b - a);
                let mut panels = ((per_interval as f64 * frac).ceil() as usize).max(1);
                if transition {
                    panels = panels.max(MIN_PANELS / 2);
                }
                let (xs, ws) = composite(&gl, lo, hi, panels * refine.max(1));
                for (x, v) in xs.into_iter().zip(ws) {
                    let c = window_radial(k, x);
                    if c != 0.0 {
                        r.push(x);
                        w.push(v * c * c * x / TAU);
                    }
                }
            }
        }
        let gamma = r.iter().map(|&x| p.gamma(x)).collect();
        Self { r, w, gamma }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// `K(t, rho)` for a generic radial profile; `refine` multiplies the panel count.
pub fn kernel_at<P: Radial + ?Sized>(p: &P, k: i32, t: f64, rho: f64, min_nodes: usize, refine: usize) -> Complex64 {
    let rule = RadialRule::new(p, k, t, rho, min_nodes, refine);
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..rule.len() {
        s += Complex64::from_polar(rule.w[i] * j0(rule.r[i] * rho), t * rule.gamma[i]);
    }
    s
}

fn validate(req: &KernelRequest) -> Result<()> {
    if req.k > req.profile.m + 1 {
        return Err(Error::Precondition(format!(
            "shell k={} exceeds M+1={}",
            req.k,
            req.profile.m + 1
        )));
    }
    if 3.0 * 2f64.powi(req.k) >= 1.0 {
        return Err(Error::Precondition(format!("shell k={} reaches the origin", req.k)));
    }
    if req.t == 0.0 {
        return Err(Error::Precondition("t must be nonzero".into()));
    }
    let need = required_nodes(req.k, req.t);
    if req.nodes < need {
        return Err(Error::NodeBudget { required: need, given: req.nodes });
    }
    Ok(())
}

pub fn kernel_eval(req: &KernelRequest) -> Result<Vec<Complex64>> {
    validate(req)?;
    Ok(req.radii.iter().map(|&rho| kernel_at(&req.profile, req.k, req.t, rho.abs(), req.nodes, 1)).collect())
}

/// `K(0, 0) = (2 pi)^-2 \int chi_k^2 dxi`, the largest value `|K|` can take.
pub fn kernel_origin<P: Radial + ?Sized>(p: &P, k: i32) -> f64 {
    kernel_at(p, k, 0.0, 0.0, 0, 1).re
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SupResult {
    pub sup: f64,
    pub argmax: f64,
    pub nodes: usize,
}

/// `max_rho |K(t, rho)|` over a uniform scan of `[0, rho_max]`, refined by
/// golden-section search around the best sample.
pub fn kernel_sup_generic<P: Radial + ?Sized>(
    p: &P,
    k: i32,
    t: f64,
    rho_max: f64,
    rho_samples: usize,
) -> Result<SupResult> {
    if rho_samples < 512 {
        return Err(Error::Precondition(format!("need at least 512 rho samples, got {rho_samples}")));
    }
    if rho_max < 4.0 * t.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "rho_max={rho_max} must be at least 4 max(1,|t|)"
        )));
    }
    let nodes = required_nodes(k, t);
    let f = |rho: f64| kernel_at(p, k, t, rho.abs(), nodes, 1).norm();
    let step = rho_max / (rho_samples - 1) as f64;
    let mut best = (0.0, f(0.0));
    for i in 1..rho_samples {
        let rho = i as f64 * step;
        let v = f(rho);
        if v > best.1 {
            best = (rho, v);
        }
    }
    let lo = (best.0 - step).max(0.0);
    let hi = best.0 + step;
    let (arg, val) = golden_max(f, lo, hi, 40);
    let (argmax, sup) = if val > best.1 { (arg, val) } else { best };
    let total = RadialRule::new(p, k, t, argmax, nodes, 1).len();
    Ok(SupResult { sup, argmax, nodes: total })
}

pub fn kernel_sup(profile: &DispersionProfile, k: i32, t: f64, rho_max: f64, rho_samples: usize) -> Result<SupResult> {
    validate(&KernelRequest { profile: profile.clone(), k, t, radii: vec![], nodes: required_nodes(k, t) })?;
    kernel_sup_generic(profile, k, t, rho_max, rho_samples)
}

/// Default scan: `rho_max = 4 max(1,|t|) + 2^(4-k)`, 512 samples.
pub fn kernel_sup_default(profile: &DispersionProfile, k: i32, t: f64) -> Result<SupResult> {
    let rho_max = 4.0 * t.abs().max(1.0) + 2f64.powi(4 - k);
    let samples = 512.max((rho_max / (0.25 * 2f64.powi(-k))).ceil() as usize);
    kernel_sup(profile, k, t, rho_max, samples)
}

/// `sup|K| |t| 2^(beta k/2)`.
pub fn normalized_c(beta: u32, k: i32, t: f64, sup: f64) -> f64 {
    sup * t.abs() * 2f64.powf(beta as f64 * k as f64 / 2.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayRow {
    pub beta: u32,
    pub k: i32,
    pub t: f64,
    #[serde(rename = "sup_abs_K")]
    pub sup_abs_k: f64,
    pub normalized_c: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    /// `log2 sup|K|` against `log2 |t|` at fixed `k`.
    pub t_fit: FitResult,
    /// `log2 sup|K|` against `k` at fixed `t`.
    pub k_fit: FitResult,
    pub rows: Vec<DecayRow>,
}

pub fn decay_row(profile: &DispersionProfile, k: i32, t: f64) -> Result<DecayRow> {
    let s = kernel_sup_default(profile, k, t)?;
    Ok(DecayRow {
        beta: profile.beta,
        k,
        t,
        sup_abs_k: s.sup,
        normalized_c: normalized_c(profile.beta, k, t, s.sup),
        nodes: s.nodes,
    })
}

/// Fits the decay in `t` at shell `k_fixed` and the shell dependence at time `t_fixed`.
pub fn decay_fit(
    profile: &DispersionProfile,
    k_fixed: i32,
    t_values: &[f64],
    t_fixed: f64,
    k_values: &[i32],
) -> Result<DecayFit> {
    if t_values.len() < 4 || k_values.len() < 4 {
        return Err(Error::DegenerateFit("need at least 4 values in each range".into()));
    }
    let mut rows = Vec::new();
    let mut lt = Vec::new();
    let mut st = Vec::new();
    for &t in t_values {
        let row = decay_row(profile, k_fixed, t)?;
        lt.push(t.abs().log2());
        st.push(row.sup_abs_k);
        rows.push(row);
    }
    let mut kk = Vec::new();
    let mut sk = Vec::new();
    for &k in k_values {
        let row = decay_row(profile, k, t_fixed)?;
        kk.push(k as f64);
        sk.push(row.sup_abs_k);
        rows.push(row);
    }
    Ok(DecayFit { t_fit: log2_fit(&lt, &st)?, k_fit: log2_fit(&kk, &sk)?, rows })
}

/// Time beyond which the shell `k` has fully dispersed, `2^(-(beta+2)k)`.
pub fn dispersive_time(beta: u32, k: i32) -> f64 {
    2f64.powf(-((beta as f64) + 2.0) * k as f64)
}

/// Unused by the estimate itself; kept for diagnostics of the 2D reduction.
pub fn area_weight(k: i32) -> f64 {
    let [(a1, b1), (a2, b2)] = window_intervals(k);
    PI * (b1 * b1 - a1 * a1 + b2 * b2 - a2 * a2)
}
