//! Radial free waves `u(t, rho) = \int a(r) e^{i t gamma(r)} J_0(r rho) r dr`
//! (the inverse transform of `u^(xi) = a(|xi|)`), evaluated fast enough to
//! integrate `|u|^4` over space and long time windows.
//!
//! Near the origin `J_0` is used directly with a uniform (trapezoid) rule in
//! `r`, which is spectrally accurate because `a` vanishes to infinite order at
//! the ends of its support. Away from the origin `J_0` is split into
//! outgoing and incoming Hankel waves; after expanding the Hankel amplitudes
//! in powers of `1/(r rho)` each term is a plain exponential sum in `r`,
//! evaluated on a whole uniform `rho` grid by one FFT.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::bessel::j0;
use crate::cutoff::smooth_step;
use crate::error::{Error, Result};
use crate::profile::Radial;
use crate::quadrature::{composite, GaussLegendre};
use crate::symbol::SymbolSpec;

type Amp = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Radial amplitude `a(r)` supported in `[lo, hi]`.
#[derive(Clone)]
pub struct RadialData {
    pub lo: f64,
    pub hi: f64,
    /// Largest slope factor of the cutoff transitions, in units of `1/r`;
    /// controls how fast the transform of `a` decays.
    pub stiffness: f64,
    amp: Amp,
}

impl std::fmt::Debug for RadialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialData").field("lo", &self.lo).field("hi", &self.hi).finish()
    }
}

/// Accuracy knobs; the defaults are validated by the module tests.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialOptions {
    /// Inner radius below which `J_0` is evaluated directly.
    pub rho_near: f64,
    /// Hankel terms kept in the far field.
    pub hankel_terms: usize,
    /// `ln(1/eps)` for the transform tails of `a`.
    pub tail_log: f64,
    /// Extra margin multiplier on the `rho` band, in units of the transform width.
    pub band_log: f64,
    /// `rho` spacing as a fraction of `1/(hi - lo)`.
    pub rho_step: f64,
    /// Oversampling of the `r` grid above the Nyquist rate.
    pub oversample: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { rho_near: 32.0, hankel_terms: 9, tail_log: 24.0, band_log: 10.0, rho_step: 0.05, oversample: 1.3 }
    }
}

impl RadialOptions {
    /// Looser tails for space-time norms, where `|u|^4` suppresses tail
    /// errors; agrees with the default to about `1e-8` relative.
    pub fn for_norms() -> Self {
        Self { band_log: 5.0, tail_log: 12.0, rho_step: 0.2, ..Self::default() }
    }
}

impl RadialData {
    pub fn new(lo: f64, hi: f64, stiffness: f64, amp: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { lo, hi, stiffness, amp: Arc::new(amp) }
    }

    /// `a = P_k(r)` scaled to unit `L^2` norm.
    pub fn shell_bump(k: i32) -> Self {
        let s = SymbolSpec::PK { k };
        let a = 0.75 * 2f64.powi(k);
        let raw = Self::new(1.0 - a, 1.0 + a, 2f64.powi(3 - k), move |r| s.eval([r, 0.0]));
        let n = raw.l2_norm();
        raw.scaled(1.0 / n)
    }

    /// `a = chi_k^2 / (2 pi)`, which turns `u` into the localized kernel.
    pub fn kernel_window(k: i32) -> Self {
        let s = crate::kernel::window(k);
        let a = 3.0 * 2f64.powi(k);
        Self::new(1.0 - a, 1.0 + a, 2f64.powi(5 - k), move |r| {
            let c = s.eval([r, 0.0]);
            c * c / TAU
        })
    }

    pub fn scaled(self, c: f64) -> Self {
        let amp = self.amp.clone();
        Self { amp: Arc::new(move |r| c * amp(r)), ..self }
    }

    pub fn amp(&self, r: f64) -> f64 {
        (self.amp)(r)
    }

    /// `||u_0||_2 = (2 pi \int a^2 r dr)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        let gl = GaussLegendre::new(16);
        let (xs, ws) = composite(&gl, self.lo, self.hi, 256);
        let s: f64 = xs.iter().zip(&ws).map(|(&r, &w)| w * self.amp(r).powi(2) * r).sum();
        (TAU * s).sqrt()
    }

    /// Frequency width (in `rho`) beyond which the transform of `a` is below
    /// `exp(-tail_log)`.
    fn tail_width(&self, tail_log: f64) -> f64 {
        // exp(-1/x) transitions have transforms decaying like exp(-sqrt(2 w / s))
        0.5 * self.stiffness * tail_log * tail_log
    }

    fn uniform(&self, spacing: f64) -> (Vec<f64>, f64) {
        let n = ((self.hi - self.lo) / spacing).ceil().max(8.0) as usize;
        let dr = (self.hi - self.lo) / n as f64;
        ((0..=n).map(|j| self.lo + j as f64 * dr).collect(), dr)
    }

    /// Group-velocity range over the support.
    fn gamma1_range<P: Radial + ?Sized>(&self, p: &P) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..=256 {
            let g = p.gamma_d1(self.lo + (self.hi - self.lo) * i as f64 / 256.0);
            lo = lo.min(g);
            hi = hi.max(g);
        }
        (lo, hi)
    }

    /// Weights `a(r) r e^{it gamma(r)} dr` on an `r` grid fine enough for every
    /// `rho <= rho_max`.
    fn direct_table<P: Radial + ?Sized>(&self, p: &P, t: f64, rho_max: f64, opts: &RadialOptions) -> Vec<(f64, Complex64)> {
        let (_, g1) = self.gamma1_range(p);
        let w = t.abs() * g1 + rho_max + self.tail_width(opts.tail_log);
        let (rs, dr) = self.uniform(TAU / (w * opts.oversample));
        rs.into_iter()
            .filter_map(|r| {
                let a = self.amp(r);
                (a != 0.0).then(|| (r, Complex64::from_polar(a * r * dr, t * p.gamma(r))))
            })
            .collect()
    }

    fn sum_table(table: &[(f64, Complex64)], rho: f64) -> Complex64 {
        table.iter().map(|&(r, c)| c * j0(r * rho)).sum()
    }

    /// Direct evaluation with `J_0`, valid for any `rho`.
    pub fn eval_direct<P: Radial + ?Sized>(&self, p: &P, t: f64, rho: f64, opts: &RadialOptions) -> Complex64 {
        Self::sum_table(&self.direct_table(p, t, rho, opts), rho)
    }

    /// `u(t, rho)` on `rho_m = rho0 + m d_rho`, `m < count`, via the Hankel
    /// split. Requires `rho0 * lo >= 6`. The incoming wave is included only
    /// if `incoming` is set.
    pub fn eval_far<P: Radial + ?Sized>(
        &self,
        p: &P,
        t: f64,
        rho0: f64,
        d_rho: f64,
        count: usize,
        incoming: bool,
        opts: &RadialOptions,
    ) -> Vec<Complex64> {
        let rho_end = rho0 + d_rho * count as f64;
        let (g1lo, g1hi) = self.gamma1_range(p);
        let tail = self.tail_width(opts.tail_log);
        let mut out = vec![Complex64::new(0.0, 0.0); count];
        // outgoing: phase rate t gamma' - rho
        let w_out = (t * g1hi - rho0).abs().max((t * g1lo - rho_end).abs()) + tail;
        self.hankel_sum(p, t, rho0, d_rho, &mut out, w_out, false, opts);
        if incoming {
            let w_in = t.abs() * g1hi + rho_end + tail;
            self.hankel_sum(p, t, rho0, d_rho, &mut out, w_in, true, opts);
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn hankel_sum<P: Radial + ?Sized>(
        &self,
        p: &P,
        t: f64,
        rho0: f64,
        d_rho: f64,
        out: &mut [Complex64],
        bandwidth: f64,
        incoming: bool,
        opts: &RadialOptions,
    ) {
        let (rs, dr) = self.uniform(TAU / (bandwidth * opts.oversample));
        // the FFT lands on the rho grid only when dr d_rho = 2 pi / n
        let n_min = (TAU / (dr * d_rho)).ceil() as usize;
        let n = n_min.max(rs.len()).next_power_of_two();
        let dr = TAU / (n as f64 * d_rho);
        let j_count = ((self.hi - self.lo) / dr).ceil() as usize + 1;
        let r0 = self.lo;
        let sgn = if incoming { 1.0 } else { -1.0 };
        let base: Vec<Complex64> = (0..j_count)
            .map(|j| {
                let r = r0 + j as f64 * dr;
                let a = if r <= self.hi { self.amp(r) } else { 0.0 };
                if a == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                // shift so that bin m corresponds to rho0 + m d_rho
                Complex64::from_polar(a * r * dr, t * p.gamma(r) + sgn * j as f64 * dr * rho0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = if incoming { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let mut carriers: Vec<Complex64> = (0..out.len())
            .map(|m| {
                let rho = rho0 + m as f64 * d_rho;
                Complex64::from_polar(rho.powf(-0.5), sgn * r0 * rho)
            })
            .collect();
        let mut r_pow: Vec<f64> = (0..base.len()).map(|j| (r0 + j as f64 * dr).powf(-0.5)).collect();
        let pref = 0.5 * (2.0 / PI).sqrt();
        let mut coef = 1.0;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for term in 0..opts.hankel_terms {
            if term > 0 {
                let m = term as f64;
                coef *= (2.0 * m - 1.0).powi(2) / (m * 8.0);
            }
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (j, z) in base.iter().enumerate() {
                if *z != Complex64::new(0.0, 0.0) {
                    buf[j] = z * r_pow[j];
                }
                r_pow[j] /= r0 + j as f64 * dr;
            }
            fft.process(&mut buf);
            // outgoing amplitude e^{i pi/4} i^n, incoming e^{-i pi/4} (-i)^n
            let phase = if incoming {
                -FRAC_PI_4 - term as f64 * PI / 2.0
            } else {
                FRAC_PI_4 + term as f64 * PI / 2.0
            };
            let c = Complex64::from_polar(pref * coef, phase);
            for ((m, o), car) in out.iter_mut().enumerate().zip(carriers.iter_mut()) {
                *o += c * *car * buf[m % n];
                // next term carries one more power of 1/rho
                *car /= rho0 + m as f64 * d_rho;
            }
        }
    }
}

/// Partition between the direct and far-field regions.
fn near_weight(rho: f64, rho_near: f64) -> f64 {
    1.0 - smooth_step((rho - rho_near / 2.0) / (rho_near / 2.0))
}

/// Per-time accounting of `\int 2 pi rho |u|^4 drho`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SliceReport {
    pub power: f64,
    pub sup: f64,
    pub argmax: f64,
    pub near_used: bool,
    pub incoming_used: bool,
}

/// Solver for one radial datum under one profile.
pub struct RadialWave<'a, P: Radial + ?Sized> {
    pub profile: &'a P,
    pub data: RadialData,
    pub opts: RadialOptions,
    /// `ln` of the incoming-wave suppression beyond which it is dropped.
    pub incoming_cut: f64,
}

impl<'a, P: Radial + ?Sized> RadialWave<'a, P> {
    pub fn new(profile: &'a P, data: RadialData) -> Self {
        Self { profile, data, opts: RadialOptions::default(), incoming_cut: 25.0 }
    }

    /// Width of the spatial tail of `u_0` at the configured tolerance.
    fn spatial_margin(&self) -> f64 {
        self.data.tail_width(self.opts.band_log)
    }

    fn incoming_needed(&self, t: f64) -> bool {
        let (g1lo, _) = self.data.gamma1_range(self.profile);
        // incoming phase rate is at least t gamma' + rho_near / 2
        let rate = t.abs() * g1lo + self.opts.rho_near / 2.0;
        (2.0 * rate / self.data.stiffness).sqrt() < self.incoming_cut
    }

    fn near_needed(&self, t: f64) -> bool {
        let (g1lo, _) = self.data.gamma1_range(self.profile);
        t.abs() * g1lo - self.spatial_margin() < self.opts.rho_near
    }

    /// `u(t, .)` on the far grid, with the grid itself.
    pub fn far_profile(&self, t: f64) -> (Vec<f64>, Vec<Complex64>) {
        let (g1lo, g1hi) = self.data.gamma1_range(self.profile);
        let b = self.spatial_margin();
        let rho_lo = (t.abs() * g1lo - b).max(self.opts.rho_near / 2.0);
        let rho_hi = (t.abs() * g1hi + b).max(rho_lo + b);
        let incoming = self.incoming_needed(t);
        // with both Hankel waves present |u|^4 carries e^{4 i rho}-type fringes
        let mut d_rho = self.opts.rho_step / (self.data.hi - self.data.lo);
        if incoming {
            d_rho = d_rho.min(0.6 / self.data.hi);
        }
        let count = ((rho_hi - rho_lo) / d_rho).ceil() as usize + 1;
        let u = self.data.eval_far(self.profile, t, rho_lo, d_rho, count, incoming, &self.opts);
        let rho = (0..count).map(|m| rho_lo + m as f64 * d_rho).collect();
        (rho, u)
    }

    /// `u(t, .)` at Gauss nodes of `[0, rho_near]`.
    pub fn near_profile(&self, t: f64) -> (Vec<f64>, Vec<f64>, Vec<Complex64>) {
        let gl = GaussLegendre::new(16);
        let panels = self.opts.rho_near.ceil() as usize;
        let (xs, ws) = composite(&gl, 0.0, self.opts.rho_near, panels);
        let table = self.data.direct_table(self.profile, t, self.opts.rho_near, &self.opts);
        let u = xs.iter().map(|&rho| RadialData::sum_table(&table, rho)).collect();
        (xs, ws, u)
    }

    /// `\int_{R^2} |u(t)|^4 dx` together with `sup|u(t)|`.
    pub fn slice(&self, t: f64) -> SliceReport {
        let mut rep = SliceReport::default();
        let rn = self.opts.rho_near;
        if self.near_needed(t) {
            rep.near_used = true;
            let (xs, ws, u) = self.near_profile(t);
            for ((&rho, &w), z) in xs.iter().zip(&ws).zip(&u) {
                let a = z.norm();
                if a > rep.sup {
                    rep.sup = a;
                    rep.argmax = rho;
                }
                rep.power += w * TAU * rho * near_weight(rho, rn) * a.powi(4);
            }
        }
        rep.incoming_used = self.incoming_needed(t);
        let (rho, u) = self.far_profile(t);
        let d_rho = if rho.len() > 1 { rho[1] - rho[0] } else { 0.0 };
        for (&r, z) in rho.iter().zip(&u) {
            let a = z.norm();
            if r >= rn && a > rep.sup {
                rep.sup = a;
                rep.argmax = r;
            }
            rep.power += d_rho * TAU * r * (1.0 - near_weight(r, rn)) * a.powi(4);
        }
        rep
    }

    /// `||u||_{L^4([-T,T] x R^2)}` for real amplitudes, where `|u(-t)| = |u(t)|`.
    ///
    /// Gauss panels: `panels_head` on `[0, t_head]`, then dyadic panels to `T`.
    pub fn spacetime_l4(&self, t_final: f64, t_head: f64, order: usize) -> Result<f64> {
        if !(t_final > 0.0 && t_head > 0.0) {
            return Err(Error::Precondition("time window must be positive".into()));
        }
        let gl = GaussLegendre::new(order);
        let mut breaks = vec![0.0];
        let head = t_head.min(t_final);
        for i in 1..=4 {
            breaks.push(head * i as f64 / 4.0);
        }
        let mut b = head;
        while b < t_final {
            b = (2.0 * b).min(t_final);
            breaks.push(b);
        }
        let mut total = 0.0;
        for w in breaks.windows(2) {
            total += gl.integrate(w[0], w[1], |t| self.slice(t).power);
        }
        let v = 2.0 * total;
        if !v.is_finite() {
            return Err(Error::Overflow("space-time L4 integral is not finite".into()));
        }
        Ok(v.powf(0.25))
    }
}
