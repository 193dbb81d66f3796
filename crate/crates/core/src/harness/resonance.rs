//! Resonance curves `{xi : h(xi) + h(xi0 - xi) = tau0}` restricted to thin
//! annuli, and the generic bilinear bound `theta^{-1/2} l^{1/2}` built on them.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::stream;
use crate::error::{Error, Result};
use crate::harness::band;
use crate::profile::Radial;
use crate::symbol::{angle, SymbolSpec};

const R_GRID: usize = 64;

/// One connected piece of a marched curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveInterval {
    pub theta_start: f64,
    pub theta_end: f64,
    /// Arc length of the polyline through the hits.
    pub length: f64,
    pub hits: usize,
}

/// Level-set search in polar coordinates around the origin.
pub struct CurveProblem<'a, P: Radial + ?Sized> {
    pub profile: &'a P,
    pub xi0: [f64; 2],
    pub tau0: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    /// Angle windows `[a, b]` to march; `b` may exceed `2 pi`.
    pub windows: Vec<(f64, f64)>,
    pub theta_samples: usize,
    /// Extra admissibility test on `xi`.
    pub admissible: &'a dyn Fn([f64; 2]) -> bool,
}

#[derive(Clone, Copy, Debug)]
struct Hit {
    step: usize,
    r: f64,
    /// `dr/dtheta` along the curve.
    slope: f64,
    xi: [f64; 2],
}

fn polar(r: f64, theta: f64) -> [f64; 2] {
    [r * theta.cos(), r * theta.sin()]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl<P: Radial + ?Sized> CurveProblem<'_, P> {
    fn f(&self, r: f64, theta: f64) -> f64 {
        let xi = polar(r, theta);
        let eta = [self.xi0[0] - xi[0], self.xi0[1] - xi[1]];
        self.profile.gamma(eta[0].hypot(eta[1])) + self.profile.gamma(r) - self.tau0
    }

    /// `dr/dtheta = -f_theta / f_r` by central differences.
    fn slope(&self, r: f64, theta: f64) -> f64 {
        let hr = 1e-7 * r;
        let ht = 1e-7;
        let fr = (self.f(r + hr, theta) - self.f(r - hr, theta)) / (2.0 * hr);
        let ft = (self.f(r, theta + ht) - self.f(r, theta - ht)) / (2.0 * ht);
        -ft / fr
    }

    /// Admissible roots in `r` at angle `theta`, by sign changes on a
    /// uniform grid and bisection to `1e-12`.
    fn roots(&self, theta: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let h = (self.r_hi - self.r_lo) / (R_GRID - 1) as f64;
        let mut prev_r = self.r_lo;
        let mut prev = self.f(prev_r, theta);
        for i in 1..R_GRID {
            let r = self.r_lo + i as f64 * h;
            let cur = self.f(r, theta);
            if prev == 0.0 || prev.signum() != cur.signum() {
                let (mut a, mut b, mut fa) = (prev_r, r, prev);
                while b - a > 1e-12 {
                    let m = 0.5 * (a + b);
                    let fm = self.f(m, theta);
                    if fm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if fm.signum() == fa.signum() {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                let root = 0.5 * (a + b);
                if (self.admissible)(polar(root, theta)) {
                    out.push(root);
                }
            }
            prev_r = r;
            prev = cur;
        }
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-11);
        out
    }

    /// Marches every window and groups hits into connected pieces.
    pub fn march(&self) -> Vec<CurveInterval> {
        let mut pieces = Vec::new();
        for &(a, b) in &self.windows {
            pieces.extend(self.march_window(a, b));
        }
        pieces
    }

    fn march_window(&self, a: f64, b: f64) -> Vec<CurveInterval> {
        let n = self.theta_samples.max(2);
        let full = b - a >= TAU - 1e-15;
        let steps = if full { n } else { n + 1 };
        let dtheta = if full { TAU / n as f64 } else { (b - a) / n as f64 };
        let mut hits: Vec<Hit> = Vec::new();
        let mut per_step: Vec<Vec<usize>> = Vec::with_capacity(steps);
        for s in 0..steps {
            let theta = a + s as f64 * dtheta;
            let mut ids = Vec::new();
            for r in self.roots(theta) {
                ids.push(hits.len());
                hits.push(Hit { step: s, r, slope: self.slope(r, theta), xi: polar(r, theta) });
            }
            per_step.push(ids);
        }
        // a branch moves by a few r-grid cells per step, or follows its
        // tangent when it crosses the annulus steeply
        let tol = 4.0 * (self.r_hi - self.r_lo) / (R_GRID - 1) as f64;
        let gap = |i: usize, j: usize| {
            let plain = (hits[i].r - hits[j].r).abs();
            let predicted = (hits[i].r + dtheta * hits[i].slope - hits[j].r).abs();
            plain.min(predicted)
        };
        let mut uf = UnionFind::new(hits.len());
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let link = |s: usize, t: usize, uf: &mut UnionFind, edges: &mut Vec<(usize, usize)>| {
            for &j in &per_step[t] {
                let nearest = per_step[s].iter().copied().min_by(|&x, &y| gap(x, j).total_cmp(&gap(y, j)));
                if let Some(i) = nearest {
                    if gap(i, j) <= tol {
                        uf.union(i, j);
                        edges.push((i, j));
                    }
                }
            }
        };
        for s in 0..steps.saturating_sub(1) {
            link(s, s + 1, &mut uf, &mut edges);
        }
        if full && steps > 1 {
            link(steps - 1, 0, &mut uf, &mut edges);
        }
        // a fold in theta shows up as two nearby roots that vanish together
        for s in 0..steps {
            let ids = &per_step[s];
            let next = if s + 1 < steps { per_step[s + 1].len() } else { usize::MAX };
            let prev = if s > 0 { per_step[s - 1].len() } else { usize::MAX };
            if ids.len() >= 2 && (next < ids.len() || prev < ids.len()) {
                for w in ids.windows(2) {
                    if (hits[w[1]].r - hits[w[0]].r).abs() <= tol {
                        uf.union(w[0], w[1]);
                        edges.push((w[0], w[1]));
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, CurveInterval> = Default::default();
        for (i, h) in hits.iter().enumerate() {
            let theta = a + h.step as f64 * dtheta;
            let g = groups.entry(uf.find(i)).or_insert(CurveInterval {
                theta_start: theta,
                theta_end: theta,
                length: 0.0,
                hits: 0,
            });
            g.theta_start = g.theta_start.min(theta);
            g.theta_end = g.theta_end.max(theta);
            g.hits += 1;
        }
        for (i, j) in edges {
            let root = uf.find(i);
            if let Some(g) = groups.get_mut(&root) {
                g.length += dist(hits[i].xi, hits[j].xi);
            }
        }
        groups.into_values().collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Annuli of the geometric lemma: `|xi| in (1 - 2^{k1+2}, 1 + 2^{k1+2})` and
/// `|xi0 - xi| in (1 + 2^{k2-2}, 1 + 2^{k2+2})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaAnnuli {
    pub k1: i32,
    pub k2: i32,
}

impl LemmaAnnuli {
    pub fn first(&self) -> (f64, f64) {
        let w = 2f64.powi(self.k1 + 2);
        (1.0 - w, 1.0 + w)
    }

    pub fn second(&self) -> (f64, f64) {
        (1.0 + 2f64.powi(self.k2 - 2), 1.0 + 2f64.powi(self.k2 + 2))
    }

    /// Angles (relative to the direction of `xi0`) where the second annulus
    /// can meet the first, as at most two windows.
    fn angle_windows(&self, r0: f64) -> Vec<(f64, f64)> {
        let (r_lo, r_hi) = self.first();
        let (s_lo, s_hi) = self.second();
        let mut c_min = f64::INFINITY;
        let mut c_max = f64::NEG_INFINITY;
        for i in 0..R_GRID {
            let r = r_lo + (r_hi - r_lo) * i as f64 / (R_GRID - 1) as f64;
            for s in [s_lo, s_hi] {
                let c = (r * r + r0 * r0 - s * s) / (2.0 * r * r0);
                c_min = c_min.min(c);
                c_max = c_max.max(c);
            }
        }
        if c_min > 1.0 || c_max < -1.0 {
            return Vec::new();
        }
        // small margin so the window edges are not lost to rounding
        let lo = c_min.clamp(-1.0, 1.0).acos();
        let hi = c_max.clamp(-1.0, 1.0).acos();
        let (a, b) = (hi.min(lo), hi.max(lo));
        let pad = 1e-3 * (b - a) + 1e-9;
        let (a, b) = ((a - pad).max(0.0), (b + pad).min(PI));
        vec![(a, b), (TAU - b, TAU - a)]
    }
}

/// Resonance curve for `xi0` (any direction) under the lemma's annuli.
pub fn resonance_curve<P: Radial + ?Sized>(
    profile: &P,
    tau0: f64,
    xi0: [f64; 2],
    annuli: LemmaAnnuli,
    theta_samples: usize,
) -> Vec<CurveInterval> {
    let r0 = xi0[0].hypot(xi0[1]);
    let phi = angle(xi0);
    let (s_lo, s_hi) = annuli.second();
    let (r_lo, r_hi) = annuli.first();
    let admissible = |xi: [f64; 2]| {
        let s = (xi0[0] - xi[0]).hypot(xi0[1] - xi[1]);
        s > s_lo && s < s_hi
    };
    let windows = annuli.angle_windows(r0).into_iter().map(|(a, b)| (a + phi, b + phi)).collect();
    CurveProblem { profile, xi0, tau0, r_lo, r_hi, windows, theta_samples, admissible: &admissible }.march()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRow {
    pub beta: u32,
    pub k1: i32,
    pub k2: i32,
    pub tau0: f64,
    pub xi0_r: f64,
    pub n_components: usize,
    pub max_len: f64,
    pub normalized_len: f64,
}

/// Summary of a random sweep at one `(k1, k2)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResonanceSummary {
    pub k1: i32,
    pub k2: i32,
    pub draws: usize,
    pub max_components: usize,
    pub max_normalized_len: f64,
    pub empty_draws: usize,
}

/// Draws `(tau0, xi0)` so that the curve is nonempty: `|xi0|` log-uniform in
/// `[2^k2, 1]`, then a point with `|xi|` in the first annulus and
/// `|xi0 - xi|` in the second fixes `tau0`.
pub fn draw_configuration<P: Radial + ?Sized, R: Rng>(profile: &P, annuli: LemmaAnnuli, rng: &mut R) -> (f64, [f64; 2]) {
    let (r_lo, r_hi) = annuli.first();
    let (s_lo, s_hi) = annuli.second();
    let lo = annuli.k2 as f64;
    loop {
        let r0 = 2f64.powf(rng.gen_range(lo..0.0));
        let r = rng.gen_range(r_lo..r_hi);
        let s = rng.gen_range(s_lo..s_hi);
        if (r - s).abs() < r0 && r0 < r + s {
            let phi = rng.gen_range(0.0..TAU);
            return (profile.gamma(r) + profile.gamma(s), [r0 * phi.cos(), r0 * phi.sin()]);
        }
    }
}

pub fn resonance_sweep<P: Radial + ?Sized>(
    profile: &P,
    annuli: LemmaAnnuli,
    draws: usize,
    theta_samples: usize,
    seed: u64,
) -> (Vec<ResonanceRow>, ResonanceSummary) {
    let mut rng = stream(seed, 0);
    let scale = 2f64.powf((annuli.k1 - annuli.k2) as f64 / 2.0);
    let mut rows = Vec::with_capacity(draws);
    for _ in 0..draws {
        let (tau0, xi0) = draw_configuration(profile, annuli, &mut rng);
        let pieces = resonance_curve(profile, tau0, xi0, annuli, theta_samples);
        let max_len = pieces.iter().map(|p| p.length).fold(0.0, f64::max);
        rows.push(ResonanceRow {
            beta: profile.beta(),
            k1: annuli.k1,
            k2: annuli.k2,
            tau0,
            xi0_r: xi0[0].hypot(xi0[1]),
            n_components: pieces.len(),
            max_len,
            normalized_len: max_len / scale,
        });
    }
    let summary = ResonanceSummary {
        k1: annuli.k1,
        k2: annuli.k2,
        draws,
        max_components: rows.iter().map(|r| r.n_components).max().unwrap_or(0),
        max_normalized_len: rows.iter().map(|r| r.normalized_len).fold(0.0, f64::max),
        empty_draws: rows.iter().filter(|r| r.n_components == 0).count(),
    };
    (rows, summary)
}

/// `max / min` of the per-pair maximal normalized lengths.
pub fn length_band(summaries: &[ResonanceSummary]) -> f64 {
    band(&summaries.iter().map(|s| s.max_normalized_len).collect::<Vec<_>>())
}

/// Result of [`generic_bilinear_bound`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenericBound {
    pub theta: f64,
    pub l: f64,
    pub bound: f64,
    pub theta_witness: ([f64; 2], [f64; 2]),
}

/// Radial range `[1 - hi, 1 + hi]` and angle window covering a sector symbol.
fn sample_region(spec: &SymbolSpec, samples: usize, seed: u64, which: u64) -> Result<Vec<[f64; 2]>> {
    let (_, hi) = spec
        .offset_support()
        .filter(|(_, b)| b.is_finite())
        .ok_or_else(|| Error::Precondition(format!("{spec:?} has no bounded radial support")))?;
    let mut rng = stream(seed, which);
    let mut pts = Vec::with_capacity(samples);
    let mut tries = 0usize;
    while pts.len() < samples {
        tries += 1;
        if tries > 200 * samples {
            return Err(Error::Precondition(format!("{spec:?} support is too thin to sample")));
        }
        let r = rng.gen_range((1.0 - hi).max(0.0)..1.0 + hi);
        let t = rng.gen_range(0.0..TAU);
        let xi = polar(r, t);
        if spec.eval(xi) > 0.0 {
            pts.push(xi);
        }
    }
    Ok(pts)
}

/// Smallest angle window `[a, b]` (possibly with `b > 2 pi`) containing all points.
fn covering_window(pts: &[[f64; 2]]) -> (f64, f64) {
    let mut angles: Vec<f64> = pts.iter().map(|&p| angle(p)).collect();
    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    let mut best = (TAU - (angles[n - 1] - angles[0]), 0usize);
    for i in 1..n {
        let gap = angles[i] - angles[i - 1];
        if gap > best.0 {
            best = (gap, i);
        }
    }
    let (gap, i) = best;
    if i == 0 {
        let _ = gap;
        return (angles[0], angles[n - 1]);
    }
    (angles[i], angles[i - 1] + TAU)
}

/// `theta^{-1/2} l^{1/2}` for two sector symbols, with `theta` the smallest
/// sampled group-velocity separation and `l` the longest sampled resonance curve.
pub fn generic_bilinear_bound<P: Radial + ?Sized>(
    profile: &P,
    first: &SymbolSpec,
    second: &SymbolSpec,
    samples: usize,
    curve_draws: usize,
    theta_samples: usize,
    seed: u64,
) -> Result<GenericBound> {
    if samples < 10_000 {
        return Err(Error::Precondition(format!("need at least 1e4 samples, got {samples}")));
    }
    let a = sample_region(first, samples, seed, 1)?;
    let b = sample_region(second, samples, seed, 2)?;
    for &xi in &a {
        if second.eval(xi) > 0.0 {
            return Err(Error::Transversality { xi, eta: xi });
        }
    }
    let grad = |xi: [f64; 2]| {
        let r = xi[0].hypot(xi[1]);
        let g = profile.gamma_d1(r) / r;
        [g * xi[0], g * xi[1]]
    };
    // pairing sample i with every sample of a thinned copy keeps this O(n sqrt n)
    let stride = ((samples as f64).sqrt() as usize).max(1);
    let mut theta = f64::INFINITY;
    let mut witness = (a[0], b[0]);
    for (i, &xi) in a.iter().enumerate() {
        let gx = grad(xi);
        for &eta in b.iter().skip(i % stride).step_by(stride) {
            let d = dist(gx, grad(eta));
            if d < theta {
                theta = d;
                witness = (xi, eta);
            }
        }
    }
    if !(theta > 0.0) {
        return Err(Error::Transversality { xi: witness.0, eta: witness.1 });
    }
    let (_, hi) = first.offset_support().unwrap_or((0.0, 0.0));
    let window = covering_window(&a);
    let mut l = 0.0f64;
    let mut rng = stream(seed, 3);
    for _ in 0..curve_draws {
        let xi = a[rng.gen_range(0..a.len())];
        let eta = b[rng.gen_range(0..b.len())];
        let xi0 = [xi[0] + eta[0], xi[1] + eta[1]];
        let tau0 = profile.gamma(xi[0].hypot(xi[1])) + profile.gamma(eta[0].hypot(eta[1]));
        let admissible = |z: [f64; 2]| first.eval(z) > 0.0 && second.eval([xi0[0] - z[0], xi0[1] - z[1]]) > 0.0;
        let problem = CurveProblem {
            profile,
            xi0,
            tau0,
            r_lo: (1.0 - hi).max(1e-9),
            r_hi: 1.0 + hi,
            windows: vec![window],
            theta_samples,
            admissible: &admissible,
        };
        let total: f64 = problem.march().iter().map(|p| p.length).sum();
        l = l.max(total);
    }
    Ok(GenericBound { theta, l, bound: (l / theta).sqrt(), theta_witness: witness })
}
