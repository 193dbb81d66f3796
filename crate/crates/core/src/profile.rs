//! Radial dispersion relations `h(xi) = gamma(|xi|)`, the null multiplier, and
//! the standing-assumption checks (transversality and finite-order degeneracy on
//! the unit circle).

use serde::{Deserialize, Serialize};

use crate::cutoff::chi;
use crate::error::{Error, Result};

/// Anything that provides `gamma` and its first two derivatives.
///
/// [`DispersionProfile`] is the production implementation; tests inject
/// adversarial profiles through this trait.
pub trait Radial: Sync {
    fn gamma(&self, r: f64) -> f64;
    fn gamma_d1(&self, r: f64) -> f64;
    fn gamma_d2(&self, r: f64) -> f64;
    fn beta(&self) -> u32;
    fn delta(&self) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `gamma(r) = r + |r-1|^(beta+2) / ((beta+1)(beta+2))`.
    Model,
    /// Deep-water gravity-capillary relation, rescaled so that the degenerate
    /// circle sits at radius 1.
    GravityCapillary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionProfile {
    pub kind: ProfileKind,
    pub beta: u32,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: i32,
    #[serde(default)]
    pub params: Vec<f64>,
}

/// Precomputed constants of the rescaled gravity-capillary relation.
#[derive(Clone, Copy, Debug)]
struct GravityCapillary {
    g: f64,
    sigma: f64,
    r_star: f64,
    lambda_star: f64,
}

impl GravityCapillary {
    fn new(g: f64, sigma: f64) -> Self {
        // Lambda(s)^2 = g s + sigma s^3; Lambda'' vanishes where
        // 3 sigma^2 s^4 + 6 g sigma s^2 - g^2 = 0.
        let s2 = g * (2.0 / 3f64.sqrt() - 1.0) / sigma;
        let r_star = s2.sqrt();
        let lambda_star = (g * r_star + sigma * r_star.powi(3)).sqrt();
        Self { g, sigma, r_star, lambda_star }
    }

    fn lambda(&self, s: f64) -> (f64, f64, f64) {
        let p = self.g * s + self.sigma * s * s * s;
        let dp = self.g + 3.0 * self.sigma * s * s;
        let lam = p.sqrt();
        let d1 = dp / (2.0 * lam);
        let num = 3.0 * self.sigma * self.sigma * s.powi(4) + 6.0 * self.g * self.sigma * s * s
            - self.g * self.g;
        let d2 = num / (4.0 * lam * lam * lam);
        (lam, d1, d2)
    }
}

impl DispersionProfile {
    pub fn model(beta: u32, delta: f64, m: i32) -> Result<Self> {
        let p = Self { kind: ProfileKind::Model, beta, delta, m, params: Vec::new() };
        p.validate()?;
        Ok(p)
    }

    pub fn gravity_capillary(delta: f64, m: i32) -> Result<Self> {
        let p = Self {
            kind: ProfileKind::GravityCapillary,
            beta: 1,
            delta,
            m,
            params: vec![1.0, 1.0],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta < 1 {
            return Err(Error::Precondition(format!("beta must be >= 1, got {}", self.beta)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Precondition(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        match self.kind {
            ProfileKind::Model => {
                if !self.params.is_empty() {
                    return Err(Error::Precondition("model profile takes no params".into()));
                }
            }
            ProfileKind::GravityCapillary => {
                if self.beta != 1 {
                    return Err(Error::Precondition(
                        "gravity-capillary profile has beta = 1".into(),
                    ));
                }
                if !(self.params.is_empty() || self.params.len() == 2) {
                    return Err(Error::Precondition(
                        "gravity-capillary params must be [g, sigma]".into(),
                    ));
                }
                if self.params.iter().any(|&x| !(x > 0.0)) {
                    return Err(Error::Precondition("g and sigma must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Checks the constraints the null multiplier and the nonlinearity place on `M`.
    pub fn check_m(&self, m: i32) -> Result<()> {
        if m > -3 {
            return Err(Error::Precondition(format!("M must be <= -3, got {m}")));
        }
        if 2f64.powi(m + 4) >= self.delta {
            return Err(Error::Precondition(format!(
                "2^(M+4) = {} must be below delta = {}",
                2f64.powi(m + 4),
                self.delta
            )));
        }
        Ok(())
    }

    fn gc(&self) -> GravityCapillary {
        let (g, s) = match self.params.as_slice() {
            [g, s] => (*g, *s),
            _ => (1.0, 1.0),
        };
        GravityCapillary::new(g, s)
    }

    /// Returns `gamma`, `gamma'` or `gamma''` at `r`.
    pub fn gamma_eval(&self, r: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        if self.kind == ProfileKind::GravityCapillary && !(r > 0.0) {
            return Err(Error::Domain(format!("gravity-capillary profile needs r > 0, got {r}")));
        }
        if r < 0.0 {
            return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
        }
        Ok(match order {
            0 => self.gamma(r),
            1 => self.gamma_d1(r),
            _ => self.gamma_d2(r),
        })
    }

    /// `h(xi) = gamma(|xi|)`.
    pub fn h(&self, xi: [f64; 2]) -> f64 {
        self.gamma(xi[0].hypot(xi[1]))
    }

    /// `grad h(xi) = gamma'(|xi|) xi/|xi|`, zero at the origin by convention.
    pub fn grad_h(&self, xi: [f64; 2]) -> [f64; 2] {
        let r = xi[0].hypot(xi[1]);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let g1 = self.gamma_d1(r);
        [g1 * xi[0] / r, g1 * xi[1] / r]
    }

    /// The null multiplier `A(xi) = ||xi|-1|^(beta/2) chi(2^(1-M)(|xi|-1))`.
    pub fn null_symbol(&self, m: i32, xi: [f64; 2]) -> Result<f64> {
        self.check_m(m)?;
        Ok(null_symbol_radial(self.beta, m, xi[0].hypot(xi[1])))
    }

    /// Gaussian curvature of the graph `tau = h(xi)`; diagnostic only.
    pub fn curvature_weight(&self, xi: [f64; 2]) -> f64 {
        let r = xi[0].hypot(xi[1]);
        if r == 0.0 {
            return 0.0;
        }
        let g1 = self.gamma_d1(r);
        let g2 = self.gamma_d2(r);
        g1 * g2 / (r * (1.0 + g1 * g1).powi(2))
    }
}

/// Radial form of the null multiplier; `m` is assumed validated.
pub fn null_symbol_radial(beta: u32, m: i32, r: f64) -> f64 {
    let d = r - 1.0;
    let c = chi(2f64.powi(1 - m) * d);
    if c == 0.0 {
        return 0.0;
    }
    d.abs().powf(beta as f64 / 2.0) * c
}

impl Radial for DispersionProfile {
    fn gamma(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Model => {
                let b = self.beta as f64;
                r + (r - 1.0).abs().powf(b + 2.0) / ((b + 1.0) * (b + 2.0))
            }
            ProfileKind::GravityCapillary => {
                let gc = self.gc();
                gc.lambda(gc.r_star * r.max(0.0)).0 / gc.lambda_star
            }
        }
    }

    fn gamma_d1(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Model => {
                let b = self.beta as f64;
                let d = r - 1.0;
                1.0 + d.signum() * d.abs().powf(b + 1.0) / (b + 1.0)
            }
            ProfileKind::GravityCapillary => {
                let gc = self.gc();
                gc.r_star * gc.lambda(gc.r_star * r).1 / gc.lambda_star
            }
        }
    }

    fn gamma_d2(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Model => (r - 1.0).abs().powi(self.beta as i32),
            ProfileKind::GravityCapillary => {
                let gc = self.gc();
                gc.r_star * gc.r_star * gc.lambda(gc.r_star * r).2 / gc.lambda_star
            }
        }
    }

    fn beta(&self) -> u32 {
        self.beta
    }

    fn delta(&self) -> f64 {
        self.delta
    }
}

/// Settings for [`check_assumptions`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub samples: usize,
    /// Smallest dyadic index included in the comparison sweep.
    pub k_min: i32,
    /// Largest `k2`; usually `M + 1`.
    pub k_max: i32,
    /// Outer radius exponent of the `r2` range, usually `M + 3`.
    pub outer_exp: i32,
    /// Separation `k2 - k1` at which `|gamma''(r1)| <= |gamma''(r2)| / 3` must hold.
    pub gap: i32,
}

impl AssumptionCheck {
    pub fn for_profile(profile: &DispersionProfile, samples: usize) -> Self {
        Self {
            samples,
            k_min: profile.m - 16,
            k_max: profile.m + 1,
            outer_exp: profile.m + 3,
            gap: 6,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AssumptionFailure {
    pub check: String,
    pub r: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub pass: bool,
    pub transversality_pass: bool,
    pub degeneracy_pass: bool,
    pub comparison_pass: bool,
    pub gamma1_min: f64,
    pub gamma1_max: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Smallest `min|gamma''(r2)| / (3 max|gamma''(r1)|)` over dyadic pairs.
    pub comparison_margin: f64,
    pub failures: Vec<AssumptionFailure>,
}

fn signed_offsets(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).flat_map(move |i| {
        let s = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        [s, -s]
    })
}

/// Samples the annulus `(1-delta, 1+delta)` and reports on the standing
/// assumptions. Failures are carried in the report, never raised.
pub fn check_assumptions<P: Radial + ?Sized>(profile: &P, cfg: &AssumptionCheck) -> AssumptionReport {
    let samples = cfg.samples.max(100);
    let delta = profile.delta();
    let beta = profile.beta() as i32;
    let mut failures = Vec::new();

    let mut g1_min = f64::INFINITY;
    let mut g1_max = 0.0f64;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = 0.0f64;
    for i in 0..samples {
        // midpoints avoid r = 1 exactly
        let r = 1.0 - delta + 2.0 * delta * (i as f64 + 0.5) / samples as f64;
        let g1 = profile.gamma_d1(r).abs();
        g1_min = g1_min.min(g1);
        g1_max = g1_max.max(g1);
        if !(0.5..=1.5).contains(&g1) && failures.len() < 32 {
            failures.push(AssumptionFailure { check: "transversality".into(), r, value: g1 });
        }
        let d = (r - 1.0).abs();
        if d > 0.0 {
            let ratio = profile.gamma_d2(r).abs() / d.powi(beta);
            ratio_min = ratio_min.min(ratio);
            ratio_max = ratio_max.max(ratio);
            if !(1.0 / 3.0..=3.0).contains(&ratio) && failures.len() < 32 {
                failures.push(AssumptionFailure { check: "degeneracy".into(), r, value: ratio });
            }
        }
    }
    let transversality_pass = g1_min >= 0.5 && g1_max <= 1.5;
    let degeneracy_pass = ratio_min >= 1.0 / 3.0 && ratio_max <= 3.0;

    let outer = 2f64.powi(cfg.outer_exp).min(delta);
    let mut margin = f64::INFINITY;
    let mut comparison_pass = true;
    for k2 in cfg.k_min + cfg.gap..=cfg.k_max {
        let lo2 = 2f64.powi(k2 - 2);
        if lo2 >= outer {
            continue;
        }
        // min |gamma''| over 2^(k2-2) <= |r2-1| <= 2^(M+3)
        let mut min2 = f64::INFINITY;
        let mut at2 = 1.0;
        for s in signed_offsets(lo2, outer, samples) {
            let v = profile.gamma_d2(1.0 + s).abs();
            if v < min2 {
                min2 = v;
                at2 = 1.0 + s;
            }
        }
        for k1 in cfg.k_min..=k2 - cfg.gap {
            let hi1 = 2f64.powi(k1 + 2).min(delta);
            let mut max1 = 0.0f64;
            let mut at1 = 1.0;
            for s in signed_offsets(0.0, hi1, samples) {
                let v = profile.gamma_d2(1.0 + s).abs();
                if v > max1 {
                    max1 = v;
                    at1 = 1.0 + s;
                }
            }
            let m = if max1 > 0.0 { min2 / (3.0 * max1) } else { f64::INFINITY };
            margin = margin.min(m);
            if m < 1.0 {
                comparison_pass = false;
                if failures.len() < 32 {
                    failures.push(AssumptionFailure {
                        check: format!("comparison(k1={k1},k2={k2})"),
                        r: at1,
                        value: max1,
                    });
                    failures.push(AssumptionFailure {
                        check: format!("comparison(k1={k1},k2={k2}) partner"),
                        r: at2,
                        value: min2,
                    });
                }
            }
        }
    }

    AssumptionReport {
        pass: transversality_pass && degeneracy_pass && comparison_pass,
        transversality_pass,
        degeneracy_pass,
        comparison_pass,
        gamma1_min: g1_min,
        gamma1_max: g1_max,
        ratio_min,
        ratio_max,
        comparison_margin: margin,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(beta: u32) -> DispersionProfile {
        DispersionProfile::model(beta, 0.6, -5).unwrap()
    }

    #[test]
    fn gamma_closed_form_values() {
        let p = model(1);
        assert_eq!(p.gamma_eval(1.0, 0).unwrap(), 1.0);
        assert_eq!(p.gamma_eval(1.0, 2).unwrap(), 0.0);
        let v = p.gamma_eval(1.25, 0).unwrap();
        assert!((v - (1.25 + 0.25f64.powi(3) / 6.0)).abs() < 1e-15);
        assert!((v - 1.252_604_166_666_666_7).abs() < 1e-15);
        assert!(matches!(p.gamma_eval(1.0, 3), Err(Error::UnsupportedOrder(3))));
    }

    #[test]
    fn gravity_capillary_domain_and_normalization() {
        let p = DispersionProfile::gravity_capillary(0.5, -6).unwrap();
        assert!(matches!(p.gamma_eval(0.0, 0), Err(Error::Domain(_))));
        assert!(matches!(p.gamma_eval(-1.0, 1), Err(Error::Domain(_))));
        assert!((p.gamma_eval(1.0, 0).unwrap() - 1.0).abs() < 1e-14);
        // degenerate circle normalized to radius one
        assert!(p.gamma_eval(1.0, 2).unwrap().abs() < 1e-13);
        assert!(p.gamma_eval(1.1, 2).unwrap() > 0.0);
        assert!(p.gamma_eval(0.9, 2).unwrap() < 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let step = 1e-5;
        for p in [model(1), model(2), model(3), DispersionProfile::gravity_capillary(0.5, -6).unwrap()] {
            for i in 0..200 {
                // midpoints: for beta = 1, gamma'' has a kink at r = 1
                let r = 0.5 + (i as f64 + 0.5) / 200.0;
                let fd1 = (p.gamma(r + step) - p.gamma(r - step)) / (2.0 * step);
                let d1 = p.gamma_d1(r);
                assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1.0), "{:?} r={r}", p.kind);
                let fd2 = (p.gamma_d1(r + step) - p.gamma_d1(r - step)) / (2.0 * step);
                let d2 = p.gamma_d2(r);
                assert!((fd2 - d2).abs() <= 1e-6 * d2.abs().max(1.0), "{:?} r={r}", p.kind);
            }
        }
    }

    #[test]
    fn model_degeneracy_ratio_is_exactly_one() {
        for beta in 1..=4 {
            let p = model(beta);
            for i in 0..1000 {
                let r = 0.41 + i as f64 * 1e-3;
                if r == 1.0 {
                    continue;
                }
                let ratio = p.gamma_d2(r) / (r - 1.0).abs().powi(beta as i32);
                assert!((ratio - 1.0).abs() < 1e-12, "beta={beta} r={r} ratio={ratio}");
            }
        }
    }

    #[test]
    fn h_and_grad_h_examples() {
        let p = model(1);
        assert_eq!(p.h([1.0, 0.0]), 1.0);
        assert_eq!(p.grad_h([1.0, 0.0]), [1.0, 0.0]);
        let g = p.grad_h([0.0, 1.25]);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - (1.0 + 0.25f64.powi(2) / 2.0)).abs() < 1e-15);
        assert_eq!(p.grad_h([0.0, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn grad_h_matches_central_differences() {
        let p = model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let step = 1e-6;
        for _ in 0..100 {
            let r: f64 = rng.gen_range(0.3..1.8);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let xi = [r * th.cos(), r * th.sin()];
            let g = p.grad_h(xi);
            let fx = (p.h([xi[0] + step, xi[1]]) - p.h([xi[0] - step, xi[1]])) / (2.0 * step);
            let fy = (p.h([xi[0], xi[1] + step]) - p.h([xi[0], xi[1] - step])) / (2.0 * step);
            assert!((g[0] - fx).abs() <= 1e-6 && (g[1] - fy).abs() <= 1e-6);
        }
    }

    #[test]
    fn grad_h_rotation_equivariant() {
        let p = model(1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let xi = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (s, c) = a.sin_cos();
            let rot = |v: [f64; 2]| [c * v[0] - s * v[1], s * v[0] + c * v[1]];
            let lhs = p.grad_h(rot(xi));
            let rhs = rot(p.grad_h(xi));
            assert!((lhs[0] - rhs[0]).abs() < 1e-12 && (lhs[1] - rhs[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn null_symbol_examples_and_support() {
        let p = DispersionProfile::model(2, 0.6, -5).unwrap();
        let m = -5;
        assert_eq!(p.null_symbol(m, [1.0, 0.0]).unwrap(), 0.0);
        let edge = 1.0 + 2f64.powi(m - 1);
        assert_eq!(p.null_symbol(m, [0.0, edge]).unwrap(), 0.0);
        let v = p.null_symbol(m, [1.0 + 2f64.powi(-7), 0.0]).unwrap();
        assert_eq!(v, 2f64.powi(-7));
        // identically zero outside ||xi|-1| < 2^(M-1)
        for i in 0..4000 {
            let r = 0.5 + i as f64 / 4000.0;
            let a = p.null_symbol(m, [r, 0.0]).unwrap();
            if (r - 1.0).abs() >= 2f64.powi(m - 1) {
                assert_eq!(a, 0.0);
            }
            assert!(a <= (r - 1.0).abs().powf(1.0) + 1e-15);
        }
    }

    #[test]
    fn null_symbol_precondition() {
        let p = DispersionProfile::model(1, 0.6, -5).unwrap();
        assert!(matches!(p.null_symbol(-4, [1.0, 0.0]), Err(Error::Precondition(_))));
        assert!(matches!(p.null_symbol(-2, [1.0, 0.0]), Err(Error::Precondition(_))));
        assert!(p.null_symbol(-5, [1.0, 0.0]).is_ok());
    }

    #[test]
    fn curvature_weight_sign_and_zero_set() {
        let p = model(1);
        assert_eq!(p.curvature_weight([1.0, 0.0]), 0.0);
        assert!(p.curvature_weight([1.25, 0.0]) > 0.0);
        for i in 0..2001 {
            let r = 1.0 - p.delta + 2.0 * p.delta * i as f64 / 2000.0;
            let k = p.curvature_weight([0.0, r]);
            if (r - 1.0).abs() > 1e-12 {
                assert!(k != 0.0, "r={r}");
            }
        }
    }

    #[test]
    fn model_profiles_pass_assumptions() {
        for beta in 1..=4 {
            let p = model(beta);
            let rep = check_assumptions(&p, &AssumptionCheck::for_profile(&p, 400));
            assert!(rep.pass, "beta={beta}: {:?}", rep.failures);
            assert!((rep.ratio_min - 1.0).abs() < 1e-12 && (rep.ratio_max - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_annulus_keeps_transversality() {
        let p = DispersionProfile::model(1, 0.9, -5).unwrap();
        let rep = check_assumptions(&p, &AssumptionCheck::for_profile(&p, 1000));
        assert!(rep.transversality_pass);
        assert!(rep.gamma1_max - 1.0 <= 0.81 / 2.0 + 1e-12);
    }

    struct Oscillating;

    impl Radial for Oscillating {
        fn gamma(&self, r: f64) -> f64 {
            r
        }
        fn gamma_d1(&self, _r: f64) -> f64 {
            1.0
        }
        fn gamma_d2(&self, r: f64) -> f64 {
            let d = r - 1.0;
            if d == 0.0 {
                return 0.0;
            }
            d.abs() * (2.0 + (1.0 / d).sin())
        }
        fn beta(&self) -> u32 {
            1
        }
        fn delta(&self) -> f64 {
            0.6
        }
    }

    #[test]
    fn oscillating_second_derivative_fails_comparison() {
        let cfg = AssumptionCheck { samples: 2000, k_min: -20, k_max: -4, outer_exp: -2, gap: 6 };
        let rep = check_assumptions(&Oscillating, &cfg);
        assert!(rep.degeneracy_pass && rep.transversality_pass);
        assert!(!rep.comparison_pass);
        assert!(!rep.pass);
        assert!(rep.failures.iter().any(|f| f.check.starts_with("comparison")));
        // the exact model passes the same sweep
        let p = model(1);
        assert!(check_assumptions(&p, &cfg).comparison_pass);
    }
}
