//! Discrete `V^p` variation norms, their flow-adapted versions and the dyadic
//! `Y^0` square function.
//!
//! Partitions are restricted to sample times and always end with the drop to
//! zero at infinity, so a single sample `v` has norm `|v|`. `U^p` norms (an
//! infimum over atomic decompositions) are not computed; `V^2` and `Y^0`
//! serve as the computable proxies.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, Propagator, SparseField};
use crate::profile::Radial;
use crate::symbol::SymbolSpec;

/// Anything with a norm and a distance.
pub trait Snapshot: Clone {
    fn norm(&self) -> f64;
    fn dist(&self, other: &Self) -> f64;
}

impl Snapshot for f64 {
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl Snapshot for Complex64 {
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

impl Snapshot for Field {
    fn norm(&self) -> f64 {
        self.l2()
    }
    fn dist(&self, other: &Self) -> f64 {
        match self.l2_dist(other) {
            Ok(d) => d,
            Err(_) => {
                let a = self.clone().into_frequency();
                let b = other.clone().into_frequency();
                a.l2_dist(&b).unwrap_or(f64::NAN)
            }
        }
    }
}

impl Snapshot for SparseField {
    fn norm(&self) -> f64 {
        self.l2()
    }
    fn dist(&self, other: &Self) -> f64 {
        self.l2_dist(other).unwrap_or(f64::NAN)
    }
}

/// Snapshots that can be moved along the linear flow and projected.
pub trait FlowSnapshot: Snapshot {
    /// `e^{i t h(D)}` applied to the snapshot.
    fn flowed(&self, prop: &Propagator, t: f64) -> Self;
    /// Frequency multiplication by a tabulated symbol.
    fn projected(&self, table: &[f64]) -> Self;
}

impl FlowSnapshot for Field {
    fn flowed(&self, prop: &Propagator, t: f64) -> Self {
        let mut g = self.clone();
        prop.apply(&mut g, t).expect("snapshot grid differs from propagator grid");
        g
    }
    fn projected(&self, table: &[f64]) -> Self {
        let mut g = self.clone();
        g.multiply(table);
        g
    }
}

impl FlowSnapshot for SparseField {
    fn flowed(&self, prop: &Propagator, t: f64) -> Self {
        let mut g = self.clone();
        g.propagate(prop, t);
        g
    }
    fn projected(&self, table: &[f64]) -> Self {
        let mut g = self.clone();
        g.multiply(table);
        g
    }
}

#[derive(Clone, Debug)]
pub struct TimeSeries<T> {
    pub times: Vec<f64>,
    pub snapshots: Vec<T>,
}

impl<T> TimeSeries<T> {
    pub fn new(times: Vec<f64>, snapshots: Vec<T>) -> Result<Self> {
        if times.len() != snapshots.len() {
            return Err(Error::MalformedSeries(format!(
                "{} times but {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::EmptySeries);
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::MalformedSeries("times must be strictly increasing".into()));
        }
        Ok(Self { times, snapshots })
    }

    /// Scalar-mode helper with times `0, 1, 2, ...`.
    pub fn indexed(snapshots: Vec<T>) -> Result<Self> {
        let times = (0..snapshots.len()).map(|i| i as f64).collect();
        Self::new(times, snapshots)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> TimeSeries<U> {
        TimeSeries { times: self.times.clone(), snapshots: self.snapshots.iter().map(f).collect() }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Precondition(format!("p must lie in (1, inf), got {p}")));
    }
    Ok(())
}

/// Increment and endpoint powers, plus the largest base they were raised from.
fn increments<T: Snapshot>(v: &[T], p: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let n = v.len();
    let mut base = 0.0f64;
    let mut inc = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = v[i].dist(&v[j]);
            base = base.max(d);
            inc[i * n + j] = d.powf(p);
        }
    }
    let drop = v
        .iter()
        .map(|x| {
            let m = x.norm();
            base = base.max(m);
            m.powf(p)
        })
        .collect();
    (inc, drop, base)
}

/// Exact `V^p` norm over partitions drawn from the sample times, in `O(n^2)`.
pub fn vp_norm<T: Snapshot>(s: &TimeSeries<T>, p: f64) -> Result<f64> {
    check_p(p)?;
    let v = &s.snapshots;
    let n = v.len();
    if n == 0 {
        return Err(Error::EmptySeries);
    }
    let (inc, drop, base) = increments(v, p);
    // best[i]: largest increment sum over chains ending at sample i
    let mut best = vec![0.0f64; n];
    for i in 0..n {
        let mut b = 0.0f64;
        for j in 0..i {
            let c = best[j] + inc[i * n + j];
            if c > b {
                b = c;
            }
        }
        best[i] = b;
    }
    let total = (0..n).map(|i| best[i] + drop[i]).fold(0.0f64, f64::max);
    finish(total, p, base)
}

/// `total^(1/p)`, rooted relative to `base` so a single dominant term comes back exactly.
fn finish(total: f64, p: f64, base: f64) -> Result<f64> {
    let v = if base > 0.0 { base * (total / base.powf(p)).powf(1.0 / p) } else { total.powf(1.0 / p) };
    if !v.is_finite() {
        return Err(Error::Overflow(format!("variation sum {total} is not finite")));
    }
    Ok(v)
}

/// Exhaustive maximum over every nonempty subsequence; the oracle for [`vp_norm`].
pub fn vp_norm_bruteforce<T: Snapshot>(s: &TimeSeries<T>, p: f64) -> Result<f64> {
    check_p(p)?;
    let v = &s.snapshots;
    let n = v.len();
    if n == 0 {
        return Err(Error::EmptySeries);
    }
    if n > 14 {
        return Err(Error::SeriesTooLong(n));
    }
    let (inc, drop, base) = increments(v, p);
    let mut total = 0.0f64;
    for mask in 1u32..(1u32 << n) {
        let mut sum = 0.0f64;
        let mut prev: Option<usize> = None;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                if let Some(j) = prev {
                    sum += inc[i * n + j];
                }
                prev = Some(i);
            }
        }
        let last = prev.expect("nonempty mask");
        let c = sum + drop[last];
        if c > total {
            total = c;
        }
    }
    finish(total, p, base)
}

/// `V^p` norm of `e^{-i t h(D)} u(t)`.
pub fn vp_flow_norm<T: FlowSnapshot>(prop: &Propagator, s: &TimeSeries<T>, p: f64) -> Result<f64> {
    let pulled = pull_back(prop, s);
    vp_norm(&pulled, p)
}

/// `e^{-i t_k h(D)}` applied to each snapshot.
pub fn pull_back<T: FlowSnapshot>(prop: &Propagator, s: &TimeSeries<T>) -> TimeSeries<T> {
    TimeSeries {
        times: s.times.clone(),
        snapshots: s.times.iter().zip(&s.snapshots).map(|(&t, u)| u.flowed(prop, -t)).collect(),
    }
}

/// One CSV row of a norm computation; `k` is empty for unlocalized norms.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VpRow {
    pub series_id: String,
    pub p: f64,
    pub k: Option<i32>,
    pub norm: f64,
    pub method: String,
}

/// Seeded scalar series with lengths uniform in `1..=max_len` and values
/// uniform in `[-3, 3)`.
pub fn random_series(seed: u64, count: usize, max_len: usize) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut rng = crate::data::stream(seed, 0);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_len.max(1));
            (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()
        })
        .collect()
}

/// Shells used by the `Y^0` sum: `P_{<=k_min}`, `P_k` for `k_min < k < 0`, and `P_0`.
pub fn y0_shells(k_min: i32) -> Vec<SymbolSpec> {
    let mut v = vec![SymbolSpec::ChiLeqK { k: k_min }];
    for k in k_min + 1..=0 {
        v.push(SymbolSpec::PK { k });
    }
    v
}

/// Per-shell breakdown of the `Y^0` proxy.
#[derive(Clone, Debug)]
pub struct Y0Report {
    pub total: f64,
    pub shells: Vec<(String, f64)>,
}

/// `(sum over shells of ||P u||_{V^2_h}^2)^(1/2)`.
pub fn y0_norm<T: FlowSnapshot>(prop: &Propagator, s: &TimeSeries<T>, k_min: i32) -> Result<Y0Report> {
    prop.grid.check_resolvable(k_min)?;
    let pulled = pull_back(prop, s);
    let mut total = 0.0;
    let mut shells = Vec::new();
    for spec in y0_shells(k_min) {
        let table = spec.tabulate(prop.grid);
        let shell = pulled.map(|u| u.projected(&table));
        let v = vp_norm(&shell, 2.0)?;
        total += v * v;
        shells.push((format!("{spec:?}"), v));
    }
    Ok(Y0Report { total: total.sqrt(), shells })
}

/// Convenience: builds a propagator and evaluates the flow norm of full fields.
pub fn vp_flow_norm_profile<P: Radial + ?Sized>(profile: &P, s: &TimeSeries<Field>, p: f64) -> Result<f64> {
    let grid = s.snapshots.first().ok_or(Error::EmptySeries)?.grid;
    vp_flow_norm(&Propagator::new(profile, grid), s, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Rep, SpectralGrid};
    use crate::profile::DispersionProfile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_snapshot_is_its_norm() {
        let s = TimeSeries::indexed(vec![-2.5f64]).unwrap();
        assert_eq!(vp_norm(&s, 2.0).unwrap(), 2.5);
        assert_eq!(vp_norm(&s, 3.0).unwrap(), 2.5);
    }

    #[test]
    fn worked_examples() {
        let s = TimeSeries::indexed(vec![3.0f64, 1.0]).unwrap();
        assert_eq!(vp_norm(&s, 2.0).unwrap(), 3.0);
        assert_eq!(vp_norm_bruteforce(&s, 2.0).unwrap(), 3.0);
        let r = TimeSeries::indexed(vec![1.0f64, 3.0]).unwrap();
        assert!((vp_norm(&r, 2.0).unwrap() - 13f64.sqrt()).abs() <= 4.0 * f64::EPSILON * 13f64.sqrt());
        let c = TimeSeries::indexed(vec![0.7f64; 6]).unwrap();
        assert_eq!(vp_norm(&c, 2.0).unwrap(), 0.7);
        assert_eq!(vp_norm_bruteforce(&c, 3.0).unwrap(), 0.7);
    }

    #[test]
    fn oracle_limits_and_errors() {
        let long = TimeSeries::indexed(vec![1.0f64; 15]).unwrap();
        assert!(matches!(vp_norm_bruteforce(&long, 2.0), Err(Error::SeriesTooLong(15))));
        let s = TimeSeries::indexed(vec![1.0f64]).unwrap();
        assert!(vp_norm(&s, 1.0).is_err());
        assert!(matches!(TimeSeries::<f64>::indexed(vec![]), Err(Error::EmptySeries)));
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn dp_equals_oracle_exactly_on_random_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.gen_range(1..=12);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let s = TimeSeries::indexed(v).unwrap();
            for p in [2.0, 3.0] {
                assert_eq!(vp_norm(&s, p).unwrap(), vp_norm_bruteforce(&s, p).unwrap());
            }
            assert!(vp_norm(&s, 3.0).unwrap() <= vp_norm(&s, 2.0).unwrap());
        }
    }

    #[test]
    fn unimodular_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<Complex64> = (0..10).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let s = TimeSeries::indexed(v.clone()).unwrap();
        let c = Complex64::from_polar(1.0, 0.83);
        let rot = TimeSeries::indexed(v.iter().map(|z| z * c).collect()).unwrap();
        let a = vp_norm(&s, 2.0).unwrap();
        let b = vp_norm(&rot, 2.0).unwrap();
        assert!((a - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn free_wave_has_constant_flow_norm() {
        let grid = SpectralGrid::new(64, 8.0).unwrap();
        let p = DispersionProfile::model(1, 0.6, -5).unwrap();
        let prop = Propagator::new(&p, grid);
        let u0 = Field::from_symbol(grid, |xi| {
            let d = xi[0].hypot(xi[1]) - 1.0;
            Complex64::new((-d * d * 20.0).exp(), 0.0)
        });
        let times: Vec<f64> = (0..9).map(|i| i as f64 * 0.7).collect();
        let snaps: Vec<Field> = times.iter().map(|&t| prop.propagate(&u0, t).unwrap()).collect();
        let s = TimeSeries::new(times, snaps).unwrap();
        let flow = vp_flow_norm(&prop, &s, 2.0).unwrap();
        assert!((flow - u0.l2()).abs() < 1e-12 * u0.l2());
        assert!(vp_norm(&s, 2.0).unwrap() >= flow);
        let y = y0_norm(&prop, &s, 0).unwrap();
        assert!(y.total >= u0.l2() / 2.0);
        let zero = s.map(|f| Field::zeros(f.grid, Rep::Frequency));
        assert_eq!(y0_norm(&prop, &zero, 0).unwrap().total, 0.0);
    }
}
