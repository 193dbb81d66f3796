//! Doubly periodic grids and complex fields with the continuum-normalized
//! Fourier transform `f^(xi) = (2 pi)^-1 \int f(x) e^{-i x.xi} dx`.
//!
//! The torus has period `2 pi L` in each direction, so the dual lattice has
//! spacing `1/L`. Index `i` along an axis maps to frequency `i/L` for
//! `i < N/2` and `(i-N)/L` otherwise (FFT order). Storage is row-major with the
//! first coordinate as the slow index.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::Radial;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralGrid {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

impl SpectralGrid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("N must be a power of two, got {n}")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidGrid(format!("L must be positive, got {l}")));
        }
        if (n as f64) / (2.0 * l) < 2.0 {
            return Err(Error::InvalidGrid(format!(
                "N/(2L) = {} is below 2; the grid does not contain the annulus",
                n as f64 / (2.0 * l)
            )));
        }
        Ok(Self { n, l })
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Spatial mesh width `2 pi L / N`.
    pub fn dx(&self) -> f64 {
        2.0 * PI * self.l / self.n as f64
    }

    /// Area of one spatial cell.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dx()
    }

    /// Area of one frequency cell, `1/L^2`.
    pub fn freq_cell(&self) -> f64 {
        1.0 / (self.l * self.l)
    }

    /// Area of the torus `(2 pi L)^2`.
    pub fn area(&self) -> f64 {
        let p = 2.0 * PI * self.l;
        p * p
    }

    /// Signed lattice index for storage index `i`.
    pub fn signed_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Storage index for a signed lattice index.
    pub fn storage_index(&self, j: i64) -> usize {
        j.rem_euclid(self.n as i64) as usize
    }

    pub fn frequency(&self, i: usize) -> f64 {
        self.signed_index(i) as f64 / self.l
    }

    /// Frequency vector at flat index `idx`.
    pub fn xi(&self, idx: usize) -> [f64; 2] {
        [self.frequency(idx / self.n), self.frequency(idx % self.n)]
    }

    /// Space point at flat index `idx`, in `[0, 2 pi L)^2`.
    pub fn x(&self, idx: usize) -> [f64; 2] {
        let dx = self.dx();
        [(idx / self.n) as f64 * dx, (idx % self.n) as f64 * dx]
    }

    /// `|xi|` at every lattice point.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let x = self.xi(idx);
                x[0].hypot(x[1])
            })
            .collect()
    }

    /// Largest shell offset that the lattice can represent: shells need
    /// `2^(k-2) >= 2/L`.
    pub fn check_resolvable(&self, k: i32) -> Result<()> {
        if 2f64.powi(k - 2) < 2.0 / self.l {
            return Err(Error::Unresolvable { k, l: self.l });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Space,
    Frequency,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: SpectralGrid,
    pub rep: Rep,
    pub values: Vec<Complex64>,
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Arc<Plans>>> = RefCell::new(HashMap::new());
}

fn plans(n: usize) -> Arc<Plans> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Plans {
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    })
}

fn transpose(v: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            v.swap(i * n + j, j * n + i);
        }
    }
}

/// Unnormalized 2D DFT in place (`forward`: `e^{-i}` kernel).
pub fn fft2(v: &mut [Complex64], n: usize, forward: bool) {
    let p = plans(n);
    let fft = if forward { &p.forward } else { &p.inverse };
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(v, &mut scratch);
    transpose(v, n);
    fft.process_with_scratch(v, &mut scratch);
    transpose(v, n);
}

impl Field {
    pub fn zeros(grid: SpectralGrid, rep: Rep) -> Self {
        Self { grid, rep, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: SpectralGrid, rep: Rep, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, rep, values })
    }

    /// Frequency field from a function of `xi`.
    pub fn from_symbol(grid: SpectralGrid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.xi(idx))).collect();
        Self { grid, rep: Rep::Frequency, values }
    }

    /// Space field from a function of `x`.
    pub fn from_space_fn(grid: SpectralGrid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.x(idx))).collect();
        Self { grid, rep: Rep::Space, values }
    }

    fn expect(&self, rep: Rep) -> Result<()> {
        if self.rep != rep {
            return Err(Error::WrongRepresentation { expected: rep, found: self.rep });
        }
        Ok(())
    }

    pub fn to_frequency(&self) -> Result<Field> {
        self.expect(Rep::Space)?;
        let mut out = self.clone();
        out.make_frequency();
        Ok(out)
    }

    pub fn to_space(&self) -> Result<Field> {
        self.expect(Rep::Frequency)?;
        let mut out = self.clone();
        out.make_space();
        Ok(out)
    }

    /// In-place conversion to frequency representation (no-op if already there).
    pub fn make_frequency(&mut self) {
        if self.rep == Rep::Frequency {
            return;
        }
        fft2(&mut self.values, self.grid.n, true);
        let s = self.grid.cell_area() / (2.0 * PI);
        self.values.iter_mut().for_each(|z| *z *= s);
        self.rep = Rep::Frequency;
    }

    /// In-place conversion to space representation (no-op if already there).
    pub fn make_space(&mut self) {
        if self.rep == Rep::Space {
            return;
        }
        fft2(&mut self.values, self.grid.n, false);
        let s = 1.0 / (2.0 * PI * self.grid.l * self.grid.l);
        self.values.iter_mut().for_each(|z| *z *= s);
        self.rep = Rep::Space;
    }

    pub fn into_frequency(mut self) -> Field {
        self.make_frequency();
        self
    }

    pub fn into_space(mut self) -> Field {
        self.make_space();
        self
    }

    /// Multiplies the frequency representation pointwise by `m`.
    pub fn multiply(&mut self, m: &[f64]) {
        self.make_frequency();
        self.values.iter_mut().zip(m).for_each(|(z, &w)| *z *= w);
    }

    pub fn scale(&mut self, c: Complex64) {
        self.values.iter_mut().for_each(|z| *z *= c);
    }

    pub fn conj(&self) -> Field {
        // conj in space maps f^(xi) to conj(f^(-xi))
        let mut s = self.clone();
        s.make_space();
        s.values.iter_mut().for_each(|z| *z = z.conj());
        s
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field { grid: self.grid, rep: self.rep, values })
    }

    pub fn add_scaled(&mut self, other: &Field, c: Complex64) -> Result<()> {
        self.check_compatible(other)?;
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += c * b);
        Ok(())
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        other.expect(self.rep)
    }

    /// `(\int |f|^p dx)^(1/p)` with cell-area weights.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s = if self.rep == Rep::Space { self.clone() } else { self.clone().into_space() };
        let dx2 = self.grid.cell_area();
        if p.is_infinite() {
            return s.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        }
        (s.values.iter().map(|z| z.norm().powf(p)).sum::<f64>() * dx2).powf(1.0 / p)
    }

    /// `L^2` norm in whichever representation the field is held, exactly
    /// equal to the other side by Parseval.
    pub fn l2(&self) -> f64 {
        let w = match self.rep {
            Rep::Space => self.grid.cell_area(),
            Rep::Frequency => self.grid.freq_cell(),
        };
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    /// `L^2` distance between two fields in the same representation.
    pub fn l2_dist(&self, other: &Field) -> Result<f64> {
        self.check_compatible(other)?;
        let w = match self.rep {
            Rep::Space => self.grid.cell_area(),
            Rep::Frequency => self.grid.freq_cell(),
        };
        Ok((self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * w)
            .sqrt())
    }

    /// `<f, g> = \int f conj(g)`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_compatible(other)?;
        let w = match self.rep {
            Rep::Space => self.grid.cell_area(),
            Rep::Frequency => self.grid.freq_cell(),
        };
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum::<Complex64>() * w)
    }
}

/// Trapezoid weights for an increasing time grid. A single sample gets weight
/// `single`.
pub fn trapezoid_weights(times: &[f64], single: f64) -> Vec<f64> {
    let n = times.len();
    if n == 1 {
        return vec![single];
    }
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = times[i + 1] - times[i];
        w[i] += h / 2.0;
        w[i + 1] += h / 2.0;
    }
    w
}

/// Accumulates `\int\int |u|^p dx dt` snapshot by snapshot, so long
/// trajectories never need to be held in memory.
#[derive(Clone, Debug)]
pub struct SpacetimeAccumulator {
    p: f64,
    sum: f64,
}

impl SpacetimeAccumulator {
    pub fn new(p: f64) -> Self {
        Self { p, sum: 0.0 }
    }

    /// Adds `weight * \int |u|^p dx`, where `u` is in space representation.
    pub fn add(&mut self, u: &Field, weight: f64) -> Result<()> {
        u.expect(Rep::Space)?;
        let dx2 = u.grid.cell_area();
        let p = self.p;
        let s: f64 = if p == 2.0 {
            u.values.iter().map(|z| z.norm_sqr()).sum()
        } else if p == 4.0 {
            u.values.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum()
        } else {
            u.values.iter().map(|z| z.norm().powf(p)).sum()
        };
        self.sum += weight * s * dx2;
        Ok(())
    }

    pub fn add_raw(&mut self, integral: f64) {
        self.sum += integral;
    }

    pub fn norm(&self) -> f64 {
        self.sum.powf(1.0 / self.p)
    }

    pub fn power_sum(&self) -> f64 {
        self.sum
    }
}

/// Space-time `L^p` norm of a trajectory with the given time weights.
pub fn spacetime_norm(snapshots: &[Field], weights: &[f64], p: f64) -> Result<f64> {
    if snapshots.is_empty() {
        return Err(Error::EmptySeries);
    }
    if weights.len() != snapshots.len() {
        return Err(Error::MalformedSeries("weights and snapshots differ in length".into()));
    }
    let mut acc = SpacetimeAccumulator::new(p);
    for (u, &w) in snapshots.iter().zip(weights) {
        if u.rep == Rep::Space {
            acc.add(u, w)?;
        } else {
            acc.add(&u.clone().into_space(), w)?;
        }
    }
    Ok(acc.norm())
}

/// Exact linear flow `e^{i t h(D)}` on a fixed grid; the symbol is tabulated once.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub grid: SpectralGrid,
    h: Vec<f64>,
}

impl Propagator {
    pub fn new<P: Radial + ?Sized>(profile: &P, grid: SpectralGrid) -> Self {
        let h = grid.radii().into_iter().map(|r| profile.gamma(r)).collect();
        Self { grid, h }
    }

    /// Tabulated `h(xi)` values.
    pub fn symbol(&self) -> &[f64] {
        &self.h
    }

    /// Applies `e^{i t h}` in place; the field is left in frequency representation.
    pub fn apply(&self, f: &mut Field, t: f64) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        f.make_frequency();
        if t == 0.0 {
            return Ok(());
        }
        f.values
            .iter_mut()
            .zip(&self.h)
            .for_each(|(z, &h)| *z *= Complex64::from_polar(1.0, t * h));
        Ok(())
    }

    /// Applies `e^{i t h}` only at the listed indices; the rest is untouched.
    pub fn apply_on(&self, values: &mut [Complex64], support: &[usize], t: f64) {
        for &i in support {
            values[i] *= Complex64::from_polar(1.0, t * self.h[i]);
        }
    }

    pub fn propagate(&self, f: &Field, t: f64) -> Result<Field> {
        let mut g = f.clone();
        self.apply(&mut g, t)?;
        Ok(g)
    }
}

/// One-shot `e^{i t h(D)} f`.
pub fn propagate<P: Radial + ?Sized>(profile: &P, f: &Field, t: f64) -> Result<Field> {
    Propagator::new(profile, f.grid).propagate(f, t)
}

/// Frequency values on a fixed subset of lattice points; everything else is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseField {
    pub grid: SpectralGrid,
    pub support: Arc<Vec<usize>>,
    pub values: Vec<Complex64>,
}

impl SparseField {
    pub fn zeros(grid: SpectralGrid, support: Arc<Vec<usize>>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); support.len()];
        Self { grid, support, values }
    }

    /// Restriction of a field to `support`.
    pub fn gather(f: &Field, support: Arc<Vec<usize>>) -> Self {
        let mut g = f.clone();
        g.make_frequency();
        let values = support.iter().map(|&i| g.values[i]).collect();
        Self { grid: f.grid, support, values }
    }

    /// Dense frequency field.
    pub fn scatter(&self) -> Field {
        let mut f = Field::zeros(self.grid, Rep::Frequency);
        for (&i, &v) in self.support.iter().zip(&self.values) {
            f.values[i] = v;
        }
        f
    }

    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.freq_cell()).sqrt()
    }

    fn same_support(&self, other: &SparseField) -> bool {
        self.grid == other.grid && (Arc::ptr_eq(&self.support, &other.support) || self.support == other.support)
    }

    pub fn l2_dist(&self, other: &SparseField) -> Result<f64> {
        if !self.same_support(other) {
            return Err(Error::GridMismatch);
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.freq_cell()).sqrt())
    }

    pub fn sub(&self, other: &SparseField) -> Result<SparseField> {
        if !self.same_support(other) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(SparseField { grid: self.grid, support: self.support.clone(), values })
    }

    pub fn add_scaled(&mut self, other: &SparseField, c: Complex64) {
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += c * b);
    }

    /// Applies `e^{i t h}` using a propagator on the same grid.
    pub fn propagate(&mut self, prop: &Propagator, t: f64) {
        if t != 0.0 {
            for (z, &i) in self.values.iter_mut().zip(self.support.iter()) {
                *z *= Complex64::from_polar(1.0, t * prop.h[i]);
            }
        }
    }

    /// Pointwise multiplication by a tabulated full-grid symbol.
    pub fn multiply(&mut self, table: &[f64]) {
        for (z, &i) in self.values.iter_mut().zip(self.support.iter()) {
            *z *= table[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::DispersionProfile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: SpectralGrid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values =
            (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        Field::from_values(grid, Rep::Space, values).unwrap()
    }

    fn grid() -> SpectralGrid {
        SpectralGrid::new(64, 8.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(SpectralGrid::new(100, 8.0).is_err());
        assert!(SpectralGrid::new(64, 32.0).is_err());
        assert!(SpectralGrid::new(64, 16.0).is_ok());
        let g = SpectralGrid::new(1024, 128.0).unwrap();
        assert!(g.check_resolvable(-4).is_ok());
        assert!(matches!(g.check_resolvable(-5), Err(Error::Unresolvable { k: -5, .. })));
    }

    #[test]
    fn frequencies_in_fft_order() {
        let g = grid();
        assert_eq!(g.frequency(0), 0.0);
        assert_eq!(g.frequency(1), 1.0 / 8.0);
        assert_eq!(g.frequency(63), -1.0 / 8.0);
        assert_eq!(g.frequency(32), -4.0);
        assert_eq!(g.storage_index(-1), 63);
    }

    #[test]
    fn point_mass_has_flat_spectrum() {
        let g = grid();
        let mut f = Field::zeros(g, Rep::Space);
        f.values[5 * 64 + 9] = Complex64::new(1.0, 0.0);
        let fh = f.to_frequency().unwrap();
        let m0 = fh.values[0].norm();
        assert!((m0 - g.cell_area() / (2.0 * PI)).abs() < 1e-15);
        assert!(fh.values.iter().all(|z| (z.norm() - m0).abs() < 1e-14));
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = grid();
        let f = random_field(g, 1);
        let fh = f.to_frequency().unwrap();
        let back = fh.to_space().unwrap();
        let scale = f.l2();
        assert!(back.l2_dist(&f).unwrap() <= 1e-12 * scale);
        assert!((fh.l2() - f.l2()).abs() <= 1e-12 * scale);
        assert!((f.lp_norm(2.0) - fh.l2()).abs() <= 1e-12 * scale);
    }

    #[test]
    fn wrong_representation_is_rejected() {
        let g = grid();
        let f = Field::zeros(g, Rep::Frequency);
        assert!(matches!(
            f.to_frequency(),
            Err(Error::WrongRepresentation { expected: Rep::Space, found: Rep::Frequency })
        ));
        assert!(f.to_space().is_ok());
    }

    #[test]
    fn plane_wave_lands_on_one_lattice_point() {
        let g = grid();
        let (a, b) = (3i64, -5i64);
        let f = Field::from_space_fn(g, |x| {
            Complex64::from_polar(1.0, (a as f64 * x[0] + b as f64 * x[1]) / g.l)
        });
        let fh = f.into_frequency();
        let idx = g.storage_index(a) * g.n + g.storage_index(b);
        for (i, z) in fh.values.iter().enumerate() {
            if i == idx {
                // (2 pi)^-1 * area of the torus
                assert!((z.re - g.area() / (2.0 * PI)).abs() < 1e-9);
            } else {
                assert!(z.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_field_norm() {
        let g = grid();
        let c = Complex64::new(0.6, -0.8) * 2.0;
        let f = Field::from_values(g, Rep::Space, vec![c; g.len()]).unwrap();
        assert!((f.lp_norm(2.0) - 2.0 * g.area().sqrt()).abs() < 1e-10);
    }

    #[test]
    fn single_snapshot_spacetime_norm() {
        let g = grid();
        let f = random_field(g, 3);
        let dt = 0.37;
        for p in [2.0, 3.0, 4.0] {
            let st = spacetime_norm(std::slice::from_ref(&f), &trapezoid_weights(&[0.0], dt), p).unwrap();
            assert!((st - dt.powf(1.0 / p) * f.lp_norm(p)).abs() < 1e-12 * st);
        }
        assert!(matches!(spacetime_norm(&[], &[], 2.0), Err(Error::EmptySeries)));
    }

    #[test]
    fn trapezoid_weights_sum_to_duration() {
        let t: Vec<f64> = (0..11).map(|i| i as f64 * 0.25).collect();
        let w = trapezoid_weights(&t, 1.0);
        assert!((w.iter().sum::<f64>() - 2.5).abs() < 1e-15);
        assert_eq!(w[0], 0.125);
    }

    #[test]
    fn propagate_unitary_and_group_law() {
        let g = grid();
        let p = DispersionProfile::model(1, 0.6, -5).unwrap();
        let prop = Propagator::new(&p, g);
        let f = random_field(g, 5).into_frequency();
        assert_eq!(prop.propagate(&f, 0.0).unwrap(), f);
        let big = prop.propagate(&f, 1e3).unwrap();
        assert!((big.l2() - f.l2()).abs() <= 1e-12 * f.l2());
        let a = prop.propagate(&prop.propagate(&f, 1.3).unwrap(), -4.1).unwrap();
        let b = prop.propagate(&f, 1.3 - 4.1).unwrap();
        assert!(a.l2_dist(&b).unwrap() <= 1e-10 * f.l2());
    }
}
