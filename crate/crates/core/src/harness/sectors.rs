//! Angular sector and radial sub-shell decompositions, and the pairing of
//! sectors forced by frequency conservation in quadrilinear terms.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::stream;
use crate::field::SpectralGrid;
use crate::symbol::{angle, SymbolSpec};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorReport {
    /// Lattice points checked (the origin is excluded).
    pub points: usize,
    /// Points where `sum_j Q_{m,j} != 1`.
    pub q_failures: usize,
    /// Points where `sum_i T_i != 1`.
    pub t_failures: usize,
    /// Lattice points carried by more than one sub-shell `R_k`.
    pub r_overlaps: usize,
    pub pairing: PairingReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairingReport {
    pub k: i32,
    pub k_small: i32,
    pub sectors: u32,
    pub draws: usize,
    /// Quadruples with `xi = xi1 + xi3 - xi2` landing in the `k` shell.
    pub nonvanishing: usize,
    /// Among those, quadruples with `xi1 + xi3` and `xi2 + xi` both far from zero.
    pub non_antipodal: usize,
    /// `max min(|i1 - i2|, |i1 - i|)` over non-antipodal quadruples.
    pub d_non_antipodal: u32,
    /// The same maximum over every nonvanishing quadruple.
    pub d_all: u32,
}

/// Sector index of `xi` among `n` equal angular sectors.
pub fn sector_of(xi: [f64; 2], n: u32) -> u32 {
    ((angle(xi) / TAU * n as f64).floor() as u32).min(n - 1)
}

/// Cyclic distance between sector indices.
pub fn cyclic(a: u32, b: u32, n: u32) -> u32 {
    let d = a.abs_diff(b) % n;
    d.min(n - d)
}

/// Sector count `4 * 2^{ceil(-k/2)}`, i.e. sectors of angular size `~2^{k/2}`.
pub fn sector_count(k: i32) -> u32 {
    4 * 2u32.pow(((-k).max(0) as u32).div_ceil(2))
}

/// Checks the exact partitions on every nonzero lattice frequency.
pub fn partition_check(grid: SpectralGrid, m: i32, sectors: u32, scale: i32) -> (usize, usize, usize, usize) {
    let q_count = 2i64.pow((-m) as u32);
    let mut points = 0;
    let mut q_fail = 0;
    let mut t_fail = 0;
    let mut r_over = 0;
    let w = 2f64.powi(scale);
    for idx in 0..grid.len() {
        let xi = grid.xi(idx);
        if xi == [0.0, 0.0] {
            continue;
        }
        points += 1;
        let q: f64 = (0..q_count).map(|j| SymbolSpec::QSector { m, j }.eval(xi)).sum();
        if q != 1.0 {
            q_fail += 1;
        }
        let t: f64 = (0..sectors).map(|i| SymbolSpec::TSector { sectors, i }.eval(xi)).sum();
        if t != 1.0 {
            t_fail += 1;
        }
        let d = xi[0].hypot(xi[1]) - 1.0;
        let base = (d / w).floor() as i64;
        let carried = (base - 1..=base + 1).filter(|&index| SymbolSpec::RSubshell { scale, index }.eval(xi) != 0.0).count();
        if carried != 1 {
            r_over += 1;
        }
    }
    (points, q_fail, t_fail, r_over)
}

/// Random quadruples `xi1, xi2, xi3` on shells below `k_small` and
/// `xi = xi1 + xi3 - xi2`; records how the sectors pair up when `xi` lands in
/// the `k` shell.
pub fn pairing_scan(k: i32, k_small: i32, sectors: u32, draws: usize, seed: u64) -> PairingReport {
    let mut rng = stream(seed, 0);
    let w_small = 0.75 * 2f64.powi(k_small);
    let (lo, hi) = (2f64.powi(k - 2), 2f64.powi(k + 2));
    let point = |rng: &mut rand_chacha::ChaCha8Rng| {
        let r = 1.0 + rng.gen_range(-w_small..w_small);
        let t = rng.gen_range(0.0..TAU);
        [r * t.cos(), r * t.sin()]
    };
    let mut rep = PairingReport {
        k,
        k_small,
        sectors,
        draws,
        nonvanishing: 0,
        non_antipodal: 0,
        d_non_antipodal: 0,
        d_all: 0,
    };
    for _ in 0..draws {
        let x1 = point(&mut rng);
        let x2 = point(&mut rng);
        let x3 = point(&mut rng);
        let xi = [x1[0] + x3[0] - x2[0], x1[1] + x3[1] - x2[1]];
        let off = (xi[0].hypot(xi[1]) - 1.0).abs();
        if !(off > lo && off < hi) {
            continue;
        }
        rep.nonvanishing += 1;
        let (i1, i2, i) = (sector_of(x1, sectors), sector_of(x2, sectors), sector_of(xi, sectors));
        let d = cyclic(i1, i2, sectors).min(cyclic(i1, i, sectors));
        rep.d_all = rep.d_all.max(d);
        let s = (x1[0] + x3[0]).hypot(x1[1] + x3[1]);
        // near-antipodal sums are only bounded by the k shell width
        if s > 4.0 * hi {
            rep.non_antipodal += 1;
            rep.d_non_antipodal = rep.d_non_antipodal.max(d);
        }
    }
    rep
}

pub fn sector_decomposition_check(grid: SpectralGrid, m: i32, k: i32, draws: usize, seed: u64) -> SectorReport {
    let sectors = sector_count(k);
    let (points, q_failures, t_failures, r_overlaps) = partition_check(grid, m, sectors, k - 2);
    let pairing = pairing_scan(k, k - 11, sectors, draws, seed);
    SectorReport { points, q_failures, t_failures, r_overlaps, pairing }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_are_exact() {
        let grid = SpectralGrid::new(64, 8.0).unwrap();
        let (points, q, t, r) = partition_check(grid, -3, 12, -4);
        assert_eq!(points, 64 * 64 - 1);
        assert_eq!((q, t, r), (0, 0, 0));
    }

    #[test]
    fn cyclic_distance() {
        assert_eq!(cyclic(0, 15, 16), 1);
        assert_eq!(cyclic(3, 11, 16), 8);
        assert_eq!(sector_of([1.0, -1e-9], 16), 15);
        assert_eq!(sector_count(-4), 16);
        assert_eq!(sector_count(-5), 32);
    }

    #[test]
    fn non_antipodal_quadruples_pair_up() {
        let rep = pairing_scan(-4, -15, sector_count(-4), 200_000, 1);
        assert!(rep.nonvanishing > 1000);
        assert!(rep.non_antipodal > 100);
        assert!(rep.d_non_antipodal <= 8, "{rep:?}");
    }
}
