//! Fourier multipliers: dyadic shells around the unit circle, angular sectors,
//! radial sub-shells and the null multiplier.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cutoff::chi;
use crate::error::Result;
use crate::field::{Field, SpectralGrid};
use crate::profile::null_symbol_radial;

/// Custom symbol closure.
pub type SymbolFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum SymbolSpec {
    /// `P_{<=k}(xi) = chi(2^-k (|xi|-1))`.
    ChiLeqK { k: i32 },
    /// `P_k = P_{<=k} - P_{<=k-1}` for `k < 0`; `P_0 = 1 - P_{<=-1}`.
    PK { k: i32 },
    /// Outer half of `P_k`.
    PKPlus { k: i32 },
    /// Inner half of `P_k`.
    PKMinus { k: i32 },
    /// `P_{lo <= . <= hi} = P_{<=hi} - P_{<=lo-1}`.
    PRange { lo: i32, hi: i32 },
    /// Indicator of the angle range `[2 pi j 2^m, 2 pi (j+1) 2^m)`.
    QSector { m: i32, j: i64 },
    /// Indicator of `index 2^scale <= |xi|-1 < (index+1) 2^scale`.
    RSubshell { scale: i32, index: i64 },
    /// Indicator of the angle range `[2 pi i/N, 2 pi (i+1)/N)`.
    TSector { sectors: u32, i: u32 },
    /// Null multiplier `||xi|-1|^(beta/2) chi(2^(1-M)(|xi|-1))`.
    NullA { beta: u32, m: i32 },
    /// Pointwise product of symbols.
    Product { factors: Vec<SymbolSpec> },
    #[serde(skip)]
    Custom(SymbolFn),
}

impl std::fmt::Debug for SymbolSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::ChiLeqK { k } => write!(f, "ChiLeqK({k})"),
            Self::PK { k } => write!(f, "PK({k})"),
            Self::PKPlus { k } => write!(f, "PKPlus({k})"),
            Self::PKMinus { k } => write!(f, "PKMinus({k})"),
            Self::PRange { lo, hi } => write!(f, "PRange({lo},{hi})"),
            Self::QSector { m, j } => write!(f, "QSector({m},{j})"),
            Self::RSubshell { scale, index } => write!(f, "RSubshell({scale},{index})"),
            Self::TSector { sectors, i } => write!(f, "TSector({sectors},{i})"),
            Self::NullA { beta, m } => write!(f, "NullA({beta},{m})"),
            Self::Product { factors } => f.debug_list().entries(factors).finish(),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Polar angle in `[0, 2 pi)`.
pub fn angle(xi: [f64; 2]) -> f64 {
    let a = xi[1].atan2(xi[0]);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

fn leq(k: i32, r: f64) -> f64 {
    chi(2f64.powi(-k) * (r - 1.0))
}

fn shell(k: i32, r: f64) -> f64 {
    if k >= 0 {
        1.0 - leq(-1, r)
    } else {
        leq(k, r) - leq(k - 1, r)
    }
}

fn sector_index(a: f64, count: f64) -> i64 {
    // angle a in [0, 2 pi); guard against a*count/2pi rounding up to count
    let s = (a / TAU * count).floor() as i64;
    s.min(count as i64 - 1)
}

impl SymbolSpec {
    pub fn eval(&self, xi: [f64; 2]) -> f64 {
        let r = xi[0].hypot(xi[1]);
        match self {
            Self::ChiLeqK { k } => leq(*k, r),
            Self::PK { k } => shell(*k, r),
            Self::PKPlus { k } => {
                if r > 1.0 {
                    shell(*k, r)
                } else {
                    0.0
                }
            }
            Self::PKMinus { k } => {
                if r < 1.0 {
                    shell(*k, r)
                } else {
                    0.0
                }
            }
            Self::PRange { lo, hi } => leq(*hi, r) - leq(lo - 1, r),
            Self::QSector { m, j } => {
                if r == 0.0 {
                    return 0.0;
                }
                let count = 2f64.powi(-m);
                f64::from(u8::from(sector_index(angle(xi), count) == *j))
            }
            Self::RSubshell { scale, index } => {
                let w = 2f64.powi(*scale);
                let d = r - 1.0;
                let lo = *index as f64 * w;
                f64::from(u8::from(lo <= d && d < lo + w))
            }
            Self::TSector { sectors, i } => {
                if r == 0.0 {
                    return 0.0;
                }
                f64::from(u8::from(sector_index(angle(xi), *sectors as f64) == *i as i64))
            }
            Self::NullA { beta, m } => null_symbol_radial(*beta, *m, r),
            Self::Product { factors } => factors.iter().map(|s| s.eval(xi)).product(),
            Self::Custom(f) => f(xi),
        }
    }

    /// Radial interval `[lo, hi]` of `||xi| - 1|` outside of which the symbol
    /// vanishes, when known.
    pub fn offset_support(&self) -> Option<(f64, f64)> {
        match self {
            Self::ChiLeqK { k } => Some((0.0, 0.75 * 2f64.powi(*k))),
            Self::PK { k } | Self::PKPlus { k } | Self::PKMinus { k } => {
                if *k >= 0 {
                    Some((0.25, f64::INFINITY))
                } else {
                    Some((0.5 * 2f64.powi(k - 1), 0.75 * 2f64.powi(*k)))
                }
            }
            Self::PRange { lo, hi } => Some((0.5 * 2f64.powi(lo - 1), 0.75 * 2f64.powi(*hi))),
            Self::NullA { m, .. } => Some((0.0, 0.375 * 2f64.powi(*m))),
            Self::RSubshell { scale, index } => {
                let w = 2f64.powi(*scale);
                let a = *index as f64 * w;
                let b = a + w;
                if a <= 0.0 && b >= 0.0 {
                    Some((0.0, a.abs().max(b.abs())))
                } else {
                    Some((a.abs().min(b.abs()), a.abs().max(b.abs())))
                }
            }
            Self::Product { factors } => {
                let mut lo = 0.0f64;
                let mut hi = f64::INFINITY;
                for f in factors {
                    if let Some((a, b)) = f.offset_support() {
                        lo = lo.max(a);
                        hi = hi.min(b);
                    }
                }
                Some((lo, hi))
            }
            _ => None,
        }
    }

    /// Tabulates the symbol on the lattice.
    pub fn tabulate(&self, grid: SpectralGrid) -> Vec<f64> {
        (0..grid.len()).map(|idx| self.eval(grid.xi(idx))).collect()
    }
}

/// Multiplies a field by a symbol in frequency space.
pub fn apply_symbol(s: &SymbolSpec, f: &Field) -> Result<Field> {
    let mut g = f.clone();
    g.make_frequency();
    for (idx, z) in g.values.iter_mut().enumerate() {
        *z *= s.eval(f.grid.xi(idx));
    }
    Ok(g)
}

/// Lattice indices where a tabulated symbol is nonzero.
pub fn support_indices(table: &[f64]) -> Vec<usize> {
    table.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, _)| i).collect()
}
