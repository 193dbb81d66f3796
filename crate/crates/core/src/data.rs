//! Seeded initial data on the lattice.
//!
//! Seeding rule: repetition `rep` of a run with root seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `rep`. Streams never
//! overlap, so results do not depend on how repetitions are scheduled.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::{Field, Rep, SpectralGrid};
use crate::symbol::SymbolSpec;

pub fn stream(root: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(rep);
    rng
}

/// How shell data is generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataRecipe {
    /// i.i.d. complex Gaussian coefficients, localized in space and re-projected.
    Random,
    /// The symbol itself as Fourier coefficients.
    RadialBump,
}

/// Unit-`L^2` datum whose Fourier transform is carried by `spec`.
///
/// The random recipe multiplies white noise by a Gaussian window of width
/// `window` in space (centered at the origin) before projecting, so the
/// datum lives on a region much smaller than the torus.
pub fn shell_datum(
    grid: SpectralGrid,
    spec: &SymbolSpec,
    recipe: DataRecipe,
    window: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Field> {
    let table = spec.tabulate(grid);
    let mut f = match recipe {
        DataRecipe::RadialBump => {
            let values = table.iter().map(|&s| Complex64::new(s, 0.0)).collect();
            Field::from_values(grid, Rep::Frequency, values)?
        }
        DataRecipe::Random => {
            let values = table
                .iter()
                .map(|&s| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Complex64::new(re, im) * s
                })
                .collect();
            let mut f = Field::from_values(grid, Rep::Frequency, values)?;
            f.make_space();
            let w2 = 2.0 * window * window;
            for (idx, z) in f.values.iter_mut().enumerate() {
                let x = centered(grid, idx);
                *z *= (-(x[0] * x[0] + x[1] * x[1]) / w2).exp();
            }
            f.make_frequency();
            f.multiply(&table);
            f
        }
    };
    let n = f.l2();
    if !(n > 0.0) {
        return Err(Error::Precondition(format!("{spec:?} has no lattice points on this grid")));
    }
    f.scale(Complex64::new(1.0 / n, 0.0));
    Ok(f)
}

/// Lattice position with coordinates folded into `[-pi L, pi L)`.
pub fn centered(grid: SpectralGrid, idx: usize) -> [f64; 2] {
    let period = std::f64::consts::TAU * grid.l;
    let x = grid.x(idx);
    let fold = |v: f64| if v >= period / 2.0 { v - period } else { v };
    [fold(x[0]), fold(x[1])]
}
