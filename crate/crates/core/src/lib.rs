//! Numerical laboratory for a dispersive equation whose radial dispersion
//! relation degenerates on the unit circle.

pub mod bessel;
pub mod cutoff;
pub mod data;
pub mod error;
pub mod field;
pub mod fit;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod profile;
pub mod quadrature;
pub mod radial;
pub mod solver;
pub mod symbol;
pub mod variation;

pub use error::{Error, Result};
pub use field::{Field, Propagator, Rep, SpectralGrid};
pub use fit::FitResult;
pub use profile::{DispersionProfile, ProfileKind, Radial};
pub use symbol::SymbolSpec;
