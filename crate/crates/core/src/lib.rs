//! Fermionic Pekar-Tomasevich energies on uniform 3-D grids, together with the
//! constructive pieces of the strong-coupling lower bound: localization weights
//! and ball merging, phonon block modes, a truncated Fock-space oracle, and the
//! error-budget and binding arithmetic.

pub mod bounds;
pub mod error;
pub mod fock;
pub mod grid;
pub mod io;
pub mod localization;
pub mod minimizer;
pub mod phonon;
pub mod pt;
pub mod quad;
pub mod slater;

pub use error::{Error, Result};
pub use grid::{ComplexField, Grid3, RealField, VectorPotential};
pub use pt::{EnergyBreakdown, PtParams};
pub use slater::{SlaterState, SpinOrbital};

pub use num_complex::Complex64 as C64;
