//! Fixtures shared by the criterion benches.

use pekar_core::minimizer::{initial_state, InitStrategy};
use pekar_core::slater::density;
use pekar_core::{Grid3, RealField, SlaterState};

/// Centered `n`-electron start on an `m³` grid with spacing `h`.
pub fn centered_state(n: usize, m: usize, h: f64) -> SlaterState {
    let grid = Grid3::cubic(m, h).expect("valid grid");
    initial_state(n, &grid, 1, &InitStrategy::StackedCenter).expect("valid state")
}

pub fn centered_density(m: usize, h: f64) -> RealField {
    density(&centered_state(2, m, h))
}
