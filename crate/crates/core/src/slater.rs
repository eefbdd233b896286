//! Spinor orbitals, Slater determinants and their one-body densities.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{dot_complex, ComplexField, Grid3, RealField};

/// Maximum allowed `max |G - I|` for a [`SlaterState`].
pub const GRAM_TOL: f64 = 1e-8;
/// Largest state [`evaluate_determinant`] accepts.
pub const DETERMINANT_MAX_N: usize = 6;
const DEPENDENT_CONDITION: f64 = 1e12;

/// A two-component spinor orbital.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinOrbital {
    pub up: ComplexField,
    pub down: ComplexField,
}

impl SpinOrbital {
    pub fn new(up: ComplexField, down: ComplexField) -> Result<Self> {
        if up.grid() != down.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { up, down })
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self {
            up: ComplexField::zeros(grid),
            down: ComplexField::zeros(grid),
        }
    }

    pub fn spin_up(f: ComplexField) -> Self {
        let down = ComplexField::zeros(*f.grid());
        Self { up: f, down }
    }

    pub fn spin_down(f: ComplexField) -> Self {
        let up = ComplexField::zeros(*f.grid());
        Self { up, down: f }
    }

    pub fn grid(&self) -> &Grid3 {
        self.up.grid()
    }

    pub fn component(&self, s: usize) -> &ComplexField {
        if s == 0 {
            &self.up
        } else {
            &self.down
        }
    }

    pub fn component_mut(&mut self, s: usize) -> &mut ComplexField {
        if s == 0 {
            &mut self.up
        } else {
            &mut self.down
        }
    }

    /// Time-reversed partner `(-conj(down), conj(up))`; its spinor inner
    /// product with `self` vanishes pointwise.
    pub fn spin_flipped(&self) -> SpinOrbital {
        SpinOrbital {
            up: self.down.map(|z| -z.conj()),
            down: self.up.map(|z| z.conj()),
        }
    }

    pub fn embedded(&self, target: Grid3) -> Result<SpinOrbital> {
        Ok(SpinOrbital {
            up: self.up.embedded(target)?,
            down: self.down.embedded(target)?,
        })
    }

    /// Spinor inner product, conjugate-linear in `self`.
    pub fn inner(&self, other: &SpinOrbital) -> C64 {
        (dot_complex(self.up.values(), other.up.values())
            + dot_complex(self.down.values(), other.down.values()))
            * self.grid().cell_volume()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    /// `self += a · x`.
    pub fn axpy(&mut self, a: C64, x: &SpinOrbital) {
        for s in 0..2 {
            for (y, v) in self.component_mut(s).values_mut().iter_mut().zip(x.component(s).values()) {
                *y += a * v;
            }
        }
    }

    pub fn scale(&mut self, a: C64) {
        for s in 0..2 {
            self.component_mut(s).values_mut().iter_mut().for_each(|v| *v *= a);
        }
    }

    /// `|φ_up|² + |φ_down|²` added into `rho`.
    pub fn add_density(&self, rho: &mut [f64]) {
        for s in 0..2 {
            for (r, v) in rho.iter_mut().zip(self.component(s).values()) {
                *r += v.norm_sqr();
            }
        }
    }

    /// Pair density `Σ_s conj(self_s) other_s` per grid point.
    pub fn pair_density(&self, other: &SpinOrbital) -> Vec<C64> {
        let mut out: Vec<C64> = self
            .up
            .values()
            .iter()
            .zip(other.up.values())
            .map(|(a, b)| a.conj() * b)
            .collect();
        for (o, (a, b)) in out.iter_mut().zip(self.down.values().iter().zip(other.down.values())) {
            *o += a.conj() * b;
        }
        out
    }

    /// Periodic trilinear interpolation; exact on grid points.
    pub fn value_at(&self, x: [f64; 3]) -> [C64; 2] {
        [sample(&self.up, x), sample(&self.down, x)]
    }
}

fn sample(f: &ComplexField, x: [f64; 3]) -> C64 {
    let g = f.grid();
    let dims = g.dims();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let t = x[a] / g.spacing() + (dims[a] / 2) as f64;
        let fl = t.floor();
        frac[a] = t - fl;
        base[a] = (fl as i64).rem_euclid(dims[a] as i64) as usize;
    }
    let mut acc = C64::default();
    for corner in 0..8 {
        let mut w = 1.0;
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let bit = (corner >> a) & 1;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            ijk[a] = (base[a] + bit) % dims[a];
        }
        if w != 0.0 {
            acc += f.values()[g.index(ijk[0], ijk[1], ijk[2])] * w;
        }
    }
    acc
}

/// `N ≥ 1` orthonormal spinor orbitals on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SlaterState {
    orbitals: Vec<SpinOrbital>,
}

impl SlaterState {
    /// Validates grid agreement and orthonormality.
    pub fn new(orbitals: Vec<SpinOrbital>) -> Result<Self> {
        check_orbitals(&orbitals)?;
        let dev = gram_deviation(&gram(&orbitals));
        if dev > GRAM_TOL {
            return Err(Error::GramViolation { deviation: dev });
        }
        Ok(Self { orbitals })
    }

    pub(crate) fn new_unchecked(orbitals: Vec<SpinOrbital>) -> Self {
        Self { orbitals }
    }

    pub fn n(&self) -> usize {
        self.orbitals.len()
    }

    pub fn grid(&self) -> &Grid3 {
        self.orbitals[0].grid()
    }

    pub fn orbitals(&self) -> &[SpinOrbital] {
        &self.orbitals
    }

    pub fn into_orbitals(self) -> Vec<SpinOrbital> {
        self.orbitals
    }

    pub fn gram(&self) -> DMatrix<C64> {
        gram(&self.orbitals)
    }

    /// `φ'_i = Σ_j u_ji φ_j`; stays a determinant of the same state when `u`
    /// is unitary.
    pub fn mixed(&self, u: &DMatrix<C64>) -> Result<SlaterState> {
        if u.nrows() != self.n() || u.ncols() != self.n() {
            return Err(Error::param("u", format!("expected a {0}×{0} matrix", self.n())));
        }
        SlaterState::new(combine(&self.orbitals, u))
    }
}

fn check_orbitals(orbitals: &[SpinOrbital]) -> Result<()> {
    let Some(first) = orbitals.first() else {
        return Err(Error::param("orbitals", "need at least one orbital"));
    };
    let g = first.grid();
    if orbitals.iter().any(|o| o.up.grid() != g || o.down.grid() != g) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `G_ij = ⟨φ_i, φ_j⟩`.
pub fn gram(orbitals: &[SpinOrbital]) -> DMatrix<C64> {
    let n = orbitals.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = orbitals[i].inner(&orbitals[j]);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        g[(i, i)] = C64::new(g[(i, i)].re, 0.0);
    }
    g
}

pub fn gram_deviation(g: &DMatrix<C64>) -> f64 {
    let n = g.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// `out_i = Σ_j coeffs_ji · orbitals_j`.
pub fn combine(orbitals: &[SpinOrbital], coeffs: &DMatrix<C64>) -> Vec<SpinOrbital> {
    let grid = *orbitals[0].grid();
    (0..coeffs.ncols())
        .map(|i| {
            let mut out = SpinOrbital::zeros(grid);
            for (j, o) in orbitals.iter().enumerate() {
                let c = coeffs[(j, i)];
                if c != C64::default() {
                    out.axpy(c, o);
                }
            }
            out
        })
        .collect()
}

/// Symmetric (Löwdin) orthonormalization `Φ S^{-1/2}`.
pub fn orthonormalize(orbitals: Vec<SpinOrbital>) -> Result<SlaterState> {
    check_orbitals(&orbitals)?;
    let s = gram(&orbitals);
    if gram_deviation(&s) == 0.0 {
        return Ok(SlaterState { orbitals });
    }
    let x = inverse_sqrt(&s)?;
    let out = SlaterState::new_unchecked(combine(&orbitals, &x));
    let dev = gram_deviation(&out.gram());
    if dev > GRAM_TOL {
        return Err(Error::DependentOrbitals { condition: f64::INFINITY });
    }
    Ok(out)
}

/// `S^{-1/2}` of a Hermitian positive definite matrix.
pub fn inverse_sqrt(s: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let eig = s.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || max / min > DEPENDENT_CONDITION {
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(Error::DependentOrbitals { condition });
    }
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0)));
    Ok(v * d * v.adjoint())
}

/// One-body density `Σ_i |φ_i|²`.
pub fn density(state: &SlaterState) -> RealField {
    let grid = *state.grid();
    let mut rho = vec![0.0; grid.len()];
    for o in state.orbitals() {
        o.add_density(&mut rho);
    }
    RealField::from_vec(grid, rho).expect("density length matches grid")
}

/// Spin amplitudes of `det[φ_j(x_i)] / √N!` at the positions `xs`.
///
/// Entry `s` of the result has electron `i` in spin `(s >> (N-1-i)) & 1`
/// (0 = up). Orbital values off the grid are interpolated trilinearly.
pub fn evaluate_determinant(state: &SlaterState, xs: &[[f64; 3]]) -> Result<Vec<C64>> {
    let n = state.n();
    if n > DETERMINANT_MAX_N {
        return Err(Error::SizeLimit {
            what: "determinant orbitals",
            got: n,
            limit: DETERMINANT_MAX_N,
        });
    }
    if xs.len() != n {
        return Err(Error::param("positions", format!("expected {n} positions, got {}", xs.len())));
    }
    // values[i][j] = φ_j(x_i) as a spinor
    let values: Vec<Vec<[C64; 2]>> = xs
        .iter()
        .map(|&x| state.orbitals().iter().map(|o| o.value_at(x)).collect())
        .collect();
    let norm = 1.0 / (1..=n).map(|k| k as f64).product::<f64>().sqrt();
    Ok((0..1usize << n)
        .map(|s| {
            let m = DMatrix::from_fn(n, n, |i, j| values[i][j][(s >> (n - 1 - i)) & 1]);
            m.determinant() * norm
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid3, c: [f64; 3], w: f64) -> ComplexField {
        let mut f = ComplexField::from_fn(grid, |x| {
            let r2: f64 = (0..3).map(|a| (x[a] - c[a]).powi(2)).sum();
            C64::new((-r2 / (2.0 * w * w)).exp(), 0.0)
        });
        let n = f.norm_sqr().sqrt();
        f.scale(1.0 / n);
        f
    }

    fn grid() -> Grid3 {
        Grid3::cubic(16, 0.5).unwrap()
    }

    #[test]
    fn orthonormal_input_is_unchanged() {
        let g = grid();
        let a = SpinOrbital::spin_up(gaussian(g, [0.0; 3], 1.0));
        let b = SpinOrbital::spin_down(gaussian(g, [0.5, 0.0, 0.0], 1.2));
        let s = orthonormalize(vec![a.clone(), b.clone()]).unwrap();
        for (o, r) in s.orbitals().iter().zip([&a, &b]) {
            for sp in 0..2 {
                for (x, y) in o.component(sp).values().iter().zip(r.component(sp).values()) {
                    assert!((x - y).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn identical_orbitals_are_dependent() {
        let a = SpinOrbital::spin_up(gaussian(grid(), [0.0; 3], 1.0));
        assert!(matches!(
            orthonormalize(vec![a.clone(), a]),
            Err(Error::DependentOrbitals { .. })
        ));
    }

    #[test]
    fn lowdin_two_gaussians_matches_closed_form() {
        let g = grid();
        let a = SpinOrbital::spin_up(gaussian(g, [-0.5, 0.0, 0.0], 1.0));
        let b = SpinOrbital::spin_up(gaussian(g, [0.5, 0.0, 0.0], 1.0));
        let s = a.inner(&b).re;
        let st = orthonormalize(vec![a.clone(), b.clone()]).unwrap();
        assert!(gram_deviation(&st.gram()) < 1e-12);
        // for real overlap s the symmetric combination has c± = ((1+s)^-½ ± (1-s)^-½)/2
        let cp = 0.5 * ((1.0 + s).powf(-0.5) + (1.0 - s).powf(-0.5));
        let cm = 0.5 * ((1.0 + s).powf(-0.5) - (1.0 - s).powf(-0.5));
        for idx in (0..g.len()).step_by(97) {
            let expect = cp * a.up.values()[idx] + cm * b.up.values()[idx];
            assert!((st.orbitals()[0].up.values()[idx] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn non_orthonormal_state_rejected() {
        let a = SpinOrbital::spin_up(gaussian(grid(), [0.0; 3], 1.0));
        let mut b = a.clone();
        b.scale(C64::new(2.0, 0.0));
        assert!(matches!(SlaterState::new(vec![b]), Err(Error::GramViolation { .. })));
    }

    #[test]
    fn single_orbital_determinant_is_orbital() {
        let g = grid();
        let a = SpinOrbital::new(gaussian(g, [0.0; 3], 1.0), gaussian(g, [0.5; 3], 0.8)).unwrap();
        let mut a = a;
        a.scale(C64::new(0.5f64.sqrt(), 0.0));
        let st = SlaterState::new_unchecked(vec![a.clone()]);
        let x = g.coords(g.index(7, 9, 8));
        let amp = evaluate_determinant(&st, &[x]).unwrap();
        let v = a.value_at(x);
        assert!((amp[0] - v[0]).norm() < 1e-14 && (amp[1] - v[1]).norm() < 1e-14);
    }

    #[test]
    fn determinant_size_limit() {
        let g = grid();
        let orbs = (0..7).map(|i| SpinOrbital::spin_up(gaussian(g, [i as f64 * 0.1, 0.0, 0.0], 1.0))).collect();
        let st = SlaterState::new_unchecked(orbs);
        let xs = vec![[0.0; 3]; 7];
        assert!(matches!(evaluate_determinant(&st, &xs), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn interpolation_exact_on_grid() {
        let g = grid();
        let a = SpinOrbital::spin_up(gaussian(g, [0.3, 0.0, 0.0], 1.0));
        let idx = g.index(3, 11, 5);
        assert_eq!(a.value_at(g.coords(idx))[0], a.up.values()[idx]);
    }
}
