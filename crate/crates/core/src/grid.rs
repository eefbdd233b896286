//! Uniform periodic 3-D grids, sampled fields and their spectral calculus.
//!
//! Grid point `(i, j, k)` sits at `((i - n0/2) h, (j - n1/2) h, (k - n2/2) h)`,
//! so the origin is always a grid point and the box is centered on it. Values
//! are stored row-major with the last axis contiguous.
//!
//! Derivatives are spectral. The Coulomb convolution uses the spherically
//! truncated kernel `1/|x| 1{|x| < R_c}` with `R_c` half of the shortest box
//! side; its Fourier multiplier `4π (1 - cos(|k| R_c)) / |k|²` is finite at
//! `k = 0` (value `2π R_c²`) and nonnegative everywhere.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64 as C64;
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative mass allowed outside the isolation ball before
/// [`coulomb_convolve`] reports a support overflow.
pub const ISOLATION_TOL: f64 = 1e-4;

/// Smallest number of points allowed along any axis.
pub const MIN_POINTS_PER_AXIS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    dims: [usize; 3],
    spacing: f64,
}

impl Grid3 {
    pub fn new(dims: [usize; 3], spacing: f64) -> Result<Self> {
        if let Some(d) = dims.iter().find(|&&d| d < MIN_POINTS_PER_AXIS) {
            return Err(Error::InvalidGrid(format!(
                "{d} points along an axis, need at least {MIN_POINTS_PER_AXIS}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {spacing} must be positive")));
        }
        Ok(Self { dims, spacing })
    }

    pub fn cubic(n: usize, spacing: f64) -> Result<Self> {
        Self::new([n; 3], spacing)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn box_lengths(&self) -> [f64; 3] {
        self.dims.map(|d| d as f64 * self.spacing)
    }

    /// Quadrature weight of one grid point.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// Radius of the spherical Coulomb truncation.
    pub fn truncation_radius(&self) -> f64 {
        self.box_lengths().into_iter().fold(f64::INFINITY, f64::min) / 2.0
    }

    /// Same point counts, different spacing.
    pub fn with_spacing(&self, spacing: f64) -> Result<Self> {
        Self::new(self.dims, spacing)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let j = (idx / self.dims[2]) % self.dims[1];
        let i = idx / (self.dims[1] * self.dims[2]);
        [i, j, k]
    }

    #[inline]
    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        (i as f64 - (self.dims[axis] / 2) as f64) * self.spacing
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.dims[axis]).map(|i| self.axis_coord(axis, i)).collect()
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(idx);
        [self.axis_coord(0, i), self.axis_coord(1, j), self.axis_coord(2, k)]
    }

    /// Flat index of the grid point at the origin.
    pub fn origin_index(&self) -> usize {
        self.index(self.dims[0] / 2, self.dims[1] / 2, self.dims[2] / 2)
    }

    /// Angular wavenumbers of the discrete Fourier modes along one axis, in
    /// FFT order. The Nyquist mode (even counts) carries `-π/h`.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.dims[axis];
        let dk = 2.0 * PI / (n as f64 * self.spacing);
        (0..n)
            .map(|i| {
                let m = if i <= (n - 1) / 2 { i as i64 } else { i as i64 - n as i64 };
                m as f64 * dk
            })
            .collect()
    }

    fn key(&self) -> ([usize; 3], u64) {
        (self.dims, self.spacing.to_bits())
    }
}

/// Values sampled on every point of a [`Grid3`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid3,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<C64>;

impl<T: Copy + Default> Field<T> {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            values: vec![T::default(); grid.len()],
        }
    }

    pub fn from_vec(grid: Grid3, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> T) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.coords(idx))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copies the values into a larger grid of the same spacing so that the
    /// origin maps to the origin; new points are zero.
    pub fn embedded(&self, target: Grid3) -> Result<Self> {
        let src = self.grid.dims;
        let dst = target.dims;
        if target.spacing != self.grid.spacing || (0..3).any(|d| dst[d] < src[d]) {
            return Err(Error::GridMismatch);
        }
        let off = [0, 1, 2].map(|d| dst[d] / 2 - src[d] / 2);
        let mut out = vec![T::default(); target.len()];
        for i in 0..src[0] {
            for j in 0..src[1] {
                let a = self.grid.index(i, j, 0);
                let b = target.index(i + off[0], j + off[1], off[2]);
                out[b..b + src[2]].copy_from_slice(&self.values[a..a + src[2]]);
            }
        }
        Ok(Self { grid: target, values: out })
    }

    /// Periodic shift by whole grid points: `out(x + s h) = self(x)`.
    pub fn rolled(&self, shift: [i64; 3]) -> Self {
        let [n0, n1, n2] = self.grid.dims;
        let wrap = |i: usize, s: i64, n: usize| (i as i64 + s).rem_euclid(n as i64) as usize;
        let mut out = vec![T::default(); self.values.len()];
        for i in 0..n0 {
            let ti = wrap(i, shift[0], n0);
            for j in 0..n1 {
                let tj = wrap(j, shift[1], n1);
                for k in 0..n2 {
                    let tk = wrap(k, shift[2], n2);
                    out[self.grid.index(ti, tj, tk)] = self.values[self.grid.index(i, j, k)];
                }
            }
        }
        Self {
            grid: self.grid,
            values: out,
        }
    }

    pub(crate) fn same_grid<U>(&self, other: &Field<U>) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

impl RealField {
    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| C64::new(v, 0.0))
    }

    /// Riemann sum `h³ Σ f`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn inner(&self, other: &RealField) -> Result<f64> {
        self.same_grid(other)?;
        Ok(dot_real(&self.values, &other.values) * self.grid.cell_volume())
    }

    /// True when every value is finite and nonnegative.
    pub fn is_density(&self) -> bool {
        self.values.iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

impl ComplexField {
    pub fn real_part(&self) -> RealField {
        self.map(|v| v.re)
    }

    pub fn modulus(&self) -> RealField {
        self.map(|v| v.norm())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }
}

pub(crate) fn dot_real(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dot_complex(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Riemann-sum inner product, conjugate-linear in `f`.
pub fn inner(f: &ComplexField, g: &ComplexField) -> Result<C64> {
    f.same_grid(g)?;
    Ok(dot_complex(&f.values, &g.values) * f.grid.cell_volume())
}

/// Three real components of a magnetic vector potential on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorPotential {
    components: [RealField; 3],
}

impl VectorPotential {
    pub fn new(components: [RealField; 3]) -> Result<Self> {
        let g = *components[0].grid();
        if components.iter().any(|c| *c.grid() != g) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { components })
    }

    pub fn zero(grid: Grid3) -> Self {
        Self {
            components: [RealField::zeros(grid), RealField::zeros(grid), RealField::zeros(grid)],
        }
    }

    /// Symmetric gauge `A(x) = ½ B × x` of a constant magnetic field `B`.
    pub fn linear(grid: Grid3, b: [f64; 3]) -> Self {
        let comp = |c: usize| {
            RealField::from_fn(grid, |x| {
                let cross = [
                    b[1] * x[2] - b[2] * x[1],
                    b[2] * x[0] - b[0] * x[2],
                    b[0] * x[1] - b[1] * x[0],
                ];
                0.5 * cross[c]
            })
        };
        Self {
            components: [comp(0), comp(1), comp(2)],
        }
    }

    pub fn grid(&self) -> &Grid3 {
        self.components[0].grid()
    }

    pub fn component(&self, axis: usize) -> &RealField {
        &self.components[axis]
    }

    pub fn components(&self) -> &[RealField; 3] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.values().iter().all(|v| *v == 0.0))
    }
}

/// `V(x) = amplitude · Σ_d cos(2π x_d / period)`.
pub fn periodic_potential(grid: Grid3, amplitude: f64, period: f64) -> RealField {
    RealField::from_fn(grid, |x| {
        amplitude * x.iter().map(|xd| (2.0 * PI * xd / period).cos()).sum::<f64>()
    })
}

/// FFT plans and Fourier multipliers for one grid.
pub struct Spectral {
    grid: Grid3,
    forward: [Arc<dyn Fft<f64>>; 3],
    backward: [Arc<dyn Fft<f64>>; 3],
    /// Derivative wavenumbers per axis, Nyquist mode zeroed.
    deriv_k: [Vec<f64>; 3],
    kinetic: Vec<f64>,
    coulomb: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

static SPECTRAL_CACHE: Lazy<Mutex<HashMap<([usize; 3], u64), Arc<Spectral>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl Spectral {
    /// Shared spectral context for `grid`, built on first use.
    pub fn for_grid(grid: &Grid3) -> Arc<Spectral> {
        let mut cache = SPECTRAL_CACHE.lock().unwrap_or_else(|e| e.into_inner());
        if cache.len() > 64 {
            cache.clear();
        }
        cache
            .entry(grid.key())
            .or_insert_with(|| Arc::new(Spectral::build(*grid)))
            .clone()
    }

    fn build(grid: Grid3) -> Self {
        let mut planner = FftPlanner::new();
        let forward = [0, 1, 2].map(|a| planner.plan_fft_forward(grid.dims[a]));
        let backward = [0, 1, 2].map(|a| planner.plan_fft_inverse(grid.dims[a]));
        let full_k = [0, 1, 2].map(|a| grid.wavenumbers(a));
        let deriv_k = [0, 1, 2].map(|a| {
            let n = grid.dims[a];
            let mut k = full_k[a].clone();
            if n % 2 == 0 {
                k[n / 2] = 0.0;
            }
            k
        });
        let rc = grid.truncation_radius();
        let n = grid.len();
        let mut kinetic = vec![0.0; n];
        let mut coulomb = vec![0.0; n];
        for idx in 0..n {
            let [i, j, k] = grid.unravel(idx);
            kinetic[idx] = deriv_k[0][i].powi(2) + deriv_k[1][j].powi(2) + deriv_k[2][k].powi(2);
            let k2 = full_k[0][i].powi(2) + full_k[1][j].powi(2) + full_k[2][k].powi(2);
            coulomb[idx] = if k2 == 0.0 {
                2.0 * PI * rc * rc
            } else {
                // 1 - cos(x) = 2 sin²(x/2) avoids cancellation at small |k|
                let half = 0.5 * k2.sqrt() * rc;
                8.0 * PI * half.sin().powi(2) / k2
            };
        }
        Self {
            grid,
            forward,
            backward,
            deriv_k,
            kinetic,
            coulomb,
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    /// `Σ_j k_j²` per Fourier mode, consistent with [`Spectral::derivative`].
    pub fn kinetic_multiplier(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn coulomb_multiplier(&self) -> &[f64] {
        &self.coulomb
    }

    pub fn derivative_wavenumbers(&self, axis: usize) -> &[f64] {
        &self.deriv_k[axis]
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [C64]) {
        for axis in 0..3 {
            self.transform_axis(data, axis, &self.forward[axis]);
        }
    }

    /// Inverse transform in place, normalized so that `inverse(forward(f)) = f`.
    pub fn inverse(&self, data: &mut [C64]) {
        for axis in 0..3 {
            self.transform_axis(data, axis, &self.backward[axis]);
        }
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn transform_axis(&self, data: &mut [C64], axis: usize, plan: &Arc<dyn Fft<f64>>) {
        let [n0, n1, n2] = self.grid.dims;
        let mut scratch = vec![C64::default(); plan.get_inplace_scratch_len()];
        match axis {
            2 => plan.process_with_scratch(data, &mut scratch),
            1 => {
                let mut buf = vec![C64::default(); n1 * n2];
                for slab in data.chunks_exact_mut(n1 * n2) {
                    for j in 0..n1 {
                        for k in 0..n2 {
                            buf[k * n1 + j] = slab[j * n2 + k];
                        }
                    }
                    plan.process_with_scratch(&mut buf, &mut scratch);
                    for j in 0..n1 {
                        for k in 0..n2 {
                            slab[j * n2 + k] = buf[k * n1 + j];
                        }
                    }
                }
            }
            _ => {
                let m = n1 * n2;
                let mut buf = vec![C64::default(); data.len()];
                for i in 0..n0 {
                    for r in 0..m {
                        buf[r * n0 + i] = data[i * m + r];
                    }
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for i in 0..n0 {
                    for r in 0..m {
                        data[i * m + r] = buf[r * n0 + i];
                    }
                }
            }
        }
    }

    /// Applies a per-mode multiplier: `inverse(m · forward(f))`.
    pub fn apply_multiplier(&self, f: &[C64], multiplier: impl Fn(usize) -> C64) -> Vec<C64> {
        let mut data = f.to_vec();
        self.forward(&mut data);
        data.iter_mut().enumerate().for_each(|(i, v)| *v *= multiplier(i));
        self.inverse(&mut data);
        data
    }

    /// Spectral `∂_axis f`.
    pub fn derivative(&self, f: &[C64], axis: usize) -> Vec<C64> {
        let mut data = f.to_vec();
        self.forward(&mut data);
        self.scale_by_wavenumber(&mut data, axis, C64::new(0.0, 1.0));
        self.inverse(&mut data);
        data
    }

    /// Multiplies Fourier coefficients by `factor · k_axis`.
    pub(crate) fn scale_by_wavenumber(&self, data: &mut [C64], axis: usize, factor: C64) {
        let k = &self.deriv_k[axis];
        for (idx, v) in data.iter_mut().enumerate() {
            let ijk = self.grid.unravel(idx);
            *v *= factor * k[ijk[axis]];
        }
    }

    /// `(f ⋆ 1/|x|)` with the truncated kernel. No isolation check.
    pub fn convolve_coulomb(&self, f: &[C64]) -> Vec<C64> {
        self.apply_multiplier(f, |i| C64::new(self.coulomb[i], 0.0))
    }

    pub fn convolve_coulomb_real(&self, rho: &[f64]) -> Vec<f64> {
        let data: Vec<C64> = rho.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.convolve_coulomb(&data).into_iter().map(|v| v.re).collect()
    }
}

/// Free-space Coulomb potential `(rho ⋆ 1/|x|)` sampled on the grid.
///
/// Fails with [`Error::SupportOverflow`] when more than [`ISOLATION_TOL`] of the
/// absolute mass lies outside the centered ball of radius `R_c / 2`, beyond
/// which periodic images are no longer removed by the kernel truncation.
pub fn coulomb_convolve(rho: &RealField) -> Result<RealField> {
    check_isolation(rho, ISOLATION_TOL)?;
    let spectral = Spectral::for_grid(rho.grid());
    let values = spectral.convolve_coulomb_real(rho.values());
    RealField::from_vec(*rho.grid(), values)
}

/// Fraction of `Σ|rho|` lying outside the centered ball of radius `R_c / 2`.
pub fn mass_outside_isolation_ball(rho: &RealField) -> f64 {
    let grid = rho.grid();
    let radius = grid.truncation_radius() / 2.0;
    let mut total = 0.0;
    let mut outside = 0.0;
    for (idx, v) in rho.values().iter().enumerate() {
        let a = v.abs();
        total += a;
        let x = grid.coords(idx);
        if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > radius * radius {
            outside += a;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outside / total
    }
}

pub fn check_isolation(rho: &RealField, tol: f64) -> Result<()> {
    let frac = mass_outside_isolation_ball(rho);
    if frac > tol {
        return Err(Error::SupportOverflow {
            mass_fraction: frac,
            radius: rho.grid().truncation_radius() / 2.0,
        });
    }
    Ok(())
}

/// Componentwise spectral gradient.
pub fn gradient(f: &ComplexField) -> [ComplexField; 3] {
    let spectral = Spectral::for_grid(f.grid());
    let mut spec = f.values().to_vec();
    spectral.forward(&mut spec);
    [0, 1, 2].map(|axis| {
        let mut d = spec.clone();
        spectral.scale_by_wavenumber(&mut d, axis, C64::new(0.0, 1.0));
        spectral.inverse(&mut d);
        Field {
            grid: *f.grid(),
            values: d,
        }
    })
}

pub fn gradient_real(f: &RealField) -> [RealField; 3] {
    gradient(&f.to_complex()).map(|c| c.real_part())
}

/// Inner product evaluated from Fourier coefficients (Parseval route).
pub fn inner_spectral(f: &ComplexField, g: &ComplexField) -> Result<C64> {
    f.same_grid(g)?;
    let spectral = Spectral::for_grid(f.grid());
    let mut a = f.values().to_vec();
    let mut b = g.values().to_vec();
    spectral.forward(&mut a);
    spectral.forward(&mut b);
    Ok(dot_complex(&a, &b) * (f.grid().cell_volume() / a.len() as f64))
}

/// Outcome of a discretized functional inequality `lhs ≤ rhs + tol`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
}

impl InequalityCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.tol
    }
}

/// Default discretization slack: `1e-3 · ‖f‖²_{H¹}`.
pub fn default_tolerance(f: &ComplexField) -> f64 {
    let grad = gradient(f);
    let h1 = f.norm_sqr() + grad.iter().map(|g| g.norm_sqr()).sum::<f64>();
    1e-3 * h1
}

/// Hardy: `⟨φ, |x|⁻² φ⟩ ≤ 4 ‖∇φ‖²`, the singular origin point excluded.
pub fn hardy_check(phi: &ComplexField) -> InequalityCheck {
    let grid = phi.grid();
    let origin = grid.origin_index();
    let lhs = phi
        .values()
        .iter()
        .enumerate()
        .filter(|(idx, _)| *idx != origin)
        .map(|(idx, v)| {
            let x = grid.coords(idx);
            v.norm_sqr() / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
        })
        .sum::<f64>()
        * grid.cell_volume();
    let rhs = 4.0 * gradient(phi).iter().map(|g| g.norm_sqr()).sum::<f64>();
    InequalityCheck {
        lhs,
        rhs,
        tol: default_tolerance(phi),
    }
}

/// Diamagnetic: `‖∇|f|‖ ≤ ‖(-i∇ + a) f‖`.
pub fn diamagnetic_check(f: &ComplexField, a: &VectorPotential) -> Result<InequalityCheck> {
    f.same_grid(a.component(0))?;
    let lhs = gradient_real(&f.modulus())
        .iter()
        .map(|g| g.inner(g).unwrap_or(0.0))
        .sum::<f64>()
        .sqrt();
    let grad = gradient(f);
    let mut rhs2 = 0.0;
    for axis in 0..3 {
        let av = a.component(axis).values();
        rhs2 += grad[axis]
            .values()
            .iter()
            .zip(f.values())
            .zip(av)
            .map(|((d, v), ak)| (C64::new(0.0, -1.0) * d + ak * v).norm_sqr())
            .sum::<f64>();
    }
    let rhs = (rhs2 * f.grid().cell_volume()).sqrt();
    Ok(InequalityCheck {
        lhs,
        rhs,
        tol: default_tolerance(f),
    })
}

/// Smooth test field for the inequality suites: a Gaussian of width
/// `L/16..L/10` centered within `L/10` of the origin, times a random complex
/// polynomial of degree ≤ 2, normalized. Deterministic in `seed`.
pub fn sample_test_field(grid: &Grid3, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.box_lengths().into_iter().fold(f64::INFINITY, f64::min);
    let center: [f64; 3] = std::array::from_fn(|_| rng.random_range(-l / 10.0..l / 10.0));
    let sigma = rng.random_range(l / 16.0..l / 10.0);
    let mut coeff = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let c0 = coeff();
    let lin: [C64; 3] = std::array::from_fn(|_| coeff());
    let quad: [C64; 3] = std::array::from_fn(|_| coeff());
    let mut f = ComplexField::from_fn(*grid, |x| {
        let y: [f64; 3] = std::array::from_fn(|d| (x[d] - center[d]) / sigma);
        let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        let poly = c0
            + (0..3).map(|d| lin[d] * y[d]).sum::<C64>()
            + quad[0] * y[0] * y[1]
            + quad[1] * y[1] * y[2]
            + quad[2] * (y[2] * y[2] - 1.0);
        poly * (-0.5 * r2).exp()
    });
    let n = f.norm_sqr().sqrt();
    f.scale(1.0 / n);
    f
}

/// Smooth periodic vector potential with `|a_d| ≤ bound`, built from a few
/// random Fourier modes of the box. Deterministic in `seed`.
pub fn sample_vector_potential(grid: &Grid3, seed: u64, bound: f64) -> VectorPotential {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.box_lengths();
    let components = std::array::from_fn(|_| {
        let modes: Vec<([f64; 3], f64, f64)> = (0..4)
            .map(|_| {
                let k = std::array::from_fn(|d| 2.0 * PI * rng.random_range(-2i32..=2) as f64 / l[d]);
                (k, rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI))
            })
            .collect();
        let norm: f64 = modes.iter().map(|m| m.1.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        RealField::from_fn(*grid, |x| {
            bound * modes.iter().map(|(k, c, ph)| c * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).cos()).sum::<f64>()
                / norm
        })
    });
    VectorPotential { components }
}
