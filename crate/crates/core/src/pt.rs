//! The Pekar-Tomasevich functional for Slater determinants.
//!
//! Units: kinetic energy `‖(-i∇ + A)φ‖²`, Coulomb kernel `1/|x|`, and the
//! phonon-induced self-attraction `-α D(ρ)` with `D(ρ) = ∬ ρ(x)ρ(y)/|x-y|`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_isolation, dot_real, Grid3, RealField, Spectral, VectorPotential, ISOLATION_TOL};
use crate::minimizer::OrbitalFunctional;
use crate::slater::{density, SlaterState, SpinOrbital};

#[derive(Clone, Debug, PartialEq)]
pub struct PtParams {
    pub alpha: f64,
    /// Coulomb repulsion strength.
    pub u: f64,
    /// `None` means `A = 0`.
    pub a: Option<VectorPotential>,
    /// `None` means `V = 0`.
    pub v: Option<RealField>,
}

impl PtParams {
    /// `α ≥ 0` is accepted so that free-particle limits can be evaluated.
    pub fn new(alpha: f64, u: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("{alpha} must be nonnegative")));
        }
        if !(u >= 0.0 && u.is_finite()) {
            return Err(Error::param("U", format!("{u} must be nonnegative")));
        }
        Ok(Self { alpha, u, a: None, v: None })
    }

    pub fn with_a(mut self, a: VectorPotential) -> Self {
        self.a = if a.is_zero() { None } else { Some(a) };
        self
    }

    pub fn with_v(mut self, v: RealField) -> Self {
        self.v = if v.values().iter().all(|x| *x == 0.0) { None } else { Some(v) };
        self
    }

    fn check_grid(&self, grid: &Grid3) -> Result<()> {
        let a_ok = self.a.as_ref().is_none_or(|a| a.grid() == grid);
        let v_ok = self.v.as_ref().is_none_or(|v| v.grid() == grid);
        if a_ok && v_ok {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub external: f64,
    /// Includes the factor `U`.
    pub coulomb_direct: f64,
    /// Includes the factor `U`.
    pub coulomb_exchange: f64,
    pub self_interaction: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn finish(mut self) -> Self {
        self.total = self.kinetic + self.external + self.coulomb_direct - self.coulomb_exchange
            + self.self_interaction;
        self
    }
}

/// Energy of an orthonormal determinant.
pub fn pt_energy(state: &SlaterState, p: &PtParams) -> Result<EnergyBreakdown> {
    p.check_grid(state.grid())?;
    Ok(evaluate(state.orbitals(), p, false).0)
}

/// Energy given by the determinant formula for arbitrary orbitals, without the
/// orthonormality check. Used for directional derivatives off the manifold.
pub fn orbital_energy(orbitals: &[SpinOrbital], p: &PtParams) -> Result<EnergyBreakdown> {
    p.check_grid(orbitals[0].grid())?;
    Ok(evaluate(orbitals, p, false).0)
}

/// Unprojected Fock-like action `F φ_i` of every orbital.
pub fn pt_action(state: &SlaterState, p: &PtParams) -> Result<Vec<SpinOrbital>> {
    p.check_grid(state.grid())?;
    Ok(evaluate(state.orbitals(), p, true).1)
}

/// `F φ_i` projected onto the orthogonal complement of the occupied span.
/// For a tangent direction `h`, `dE = 2 Re Σ_i ⟨g_i, h_i⟩`.
pub fn pt_gradient(state: &SlaterState, p: &PtParams) -> Result<Vec<SpinOrbital>> {
    let action = pt_action(state, p)?;
    Ok(project_tangent(state.orbitals(), action))
}

/// `g_i - Σ_j φ_j ⟨φ_j, g_i⟩`.
pub fn project_tangent(orbitals: &[SpinOrbital], mut g: Vec<SpinOrbital>) -> Vec<SpinOrbital> {
    for gi in g.iter_mut() {
        let coeffs: Vec<C64> = orbitals.iter().map(|phi| phi.inner(gi)).collect();
        for (phi, c) in orbitals.iter().zip(coeffs) {
            gi.axpy(-c, phi);
        }
    }
    g
}

/// Kinetic energy and optionally `D†D φ` for one scalar component.
fn kinetic_component(
    spectral: &Spectral,
    f: &[C64],
    a: Option<&VectorPotential>,
    want_action: bool,
) -> (f64, Option<Vec<C64>>) {
    let grid = spectral.grid();
    let dv = grid.cell_volume();
    let mut spec = f.to_vec();
    spectral.forward(&mut spec);
    match a {
        None => {
            let k2 = spectral.kinetic_multiplier();
            let energy = spec.iter().zip(k2).map(|(c, k)| k * c.norm_sqr()).sum::<f64>() * dv
                / spec.len() as f64;
            let action = want_action.then(|| {
                let mut d: Vec<C64> = spec.iter().zip(k2).map(|(c, k)| c * k).collect();
                spectral.inverse(&mut d);
                d
            });
            (energy, action)
        }
        Some(a) => {
            let mut energy = 0.0;
            let mut action = want_action.then(|| vec![C64::default(); f.len()]);
            for axis in 0..3 {
                let av = a.component(axis).values();
                // w = (-i∂ + A) f, with -i∂ acting as multiplication by k in Fourier space
                let mut w = spec.clone();
                spectral.scale_by_wavenumber(&mut w, axis, C64::new(1.0, 0.0));
                spectral.inverse(&mut w);
                for ((wi, fi), ai) in w.iter_mut().zip(f).zip(av) {
                    *wi += fi * ai;
                }
                energy += w.iter().map(|v| v.norm_sqr()).sum::<f64>() * dv;
                if let Some(out) = action.as_mut() {
                    let mut dw = w.clone();
                    spectral.forward(&mut dw);
                    spectral.scale_by_wavenumber(&mut dw, axis, C64::new(1.0, 0.0));
                    spectral.inverse(&mut dw);
                    for (((o, d), wi), ai) in out.iter_mut().zip(&dw).zip(&w).zip(av) {
                        *o += d + wi * ai;
                    }
                }
            }
            (energy, action)
        }
    }
}

pub(crate) fn evaluate(
    orbitals: &[SpinOrbital],
    p: &PtParams,
    want_action: bool,
) -> (EnergyBreakdown, Vec<SpinOrbital>) {
    let grid = *orbitals[0].grid();
    let n = orbitals.len();
    let dv = grid.cell_volume();
    let spectral = Spectral::for_grid(&grid);

    let per_orbital: Vec<(f64, Option<SpinOrbital>)> = orbitals
        .par_iter()
        .map(|o| {
            let (eu, au) = kinetic_component(&spectral, o.up.values(), p.a.as_ref(), want_action);
            let (ed, ad) = kinetic_component(&spectral, o.down.values(), p.a.as_ref(), want_action);
            let action = match (au, ad) {
                (Some(u), Some(d)) => Some(SpinOrbital {
                    up: crate::grid::Field::from_vec(grid, u).expect("grid length"),
                    down: crate::grid::Field::from_vec(grid, d).expect("grid length"),
                }),
                _ => None,
            };
            (eu + ed, action)
        })
        .collect();
    let mut e = EnergyBreakdown {
        kinetic: per_orbital.iter().map(|x| x.0).sum(),
        ..Default::default()
    };
    let mut action: Vec<SpinOrbital> = per_orbital.into_iter().filter_map(|x| x.1).collect();

    let mut rho = vec![0.0; grid.len()];
    for o in orbitals {
        o.add_density(&mut rho);
    }
    if let Some(v) = &p.v {
        e.external = dot_real(&rho, v.values()) * dv;
    }
    let need_hartree = p.alpha != 0.0 || p.u != 0.0;
    let hartree = if need_hartree {
        spectral.convolve_coulomb_real(&rho)
    } else {
        vec![0.0; rho.len()]
    };
    let d_rho = dot_real(&rho, &hartree) * dv;
    e.self_interaction = -p.alpha * d_rho;

    // conv[idx(l, i)] = (n_li ⋆ 1/|x|) for l ≤ i, n_li = Σ_s conj(φ_ls) φ_is
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..=i).map(move |l| (l, i))).collect();
    let pair_idx = |l: usize, i: usize| i * (i + 1) / 2 + l;
    let mut conv: Vec<Vec<C64>> = Vec::new();
    if p.u != 0.0 {
        let results: Vec<(f64, Vec<C64>)> = pairs
            .par_iter()
            .map(|&(l, i)| {
                let nli = orbitals[l].pair_density(&orbitals[i]);
                let c = spectral.convolve_coulomb(&nli);
                let x = nli.iter().zip(&c).map(|(a, b)| (a * b.conj()).re).sum::<f64>() * dv;
                (x, c)
            })
            .collect();
        let mut diag = 0.0;
        let mut off = 0.0;
        for (&(l, i), (x, _)) in pairs.iter().zip(&results) {
            if l == i {
                diag += x;
            } else {
                off += x;
            }
        }
        e.coulomb_direct = p.u * 0.5 * (d_rho - diag);
        e.coulomb_exchange = p.u * off;
        conv = results.into_iter().map(|r| r.1).collect();
    }
    let e = e.finish();

    if want_action {
        let mean_field_coeff = p.u - 2.0 * p.alpha;
        action.par_iter_mut().enumerate().for_each(|(i, out)| {
            let phi = &orbitals[i];
            for s in 0..2 {
                let src = phi.component(s).values();
                let dst = out.component_mut(s).values_mut();
                if let Some(v) = &p.v {
                    for ((d, f), vv) in dst.iter_mut().zip(src).zip(v.values()) {
                        *d += f * vv;
                    }
                }
                if need_hartree {
                    for ((d, f), h) in dst.iter_mut().zip(src).zip(&hartree) {
                        *d += f * (mean_field_coeff * h);
                    }
                }
                if p.u != 0.0 {
                    for (l, phl) in orbitals.iter().enumerate() {
                        let fl = phl.component(s).values();
                        let take_conj = l > i;
                        let c = if take_conj { &conv[pair_idx(i, l)] } else { &conv[pair_idx(l, i)] };
                        for ((d, f), cv) in dst.iter_mut().zip(fl).zip(c) {
                            let cv = if take_conj { cv.conj() } else { *cv };
                            *d -= f * cv * p.u;
                        }
                    }
                }
            }
        });
    }
    (e, action)
}

/// The functional minimized over determinants.
#[derive(Clone, Debug)]
pub struct PtFunctional {
    grid: Grid3,
    params: PtParams,
}

impl PtFunctional {
    pub fn new(grid: Grid3, params: PtParams) -> Result<Self> {
        params.check_grid(&grid)?;
        Ok(Self { grid, params })
    }

    pub fn params(&self) -> &PtParams {
        &self.params
    }
}

impl OrbitalFunctional for PtFunctional {
    fn grid(&self) -> &Grid3 {
        &self.grid
    }

    fn energy(&self, orbitals: &[SpinOrbital]) -> f64 {
        evaluate(orbitals, &self.params, false).0.total
    }

    fn energy_and_action(&self, orbitals: &[SpinOrbital]) -> (f64, Vec<SpinOrbital>) {
        let (e, a) = evaluate(orbitals, &self.params, true);
        (e.total, a)
    }
}

/// Dilation `ψ_λ(x) = λ^{3N/2} ψ(λx)`, realized orbital-wise on the grid with
/// the same point counts and spacing `h/λ`.
pub fn rescale_state(state: &SlaterState, lambda: f64) -> Result<SlaterState> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", format!("{lambda} must be positive")));
    }
    check_isolation(&density(state), ISOLATION_TOL)?;
    let grid = state.grid().with_spacing(state.grid().spacing() / lambda)?;
    let factor = lambda.powf(1.5);
    let orbitals = state
        .orbitals()
        .iter()
        .map(|o| {
            let scale = |f: &crate::grid::ComplexField| {
                crate::grid::Field::from_vec(grid, f.values().iter().map(|v| v * factor).collect())
                    .expect("same point count")
            };
            SpinOrbital {
                up: scale(&o.up),
                down: scale(&o.down),
            }
        })
        .collect();
    Ok(SlaterState::new_unchecked(orbitals))
}

/// Fields `A_λ(x) = λ A(λx)` and `V_λ(x) = λ² V(λx)` on the dilated grid.
pub fn rescale_fields(p: &PtParams, grid: &Grid3, lambda: f64) -> Result<(Option<VectorPotential>, Option<RealField>)> {
    let new_grid = grid.with_spacing(grid.spacing() / lambda)?;
    let move_real = |f: &RealField, s: f64| {
        RealField::from_vec(new_grid, f.values().iter().map(|v| v * s).collect()).expect("same point count")
    };
    let a = match &p.a {
        Some(a) => Some(VectorPotential::new(
            [0, 1, 2].map(|c| move_real(a.component(c), lambda)),
        )?),
        None => None,
    };
    let v = p.v.as_ref().map(|v| move_real(v, lambda * lambda));
    Ok((a, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ComplexField;

    fn gaussian(grid: Grid3, c: [f64; 3], w: f64) -> ComplexField {
        let mut f = ComplexField::from_fn(grid, |x| {
            let r2: f64 = (0..3).map(|a| (x[a] - c[a]).powi(2)).sum();
            C64::new((-r2 / (2.0 * w * w)).exp(), 0.0)
        });
        let n = f.norm_sqr().sqrt();
        f.scale(1.0 / n);
        f
    }

    #[test]
    fn breakdown_total_is_sum() {
        let g = Grid3::cubic(16, 0.6).unwrap();
        let a = SpinOrbital::spin_up(gaussian(g, [0.3, 0.0, 0.0], 1.0));
        let b = SpinOrbital::spin_up(gaussian(g, [-0.3, 0.2, 0.0], 1.1));
        let st = crate::slater::orthonormalize(vec![a, b]).unwrap();
        let p = PtParams::new(1.0, 0.5).unwrap().with_v(crate::grid::periodic_potential(g, 0.1, 3.0));
        let e = pt_energy(&st, &p).unwrap();
        let sum = e.kinetic + e.external + e.coulomb_direct - e.coulomb_exchange + e.self_interaction;
        assert!((e.total - sum).abs() < 1e-14);
        assert!(e.kinetic >= 0.0 && e.self_interaction <= 0.0 && e.coulomb_exchange >= 0.0);
    }

    #[test]
    fn opposite_spins_have_no_exchange() {
        let g = Grid3::cubic(16, 0.6).unwrap();
        let a = SpinOrbital::spin_up(gaussian(g, [0.0; 3], 1.0));
        let b = SpinOrbital::spin_down(gaussian(g, [0.0; 3], 1.0));
        let st = SlaterState::new(vec![a, b]).unwrap();
        let e = pt_energy(&st, &PtParams::new(1.0, 2.0).unwrap()).unwrap();
        assert!(e.coulomb_exchange.abs() < 1e-14);
        assert!(e.coulomb_direct > 0.0);
    }

    #[test]
    fn rejects_negative_parameters() {
        assert!(PtParams::new(-1.0, 0.0).is_err());
        assert!(PtParams::new(1.0, -0.1).is_err());
    }

    #[test]
    fn field_grid_mismatch() {
        let g = Grid3::cubic(16, 0.6).unwrap();
        let st = SlaterState::new(vec![SpinOrbital::spin_up(gaussian(g, [0.0; 3], 1.0))]).unwrap();
        let p = PtParams::new(1.0, 0.0).unwrap().with_v(crate::grid::periodic_potential(
            Grid3::cubic(8, 0.6).unwrap(),
            1.0,
            2.0,
        ));
        assert!(matches!(pt_energy(&st, &p), Err(Error::GridMismatch)));
    }
}
