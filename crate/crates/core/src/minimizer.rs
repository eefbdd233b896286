//! Orthonormality-constrained descent over Slater determinants.
//!
//! Each iteration takes the tangent-projected gradient, optionally applies the
//! kinetic preconditioner `1/(|k|² + κ²)`, backtracks until the Armijo
//! condition holds on the Löwdin-retracted trial state, and only ever accepts
//! energy-decreasing steps.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid3, RealField, Spectral};
use crate::pt::{project_tangent, pt_energy, EnergyBreakdown, PtFunctional, PtParams};
use crate::slater::{density, orthonormalize, SlaterState, SpinOrbital};

/// Mass fraction allowed in the outer shell of the box before a result is
/// flagged.
pub const LEAKAGE_TOL: f64 = 1e-6;

/// Attached to every `N ≥ 2` result: a determinant minimum bounds the
/// infimum from above and is not claimed to attain it.
pub const DETERMINANT_LABEL: &str = "determinant upper bound";

/// A real functional of `N` orbitals together with its first variation.
///
/// `energy_and_action` returns `E` and `F φ_i` such that, for any perturbation
/// `h`, `dE = 2 Re Σ_i ⟨F φ_i, h_i⟩`.
pub trait OrbitalFunctional: Sync {
    fn grid(&self) -> &Grid3;
    fn energy(&self, orbitals: &[SpinOrbital]) -> f64;
    fn energy_and_action(&self, orbitals: &[SpinOrbital]) -> (f64, Vec<SpinOrbital>);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum StepRule {
    Fixed(f64),
    Backtracking {
        initial: f64,
        shrink: f64,
        armijo: f64,
        max_trials: usize,
    },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking {
            initial: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            max_trials: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitStrategy {
    RandomGaussians,
    StackedCenter,
    PerturbedPrevious { previous: SlaterState, amplitude: f64 },
}

impl InitStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::RandomGaussians => "random-gaussians",
            InitStrategy::StackedCenter => "stacked-center",
            InitStrategy::PerturbedPrevious { .. } => "perturbed-previous",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizerConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step: StepRule,
    pub restarts: usize,
    pub seed: u64,
    pub init: InitStrategy,
    /// Kinetic preconditioning of the descent direction.
    pub precondition: bool,
    pub record_trace: bool,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            grad_tol: 1e-5,
            step: StepRule::default(),
            restarts: 1,
            seed: 0,
            init: InitStrategy::RandomGaussians,
            precondition: true,
            record_trace: false,
        }
    }
}

impl MinimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::param("grad_tol", "must be positive"));
        }
        if self.restarts < 1 {
            return Err(Error::param("restarts", "must be at least 1"));
        }
        match self.step {
            StepRule::Fixed(t) if !(t > 0.0) => Err(Error::param("step", "fixed step must be positive")),
            StepRule::Backtracking { initial, shrink, armijo, max_trials }
                if !(initial > 0.0 && shrink > 0.0 && shrink < 1.0 && armijo > 0.0 && armijo < 1.0)
                    || max_trials == 0 =>
            {
                Err(Error::param("step", "backtracking needs initial > 0, shrink and armijo in (0,1)"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// Outcome of one descent run of a generic functional.
#[derive(Clone, Debug)]
pub struct DescentResult {
    pub energy: f64,
    pub state: SlaterState,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub converged: bool,
    pub seed: u64,
    pub trace: Vec<TraceRow>,
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
    pub state: SlaterState,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub converged: bool,
    /// Seed of the winning restart.
    pub seed: u64,
    pub trace: Vec<TraceRow>,
    /// Fraction of the density in the outer 10% shell of the box.
    pub shell_mass: f64,
    pub warnings: Vec<String>,
}

fn grad_norm(g: &[SpinOrbital]) -> f64 {
    g.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Applies `1/(|k|² + κ²)` componentwise.
fn precondition(g: &[SpinOrbital], kappa2: f64) -> Vec<SpinOrbital> {
    let spectral = Spectral::for_grid(g[0].grid());
    let k2 = spectral.kinetic_multiplier();
    g.par_iter()
        .map(|o| {
            let mut out = o.clone();
            for s in 0..2 {
                let d = spectral.apply_multiplier(o.component(s).values(), |i| C64::new(1.0 / (k2[i] + kappa2), 0.0));
                out.component_mut(s).values_mut().copy_from_slice(&d);
            }
            out
        })
        .collect()
}

fn retract(orbitals: &[SpinOrbital], dir: &[SpinOrbital], t: f64) -> Option<SlaterState> {
    let trial: Vec<SpinOrbital> = orbitals
        .iter()
        .zip(dir)
        .map(|(o, d)| {
            let mut x = o.clone();
            x.axpy(C64::new(t, 0.0), d);
            x
        })
        .collect();
    orthonormalize(trial).ok()
}

/// Descent from a given orthonormal start.
pub fn descend<F: OrbitalFunctional>(f: &F, start: SlaterState, cfg: &MinimizerConfig, seed: u64) -> DescentResult {
    let grid = *f.grid();
    let min_kappa2 = {
        let l = grid.box_lengths().into_iter().fold(f64::INFINITY, f64::min);
        (2.0 * PI / l).powi(2)
    };
    let mut state = start;
    let mut trace = Vec::new();
    let (mut energy, mut action) = f.energy_and_action(state.orbitals());
    let mut t_prev = match cfg.step {
        StepRule::Fixed(t) => t,
        StepRule::Backtracking { initial, .. } => initial,
    };
    let mut iterations = 0;
    let mut converged = false;
    let mut gnorm;
    loop {
        let eigen: f64 = state
            .orbitals()
            .iter()
            .zip(&action)
            .map(|(o, a)| o.inner(a).re)
            .sum::<f64>()
            / state.n() as f64;
        let g = project_tangent(state.orbitals(), action);
        gnorm = grad_norm(&g);
        if cfg.record_trace && iterations == 0 {
            trace.push(TraceRow { iter: 0, energy, grad_norm: gnorm, step: 0.0 });
        }
        if gnorm <= cfg.grad_tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }
        let dir: Vec<SpinOrbital> = if cfg.precondition {
            let kappa2 = eigen.abs().max(min_kappa2);
            project_tangent(state.orbitals(), precondition(&g, kappa2))
        } else {
            g.clone()
        };
        let mut dir = dir;
        dir.iter_mut().for_each(|d| d.scale(C64::new(-1.0, 0.0)));
        let slope: f64 = 2.0 * g.iter().zip(&dir).map(|(a, b)| a.inner(b).re).sum::<f64>();
        if !(slope < 0.0) {
            break;
        }

        let accepted = match cfg.step {
            StepRule::Fixed(t) => retract(state.orbitals(), &dir, t)
                .map(|s| (f.energy(s.orbitals()), s, t))
                .filter(|(e, _, _)| *e <= energy),
            StepRule::Backtracking { shrink, armijo, max_trials, initial } => {
                let mut t = (t_prev / shrink).min(initial.max(t_prev) * 4.0);
                let mut found = None;
                for _ in 0..max_trials {
                    if let Some(s) = retract(state.orbitals(), &dir, t) {
                        let e = f.energy(s.orbitals());
                        if e <= energy + armijo * t * slope {
                            found = Some((e, s, t));
                            break;
                        }
                    }
                    t *= shrink;
                }
                found
            }
        };
        let Some((e_new, s_new, t)) = accepted else {
            break;
        };
        assert!(e_new <= energy, "accepted step raised the energy: {energy} -> {e_new}");
        debug_assert!(crate::slater::gram_deviation(&s_new.gram()) < crate::slater::GRAM_TOL);
        t_prev = t;
        state = s_new;
        iterations += 1;
        let (e_full, a_full) = f.energy_and_action(state.orbitals());
        energy = e_full;
        action = a_full;
        if cfg.record_trace {
            trace.push(TraceRow { iter: iterations, energy, grad_norm: gnorm, step: t });
        }
    }
    DescentResult {
        energy,
        state,
        iterations,
        final_grad_norm: gnorm,
        converged,
        seed,
        trace,
    }
}

/// Best of `cfg.restarts` descents with seeds `seed, seed+1, …`. Lowest
/// energy wins; energies within `1e-12` go to the lowest seed.
pub fn minimize<F: OrbitalFunctional>(f: &F, n: usize, cfg: &MinimizerConfig) -> Result<DescentResult> {
    cfg.validate()?;
    if n < 1 {
        return Err(Error::param("N", "need at least one electron"));
    }
    let runs: Vec<Result<DescentResult>> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r);
            let start = initial_state(n, f.grid(), seed, &cfg.init)?;
            Ok(descend(f, start, cfg, seed))
        })
        .collect();
    let mut best: Option<DescentResult> = None;
    for run in runs {
        let run = run?;
        best = match best {
            None => Some(run),
            Some(b) => {
                let better = run.energy < b.energy - 1e-12
                    || ((run.energy - b.energy).abs() <= 1e-12 && run.seed < b.seed);
                Some(if better { run } else { b })
            }
        };
    }
    Ok(best.expect("restarts >= 1"))
}

/// Upper bound for the discrete PT infimum over `N`-electron determinants.
pub fn minimize_pt(n: usize, grid: &Grid3, p: &PtParams, cfg: &MinimizerConfig) -> Result<MinimizeResult> {
    let f = PtFunctional::new(*grid, p.clone())?;
    let run = minimize(&f, n, cfg)?;
    let breakdown = pt_energy(&run.state, p)?;
    let shell_mass = outer_shell_mass(&density(&run.state));
    let mut warnings = Vec::new();
    if shell_mass > LEAKAGE_TOL {
        warnings.push(format!(
            "box too small: {shell_mass:.3e} of the density lies in the outer 10% shell"
        ));
    }
    if !run.converged {
        warnings.push(format!(
            "not converged after {} iterations (gradient norm {:.3e})",
            run.iterations, run.final_grad_norm
        ));
    }
    Ok(MinimizeResult {
        energy: breakdown.total,
        breakdown,
        state: run.state,
        iterations: run.iterations,
        final_grad_norm: run.final_grad_norm,
        converged: run.converged,
        seed: run.seed,
        trace: run.trace,
        shell_mass,
        warnings,
    })
}

/// Fraction of `Σρ` at points with some `|x_d| > 0.4 L_d`.
pub fn outer_shell_mass(rho: &RealField) -> f64 {
    let grid = rho.grid();
    let l = grid.box_lengths();
    let total: f64 = rho.values().iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let outer: f64 = rho
        .values()
        .iter()
        .enumerate()
        .filter(|(idx, _)| {
            let x = grid.coords(*idx);
            (0..3).any(|d| x[d].abs() > 0.4 * l[d])
        })
        .map(|(_, v)| v.abs())
        .sum();
    outer / total
}

fn random_spinor(rng: &mut ChaCha8Rng) -> [C64; 2] {
    let mut v: [C64; 2] = std::array::from_fn(|_| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    v.iter_mut().for_each(|c| *c /= n);
    v
}

fn random_gaussian_orbital(grid: &Grid3, rng: &mut ChaCha8Rng) -> SpinOrbital {
    let l = grid.box_lengths().into_iter().fold(f64::INFINITY, f64::min);
    let center: [f64; 3] = std::array::from_fn(|_| rng.random_range(-l / 16.0..l / 16.0));
    let width = rng.random_range(l / 20.0..l / 10.0);
    let spin = random_spinor(rng);
    let profile = ComplexField::from_fn(*grid, |x| {
        let r2: f64 = (0..3).map(|d| (x[d] - center[d]).powi(2)).sum();
        C64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
    });
    SpinOrbital {
        up: profile.map(|v| v * spin[0]),
        down: profile.map(|v| v * spin[1]),
    }
}

const MONOMIALS: [[i32; 3]; 20] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [2, 0, 0],
    [0, 2, 0],
    [0, 0, 2],
    [1, 1, 0],
    [1, 0, 1],
    [0, 1, 1],
    [3, 0, 0],
    [0, 3, 0],
    [0, 0, 3],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [0, 2, 1],
    [1, 0, 2],
    [0, 1, 2],
    [1, 1, 1],
];

/// Deterministic orthonormal starting determinant.
///
/// * `RandomGaussians`: Gaussians with random centers near the middle of the
///   box, random widths and random spinor directions.
/// * `StackedCenter`: centered Gaussian times low-order monomials, each
///   spatial function occupied by a spin-up and then a spin-down orbital, with
///   a seeded perturbation of relative size `1e-3`.
/// * `PerturbedPrevious`: the previous orbitals (padded with random Gaussians
///   when `N` grew) plus random Gaussian noise of the given amplitude.
pub fn initial_state(n: usize, grid: &Grid3, seed: u64, strategy: &InitStrategy) -> Result<SlaterState> {
    if n < 1 {
        return Err(Error::param("N", "need at least one electron"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orbitals: Vec<SpinOrbital> = match strategy {
        InitStrategy::RandomGaussians => (0..n).map(|_| random_gaussian_orbital(grid, &mut rng)).collect(),
        InitStrategy::StackedCenter => {
            if n > 2 * MONOMIALS.len() {
                return Err(Error::SizeLimit { what: "stacked-center orbitals", got: n, limit: 2 * MONOMIALS.len() });
            }
            let l = grid.box_lengths().into_iter().fold(f64::INFINITY, f64::min);
            let width = l / 12.0;
            (0..n)
                .map(|i| {
                    let p = MONOMIALS[i / 2];
                    let f = ComplexField::from_fn(*grid, |x| {
                        let poly: f64 = (0..3).map(|d| (x[d] / width).powi(p[d])).product();
                        let r2: f64 = x.iter().map(|v| v * v).sum();
                        C64::new(poly * (-r2 / (2.0 * width * width)).exp(), 0.0)
                    });
                    let norm = f.norm_sqr().sqrt();
                    let f = f.map(|v| v / norm);
                    let mut o = if i % 2 == 0 { SpinOrbital::spin_up(f) } else { SpinOrbital::spin_down(f) };
                    let mut noise = random_gaussian_orbital(grid, &mut rng);
                    let nn = noise.norm_sqr().sqrt();
                    noise.scale(C64::new(1e-3 / nn, 0.0));
                    o.axpy(C64::new(1.0, 0.0), &noise);
                    o
                })
                .collect()
        }
        InitStrategy::PerturbedPrevious { previous, amplitude } => {
            if previous.grid() != grid {
                return Err(Error::GridMismatch);
            }
            (0..n)
                .map(|i| {
                    let mut noise = random_gaussian_orbital(grid, &mut rng);
                    match previous.orbitals().get(i) {
                        Some(o) => {
                            let mut o = o.clone();
                            let nn = noise.norm_sqr().sqrt();
                            if *amplitude != 0.0 {
                                o.axpy(C64::new(amplitude / nn, 0.0), &noise);
                            }
                            o
                        }
                        None => {
                            let nn = noise.norm_sqr().sqrt();
                            noise.scale(C64::new(1.0 / nn, 0.0));
                            noise
                        }
                    }
                })
                .collect()
        }
    };
    orthonormalize(orbitals)
}
