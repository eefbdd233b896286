//! Exact diagonalization of the one-electron block-mode Hamiltonian
//!
//! `H = h ⊗ 1 + (1-δ) Σ_m a_m†a_m + Σ_m g_m (e^{ik_m·x} a_m + e^{-ik_m·x} a_m†)`,
//! `g_m = √α M_m / (√2 π)`, on a small electron space tensored with the
//! bosonic Fock space truncated to total phonon number `≤ n_max`. The matrix
//! is never formed; a restarted Lanczos iteration uses its action.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid3, Spectral};
use crate::minimizer::OrbitalFunctional;
use crate::phonon::BlockModeSet;
use crate::slater::SpinOrbital;

/// Largest state-space dimension the oracle accepts.
pub const MAX_DIMENSION: usize = 1_000_000;
const KRYLOV: usize = 40;
const MAX_RESTARTS: usize = 500;

/// Where the single electron lives.
#[derive(Clone, Debug, PartialEq)]
pub enum ElectronSpace {
    /// Periodic 3-D grid with spectral kinetic energy.
    Grid(Grid3),
    /// Periodic chain along the x axis with spectral kinetic energy.
    Chain { sites: usize, spacing: f64 },
    /// A single site at the origin (no kinetic energy).
    Frozen,
}

impl ElectronSpace {
    pub fn sites(&self) -> usize {
        match self {
            ElectronSpace::Grid(g) => g.len(),
            ElectronSpace::Chain { sites, .. } => *sites,
            ElectronSpace::Frozen => 1,
        }
    }

    pub fn position(&self, s: usize) -> [f64; 3] {
        match self {
            ElectronSpace::Grid(g) => g.coords(s),
            ElectronSpace::Chain { sites, spacing } => [(s as f64 - (sites / 2) as f64) * spacing, 0.0, 0.0],
            ElectronSpace::Frozen => [0.0; 3],
        }
    }

    /// Per-site weight of the discrete inner product.
    pub fn cell_volume(&self) -> f64 {
        match self {
            ElectronSpace::Grid(g) => g.cell_volume(),
            ElectronSpace::Chain { spacing, .. } => *spacing,
            ElectronSpace::Frozen => 1.0,
        }
    }
}

/// Bosonic occupations `(n_1..n_M)` with `Σ n_i ≤ n_max`, lexicographic.
#[derive(Clone, Debug)]
pub struct TruncatedFock {
    pub modes: usize,
    pub n_max: usize,
    pub basis: Vec<Vec<u16>>,
    raise: Vec<Vec<Option<usize>>>,
    lower: Vec<Vec<Option<usize>>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl TruncatedFock {
    pub fn new(modes: usize, n_max: usize) -> Result<Self> {
        let size = binomial(modes + n_max, n_max);
        if size > MAX_DIMENSION as f64 {
            return Err(Error::SizeLimit { what: "Fock basis", got: size as usize, limit: MAX_DIMENSION });
        }
        let mut basis = Vec::with_capacity(size as usize);
        let mut cur = vec![0u16; modes];
        enumerate(&mut cur, 0, n_max, &mut basis);
        let index: HashMap<Vec<u16>, usize> = basis.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect();
        let mut raise = vec![vec![None; modes]; basis.len()];
        let mut lower = vec![vec![None; modes]; basis.len()];
        for (b, occ) in basis.iter().enumerate() {
            for j in 0..modes {
                let mut up = occ.clone();
                up[j] += 1;
                if let Some(&r) = index.get(&up) {
                    raise[b][j] = Some(r);
                    lower[r][j] = Some(b);
                }
            }
        }
        Ok(Self { modes, n_max, basis, raise, lower })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Stars-and-bars count `C(M + n_max, n_max)`.
    pub fn expected_len(modes: usize, n_max: usize) -> usize {
        binomial(modes + n_max, n_max).round() as usize
    }
}

fn enumerate(cur: &mut Vec<u16>, pos: usize, left: usize, out: &mut Vec<Vec<u16>>) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for k in 0..=left {
        cur[pos] = k as u16;
        enumerate(cur, pos + 1, left - k, out);
    }
    cur[pos] = 0;
}

/// Cutoff Hamiltonian data for one electron.
#[derive(Clone, Debug)]
pub struct BlockHamiltonianSpec {
    pub space: ElectronSpace,
    /// External potential per site (`None` = 0).
    pub v: Option<Vec<f64>>,
    /// Kinetic prefactor `β`.
    pub beta: f64,
    pub alpha: f64,
    pub delta: f64,
    pub blocks: BlockModeSet,
}

impl BlockHamiltonianSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param("delta", "must lie in (0, 1)"));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::param("alpha", "must be nonnegative"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::param("beta", "must be positive"));
        }
        if let Some(v) = &self.v {
            if v.len() != self.space.sites() {
                return Err(Error::param("V", "one value per electron site required"));
            }
        }
        Ok(())
    }

    /// `g_m = √α M_m / (√2 π)`.
    pub fn coupling(&self, m: usize) -> f64 {
        self.alpha.sqrt() * self.blocks.entries[m].weight / (2f64.sqrt() * PI)
    }

    /// `e^{i k_m · x_s}` for every mode and site.
    fn phases(&self) -> Vec<Vec<C64>> {
        let sites = self.space.sites();
        self.blocks
            .entries
            .iter()
            .map(|e| {
                (0..sites)
                    .map(|s| {
                        let x = self.space.position(s);
                        C64::from_polar(1.0, e.k[0] * x[0] + e.k[1] * x[1] + e.k[2] * x[2])
                    })
                    .collect()
            })
            .collect()
    }
}

/// Electron one-body operator `β (-Δ) + V`.
struct OneBody {
    space: ElectronSpace,
    beta: f64,
    v: Option<Vec<f64>>,
    chain_k2: Vec<f64>,
}

impl OneBody {
    fn new(spec: &BlockHamiltonianSpec) -> Self {
        let chain_k2 = match spec.space {
            ElectronSpace::Chain { sites, spacing } => {
                let dk = 2.0 * PI / (sites as f64 * spacing);
                (0..sites)
                    .map(|i| {
                        if sites % 2 == 0 && i == sites / 2 {
                            return 0.0;
                        }
                        let m = if i <= (sites - 1) / 2 { i as f64 } else { i as f64 - sites as f64 };
                        (m * dk).powi(2)
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        Self { space: spec.space.clone(), beta: spec.beta, v: spec.v.clone(), chain_k2 }
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        match &self.space {
            ElectronSpace::Grid(g) => {
                let spectral = Spectral::for_grid(g);
                let k2 = spectral.kinetic_multiplier();
                let d = spectral.apply_multiplier(x, |i| C64::new(self.beta * k2[i], 0.0));
                out.copy_from_slice(&d);
            }
            ElectronSpace::Chain { .. } => {
                let n = x.len();
                // small chains: direct DFT keeps this dependency-free of plan caches
                let mut spec = vec![C64::default(); n];
                for (k, s) in spec.iter_mut().enumerate() {
                    for (j, v) in x.iter().enumerate() {
                        *s += v * C64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / n as f64);
                    }
                    *s *= self.beta * self.chain_k2[k];
                }
                for (j, o) in out.iter_mut().enumerate() {
                    *o = spec
                        .iter()
                        .enumerate()
                        .map(|(k, s)| s * C64::from_polar(1.0, 2.0 * PI * (k * j) as f64 / n as f64))
                        .sum::<C64>()
                        / n as f64;
                }
            }
            ElectronSpace::Frozen => out.iter_mut().for_each(|o| *o = C64::default()),
        }
        if let Some(v) = &self.v {
            for ((o, xv), vv) in out.iter_mut().zip(x).zip(v) {
                *o += xv * vv;
            }
        }
    }

    fn dense(&self) -> DMatrix<C64> {
        let n = self.space.sites();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![C64::default(); n];
        let mut col = vec![C64::default(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = C64::default());
            e[j] = C64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        // symmetrize away rounding
        (&m + m.adjoint()) * C64::new(0.5, 0.0)
    }
}

/// Implicit `H_block` on `sites × Fock` vectors stored phonon-major.
pub struct BlockOperator<'a> {
    spec: &'a BlockHamiltonianSpec,
    fock: &'a TruncatedFock,
    one_body: OneBody,
    phases: Vec<Vec<C64>>,
    couplings: Vec<f64>,
}

impl<'a> BlockOperator<'a> {
    pub fn new(spec: &'a BlockHamiltonianSpec, fock: &'a TruncatedFock) -> Result<Self> {
        spec.validate()?;
        if fock.modes != spec.blocks.len() {
            return Err(Error::param("modes", "Fock space and block set disagree on the mode count"));
        }
        let dim = spec.space.sites() * fock.len();
        if dim > MAX_DIMENSION {
            return Err(Error::SizeLimit { what: "oracle dimension", got: dim, limit: MAX_DIMENSION });
        }
        Ok(Self {
            spec,
            fock,
            one_body: OneBody::new(spec),
            phases: spec.phases(),
            couplings: (0..spec.blocks.len()).map(|m| spec.coupling(m)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.space.sites() * self.fock.len()
    }

    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        let sites = self.spec.space.sites();
        let omega = 1.0 - self.spec.delta;
        out.par_chunks_mut(sites).enumerate().for_each(|(b, ob)| {
            let vb = &v[b * sites..(b + 1) * sites];
            self.one_body.apply(vb, ob);
            let count: u32 = self.fock.basis[b].iter().map(|&n| n as u32).sum();
            let diag = omega * count as f64;
            for (o, x) in ob.iter_mut().zip(vb) {
                *o += x * diag;
            }
            for m in 0..self.fock.modes {
                let g = self.couplings[m];
                let nb = self.fock.basis[b][m] as f64;
                // ⟨b| a_m |b + e_m⟩ = √(n_m + 1)
                if let Some(r) = self.fock.raise[b][m] {
                    let c = g * (nb + 1.0).sqrt();
                    let vr = &v[r * sites..(r + 1) * sites];
                    for ((o, x), ph) in ob.iter_mut().zip(vr).zip(&self.phases[m]) {
                        *o += x * ph * c;
                    }
                }
                // ⟨b| a_m† |b - e_m⟩ = √n_m
                if let Some(l) = self.fock.lower[b][m] {
                    let c = g * nb.sqrt();
                    let vl = &v[l * sites..(l + 1) * sites];
                    for ((o, x), ph) in ob.iter_mut().zip(vl).zip(&self.phases[m]) {
                        *o += x * ph.conj() * c;
                    }
                }
            }
        });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub energy: f64,
    pub residual: f64,
    pub dim: usize,
    pub iterations: usize,
}

fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lowest eigenpair of a Hermitian operator by Lanczos with full
/// reorthogonalization, restarted from the current Ritz vector.
pub fn lanczos_ground(
    dim: usize,
    apply: impl Fn(&[C64], &mut [C64]),
    tol: f64,
    seed: u64,
) -> Result<(f64, Vec<C64>, f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<C64> = (0..dim)
        .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let n0 = vnorm(&x);
    x.iter_mut().for_each(|v| *v /= n0);
    let mut w = vec![C64::default(); dim];
    let mut residual = f64::INFINITY;
    for restart in 0..MAX_RESTARTS {
        let mut basis: Vec<Vec<C64>> = vec![x.clone()];
        let mut alphas = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let kmax = KRYLOV.min(dim);
        for j in 0..kmax {
            apply(&basis[j], &mut w);
            let a = vdot(&basis[j], &w).re;
            alphas.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = vdot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= qi * c);
                }
            }
            let b = vnorm(&w);
            if j + 1 == kmax || b < 1e-13 {
                break;
            }
            betas.push(b);
            basis.push(w.iter().map(|v| v / b).collect());
        }
        let k = alphas.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (imin, &tmin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty Krylov space");
        let theta = tmin;
        let s: DVector<f64> = eig.eigenvectors.column(imin).into_owned();
        x.iter_mut().for_each(|v| *v = C64::default());
        for (q, c) in basis.iter().zip(s.iter()) {
            x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += qi * *c);
        }
        let nx = vnorm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        apply(&x, &mut w);
        residual = w.iter().zip(&x).map(|(a, b)| (a - b * theta).norm_sqr()).sum::<f64>().sqrt();
        if residual <= tol || k == dim {
            return Ok((theta, x, residual, restart + 1));
        }
    }
    Err(Error::NoConvergence { residual, iterations: MAX_RESTARTS })
}

/// Lowest eigenvalue of the truncated `H_block`.
pub fn ground_energy(spec: &BlockHamiltonianSpec, fock: &TruncatedFock, tol: f64) -> Result<OracleResult> {
    let op = BlockOperator::new(spec, fock)?;
    let dim = op.dim();
    let (energy, _, residual, iterations) = lanczos_ground(dim, |v, out| op.apply(v, out), tol, 0)?;
    Ok(OracleResult { energy, residual, dim, iterations })
}

/// Lowest eigenpair of the electron one-body operator alone, by dense
/// diagonalization (Lanczos above 1024 sites). The eigenvector is normalized
/// in the discrete `L²`.
pub fn electron_ground(spec: &BlockHamiltonianSpec) -> Result<(f64, Vec<C64>)> {
    spec.validate()?;
    let one = OneBody::new(spec);
    let s = 1.0 / spec.space.cell_volume().sqrt();
    if spec.space.sites() > 1024 {
        let (e, x, _, _) = lanczos_ground(spec.space.sites(), |v, out| one.apply(v, out), 1e-10, 0)?;
        return Ok((e, x.into_iter().map(|v| v * s).collect()));
    }
    let h = one.dense();
    let eig = h.symmetric_eigen();
    let (i, &e) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one site");
    Ok((e, eig.eigenvectors.column(i).iter().map(|v| v * s).collect()))
}

/// `⟨ψ|h|ψ⟩ - α/(2π²(1-δ)) Σ_m M_m² |⟨ψ|e^{-ik_m·x}|ψ⟩|²` for `ψ`
/// normalized with the discrete weight of the electron space.
pub fn coherent_bound(psi: &[C64], spec: &BlockHamiltonianSpec) -> Result<f64> {
    spec.validate()?;
    if psi.len() != spec.space.sites() {
        return Err(Error::param("psi", "one amplitude per electron site required"));
    }
    let dv = spec.space.cell_volume();
    let one = OneBody::new(spec);
    let mut hpsi = vec![C64::default(); psi.len()];
    one.apply(psi, &mut hpsi);
    let h = vdot(psi, &hpsi).re * dv;
    let rho: Vec<f64> = psi.iter().map(|v| v.norm_sqr() * dv).collect();
    let c = spec.alpha / (2.0 * PI * PI * (1.0 - spec.delta));
    let phases = spec.phases();
    let field: f64 = spec
        .blocks
        .entries
        .iter()
        .zip(&phases)
        .map(|(e, ph)| {
            let f: C64 = rho.iter().zip(ph).map(|(r, p)| p.conj() * r).sum();
            e.weight * e.weight * f.norm_sqr()
        })
        .sum();
    Ok(h - c * field)
}

/// Coherent-state energy of one electron on a 3-D grid as an orbital
/// functional: `E[φ] = β‖∇φ‖² + ⟨φ,Vφ⟩ - c Σ_m M_m² |⟨φ, e^{-ik_m·x} φ⟩|²`.
pub struct CoherentFunctional {
    grid: Grid3,
    beta: f64,
    v: Option<Vec<f64>>,
    c: f64,
    weights2: Vec<f64>,
    /// Separable phase tables `e^{-i k_d x_d}` per mode and axis.
    tables: Vec<[Vec<C64>; 3]>,
}

impl CoherentFunctional {
    pub fn new(grid: Grid3, spec: &BlockHamiltonianSpec) -> Result<Self> {
        spec.validate()?;
        if spec.space != ElectronSpace::Grid(grid) {
            return Err(Error::GridMismatch);
        }
        let axes = [0, 1, 2].map(|d| grid.axis_coords(d));
        let tables = spec
            .blocks
            .entries
            .iter()
            .map(|e| [0, 1, 2].map(|d| axes[d].iter().map(|x| C64::from_polar(1.0, -e.k[d] * x)).collect()))
            .collect();
        Ok(Self {
            grid,
            beta: spec.beta,
            v: spec.v.clone(),
            c: spec.alpha / (2.0 * PI * PI * (1.0 - spec.delta)),
            weights2: spec.blocks.entries.iter().map(|e| e.weight * e.weight).collect(),
            tables,
        })
    }

    /// `f_m = Σ_x ρ(x) e^{-ik_m·x} h³` for every mode.
    fn form_factors(&self, rho: &[f64]) -> Vec<C64> {
        let [n0, n1, n2] = self.grid.dims();
        let dv = self.grid.cell_volume();
        self.tables
            .par_iter()
            .map(|t| {
                let mut acc = C64::default();
                for i in 0..n0 {
                    let mut acc_j = C64::default();
                    for j in 0..n1 {
                        let row = &rho[(i * n1 + j) * n2..(i * n1 + j + 1) * n2];
                        let s: C64 = row.iter().zip(&t[2]).map(|(r, p)| p * r).sum();
                        acc_j += s * t[1][j];
                    }
                    acc += acc_j * t[0][i];
                }
                acc * dv
            })
            .collect()
    }

    fn evaluate(&self, orbitals: &[SpinOrbital], want_action: bool) -> (f64, Vec<SpinOrbital>) {
        let spectral = Spectral::for_grid(&self.grid);
        let k2 = spectral.kinetic_multiplier();
        let dv = self.grid.cell_volume();
        let mut rho = vec![0.0; self.grid.len()];
        for o in orbitals {
            o.add_density(&mut rho);
        }
        let mut energy = 0.0;
        let mut actions = Vec::new();
        for o in orbitals {
            let mut act = SpinOrbital::zeros(self.grid);
            for s in 0..2 {
                let src = o.component(s).values();
                let mut spec = src.to_vec();
                spectral.forward(&mut spec);
                energy += self.beta * spec.iter().zip(k2).map(|(c, k)| k * c.norm_sqr()).sum::<f64>() * dv
                    / spec.len() as f64;
                if want_action {
                    spec.iter_mut().zip(k2).for_each(|(c, k)| *c *= self.beta * k);
                    spectral.inverse(&mut spec);
                    act.component_mut(s).values_mut().copy_from_slice(&spec);
                }
            }
            actions.push(act);
        }
        if let Some(v) = &self.v {
            energy += rho.iter().zip(v).map(|(r, v)| r * v).sum::<f64>() * dv;
        }
        let f = self.form_factors(&rho);
        energy -= self.c * f.iter().zip(&self.weights2).map(|(f, w)| w * f.norm_sqr()).sum::<f64>();
        if want_action {
            // W(x) = V(x) - 2c Σ_m M_m² Re(conj(f_m) e^{-ik_m·x})
            let [n0, n1, n2] = self.grid.dims();
            let mut w = self.v.clone().unwrap_or_else(|| vec![0.0; self.grid.len()]);
            for ((t, fm), w2) in self.tables.iter().zip(&f).zip(&self.weights2) {
                let coeff = fm.conj() * (-2.0 * self.c * w2);
                for i in 0..n0 {
                    let ci = coeff * t[0][i];
                    for j in 0..n1 {
                        let cij = ci * t[1][j];
                        let row = &mut w[(i * n1 + j) * n2..(i * n1 + j + 1) * n2];
                        for (wv, p) in row.iter_mut().zip(&t[2]) {
                            *wv += (cij * p).re;
                        }
                    }
                }
            }
            for (act, o) in actions.iter_mut().zip(orbitals) {
                for s in 0..2 {
                    let src = o.component(s).values();
                    for ((a, x), wv) in act.component_mut(s).values_mut().iter_mut().zip(src).zip(&w) {
                        *a += x * wv;
                    }
                }
            }
        }
        (energy, actions)
    }
}

impl OrbitalFunctional for CoherentFunctional {
    fn grid(&self) -> &Grid3 {
        &self.grid
    }

    fn energy(&self, orbitals: &[SpinOrbital]) -> f64 {
        self.evaluate(orbitals, false).0
    }

    fn energy_and_action(&self, orbitals: &[SpinOrbital]) -> (f64, Vec<SpinOrbital>) {
        self.evaluate(orbitals, true)
    }
}
