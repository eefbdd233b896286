use std::f64::consts::PI;

use nalgebra::DMatrix;
use pekar_core::fock::{
    coherent_bound, electron_ground, ground_energy, BlockHamiltonianSpec, BlockOperator, CoherentFunctional,
    ElectronSpace, TruncatedFock,
};
use pekar_core::minimizer::{minimize, minimize_pt, MinimizerConfig};
use pekar_core::phonon::{build_blocks, BlockMode, BlockModeSet, CutoffParams, RepresentativeRule};
use pekar_core::{Grid3, PtParams, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn modes(entries: &[([f64; 3], f64)]) -> BlockModeSet {
    BlockModeSet {
        lambda: 2.0,
        p: 1.0,
        entries: entries.iter().map(|&(k, weight)| BlockMode { m: [0, 0, 0], k, weight }).collect(),
    }
}

fn chain_spec(alpha: f64, blocks: BlockModeSet) -> BlockHamiltonianSpec {
    let sites = 6;
    BlockHamiltonianSpec {
        space: ElectronSpace::Chain { sites, spacing: 0.8 },
        v: Some((0..sites).map(|i| -0.4 * (-((i as f64 - 3.0) * 0.8).powi(2)).exp()).collect()),
        beta: 0.7,
        alpha,
        delta: 0.1,
        blocks,
    }
}

fn three_modes() -> BlockModeSet {
    modes(&[([0.4, 0.0, 0.0], 1.2), ([-0.9, 0.2, 0.0], 0.8), ([1.3, 0.0, 0.5], 0.6)])
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[test]
fn operator_is_hermitian() {
    let spec = chain_spec(1.5, three_modes());
    let fock = TruncatedFock::new(3, 4).unwrap();
    let op = BlockOperator::new(&spec, &fock).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut hu = vec![C64::default(); op.dim()];
    let mut hv = vec![C64::default(); op.dim()];
    for _ in 0..100 {
        let u = random_vec(&mut rng, op.dim());
        let v = random_vec(&mut rng, op.dim());
        op.apply(&u, &mut hu);
        op.apply(&v, &mut hv);
        let a = dot(&u, &hv);
        let b = dot(&v, &hu).conj();
        assert!((a - b).norm() <= 1e-10 * a.norm(), "{a} vs {b}");
    }
}

/// `ω n + g (a + a†)` on `n ≤ n_max`, diagonalized densely.
fn oscillator_ladder(omega: f64, g: f64, n_max: usize) -> f64 {
    let d = n_max + 1;
    let h = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            omega * i as f64
        } else if i + 1 == j {
            g * (j as f64).sqrt()
        } else if j + 1 == i {
            g * (i as f64).sqrt()
        } else {
            0.0
        }
    });
    h.symmetric_eigen().eigenvalues.min()
}

#[test]
fn frozen_electron_single_mode() {
    let (alpha, delta, m) = (1.0, 0.1, 4.0);
    let spec = BlockHamiltonianSpec {
        space: ElectronSpace::Frozen,
        v: None,
        beta: 1.0,
        alpha,
        delta,
        blocks: modes(&[([0.5, 0.0, 0.0], m)]),
    };
    let exact = -alpha * m * m / (2.0 * PI * PI * (1.0 - delta));
    let g = alpha.sqrt() * m / (2f64.sqrt() * PI);
    assert!((exact + g * g / (1.0 - delta)).abs() < 1e-15);
    let mut prev = f64::INFINITY;
    for n_max in [0, 2, 5, 10, 20, 30] {
        let r = ground_energy(&spec, &TruncatedFock::new(1, n_max).unwrap(), 1e-12).unwrap();
        let dense = oscillator_ladder(1.0 - delta, g, n_max);
        assert!((r.energy - dense).abs() < 1e-10, "n_max {n_max}: {} vs {dense}", r.energy);
        assert!(r.energy >= exact - 1e-12 && r.energy <= prev + 1e-12);
        prev = r.energy;
    }
    assert!((prev - exact).abs() < 1e-6);
    let cb = coherent_bound(&[C64::new(1.0, 0.0)], &spec).unwrap();
    assert!((cb - exact).abs() < 1e-12);
}

#[test]
fn ground_energy_decreases_along_truncation_lattice() {
    let full = three_modes();
    let mut energies = vec![vec![0.0; 5]; 3];
    for count in 1..=3 {
        let spec = chain_spec(2.0, BlockModeSet { entries: full.entries[..count].to_vec(), ..full.clone() });
        for n_max in 0..5 {
            let r = ground_energy(&spec, &TruncatedFock::new(count, n_max).unwrap(), 1e-11).unwrap();
            energies[count - 1][n_max] = r.energy;
        }
    }
    for c in 0..3 {
        for n in 0..5 {
            if n + 1 < 5 {
                assert!(energies[c][n + 1] <= energies[c][n] + 1e-9, "{energies:?}");
            }
            if c + 1 < 3 {
                assert!(energies[c + 1][n] <= energies[c][n] + 1e-9, "{energies:?}");
            }
        }
    }
}

#[test]
fn zero_coupling_is_electron_ground() {
    let spec = chain_spec(0.0, three_modes());
    let (e, psi) = electron_ground(&spec).unwrap();
    let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * 0.8;
    assert!((norm - 1.0).abs() < 1e-12);
    for n_max in [0, 2, 4] {
        let r = ground_energy(&spec, &TruncatedFock::new(3, n_max).unwrap(), 1e-11).unwrap();
        assert!((r.energy - e).abs() < 1e-9);
    }
    assert!((coherent_bound(&psi, &spec).unwrap() - e).abs() < 1e-12);
}

#[test]
fn coherent_states_bound_converged_ground() {
    let spec = chain_spec(1.0, three_modes());
    let fock = TruncatedFock::new(3, 10).unwrap();
    let ground = ground_energy(&spec, &fock, 1e-11).unwrap();
    let coarser = ground_energy(&spec, &TruncatedFock::new(3, 9).unwrap(), 1e-11).unwrap();
    assert!(coarser.energy - ground.energy < 1e-9, "truncation not converged");
    let (_, psi0) = electron_ground(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut states = vec![psi0];
    for _ in 0..20 {
        let mut v = random_vec(&mut rng, 6);
        let n = (v.iter().map(|x| x.norm_sqr()).sum::<f64>() * 0.8).sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        states.push(v);
    }
    for psi in &states {
        let cb = coherent_bound(psi, &spec).unwrap();
        assert!(cb >= ground.energy - 1e-9, "{cb} < {}", ground.energy);
    }
}

#[test]
fn dimension_limit_enforced() {
    assert!(TruncatedFock::new(12, 12).is_err());
    let grid = Grid3::cubic(12, 1.0).unwrap();
    let spec = BlockHamiltonianSpec {
        space: ElectronSpace::Grid(grid),
        v: None,
        beta: 1.0,
        alpha: 1.0,
        delta: 0.1,
        blocks: modes(&[([0.1, 0.0, 0.0], 1.0); 10]),
    };
    let fock = TruncatedFock::new(10, 4).unwrap();
    assert!(fock.len() * grid.len() > 1_000_000);
    assert!(ground_energy(&spec, &fock, 1e-8).is_err());
}

/// Coherent-state minimum over grid orbitals versus the rescaled PT value
/// with coupling `α/(1-δ)`, as the block discretization is refined.
#[test]
fn coherent_minimum_approaches_pt() {
    let grid = Grid3::cubic(32, 1.0).unwrap();
    let (alpha, delta) = (1.0, 0.1);
    let cfg = MinimizerConfig::default();
    let mut gaps = Vec::new();
    for (lambda, p) in [(1.5, 0.5), (1.5, 1.0 / 3.0), (1.5, 0.25), (2.0, 0.25)] {
        let cp = CutoffParams::new(lambda, p, 1, alpha).unwrap();
        let blocks = build_blocks(lambda, p, RepresentativeRule::default()).unwrap();
        let spec = BlockHamiltonianSpec { space: ElectronSpace::Grid(grid), v: None, beta: cp.beta, alpha, delta, blocks };
        let coherent = minimize(&CoherentFunctional::new(grid, &spec).unwrap(), 1, &cfg).unwrap().energy;
        let pt = PtParams::new(alpha / (1.0 - delta) / cp.beta, 0.0).unwrap();
        let reference = cp.beta * minimize_pt(1, &grid, &pt, &cfg).unwrap().energy;
        gaps.push((coherent - reference) / reference.abs());
    }
    println!("relative gaps: {gaps:?}");
    for w in gaps.windows(2) {
        assert!(w[1].abs() <= w[0].abs() + 0.01, "{gaps:?}");
    }
    assert!(gaps.last().unwrap().abs() < 0.1, "{gaps:?}");
}
