use std::f64::consts::PI;

use pekar_core::phonon::{
    block_nonempty, build_blocks, head_constant, mode_weight, representative, tail_constant, CutoffParams,
    RepresentativeRule,
};
use pekar_core::quad::integrate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `∫ f(|k|) dk` over a spherical shell by nested quadrature in `(φ, θ, r)`.
fn shell_integral(f: impl Fn(f64) -> f64 + Copy, r0: f64, r1: f64) -> f64 {
    let (v, _) = integrate(
        |_phi| {
            integrate(
                |theta| theta.sin() * integrate(|r| f(r) * r * r, r0, r1, 1e-12, 0.0).0,
                0.0,
                PI,
                1e-11,
                0.0,
            )
            .0
        },
        0.0,
        2.0 * PI,
        1e-10,
        0.0,
    );
    v
}

#[test]
fn head_and_tail_constants_by_quadrature() {
    for (n, lambda) in [(1, PI / 2.0), (2, 1.0), (3, 7.5)] {
        let nf = n as f64;
        let head = shell_integral(|k| nf * nf / (2.0 * PI * PI * k * k), 0.0, lambda).sqrt();
        assert!((head - head_constant(n, lambda)).abs() < 1e-6 * head);
        // |k| > Λ mapped to t = Λ/|k| ∈ (0, 1]: dk-measure r² dr = Λ³ t⁻⁴ dt
        let tail = shell_integral(
            |t| {
                let k = lambda / t;
                nf / (2.0 * PI * PI * k.powi(4)) * lambda.powi(3) / t.powi(6)
            },
            1e-300,
            1.0,
        )
        .sqrt();
        assert!((tail - tail_constant(n, lambda)).abs() < 1e-6 * tail, "{tail}");
    }
    assert!((head_constant(1, PI / 2.0) - 1.0).abs() < 1e-15);
    assert!((tail_constant(1, 2.0 / PI) - 1.0).abs() < 1e-15);
    assert_eq!(head_constant(2, 1.3), 2.0 * head_constant(1, 1.3));
    assert!((head_constant(1, 4.0) - 2.0 * head_constant(1, 1.0)).abs() < 1e-15);
    assert!((tail_constant(4, 1.3) - 2.0 * tail_constant(1, 1.3)).abs() < 1e-15);
    let tails: Vec<f64> = [1.0, 2.0, 10.0, 100.0, 1e4].iter().map(|l| tail_constant(1, *l)).collect();
    assert!(tails.windows(2).all(|w| w[1] < w[0]) && tails[4] < 0.01);
}

#[test]
fn beta_is_exact_and_guarded() {
    let c = CutoffParams::new(3.0, 0.5, 2, 1.5).unwrap();
    assert_eq!(c.beta, 1.0 - 2.0 * 1.5 * 2.0 / (PI * 3.0));
    assert!(CutoffParams::new(2.0 * 1.5 * 2.0 / PI, 0.5, 2, 1.5).is_err());
    assert!(CutoffParams::new(1.0, 0.5, 2, 1.5).is_err());
}

/// Monte-Carlo `∫_{B(m)} |k|⁻² dk` for a block containing the origin, in
/// polar form: `∫_{S²} ρ(u) du` with `ρ(u)` the exit distance along `u`.
fn origin_block_mc(lambda: f64, p: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let w = (1.0 - z * z).sqrt();
        let u = [w * phi.cos(), w * phi.sin(), z];
        let exit = u.iter().map(|c| if *c == 0.0 { f64::INFINITY } else { 0.5 * p / c.abs() }).fold(lambda, f64::min);
        let v = 4.0 * PI * exit;
        s += v;
        s2 += v * v;
    }
    let n = samples as f64;
    let mean = s / n;
    (mean, ((s2 / n - mean * mean).max(0.0) / (n - 1.0)).sqrt())
}

#[test]
fn origin_weight_against_monte_carlo() {
    for (lambda, p) in [(1.0, 1.0), (1.0, 1.5), (1.0, 2.0), (2.0, 0.7)] {
        let w = mode_weight([0, 0, 0], lambda, p).unwrap();
        let (mean, se) = origin_block_mc(lambda, p, 10_000_000, 1);
        assert!((w * w - mean).abs() <= 3.0 * se + 1e-9 * mean, "Λ={lambda} P={p}: {} vs {mean} ± {se}", w * w);
    }
}

#[test]
fn unit_case_enumeration() {
    let set = build_blocks(1.0, 1.0, RepresentativeRule::default()).unwrap();
    assert_eq!(set.len(), 27);
    let mut ms: Vec<[i64; 3]> = set.entries.iter().map(|e| e.m).collect();
    ms.sort_unstable();
    let mut all = Vec::new();
    for a in -1..=1 {
        for b in -1..=1 {
            for c in -1..=1 {
                all.push([a, b, c]);
            }
        }
    }
    assert_eq!(ms, all);
    assert_eq!(set.count_bound(), 27.0);
}

/// Independent nonemptiness test: sample the block on a fine lattice.
fn sampled_nonempty(m: [i64; 3], lambda: f64, p: f64) -> bool {
    let k = 24;
    (0..=k).any(|i| {
        (0..=k).any(|j| {
            (0..=k).any(|l| {
                let q = [i, j, l]
                    .iter()
                    .zip(m)
                    .map(|(t, mi)| (mi as f64 - 0.5 + *t as f64 / k as f64) * p)
                    .collect::<Vec<_>>();
                q.iter().map(|v| v * v).sum::<f64>() <= lambda * lambda
            })
        })
    })
}

#[test]
fn count_bound_and_monotonicity() {
    let lambdas = [0.5, 1.0, 1.7, 2.5];
    let ps = [2.0, 1.3, 1.0, 0.8, 0.6];
    let mut counts = vec![vec![0usize; ps.len()]; lambdas.len()];
    for (i, &l) in lambdas.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            let set = build_blocks(l, p, RepresentativeRule::default()).unwrap();
            for e in &set.entries {
                assert!(block_nonempty(e.m, l, p));
            }
            counts[i][j] = set.len();
        }
    }
    for i in 0..lambdas.len() {
        for j in 0..ps.len() {
            if i + 1 < lambdas.len() {
                assert!(counts[i + 1][j] >= counts[i][j]);
            }
            if j + 1 < ps.len() {
                assert!(counts[i][j + 1] >= counts[i][j], "{counts:?}");
            }
        }
    }
    // lattice sampling agrees with the exact test on a boundary-heavy case
    let (l, p) = (1.7, 0.8);
    let set = build_blocks(l, p, RepresentativeRule::default()).unwrap();
    let reach = 4;
    let mut sampled = 0;
    for a in -reach..=reach {
        for b in -reach..=reach {
            for c in -reach..=reach {
                if sampled_nonempty([a, b, c], l, p) {
                    sampled += 1;
                    assert!(block_nonempty([a, b, c], l, p));
                }
            }
        }
    }
    assert!(sampled <= set.len());
}

#[test]
fn count_bound_on_sweep() {
    for lambda in [1.0, 2.0, 6.0] {
        for ratio in [1.0, 2.0, 2.4, 3.0, 3.7, 5.0] {
            let p = lambda / ratio;
            let set = build_blocks(lambda, p, RepresentativeRule::default()).unwrap();
            assert!(set.len() as f64 <= set.count_bound(), "Λ={lambda} P={p}: {}", set.len());
        }
    }
}

/// The `(2Λ/P + 1)³` count bound is not universal: at `Λ/P = 5/6` the 12
/// edge cubes still meet the ball.
#[test]
fn count_bound_fails_for_small_ratio() {
    let set = build_blocks(0.5, 0.6, RepresentativeRule::default()).unwrap();
    assert_eq!(set.len(), 19);
    assert!(set.len() as f64 > set.count_bound());
}

#[test]
fn weights_partition_the_ball() {
    for (l, p) in [(1.0, 1.0), (1.5, 0.5), (2.0, 0.25), (3.0, 0.7), (0.8, 2.5)] {
        let set = build_blocks(l, p, RepresentativeRule::default()).unwrap();
        let total = set.total_weight_sqr();
        assert!((total - 4.0 * PI * l).abs() < 1e-4 * 4.0 * PI * l, "Λ={l} P={p}: {total}");
    }
}

#[test]
fn interior_cubes_respect_corner_bounds() {
    let (l, p) = (3.0, 0.5);
    let set = build_blocks(l, p, RepresentativeRule::default()).unwrap();
    let mut checked = 0;
    for e in &set.entries {
        let corners: Vec<f64> = (0..8)
            .map(|c| {
                let k: Vec<f64> = (0..3).map(|d| (e.m[d] as f64 + if c >> d & 1 == 1 { 0.5 } else { -0.5 }) * p).collect();
                (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
            })
            .collect();
        let max = corners.iter().cloned().fold(0.0, f64::max);
        let min_norm = (0..3).map(|d| ((e.m[d].abs() as f64 - 0.5) * p).max(0.0).powi(2)).sum::<f64>().sqrt();
        if max > l || min_norm == 0.0 {
            continue;
        }
        let w2 = e.weight * e.weight;
        assert!(w2 >= p.powi(3) / (max * max) && w2 <= p.powi(3) / (min_norm * min_norm));
        checked += 1;
    }
    assert!(checked > 50);
}

#[test]
fn representatives_lie_in_their_blocks() {
    for rule in [RepresentativeRule::NearestToCenter, RepresentativeRule::ClippedCenter] {
        for (l, p) in [(1.0, 1.0), (1.7, 0.8), (2.0, 0.3)] {
            for e in build_blocks(l, p, rule).unwrap().entries {
                let k = representative(e.m, l, p, rule);
                assert_eq!(k, e.k);
                let r = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
                assert!(r <= l * (1.0 + 1e-12));
                for d in 0..3 {
                    assert!((k[d] - e.m[d] as f64 * p).abs() <= p / 2.0 * (1.0 + 1e-12));
                }
            }
        }
    }
    assert!(mode_weight([5, 0, 0], 1.0, 1.0).is_err());
}
