//! Localization of `N` electrons into balls: the cutoff profile `χ`, matrix
//! permanents, the permanent-normalized weight `W(X, Y)`, Monte-Carlo
//! estimates of its kinetic cost, and the greedy ball-merging procedure.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre_on, simpson};

pub type Point = [f64; 3];

/// Largest matrix accepted by [`permanent`].
pub const PERMANENT_MAX_N: usize = 20;
/// Largest configuration accepted by [`localization_weight`].
pub const WEIGHT_MAX_N: usize = 12;
/// Largest configuration accepted by the Monte-Carlo estimators.
pub const MC_MAX_N: usize = 6;
/// Relative standard error above which an MC estimate is flagged.
pub const MC_FLAG_REL_ERR: f64 = 0.1;
/// Fraction of `R` on which the mollified profile equals the Dirichlet mode.
pub const MOLLIFY_START: f64 = 0.9;

const MIN_LAYER_INTERVALS: f64 = 8.0;
const SAMPLER_BINS: usize = 4096;
const OVERLAP_TABLE: usize = 513;
const OVERLAP_NODES: usize = 96;
const MC_CHUNKS: usize = 64;

fn psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn dpsi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp() / (x * x)
    } else {
        0.0
    }
}

/// `C^∞` step: 1 for `u ≤ 0`, 0 for `u ≥ 1`. Returns value and derivative.
fn smooth_step(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (1.0, 0.0);
    }
    if u >= 1.0 {
        return (0.0, 0.0);
    }
    let a = psi(1.0 - u);
    let b = psi(u);
    let d = a + b;
    let da = -dpsi(1.0 - u);
    let db = dpsi(u);
    (a / d, (da * b - a * db) / (d * d))
}

/// Radial cutoff `χ(|x|)` supported in the ball of radius `R`.
#[derive(Clone, Debug, Serialize)]
pub struct CutoffProfile {
    pub r: f64,
    /// `χ(i R / (n-1))`, `i = 0..n`, with `n ≡ 1 (mod 4)`.
    pub samples: Vec<f64>,
    /// `∫|∇χ|²`.
    pub dirichlet_energy: f64,
    pub mollified: bool,
    norm: f64,
}

impl CutoffProfile {
    /// Unnormalized shape and its radial derivative.
    fn shape(&self, r: f64) -> (f64, f64) {
        shape(self.r, self.mollified, r)
    }

    /// `χ(r)`.
    pub fn value(&self, r: f64) -> f64 {
        self.shape(r).0 * self.norm
    }

    /// `χ'(r)`.
    pub fn derivative(&self, r: f64) -> f64 {
        self.shape(r).1 * self.norm
    }

    /// `χ(|x|)`.
    pub fn at(&self, x: Point) -> f64 {
        self.value(norm(x))
    }

    /// `∇χ(x)`.
    pub fn gradient_at(&self, x: Point) -> Point {
        let r = norm(x);
        if r == 0.0 {
            return [0.0; 3];
        }
        let d = self.derivative(r) / r;
        [x[0] * d, x[1] * d, x[2] * d]
    }

    /// Budget `(3/2) π² / R²` on the Dirichlet energy.
    pub fn budget(&self) -> f64 {
        1.5 * PI * PI / (self.r * self.r)
    }
}

fn shape(big_r: f64, mollified: bool, r: f64) -> (f64, f64) {
    if r > big_r {
        return (0.0, 0.0);
    }
    let k = PI / big_r;
    let (f, df) = if r < 1e-4 * big_r {
        (k - k.powi(3) * r * r / 6.0, -k.powi(3) * r / 3.0 + k.powi(5) * r.powi(3) / 30.0)
    } else {
        let s = (k * r).sin();
        (s / r, (k * r * (k * r).cos() - s) / (r * r))
    };
    if !mollified {
        return (f, df);
    }
    let w = (1.0 - MOLLIFY_START) * big_r;
    let (s, ds) = smooth_step((r - MOLLIFY_START * big_r) / w);
    (f * s, df * s + f * ds / w)
}

pub fn norm(x: Point) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn build_profile(big_r: f64, resolution: usize, mollified: bool) -> Result<(CutoffProfile, f64)> {
    if !(big_r > 0.0 && big_r.is_finite()) {
        return Err(Error::param("R", format!("{big_r} must be positive")));
    }
    if resolution < 3 {
        return Err(Error::param("resolution", "need at least 3 radial samples"));
    }
    // 4k + 1 samples so that every other sample is again a Simpson grid
    let n = (resolution.max(5) + 2) / 4 * 4 + 1;
    let h = big_r / (n - 1) as f64;
    let raw: Vec<(f64, f64)> = (0..n).map(|i| shape(big_r, mollified, i as f64 * h)).collect();
    let moments = |stride: usize| {
        let pick = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..n).step_by(stride).map(f).collect() };
        let r2 = |i: usize| (i as f64 * h).powi(2);
        let mass = 4.0 * PI * simpson(&pick(&|i| r2(i) * raw[i].0 * raw[i].0), h * stride as f64);
        let grad = 4.0 * PI * simpson(&pick(&|i| r2(i) * raw[i].1 * raw[i].1), h * stride as f64);
        (mass, grad)
    };
    let (mass, grad) = moments(1);
    let (mass_c, grad_c) = moments(2);
    let energy = grad / mass;
    // a transition layer spanned by too few intervals cannot be certified
    let layer_intervals = (1.0 - MOLLIFY_START) * big_r / h;
    let quad_err = if mollified && layer_intervals < MIN_LAYER_INTERVALS {
        f64::INFINITY
    } else {
        (energy - grad_c / mass_c).abs()
    };
    let norm = 1.0 / mass.sqrt();
    let profile = CutoffProfile {
        r: big_r,
        samples: raw.iter().map(|v| v.0 * norm).collect(),
        dirichlet_energy: energy,
        mollified,
        norm,
    };
    Ok((profile, quad_err))
}

/// Mollified Dirichlet ground mode of the ball `B_R`, normalized in `L²(R³)`,
/// with quadrature on `resolution` radial samples.
///
/// Fails with [`Error::ProfileBudget`] unless the energy plus its quadrature
/// error estimate (Simpson at `h` against `2h`) stays within `1.5 π²/R²`.
/// Resolutions that put fewer than 8 intervals across the mollified layer
/// are always rejected.
pub fn make_cutoff(big_r: f64, resolution: usize) -> Result<CutoffProfile> {
    let (p, quad_err) = build_profile(big_r, resolution, true)?;
    if p.dirichlet_energy + quad_err > p.budget() {
        return Err(Error::ProfileBudget {
            energy: p.dirichlet_energy + quad_err,
            budget: p.budget(),
        });
    }
    Ok(p)
}

/// The unmollified mode `sin(πr/R)/r`, normalized.
pub fn dirichlet_mode(big_r: f64, resolution: usize) -> Result<CutoffProfile> {
    Ok(build_profile(big_r, resolution, false)?.0)
}

/// Permanent by Ryser's formula with Gray-code updates.
pub fn permanent(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::param("M", "matrix must be square"));
    }
    if n > PERMANENT_MAX_N {
        return Err(Error::SizeLimit {
            what: "permanent size",
            got: n,
            limit: PERMANENT_MAX_N,
        });
    }
    Ok(ryser(m))
}

fn ryser(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    let mut row_sums = vec![0.0; n];
    let mut total = 0.0;
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let next = k ^ (k >> 1);
        let changed = (next ^ gray).trailing_zeros() as usize;
        let added = next & (1 << changed) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if added {
                *s += m[(i, changed)];
            } else {
                *s -= m[(i, changed)];
            }
        }
        gray = next;
        let prod: f64 = row_sums.iter().product();
        if next.count_ones() % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

/// Permanents of all `(n-1)×(n-1)` minors; entry `(j, k)` drops row `j` and
/// column `k`.
pub fn minor_permanents(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |j, k| ryser(&m.clone().remove_row(j).remove_column(k)))
}

/// Overlap `(χ⋆χ)(d) = ∫ χ(x) χ(x - d e) dx` tabulated on `[0, 2R]`.
#[derive(Clone, Debug)]
pub struct OverlapTable {
    r: f64,
    step: f64,
    values: Vec<f64>,
}

impl OverlapTable {
    pub fn new(chi: &CutoffProfile) -> Self {
        let big_r = chi.r;
        let (rs, wr) = gauss_legendre_on(OVERLAP_NODES, 0.0, big_r);
        let (mus, wm) = gauss_legendre_on(OVERLAP_NODES, -1.0, 1.0);
        let weights: Vec<f64> = rs.iter().zip(&wr).map(|(r, w)| 2.0 * PI * r * r * w * chi.value(*r)).collect();
        let step = 2.0 * big_r / (OVERLAP_TABLE - 1) as f64;
        let values = (0..OVERLAP_TABLE)
            .map(|i| {
                let d = i as f64 * step;
                if i == 0 {
                    return 1.0;
                }
                let mut acc = 0.0;
                for (r, wr) in rs.iter().zip(&weights) {
                    for (mu, wm) in mus.iter().zip(&wm) {
                        let s = (r * r + d * d - 2.0 * r * d * mu).max(0.0).sqrt();
                        acc += wr * wm * chi.value(s);
                    }
                }
                acc
            })
            .collect();
        Self { r: big_r, step, values }
    }

    /// Cubic (Catmull-Rom) interpolation; 1 at `d = 0`, 0 beyond `2R`.
    pub fn at(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 1.0;
        }
        if d >= 2.0 * self.r {
            return 0.0;
        }
        let t = d / self.step;
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let f = t - i as f64;
        let get = |j: isize| -> f64 {
            let j = j.clamp(0, self.values.len() as isize - 1) as usize;
            self.values[j]
        };
        let (p0, p1, p2, p3) = (get(i as isize - 1), get(i as isize), get(i as isize + 1), get(i as isize + 2));
        let v = p1
            + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
        v.max(0.0)
    }

    /// `M_ij = (χ⋆χ)(x_i - x_j)`, with `M_ii = 1` exactly.
    pub fn matrix(&self, xs: &[Point]) -> DMatrix<f64> {
        let n = xs.len();
        DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { self.at(norm(sub(xs[i], xs[j]))) })
    }
}

/// The localization weight with its normalization precomputed for one `X`.
#[derive(Clone, Debug)]
pub struct WeightContext<'a> {
    pub chi: &'a CutoffProfile,
    pub xs: Vec<Point>,
    /// `P(X) = N! Per(M)`.
    pub p: f64,
}

impl<'a> WeightContext<'a> {
    pub fn new(xs: &[Point], chi: &'a CutoffProfile, overlap: &OverlapTable) -> Result<Self> {
        let n = xs.len();
        if n == 0 {
            return Err(Error::param("X", "need at least one position"));
        }
        if n > WEIGHT_MAX_N {
            return Err(Error::SizeLimit { what: "weight electrons", got: n, limit: WEIGHT_MAX_N });
        }
        let p = factorial(n) * permanent(&overlap.matrix(xs))?;
        Ok(Self { chi, xs: xs.to_vec(), p })
    }

    /// Matrix `χ(x_i - y_j)`.
    pub fn chi_matrix(&self, ys: &[Point]) -> DMatrix<f64> {
        let n = self.xs.len();
        DMatrix::from_fn(n, n, |i, j| self.chi.at(sub(self.xs[i], ys[j])))
    }

    pub fn weight(&self, ys: &[Point]) -> f64 {
        ryser(&self.chi_matrix(ys)) / self.p.sqrt()
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `W(X, Y) = Per[χ(x_i - y_j)] / √(N! Per M)`.
pub fn localization_weight(xs: &[Point], ys: &[Point], chi: &CutoffProfile) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::param("Y", "needs as many centers as positions"));
    }
    let overlap = OverlapTable::new(chi);
    Ok(WeightContext::new(xs, chi, &overlap)?.weight(ys))
}

/// Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn flagged(&self) -> bool {
        self.std_error > MC_FLAG_REL_ERR * self.mean.abs()
    }
}

/// Per-electron upper-bound estimates of `F_j(X)` for one configuration.
#[derive(Clone, Debug, Serialize)]
pub struct FjEstimate {
    pub per_electron: Vec<McEstimate>,
    /// Some electron's relative MC error exceeds 10%.
    pub flagged: bool,
}

/// Importance sampler for `Y`: a uniformly random assignment `π`, then
/// `y_j = x_π(j) + ξ_j` with `ξ` drawn from `m = ½χ² + ½|∇χ|²/∫|∇χ|²`.
struct MixtureSampler<'a> {
    chi: &'a CutoffProfile,
    /// Radial densities `4πr²χ²` and `4πr²χ'²/E` on a fine grid.
    envelope: [f64; 2],
}

impl<'a> MixtureSampler<'a> {
    fn new(chi: &'a CutoffProfile) -> Self {
        let h = chi.r / SAMPLER_BINS as f64;
        let mut max = [0.0f64; 2];
        for i in 0..=SAMPLER_BINS {
            let r = i as f64 * h;
            let d = Self::radial(chi, r);
            max[0] = max[0].max(d[0]);
            max[1] = max[1].max(d[1]);
        }
        Self { chi, envelope: [1.1 * max[0], 1.1 * max[1]] }
    }

    fn radial(chi: &CutoffProfile, r: f64) -> [f64; 2] {
        let w = 4.0 * PI * r * r;
        [w * chi.value(r).powi(2), w * chi.derivative(r).powi(2) / chi.dirichlet_energy]
    }

    /// Single-particle density `m(ξ)`.
    fn density(&self, xi: Point) -> f64 {
        let r = norm(xi);
        0.5 * self.chi.value(r).powi(2) + 0.5 * self.chi.derivative(r).powi(2) / self.chi.dirichlet_energy
    }

    fn sample_offset(&self, rng: &mut ChaCha8Rng) -> Point {
        let c = usize::from(rng.random::<bool>());
        let r = loop {
            let r = rng.random::<f64>() * self.chi.r;
            if rng.random::<f64>() * self.envelope[c] <= Self::radial(self.chi, r)[c] {
                break r;
            }
        };
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let s = (1.0 - z * z).sqrt();
        [r * s * phi.cos(), r * s * phi.sin(), r * z]
    }

    /// Draws `Y` and returns it with its proposal density
    /// `q(Y) = Per[m(y_j - x_i)] / N!`.
    fn sample(&self, xs: &[Point], rng: &mut ChaCha8Rng) -> (Vec<Point>, f64) {
        let n = xs.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let ys: Vec<Point> = perm
            .iter()
            .map(|&i| {
                let xi = self.sample_offset(rng);
                [xs[i][0] + xi[0], xs[i][1] + xi[1], xs[i][2] + xi[2]]
            })
            .collect();
        let m = DMatrix::from_fn(n, n, |i, j| self.density(sub(ys[j], xs[i])));
        (ys, ryser(&m) / factorial(n))
    }
}

fn mc_chunks<T: Send>(seed: u64, samples: usize, f: impl Fn(&mut ChaCha8Rng, usize) -> T + Sync) -> Vec<T> {
    let per = samples.div_ceil(MC_CHUNKS);
    (0..MC_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = per.min(samples.saturating_sub(c * per));
            f(&mut rng, count)
        })
        .collect()
}

fn finish(sum: f64, sum2: f64, n: usize) -> McEstimate {
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0) * n as f64 / (n as f64 - 1.0).max(1.0);
    McEstimate { mean, std_error: (var / n as f64).sqrt(), samples: n }
}

/// MC estimate of `∫ W(X, Y)² dY`, which equals 1.
pub fn partition_integral(xs: &[Point], chi: &CutoffProfile, samples: usize, seed: u64) -> Result<McEstimate> {
    check_mc(xs.len(), samples)?;
    let overlap = OverlapTable::new(chi);
    let ctx = WeightContext::new(xs, chi, &overlap)?;
    let sampler = MixtureSampler::new(chi);
    let parts = mc_chunks(seed, samples, |rng, count| {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let (ys, q) = sampler.sample(xs, rng);
            let v = if q > 0.0 { ctx.weight(&ys).powi(2) / q } else { 0.0 };
            s += v;
            s2 += v * v;
        }
        (s, s2)
    });
    let (s, s2) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(finish(s, s2, samples))
}

fn check_mc(n: usize, samples: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("X", "need at least one position"));
    }
    if n > MC_MAX_N {
        return Err(Error::SizeLimit { what: "MC electrons", got: n, limit: MC_MAX_N });
    }
    if samples < 2 {
        return Err(Error::param("mc_samples", "need at least 2 samples"));
    }
    Ok(())
}

/// Upper-bound estimator `P⁻¹ ∫ |∇_{x_j} G|² dY` of `F_j(X)` for every
/// configuration in `x_samples` and every electron `j`. For `N = 1` the value
/// `∫|∇χ|²` is returned exactly.
pub fn estimate_fj(x_samples: &[Vec<Point>], chi: &CutoffProfile, mc_samples: usize, seed: u64) -> Result<Vec<FjEstimate>> {
    let overlap = OverlapTable::new(chi);
    let sampler = MixtureSampler::new(chi);
    x_samples
        .iter()
        .enumerate()
        .map(|(sample_idx, xs)| {
            let n = xs.len();
            check_mc(n, mc_samples)?;
            if n == 1 {
                let exact = McEstimate { mean: chi.dirichlet_energy, std_error: 0.0, samples: mc_samples };
                return Ok(FjEstimate { per_electron: vec![exact], flagged: false });
            }
            let ctx = WeightContext::new(xs, chi, &overlap)?;
            let parts = mc_chunks(seed.wrapping_add(sample_idx as u64), mc_samples, |rng, count| {
                let mut s = vec![0.0; n];
                let mut s2 = vec![0.0; n];
                for _ in 0..count {
                    let (ys, q) = sampler.sample(xs, rng);
                    if q <= 0.0 {
                        continue;
                    }
                    let minors = minor_permanents(&ctx.chi_matrix(&ys));
                    for j in 0..n {
                        let mut g = [0.0; 3];
                        for (k, y) in ys.iter().enumerate() {
                            let d = chi.gradient_at(sub(xs[j], *y));
                            let w = minors[(j, k)];
                            g.iter_mut().zip(d).for_each(|(a, b)| *a += b * w);
                        }
                        let v = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) / (ctx.p * q);
                        s[j] += v;
                        s2[j] += v * v;
                    }
                }
                (s, s2)
            });
            let per_electron: Vec<McEstimate> = (0..n)
                .map(|j| {
                    let (s, s2) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0[j], a.1 + b.1[j]));
                    finish(s, s2, mc_samples)
                })
                .collect();
            let flagged = per_electron.iter().any(McEstimate::flagged);
            Ok(FjEstimate { per_electron, flagged })
        })
        .collect()
}

/// Balls `B_{R_i}(c_i)` produced by [`merge_balls`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallCluster {
    /// Base separation `R`.
    pub r: f64,
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
    pub occupancies: Vec<usize>,
    /// Input indices assigned to each ball.
    pub members: Vec<Vec<usize>>,
}

impl BallCluster {
    pub fn m(&self) -> usize {
        self.centers.len()
    }

    /// `dist(B_i, B_j) = |c_i - c_j| - R_i - R_j`.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        norm(sub(self.centers[i], self.centers[j])) - self.radii[i] - self.radii[j]
    }
}

/// One merge performed while inserting input ball `inserted`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergeEvent {
    pub inserted: usize,
    /// Position of the absorbed ball in the cluster list before removal.
    pub absorbed: usize,
    pub gap: f64,
    pub center: Point,
    pub radius: f64,
    pub occupancy: usize,
}

struct Ball {
    center: Point,
    radius: f64,
    n: usize,
    members: Vec<usize>,
}

/// Center of the smallest ball containing `B_{r1}(c1)` and `B_{r2}(c2)`.
fn enclosing_center(c1: Point, r1: f64, c2: Point, r2: f64) -> Point {
    let d = norm(sub(c2, c1));
    if d + r2 <= r1 {
        return c1;
    }
    if d + r1 <= r2 {
        return c2;
    }
    let rad = 0.5 * (d + r1 + r2);
    let t = (rad - r1) / d;
    [c1[0] + t * (c2[0] - c1[0]), c1[1] + t * (c2[1] - c1[1]), c1[2] + t * (c2[2] - c1[2])]
}

/// Inserts `B_R(y_j)` one at a time. While the current ball lies closer than
/// `R` to some existing ball, the closest such ball (lowest index on ties) is
/// absorbed and the pair is replaced by a ball of radius `(3n - 1) R / 2`
/// centered at the center of their smallest enclosing ball.
pub fn merge_balls(ys: &[Point], big_r: f64) -> Result<(BallCluster, Vec<MergeEvent>)> {
    if !(big_r > 0.0 && big_r.is_finite()) {
        return Err(Error::param("R", format!("{big_r} must be positive")));
    }
    let mut balls: Vec<Ball> = Vec::new();
    let mut events = Vec::new();
    for (j, &y) in ys.iter().enumerate() {
        let mut cur = Ball { center: y, radius: big_r, n: 1, members: vec![j] };
        loop {
            let closest = balls
                .iter()
                .enumerate()
                .map(|(i, b)| (i, norm(sub(b.center, cur.center)) - b.radius - cur.radius))
                .filter(|(_, g)| *g < big_r)
                .fold(None, |best: Option<(usize, f64)>, (i, g)| match best {
                    Some((_, bg)) if bg <= g => best,
                    _ => Some((i, g)),
                });
            let Some((i, gap)) = closest else { break };
            let other = balls.remove(i);
            let n = cur.n + other.n;
            let center = enclosing_center(other.center, other.radius, cur.center, cur.radius);
            let radius = (3 * n - 1) as f64 * big_r / 2.0;
            let mut members = other.members;
            members.extend(cur.members);
            members.sort_unstable();
            events.push(MergeEvent { inserted: j, absorbed: i, gap, center, radius, occupancy: n });
            cur = Ball { center, radius, n, members };
        }
        balls.push(cur);
    }
    let cluster = BallCluster {
        r: big_r,
        centers: balls.iter().map(|b| b.center).collect(),
        radii: balls.iter().map(|b| b.radius).collect(),
        occupancies: balls.iter().map(|b| b.n).collect(),
        members: balls.into_iter().map(|b| b.members).collect(),
    };
    Ok((cluster, events))
}

/// Additive kinetic cost `2π² N² / R²` of localizing `N` electrons.
pub fn localization_error(n: usize, big_r: f64) -> f64 {
    2.0 * PI * PI * (n * n) as f64 / (big_r * big_r)
}
