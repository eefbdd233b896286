//! Ultraviolet cutoff constants and the block-mode discretization of the
//! phonon momentum ball `B_Λ = {|k| ≤ Λ}` into cubes of side `P`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::integrate;

/// Relative accuracy requested from the block-weight quadrature.
pub const WEIGHT_REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffParams {
    pub lambda: f64,
    pub p: f64,
    pub n: usize,
    pub alpha: f64,
    /// `1 - 2αn/(πΛ)`.
    pub beta: f64,
}

impl CutoffParams {
    pub fn new(lambda: f64, p: f64, n: usize, alpha: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("Lambda", "must be positive"));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::param("P", "must be positive"));
        }
        if n < 1 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", "must be positive"));
        }
        let beta = 1.0 - 2.0 * alpha * n as f64 / (PI * lambda);
        if beta <= 0.0 {
            return Err(Error::param(
                "Lambda",
                format!("beta = {beta} <= 0; need Lambda > 2 alpha n / pi = {}", 2.0 * alpha * n as f64 / PI),
            ));
        }
        Ok(Self { lambda, p, n, alpha, beta })
    }
}

/// `M_Λ = (∫_{|k|≤Λ} n²/(2π²|k|²) dk)^{1/2} = n √(2Λ/π)`.
pub fn head_constant(n: usize, lambda: f64) -> f64 {
    n as f64 * (2.0 * lambda / PI).sqrt()
}

/// `K_Λ = (∫_{|k|>Λ} n/(2π²|k|⁴) dk)^{1/2} = √(2n/(πΛ))`.
pub fn tail_constant(n: usize, lambda: f64) -> f64 {
    (2.0 * n as f64 / (PI * lambda)).sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum RepresentativeRule {
    /// Point of `B(m)` nearest the cube center.
    #[default]
    NearestToCenter,
    /// Cube center radially projected onto `B_Λ` and then clamped into the
    /// cube; falls back to the nearest point when that leaves the ball.
    ClippedCenter,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockMode {
    pub m: [i64; 3],
    pub k: [f64; 3],
    /// `M_m = (∫_{B(m)} |k|⁻² dk)^{1/2}`.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockModeSet {
    pub lambda: f64,
    pub p: f64,
    pub entries: Vec<BlockMode>,
}

impl BlockModeSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(2Λ/P + 1)³`.
    pub fn count_bound(&self) -> f64 {
        (2.0 * self.lambda / self.p + 1.0).powi(3)
    }

    pub fn total_weight_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.weight * e.weight).sum()
    }

    /// Keeps the `count` entries with the largest weights (stable on ties).
    pub fn strongest(&self, count: usize) -> BlockModeSet {
        let mut idx: Vec<usize> = (0..self.entries.len()).collect();
        idx.sort_by(|&a, &b| self.entries[b].weight.total_cmp(&self.entries[a].weight).then(a.cmp(&b)));
        idx.truncate(count);
        idx.sort_unstable();
        BlockModeSet {
            lambda: self.lambda,
            p: self.p,
            entries: idx.into_iter().map(|i| self.entries[i]).collect(),
        }
    }
}

fn cube_bounds(m: [i64; 3], p: f64) -> ([f64; 3], [f64; 3]) {
    let lo = m.map(|v| (v as f64 - 0.5) * p);
    let hi = m.map(|v| (v as f64 + 0.5) * p);
    (lo, hi)
}

fn norm(k: [f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

fn clamp3(k: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| k[i].clamp(lo[i], hi[i]))
}

/// `B(m) = {k ∈ B_Λ : |k_i - m_i P| ≤ P/2}` is nonempty.
pub fn block_nonempty(m: [i64; 3], lambda: f64, p: f64) -> bool {
    let (lo, hi) = cube_bounds(m, p);
    norm(clamp3([0.0; 3], lo, hi)) <= lambda
}

/// Point of `B(m)` closest to the cube center: `clamp(c/(1+μ))` with `μ ≥ 0`
/// fixed by bisection so that the point lies on the sphere when the center
/// is outside the ball.
fn nearest_to_center(m: [i64; 3], lambda: f64, p: f64) -> [f64; 3] {
    let (lo, hi) = cube_bounds(m, p);
    let c = m.map(|v| v as f64 * p);
    if norm(c) <= lambda {
        return c;
    }
    let at = |mu: f64| clamp3(c.map(|v| v / (1.0 + mu)), lo, hi);
    let mut a = 0.0;
    let mut b = 1.0;
    while norm(at(b)) > lambda {
        b *= 2.0;
        if b > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if norm(at(mid)) > lambda {
            a = mid;
        } else {
            b = mid;
        }
    }
    at(b)
}

pub fn representative(m: [i64; 3], lambda: f64, p: f64, rule: RepresentativeRule) -> [f64; 3] {
    match rule {
        RepresentativeRule::NearestToCenter => nearest_to_center(m, lambda, p),
        RepresentativeRule::ClippedCenter => {
            let (lo, hi) = cube_bounds(m, p);
            let c = m.map(|v| v as f64 * p);
            let r = norm(c);
            let projected = if r > lambda { c.map(|v| v * lambda / r) } else { c };
            let k = clamp3(projected, lo, hi);
            if norm(k) <= lambda {
                k
            } else {
                nearest_to_center(m, lambda, p)
            }
        }
    }
}

/// `∫ dz / (ρ² + z²)` over `[a, b]`.
fn z_integral(rho2: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if rho2 == 0.0 {
        // only reached when the interval avoids z = 0
        return 1.0 / a.abs().min(b.abs()) - 1.0 / a.abs().max(b.abs());
    }
    let rho = rho2.sqrt();
    ((b / rho).atan() - (a / rho).atan()) / rho
}

/// `∫_{B(m)} |k|⁻² dk`, excluding the ball `|k| < r0` (pass `r0 = 0` to keep it).
fn block_integral(m: [i64; 3], lambda: f64, p: f64, r0: f64) -> f64 {
    let (lo, hi) = cube_bounds(m, p);
    let l2 = lambda * lambda;
    let r02 = r0 * r0;
    let inner = |x: f64| -> f64 {
        let ymax = (l2 - x * x).max(0.0).sqrt();
        let ya = lo[1].max(-ymax);
        let yb = hi[1].min(ymax);
        if yb <= ya {
            return 0.0;
        }
        let fy = |y: f64| -> f64 {
            let rho2 = x * x + y * y;
            let zmax = (l2 - rho2).max(0.0).sqrt();
            let za = lo[2].max(-zmax);
            let zb = hi[2].min(zmax);
            if zb <= za {
                return 0.0;
            }
            if rho2 < r02 {
                let zh = (r02 - rho2).sqrt();
                z_integral(rho2, za, zb.min(-zh)) + z_integral(rho2, za.max(zh), zb)
            } else {
                z_integral(rho2, za, zb)
            }
        };
        let mut breaks = vec![ya, yb];
        for cand in [(r02 - x * x).max(0.0).sqrt(), 0.0] {
            for s in [-cand, cand] {
                if s > ya && s < yb {
                    breaks.push(s);
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks.windows(2).map(|w| integrate(fy, w[0], w[1], WEIGHT_REL_TOL, 1e-15).0).sum()
    };
    let xa = lo[0].max(-lambda);
    let xb = hi[0].min(lambda);
    if xb <= xa {
        return 0.0;
    }
    let mut breaks = vec![xa, xb];
    for s in [-r0, r0, 0.0] {
        if s > xa && s < xb {
            breaks.push(s);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks.windows(2).map(|w| integrate(inner, w[0], w[1], WEIGHT_REL_TOL, 1e-14).0).sum()
}

/// `M_m`; the origin block has the ball of radius `min(P/4, Λ)` integrated
/// analytically (`4π r0`).
pub fn mode_weight(m: [i64; 3], lambda: f64, p: f64) -> Result<f64> {
    if !(lambda > 0.0 && p > 0.0) {
        return Err(Error::param("Lambda", "Lambda and P must be positive"));
    }
    if !block_nonempty(m, lambda, p) {
        return Err(Error::EmptyBlock(m));
    }
    let w2 = if m == [0, 0, 0] {
        let r0 = (p / 4.0).min(lambda);
        4.0 * PI * r0 + block_integral(m, lambda, p, r0)
    } else {
        block_integral(m, lambda, p, 0.0)
    };
    Ok(w2.sqrt())
}

/// All nonempty blocks, in lexicographic order of `m`.
pub fn build_blocks(lambda: f64, p: f64, rule: RepresentativeRule) -> Result<BlockModeSet> {
    if !(lambda > 0.0 && lambda.is_finite() && p > 0.0 && p.is_finite()) {
        return Err(Error::param("Lambda", "Lambda and P must be positive"));
    }
    let reach = (lambda / p + 0.5).ceil() as i64;
    let mut ms = Vec::new();
    for a in -reach..=reach {
        for b in -reach..=reach {
            for c in -reach..=reach {
                if block_nonempty([a, b, c], lambda, p) {
                    ms.push([a, b, c]);
                }
            }
        }
    }
    let entries = ms
        .par_iter()
        .map(|&m| {
            Ok(BlockMode {
                m,
                k: representative(m, lambda, p, rule),
                weight: mode_weight(m, lambda, p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockModeSet { lambda, p, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_rejects_small_cutoff() {
        assert!(CutoffParams::new(1.0, 1.0, 1, 2.0).is_err());
        let c = CutoffParams::new(10.0, 1.0, 2, 1.0).unwrap();
        assert_eq!(c.beta, 1.0 - 4.0 / (PI * 10.0));
    }

    #[test]
    fn closed_forms() {
        assert!((head_constant(1, PI / 2.0) - 1.0).abs() < 1e-15);
        assert!((tail_constant(1, 2.0 / PI) - 1.0).abs() < 1e-15);
        assert!((head_constant(2, 3.0) - 2.0 * head_constant(1, 3.0)).abs() < 1e-15);
        assert!((tail_constant(4, 3.0) - 2.0 * tail_constant(1, 3.0)).abs() < 1e-15);
    }

    #[test]
    fn representative_lies_in_block() {
        for rule in [RepresentativeRule::NearestToCenter, RepresentativeRule::ClippedCenter] {
            let set = build_blocks(1.3, 0.7, rule).unwrap();
            for e in &set.entries {
                let (lo, hi) = cube_bounds(e.m, 0.7);
                assert!(norm(e.k) <= 1.3 * (1.0 + 1e-12));
                for i in 0..3 {
                    assert!(e.k[i] >= lo[i] - 1e-12 && e.k[i] <= hi[i] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn empty_block_rejected() {
        assert!(matches!(mode_weight([3, 0, 0], 1.0, 1.0), Err(Error::EmptyBlock(_))));
    }

    #[test]
    fn unit_case_has_27_blocks() {
        let set = build_blocks(1.0, 1.0, RepresentativeRule::default()).unwrap();
        assert_eq!(set.len(), 27);
        let total = set.total_weight_sqr();
        assert!((total - 4.0 * PI).abs() < 1e-4 * 4.0 * PI, "total {total}");
    }
}
