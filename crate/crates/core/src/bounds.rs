//! Bound bookkeeping: the energy sandwich, the itemized localization error
//! budget with exact exponent arithmetic, binding gaps, and the shifted-wedge
//! subadditivity construction.

use std::f64::consts::PI;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{check_isolation, Grid3, RealField, Spectral, ISOLATION_TOL};
use crate::pt::{pt_energy, EnergyBreakdown, PtParams};
use crate::slater::{density, orthonormalize, SlaterState, SpinOrbital};

pub type Exponent = Ratio<i64>;

/// Mass fraction allowed outside a state's support sphere.
pub const SUPPORT_MASS_TOL: f64 = 1e-8;

fn ratio_f64(r: Exponent) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct Sandwich {
    pub n: usize,
    pub alpha: f64,
    pub c_n1: f64,
    pub c: f64,
    pub lower: f64,
    pub upper: f64,
    /// `(upper - lower) / |upper|`; infinite when `C = 0` and `c > 0`.
    pub relative_width: f64,
}

/// `α² C - c α^{42/23} N⁴ ≤ E ≤ α² C`.
pub fn lower_bound(n: usize, alpha: f64, c_n1: f64, c: f64) -> Result<Sandwich> {
    if !(alpha > 0.0) {
        return Err(Error::param("alpha", format!("{alpha} must be positive")));
    }
    if !(c >= 0.0) {
        return Err(Error::param("c", format!("{c} must be non-negative")));
    }
    let upper = alpha * alpha * c_n1;
    let gap = c * alpha.powf(42.0 / 23.0) * (n as f64).powi(4);
    let relative_width = if gap == 0.0 {
        0.0
    } else if c_n1 == 0.0 {
        f64::INFINITY
    } else {
        c * alpha.powf(-4.0 / 23.0) * (n as f64).powi(4) / c_n1.abs()
    };
    Ok(Sandwich {
        n,
        alpha,
        c_n1,
        c,
        lower: upper - gap,
        upper,
        relative_width,
    })
}

/// Ball radius as a power law `R = prefactor · α^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Radius {
    pub prefactor: f64,
    #[serde(serialize_with = "ser_ratio")]
    pub alpha_exponent: Exponent,
}

impl Radius {
    /// A radius that does not scale with α.
    pub fn fixed(r: f64) -> Self {
        Self {
            prefactor: r,
            alpha_exponent: Ratio::from_integer(0),
        }
    }

    /// `R = N⁻¹ α^{-19/23}`.
    pub fn optimal(n: usize) -> Self {
        Self {
            prefactor: 1.0 / n as f64,
            alpha_exponent: Ratio::new(-19, 23),
        }
    }

    pub fn at(&self, alpha: f64) -> f64 {
        self.prefactor * alpha.powf(ratio_f64(self.alpha_exponent))
    }
}

fn ser_ratio<S: serde::Serializer>(r: &Exponent, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetTerm {
    pub label: &'static str,
    /// Everything except the power of α.
    pub coefficient: f64,
    #[serde(serialize_with = "ser_ratio")]
    pub alpha_exponent: Exponent,
    pub n_power: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorBudget {
    pub n: usize,
    pub alpha: f64,
    pub nu: f64,
    pub radius: Radius,
    pub r: f64,
    pub occupancies: Vec<usize>,
    pub c_tilde: f64,
    pub terms: Vec<BudgetTerm>,
    pub total: f64,
}

impl ErrorBudget {
    pub fn exponents(&self) -> Vec<Exponent> {
        self.terms.iter().map(|t| t.alpha_exponent).collect()
    }

    pub fn term(&self, label: &str) -> Option<&BudgetTerm> {
        self.terms.iter().find(|t| t.label == label)
    }
}

/// Itemized energy cost of localizing into balls of radius `R` separated by at
/// least `R`, with the occupancies of the balls given.
pub fn error_budget(
    alpha: f64,
    nu: f64,
    radius: Radius,
    occupancies: &[usize],
    c_tilde: f64,
) -> Result<ErrorBudget> {
    if !(alpha > 0.0) {
        return Err(Error::param("alpha", format!("{alpha} must be positive")));
    }
    if nu < 2.0 {
        return Err(Error::RepulsionDominance(nu));
    }
    if !(radius.prefactor > 0.0) {
        return Err(Error::param("R", "radius must be positive"));
    }
    if occupancies.is_empty() || occupancies.contains(&0) {
        return Err(Error::param("occupancies", "need positive occupancies"));
    }
    if !(c_tilde >= 0.0) {
        return Err(Error::param("c_tilde", "must be non-negative"));
    }
    let n: usize = occupancies.iter().sum();
    let nf = n as f64;
    let r0 = radius.prefactor;
    let e = radius.alpha_exponent;
    let one = Ratio::from_integer(1);
    let two = Ratio::from_integer(2);
    let sum5: f64 = occupancies.iter().map(|&k| (k as f64).powi(5)).sum();
    let sum3: f64 = occupancies.iter().map(|&k| (k as f64).powi(3)).sum();
    let raw = [
        ("splitting", 8.0 * nf * nf / (PI * PI * r0), one - e, "N^2 / R"),
        ("localization", 2.0 * PI * PI * nf * nf / (r0 * r0), -two * e, "N^2 / R^2"),
        ("per_ball", 3.0 * r0 * r0 * sum5, Ratio::new(80, 23) + two * e, "R^2 sum n_i^5"),
        ("per_ball_c", c_tilde * sum3, Ratio::new(42, 23), "sum n_i^3"),
    ];
    let terms: Vec<BudgetTerm> = raw
        .into_iter()
        .map(|(label, coefficient, alpha_exponent, n_power)| BudgetTerm {
            label,
            coefficient,
            alpha_exponent,
            n_power,
            value: coefficient * alpha.powf(ratio_f64(alpha_exponent)),
        })
        .collect();
    Ok(ErrorBudget {
        n,
        alpha,
        nu,
        radius,
        r: radius.at(alpha),
        occupancies: occupancies.to_vec(),
        c_tilde,
        total: terms.iter().map(|t| t.value).sum(),
        terms,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BindingReport {
    pub n: usize,
    pub nu: f64,
    pub alpha: f64,
    /// `C_0 = 0, C_1, …, C_N`, each a determinant upper bound.
    pub c_values: Vec<f64>,
    pub gap: f64,
    pub binding: bool,
    pub label: &'static str,
}

pub const BINDING_LABEL: &str = "upper-bound binding evidence";

/// `min_{1 ≤ k ≤ N-1} (C_k + C_{N-k}) - C_N` for `C_0, …, C_N`.
pub fn binding_gap(c_values: &[Option<f64>]) -> Result<f64> {
    if c_values.len() < 3 {
        return Err(Error::MissingValues(format!(
            "need C_0 through C_N with N >= 2, got {} entries",
            c_values.len()
        )));
    }
    let c: Vec<f64> = c_values
        .iter()
        .enumerate()
        .map(|(k, v)| v.ok_or_else(|| Error::MissingValues(format!("C_{k}"))))
        .collect::<Result<_>>()?;
    if c[0] != 0.0 {
        return Err(Error::param("C_0", "must be 0"));
    }
    let n = c.len() - 1;
    let split = (1..n).map(|k| c[k] + c[n - k]).fold(f64::INFINITY, f64::min);
    Ok(split - c[n])
}

pub fn binding_report(alpha: f64, nu: f64, c_values: &[Option<f64>]) -> Result<BindingReport> {
    let gap = binding_gap(c_values)?;
    Ok(BindingReport {
        n: c_values.len() - 1,
        nu,
        alpha,
        c_values: c_values.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
        gap,
        binding: gap > 0.0,
        label: BINDING_LABEL,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityRecord {
    /// Requested separation of the two clusters.
    pub shift_distance: f64,
    /// Separation realized on the grid (whole grid points along x).
    pub actual_shift: f64,
    pub lhs: f64,
    pub c_m: f64,
    pub c_n: f64,
    /// `(U - 2α) ∬ ρ_m ρ_n / |x - y|` for the shifted densities.
    pub cross_term: f64,
    /// `lhs - (C_m + C_n)`.
    pub gap: f64,
    pub support_radius_m: f64,
    pub support_radius_n: f64,
    pub combined: EnergyBreakdown,
}

impl SubadditivityRecord {
    pub fn rhs(&self) -> f64 {
        self.c_m + self.c_n + self.cross_term
    }
}

fn centroid(rho: &RealField) -> [f64; 3] {
    let grid = rho.grid();
    let total: f64 = rho.values().iter().sum();
    let mut c = [0.0; 3];
    for (idx, v) in rho.values().iter().enumerate() {
        let x = grid.coords(idx);
        for d in 0..3 {
            c[d] += v * x[d];
        }
    }
    c.map(|v| v / total)
}

/// Smallest radius around the centroid leaving at most `SUPPORT_MASS_TOL` of
/// the mass outside. Returns (centroid, radius).
pub fn support_sphere(rho: &RealField) -> ([f64; 3], f64) {
    let grid = rho.grid();
    let c = centroid(rho);
    let total: f64 = rho.values().iter().map(|v| v.abs()).sum();
    let mut by_radius: Vec<(f64, f64)> = rho
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let x = grid.coords(idx);
            let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)).sqrt();
            (r, v.abs())
        })
        .collect();
    by_radius.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut outside = 0.0;
    let mut radius = 0.0;
    for (r, m) in by_radius {
        if outside + m > SUPPORT_MASS_TOL * total {
            radius = r;
            break;
        }
        outside += m;
    }
    (c, radius)
}

/// Moves `state` by whole grid points so that its density centroid lies within
/// half a cell of the origin, multiplies every orbital by a smooth radial step
/// about that centroid (1 up to `0.7 radius`, 0 beyond `radius`) and
/// re-orthonormalizes.
pub fn compact_state(state: &SlaterState, radius: f64) -> Result<SlaterState> {
    if !(radius > 0.0) {
        return Err(Error::param("radius", "must be positive"));
    }
    let grid = *state.grid();
    let c = centroid(&density(state));
    let h = grid.spacing();
    let shift = c.map(|v| -(v / h).round() as i64);
    let center = [0, 1, 2].map(|d| c[d] + shift[d] as f64 * h);
    let step = |x: [f64; 3]| {
        let r = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) + (x[2] - center[2]).powi(2)).sqrt();
        let u = (r / radius - 0.7) / 0.3;
        if u <= 0.0 {
            1.0
        } else if u >= 1.0 {
            0.0
        } else {
            let a = (-1.0 / (1.0 - u)).exp();
            let b = (-1.0 / u).exp();
            a / (a + b)
        }
    };
    let mask = RealField::from_fn(grid, step);
    let orbitals: Vec<SpinOrbital> = state
        .orbitals()
        .iter()
        .map(|o| {
            let cut = |f: &crate::grid::ComplexField| {
                let mut g = f.rolled(shift);
                for (v, m) in g.values_mut().iter_mut().zip(mask.values()) {
                    *v *= m;
                }
                g
            };
            SpinOrbital {
                up: cut(&o.up),
                down: cut(&o.down),
            }
        })
        .collect();
    orthonormalize(orbitals)
}

fn shifted(state: &SlaterState, steps: i64) -> Vec<SpinOrbital> {
    state
        .orbitals()
        .iter()
        .map(|o| SpinOrbital {
            up: o.up.rolled([steps, 0, 0]),
            down: o.down.rolled([steps, 0, 0]),
        })
        .collect()
}

/// Places `state_m` and `state_n` a distance `shift_distance` apart along x
/// (each moved by half, rounded to whole grid points), forms the wedge of the
/// two determinants and compares its energy with the separate energies.
pub fn subadditivity_demo(
    state_m: &SlaterState,
    state_n: &SlaterState,
    shift_distance: f64,
    p: &PtParams,
) -> Result<SubadditivityRecord> {
    let grid: Grid3 = *state_m.grid();
    if *state_n.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !(shift_distance >= 0.0) {
        return Err(Error::param("shift_distance", "must be non-negative"));
    }
    let c_m = pt_energy(state_m, p)?.total;
    let c_n = pt_energy(state_n, p)?.total;
    let h = grid.spacing();
    let half = (shift_distance / (2.0 * h)).round() as i64;
    let steps_m = -half;
    let steps_n = (shift_distance / h).round() as i64 - half;
    let actual_shift = (steps_n - steps_m) as f64 * h;

    let orb_m = shifted(state_m, steps_m);
    let orb_n = shifted(state_n, steps_n);
    let rho_of = |orbs: &[SpinOrbital]| {
        let mut rho = vec![0.0; grid.len()];
        for o in orbs {
            o.add_density(&mut rho);
        }
        RealField::from_vec(grid, rho)
    };
    let rho_m = rho_of(&orb_m)?;
    let rho_n = rho_of(&orb_n)?;
    let (cm, rm) = support_sphere(&density(state_m));
    let (cn, rn) = support_sphere(&density(state_n));
    let sep = ((cn[0] + steps_n as f64 * h) - (cm[0] + steps_m as f64 * h)).hypot(cn[1] - cm[1]).hypot(cn[2] - cm[2]);
    if sep < rm + rn {
        return Err(Error::SupportOverlap(format!(
            "centers {sep:.4} apart, support radii {rm:.4} and {rn:.4}"
        )));
    }
    let mut total = rho_m.clone();
    for (t, v) in total.values_mut().iter_mut().zip(rho_n.values()) {
        *t += v;
    }
    check_isolation(&total, ISOLATION_TOL)?;

    let spectral = Spectral::for_grid(&grid);
    let pot_n = spectral.convolve_coulomb_real(rho_n.values());
    let mutual = rho_m.values().iter().zip(&pot_n).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
    let cross_term = (p.u - 2.0 * p.alpha) * mutual;

    let mut orbitals = orb_m;
    orbitals.extend(orb_n);
    let combined_state = orthonormalize(orbitals)?;
    let combined = pt_energy(&combined_state, p)?;
    Ok(SubadditivityRecord {
        shift_distance,
        actual_shift,
        lhs: combined.total,
        c_m,
        c_n,
        cross_term,
        gap: combined.total - (c_m + c_n),
        support_radius_m: rm,
        support_radius_n: rn,
        combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sandwich_collapses_without_constant() {
        let s = lower_bound(3, 5.0, -0.1, 0.0).unwrap();
        assert_eq!(s.lower, s.upper);
        assert_eq!(s.upper, 25.0 * -0.1);
        let s = lower_bound(2, 1.0, -0.3, 0.5).unwrap();
        assert!((s.lower - (-0.3 - 0.5 * 16.0)).abs() < 1e-15);
    }

    #[test]
    fn width_shrinks_with_alpha() {
        let a = lower_bound(1, 1.0, -0.1, 1.0).unwrap();
        let b = lower_bound(1, 2f64.powi(23), -0.1, 1.0).unwrap();
        assert!((a.relative_width / b.relative_width - 16.0).abs() < 1e-9);
    }

    #[test]
    fn single_ball_coefficients() {
        let b = error_budget(1.0, 2.0, Radius::fixed(1.0), &[1], 0.0).unwrap();
        assert!((b.term("splitting").unwrap().coefficient - 8.0 / (PI * PI)).abs() < 1e-15);
        assert!((b.term("localization").unwrap().coefficient - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn optimal_radius_exponents() {
        let b = error_budget(7.0, 3.0, Radius::optimal(3), &[2, 1], 1.0).unwrap();
        let e = b.exponents();
        assert_eq!(e[0], Ratio::new(42, 23));
        assert_eq!(e[1], Ratio::new(38, 23));
        assert_eq!(e[2], Ratio::new(42, 23));
        assert_eq!(e[3], Ratio::new(42, 23));
    }

    #[test]
    fn weak_repulsion_rejected() {
        assert!(matches!(
            error_budget(1.0, 1.99, Radius::fixed(1.0), &[1], 0.0),
            Err(Error::RepulsionDominance(_))
        ));
    }

    #[test]
    fn gap_examples() {
        assert_eq!(binding_gap(&[Some(0.0); 4]).unwrap(), 0.0);
        let lin: Vec<_> = (0..5).map(|k| Some(-0.25 * k as f64)).collect();
        assert!(binding_gap(&lin).unwrap().abs() < 1e-15);
        assert_eq!(binding_gap(&[Some(0.0), Some(-1.0), Some(-3.0)]).unwrap(), 1.0);
        assert!(matches!(binding_gap(&[Some(0.0), None, Some(-3.0)]), Err(Error::MissingValues(_))));
        assert!(matches!(binding_gap(&[Some(0.0), Some(-1.0)]), Err(Error::MissingValues(_))));
    }
}
