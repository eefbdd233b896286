use anyhow::{bail, Result};
use pekar_core::bounds::{compact_state, subadditivity_demo, SubadditivityRecord};
use pekar_core::io::CsvWriter;
use pekar_core::minimizer::{minimize_pt, MinimizerConfig};
use pekar_core::{Grid3, PtParams, SlaterState, SpinOrbital};
use serde::Serialize;

use super::{grid, json, minimizer, GridInfo, Job};
use crate::config::RunConfig;
use crate::RunContext;

/// One-electron minimizer on a small box, embedded into a large one and cut
/// off to a ball, paired with its spin-flipped copy at a list of separations.
pub struct Subadd {
    alpha: f64,
    nu: f64,
    grid: Grid3,
    big: Grid3,
    compact_radius: f64,
    distances: Vec<f64>,
    cfg: MinimizerConfig,
}

#[derive(Serialize)]
struct Output {
    alpha: f64,
    nu: f64,
    grid: GridInfo,
    embedded_grid: GridInfo,
    compact_radius: f64,
    c1_minimizer: f64,
    c1_converged: bool,
    records: Vec<SubadditivityRecord>,
    /// Least-squares slope of `log |cross_term|` against `log actual_shift`.
    cross_term_slope: Option<f64>,
    /// `|lhs - (c_m + c_n)| / |c_m + c_n|` at the largest separation.
    final_relative_gap: Option<f64>,
}

pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl Subadd {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let grid = grid(cfg, 32, 1.5)?;
        let big_n = cfg.usize("embed_n", 64, 8..=1024)?;
        let big = Grid3::cubic(big_n, grid.spacing())?;
        if (0..3).any(|d| big.dims()[d] < grid.dims()[d]) {
            bail!("key `embed_n`: {big_n} is smaller than the minimization grid");
        }
        let distances = cfg.f64_list("distances", &[], 0.0..=1e6)?;
        if distances.is_empty() {
            bail!("key `distances`: need at least one value");
        }
        Ok(Self {
            alpha: cfg.f64("alpha", 1.0, 0.0..=1e4)?,
            nu: cfg.f64("nu", 0.0, 0.0..=1e4)?,
            grid,
            big,
            compact_radius: cfg.f64("compact_radius", 6.0, 1e-6..=1e6)?,
            distances,
            cfg: minimizer(cfg)?,
        })
    }
}

impl Job for Subadd {
    fn run(&self, ctx: &RunContext) -> Result<()> {
        let cfg = MinimizerConfig { seed: ctx.seed, ..self.cfg.clone() };
        let p = PtParams::new(self.alpha, self.nu * self.alpha)?;
        let r = minimize_pt(1, &self.grid, &p, &cfg)?;
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        let orbitals: Vec<SpinOrbital> = r
            .state
            .orbitals()
            .iter()
            .map(|o| Ok(SpinOrbital { up: o.up.embedded(self.big)?, down: o.down.embedded(self.big)? }))
            .collect::<Result<_>>()?;
        let m = compact_state(&SlaterState::new(orbitals)?, self.compact_radius)?;
        let n = SlaterState::new(vec![m.orbitals()[0].spin_flipped()])?;

        let mut records = Vec::new();
        for &d in &self.distances {
            let rec = subadditivity_demo(&m, &n, d, &p)?;
            eprintln!("d = {}: lhs = {} rhs = {}", rec.actual_shift, rec.lhs, rec.rhs());
            records.push(rec);
        }
        let mut w = CsvWriter::new(
            Vec::new(),
            &["shift_distance", "actual_shift", "lhs", "c_m", "c_n", "cross_term", "rhs", "gap"],
        )?;
        for rec in &records {
            w.floats(&[rec.shift_distance, rec.actual_shift, rec.lhs, rec.c_m, rec.c_n, rec.cross_term, rec.rhs(), rec.gap])?;
        }
        ctx.write("subadd.csv", w.into_inner()?)?;

        let xs: Vec<f64> = records.iter().map(|r| r.actual_shift).collect();
        let ys: Vec<f64> = records.iter().map(|r| r.cross_term).collect();
        let out = Output {
            alpha: self.alpha,
            nu: self.nu,
            grid: (&self.grid).into(),
            embedded_grid: (&self.big).into(),
            compact_radius: self.compact_radius,
            c1_minimizer: r.energy,
            c1_converged: r.converged,
            cross_term_slope: log_log_slope(&xs, &ys),
            final_relative_gap: records.last().map(|r| r.gap.abs() / (r.c_m + r.c_n).abs()),
            records,
        };
        ctx.write("subadd.json", json(&out)?)?;
        Ok(())
    }
}
