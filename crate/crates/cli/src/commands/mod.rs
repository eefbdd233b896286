pub mod binding;
pub mod blocks;
pub mod bounds;
pub mod localize;
pub mod minimize;
pub mod oracle;
pub mod subadd;

use anyhow::{bail, Result};
use pekar_core::grid::periodic_potential;
use pekar_core::minimizer::{InitStrategy, MinimizerConfig, StepRule};
use pekar_core::{Grid3, PtParams, RealField, VectorPotential};
use serde::Serialize;

use crate::config::RunConfig;
use crate::RunContext;

pub trait Job {
    fn run(&self, ctx: &RunContext) -> Result<()>;
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(pekar_core::io::to_json(value)?)
}

/// `grid_dims = nx,ny,nz` or the cube `grid_n`, plus `spacing`.
pub fn grid(cfg: &RunConfig, default_n: usize, default_h: f64) -> Result<Grid3> {
    let n = cfg.usize("grid_n", default_n, 8..=512)?;
    let dims = cfg.usize_list("grid_dims", &[n, n, n], 8..=512)?;
    if dims.len() != 3 {
        bail!("key `grid_dims`: need 3 entries, got {}", dims.len());
    }
    let h = cfg.f64("spacing", default_h, 1e-3..=1e3)?;
    Ok(Grid3::new([dims[0], dims[1], dims[2]], h)?)
}

/// Minimizer settings; seed and trace recording are filled in at run time.
pub fn minimizer(cfg: &RunConfig) -> Result<MinimizerConfig> {
    let step = match cfg.choice("step", "backtracking", &["backtracking", "fixed"])? {
        "fixed" => StepRule::Fixed(cfg.f64("step_size", 0.5, 1e-6..=10.0)?),
        _ => {
            let initial = cfg.f64("step_size", 1.0, 1e-6..=10.0)?;
            match StepRule::default() {
                StepRule::Backtracking { shrink, armijo, max_trials, .. } => {
                    StepRule::Backtracking { initial, shrink, armijo, max_trials }
                }
                s => s,
            }
        }
    };
    let init = match cfg.choice("init", "stacked-center", &["stacked-center", "random-gaussians"])? {
        "random-gaussians" => InitStrategy::RandomGaussians,
        _ => InitStrategy::StackedCenter,
    };
    Ok(MinimizerConfig {
        max_iters: cfg.usize("max_iters", 2000, 1..=1_000_000)?,
        grad_tol: cfg.f64("grad_tol", 1e-5, 1e-14..=1.0)?,
        step,
        restarts: cfg.usize("restarts", 1, 1..=100)?,
        seed: 0,
        init,
        precondition: cfg.bool("precondition", true)?,
        record_trace: false,
    })
}

/// External fields: a constant magnetic field in symmetric gauge and a
/// cosine lattice potential.
pub struct Fields {
    pub magnetic_field: [f64; 3],
    pub v_amplitude: f64,
    pub v_period: f64,
}

impl Fields {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let b = cfg.f64_list("magnetic_field", &[0.0; 3], -100.0..=100.0)?;
        if b.len() != 3 {
            bail!("key `magnetic_field`: need 3 components, got {}", b.len());
        }
        Ok(Self {
            magnetic_field: [b[0], b[1], b[2]],
            v_amplitude: cfg.f64("v_amplitude", 0.0, -100.0..=100.0)?,
            v_period: cfg.f64("v_period", 6.0, 1e-2..=1e4)?,
        })
    }

    pub fn a(&self, grid: Grid3) -> VectorPotential {
        VectorPotential::linear(grid, self.magnetic_field)
    }

    pub fn v(&self, grid: Grid3) -> RealField {
        periodic_potential(grid, self.v_amplitude, self.v_period)
    }

    /// PT parameters with `U = ν α`.
    pub fn params(&self, grid: Grid3, alpha: f64, nu: f64) -> Result<PtParams> {
        Ok(PtParams::new(alpha, nu * alpha)?.with_a(self.a(grid)).with_v(self.v(grid)))
    }
}

#[derive(Serialize)]
pub struct GridInfo {
    pub dims: [usize; 3],
    pub spacing: f64,
}

impl From<&Grid3> for GridInfo {
    fn from(g: &Grid3) -> Self {
        Self { dims: g.dims(), spacing: g.spacing() }
    }
}
