use anyhow::Result;
use pekar_core::io::{fmt_f64, write_state, CsvWriter};
use pekar_core::minimizer::{minimize_pt, MinimizerConfig, DETERMINANT_LABEL};
use pekar_core::{EnergyBreakdown, Grid3};
use serde::Serialize;

use super::{grid, json, minimizer, Fields, GridInfo, Job};
use crate::config::RunConfig;
use crate::RunContext;

pub struct Minimize {
    n: usize,
    alpha: f64,
    nu: f64,
    grid: Grid3,
    fields: Fields,
    cfg: MinimizerConfig,
}

#[derive(Serialize)]
struct Output<'a> {
    n: usize,
    alpha: f64,
    nu: f64,
    grid: GridInfo,
    magnetic_field: [f64; 3],
    v_amplitude: f64,
    v_period: f64,
    init: &'a str,
    seed: u64,
    converged: bool,
    iterations: usize,
    final_grad_norm: f64,
    energy: f64,
    breakdown: &'a EnergyBreakdown,
    shell_mass: f64,
    warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'a str>,
}

impl Minimize {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        Ok(Self {
            n: cfg.usize("n", 1, 1..=16)?,
            alpha: cfg.f64("alpha", 1.0, 0.0..=1e4)?,
            nu: cfg.f64("nu", 0.0, 0.0..=1e4)?,
            grid: grid(cfg, 32, 1.5)?,
            fields: Fields::from_config(cfg)?,
            cfg: minimizer(cfg)?,
        })
    }
}

impl Job for Minimize {
    fn run(&self, ctx: &RunContext) -> Result<()> {
        let p = self.fields.params(self.grid, self.alpha, self.nu)?;
        let cfg = MinimizerConfig { seed: ctx.seed, record_trace: ctx.trace, ..self.cfg.clone() };
        let r = minimize_pt(self.n, &self.grid, &p, &cfg)?;
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        let out = Output {
            n: self.n,
            alpha: self.alpha,
            nu: self.nu,
            grid: (&self.grid).into(),
            magnetic_field: self.fields.magnetic_field,
            v_amplitude: self.fields.v_amplitude,
            v_period: self.fields.v_period,
            init: cfg.init.name(),
            seed: r.seed,
            converged: r.converged,
            iterations: r.iterations,
            final_grad_norm: r.final_grad_norm,
            energy: r.energy,
            breakdown: &r.breakdown,
            shell_mass: r.shell_mass,
            warnings: &r.warnings,
            label: (self.n >= 2).then_some(DETERMINANT_LABEL),
        };
        ctx.write("result.json", json(&out)?)?;
        if ctx.trace {
            let mut w = CsvWriter::new(Vec::new(), &["iter", "energy", "grad_norm", "step"])?;
            for t in &r.trace {
                w.row(&[t.iter.to_string(), fmt_f64(t.energy), fmt_f64(t.grad_norm), fmt_f64(t.step)])?;
            }
            ctx.write("trace.csv", w.into_inner()?)?;
        }
        let mut buf = Vec::new();
        write_state(&mut buf, &r.state)?;
        ctx.write("state.ptslt", buf)?;
        Ok(())
    }
}
