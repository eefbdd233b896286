use anyhow::{anyhow, bail, Result};
use pekar_core::bounds::{error_budget, lower_bound, ErrorBudget, Radius, Sandwich};
use serde::Serialize;

use super::{json, Job};
use crate::config::RunConfig;
use crate::RunContext;

pub struct Bounds {
    n: usize,
    alpha: f64,
    c_n1: f64,
    c: f64,
    nu: f64,
    c_tilde: f64,
    occupancies: Vec<usize>,
    radius: Option<f64>,
}

#[derive(Serialize)]
struct Output {
    sandwich: Sandwich,
    budget: ErrorBudget,
    constants: &'static str,
}

impl Bounds {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let n = cfg.usize("n", 1, 1..=1000)?;
        let occupancies = cfg.usize_list("occupancies", &[n], 1..=1000)?;
        if occupancies.iter().sum::<usize>() != n {
            bail!("key `occupancies`: must sum to n = {n}");
        }
        Ok(Self {
            n,
            alpha: cfg.f64("alpha", 1.0, 1e-12..=1e12)?,
            c_n1: cfg.opt_f64("c_n1", -1e6..=0.0)?.ok_or_else(|| anyhow!("missing key `c_n1`"))?,
            c: cfg.f64("c", 1.0, 0.0..=1e6)?,
            nu: cfg.f64("nu", 2.0, 0.0..=1e4)?,
            c_tilde: cfg.f64("c_tilde", 1.0, 0.0..=1e6)?,
            occupancies,
            radius: cfg.opt_f64("radius", 1e-12..=1e6)?,
        })
    }
}

impl Job for Bounds {
    fn run(&self, ctx: &RunContext) -> Result<()> {
        let radius = self.radius.map(Radius::fixed).unwrap_or_else(|| Radius::optimal(self.n));
        let out = Output {
            sandwich: lower_bound(self.n, self.alpha, self.c_n1, self.c)?,
            budget: error_budget(self.alpha, self.nu, radius, &self.occupancies, self.c_tilde)?,
            constants: "c and c_tilde are user-supplied placeholders, not proven values",
        };
        ctx.write("bounds.json", json(&out)?)?;
        Ok(())
    }
}
