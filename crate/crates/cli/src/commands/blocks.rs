use std::f64::consts::PI;

use anyhow::Result;
use pekar_core::io::{fmt_f64, CsvWriter};
use pekar_core::phonon::{build_blocks, head_constant, tail_constant, CutoffParams, RepresentativeRule};
use serde::Serialize;

use super::{json, Job};
use crate::config::RunConfig;
use crate::RunContext;

pub struct Blocks {
    lambda: f64,
    p: f64,
    rule: RepresentativeRule,
    n: usize,
    alpha: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    lambda: f64,
    p: f64,
    rule: RepresentativeRule,
    count: usize,
    count_bound: f64,
    total_weight_sqr: f64,
    ball_integral: f64,
    n: usize,
    head_constant: f64,
    tail_constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cutoff: Option<CutoffParams>,
}

impl Blocks {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let rule = match cfg.choice("rule", "nearest", &["nearest", "clipped"])? {
            "clipped" => RepresentativeRule::ClippedCenter,
            _ => RepresentativeRule::NearestToCenter,
        };
        Ok(Self {
            lambda: cfg.f64("lambda", 1.0, 1e-6..=1e3)?,
            p: cfg.f64("p", 1.0, 1e-4..=1e3)?,
            rule,
            n: cfg.usize("n", 1, 1..=1000)?,
            alpha: cfg.opt_f64("alpha", 0.0..=1e6)?,
        })
    }
}

impl Job for Blocks {
    fn run(&self, ctx: &RunContext) -> Result<()> {
        let set = build_blocks(self.lambda, self.p, self.rule)?;
        let mut w = CsvWriter::new(Vec::new(), &["m1", "m2", "m3", "kx", "ky", "kz", "Mm"])?;
        for e in &set.entries {
            let mut cells: Vec<String> = e.m.iter().map(i64::to_string).collect();
            cells.extend(e.k.iter().map(|v| fmt_f64(*v)));
            cells.push(fmt_f64(e.weight));
            w.row(&cells)?;
        }
        ctx.write("blocks.csv", w.into_inner()?)?;
        let cutoff = match self.alpha {
            Some(a) => Some(CutoffParams::new(self.lambda, self.p, self.n, a)?),
            None => None,
        };
        let summary = Summary {
            lambda: self.lambda,
            p: self.p,
            rule: self.rule,
            count: set.len(),
            count_bound: set.count_bound(),
            total_weight_sqr: set.total_weight_sqr(),
            ball_integral: 4.0 * PI * self.lambda,
            n: self.n,
            head_constant: head_constant(self.n, self.lambda),
            tail_constant: tail_constant(self.n, self.lambda),
            cutoff,
        };
        if summary.count as f64 > summary.count_bound {
            eprintln!("note: {} blocks exceed (2Λ/P+1)³ = {}", summary.count, summary.count_bound);
        }
        ctx.write("blocks.json", json(&summary)?)?;
        Ok(())
    }
}
