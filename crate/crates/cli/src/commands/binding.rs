use anyhow::{bail, Result};
use pekar_core::bounds::{binding_gap, BINDING_LABEL};
use pekar_core::io::{fmt_f64, CsvWriter};
use pekar_core::minimizer::{minimize_pt, InitStrategy, MinimizerConfig, DETERMINANT_LABEL};
use pekar_core::{Grid3, SlaterState};
use serde::Serialize;

use super::{grid, json, minimizer, Fields, GridInfo, Job};
use crate::config::RunConfig;
use crate::RunContext;

/// Relative size of the noise added to a warm start.
const WARM_START_NOISE: f64 = 1e-3;

pub struct Binding {
    n: usize,
    alpha: f64,
    nus: Vec<f64>,
    grid: Grid3,
    fields: Fields,
    cfg: MinimizerConfig,
}

#[derive(Serialize, Clone)]
struct Entry {
    k: usize,
    energy: Option<f64>,
    converged: bool,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct Row {
    nu: f64,
    entries: Vec<Entry>,
    gap: Option<f64>,
    binding: Option<bool>,
    status: String,
}

#[derive(Serialize)]
struct Output<'a> {
    n: usize,
    alpha: f64,
    grid: GridInfo,
    label: &'a str,
    c_values: &'a str,
    rows: Vec<Row>,
}

impl Binding {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let nus = cfg.f64_list("nu_values", &[], 0.0..=1e4)?;
        if nus.is_empty() {
            bail!("key `nu_values`: need at least one value");
        }
        Ok(Self {
            n: cfg.usize("n", 2, 2..=16)?,
            alpha: cfg.f64("alpha", 1.0, 0.0..=1e4)?,
            nus,
            grid: grid(cfg, 32, 1.5)?,
            fields: Fields::from_config(cfg)?,
            cfg: minimizer(cfg)?,
        })
    }

    fn solve(&self, k: usize, nu: f64, cfg: &MinimizerConfig, warm: Option<&SlaterState>) -> (Entry, Option<SlaterState>) {
        let mut cfg = cfg.clone();
        if let Some(prev) = warm {
            cfg.init = InitStrategy::PerturbedPrevious { previous: prev.clone(), amplitude: WARM_START_NOISE };
        }
        let run = self.fields.params(self.grid, self.alpha, nu).and_then(|p| Ok(minimize_pt(k, &self.grid, &p, &cfg)?));
        match run {
            Ok(r) => (
                Entry { k, energy: Some(r.energy), converged: r.converged, warnings: r.warnings, error: None },
                Some(r.state),
            ),
            Err(e) => (
                Entry { k, energy: None, converged: false, warnings: Vec::new(), error: Some(format!("{e:#}")) },
                None,
            ),
        }
    }
}

impl Job for Binding {
    fn run(&self, ctx: &RunContext) -> Result<()> {
        let cfg = MinimizerConfig { seed: ctx.seed, ..self.cfg.clone() };
        // one electron never feels the repulsion, so C_1 is shared by every row
        let (c1, _) = self.solve(1, 0.0, &cfg, None);
        let mut warm: Vec<Option<SlaterState>> = vec![None; self.n + 1];
        let mut rows = Vec::new();
        for &nu in &self.nus {
            let mut entries = vec![c1.clone()];
            for k in 2..=self.n {
                let (e, state) = self.solve(k, nu, &cfg, warm[k].as_ref());
                if state.is_some() {
                    warm[k] = state;
                }
                entries.push(e);
            }
            let mut c: Vec<Option<f64>> = vec![Some(0.0)];
            c.extend(entries.iter().map(|e| e.energy));
            let gap = binding_gap(&c).ok();
            let mut flags: Vec<String> = Vec::new();
            for e in &entries {
                if let Some(err) = &e.error {
                    flags.push(format!("C_{} failed: {err}", e.k));
                } else if !e.converged {
                    flags.push(format!("C_{} not converged", e.k));
                } else if !e.warnings.is_empty() {
                    flags.push(format!("C_{} flagged", e.k));
                }
            }
            eprintln!("nu = {nu}: gap = {gap:?}");
            rows.push(Row {
                nu,
                entries,
                gap,
                binding: gap.map(|g| g > 0.0),
                status: if flags.is_empty() { "ok".into() } else { flags.join("; ") },
            });
        }

        let mut header: Vec<String> = vec!["nu".into()];
        header.extend((1..=self.n).map(|k| format!("C_{k}")));
        header.extend(["gap".into(), "status".into()]);
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut w = CsvWriter::new(Vec::new(), &header)?;
        let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "nan".into());
        for r in &rows {
            let mut cells = vec![fmt_f64(r.nu)];
            cells.extend(r.entries.iter().map(|e| cell(e.energy)));
            cells.push(cell(r.gap));
            cells.push(r.status.replace(',', ";"));
            w.row(&cells)?;
        }
        ctx.write("binding.csv", w.into_inner()?)?;
        let out = Output {
            n: self.n,
            alpha: self.alpha,
            grid: (&self.grid).into(),
            label: BINDING_LABEL,
            c_values: DETERMINANT_LABEL,
            rows,
        };
        ctx.write("binding.json", json(&out)?)?;
        Ok(())
    }
}
