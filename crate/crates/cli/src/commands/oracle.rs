use anyhow::{bail, Result};
use pekar_core::fock::{
    coherent_bound, electron_ground, ground_energy, BlockHamiltonianSpec, ElectronSpace, OracleResult, TruncatedFock,
};
use pekar_core::phonon::{build_blocks, BlockModeSet, CutoffParams, RepresentativeRule};
use serde::Serialize;

use super::{grid, json, Job};
use crate::config::RunConfig;
use crate::RunContext;

pub struct Oracle {
    spec: BlockHamiltonianSpec,
    space_name: &'static str,
    n_max: Vec<usize>,
    tol: f64,
}

#[derive(Serialize)]
struct Record {
    n_max: usize,
    modes: usize,
    #[serde(flatten)]
    result: OracleResult,
}

#[derive(Serialize)]
struct Output<'a> {
    space: &'a str,
    sites: usize,
    alpha: f64,
    beta: f64,
    delta: f64,
    blocks: &'a BlockModeSet,
    electron_energy: f64,
    records: Vec<Record>,
    monotone_in_n_max: bool,
    coherent_bound: f64,
    coherent_above_ground: bool,
}

impl Oracle {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let space_name = cfg.choice("space", "chain", &["frozen", "chain", "grid"])?;
        let space = match space_name {
            "frozen" => ElectronSpace::Frozen,
            "grid" => ElectronSpace::Grid(grid(cfg, 8, 1.0)?),
            _ => ElectronSpace::Chain {
                sites: cfg.usize("sites", 8, 1..=100_000)?,
                spacing: cfg.f64("site_spacing", 1.0, 1e-3..=1e3)?,
            },
        };
        let lambda = cfg.f64("lambda", 1.0, 1e-6..=1e3)?;
        let p = cfg.f64("p", 1.0, 1e-4..=1e3)?;
        let alpha = cfg.f64("alpha", 1.0, 0.0..=1e6)?;
        let delta = cfg.f64("delta", 0.1, 1e-9..=0.999_999)?;
        let beta = match cfg.opt_f64("beta", 1e-9..=1e6)? {
            Some(b) => b,
            None => CutoffParams::new(lambda, p, 1, alpha)?.beta,
        };
        let modes = cfg.usize("modes", 3, 1..=64)?;
        let blocks = build_blocks(lambda, p, RepresentativeRule::default())?.strongest(modes);
        let depth = cfg.f64("v_depth", 0.0, -1e3..=1e3)?;
        let width = cfg.f64("v_width", 1.0, 1e-3..=1e3)?;
        let v = (depth != 0.0).then(|| {
            (0..space.sites())
                .map(|s| {
                    let x = space.position(s);
                    -depth * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (width * width)).exp()
                })
                .collect()
        });
        let mut n_max = cfg.usize_list("n_max", &[0, 1, 2, 3, 4], 0..=200)?;
        n_max.sort_unstable();
        n_max.dedup();
        if n_max.is_empty() {
            bail!("key `n_max`: need at least one value");
        }
        let spec = BlockHamiltonianSpec { space, v, beta, alpha, delta, blocks };
        spec.validate()?;
        for &n in &n_max {
            let len = TruncatedFock::expected_len(spec.blocks.len(), n);
            if len.saturating_mul(spec.space.sites()) > pekar_core::fock::MAX_DIMENSION {
                bail!("key `n_max`: {n} with {} modes exceeds the dimension limit", spec.blocks.len());
            }
        }
        Ok(Self { spec, space_name, n_max, tol: cfg.f64("tol", 1e-10, 1e-14..=1e-2)? })
    }
}

impl Job for Oracle {
    fn run(&self, ctx: &RunContext) -> Result<()> {
        let spec = &self.spec;
        let (e0, psi) = electron_ground(spec)?;
        let mut records = Vec::new();
        for &n in &self.n_max {
            let fock = TruncatedFock::new(spec.blocks.len(), n)?;
            let result = ground_energy(spec, &fock, self.tol)?;
            eprintln!("n_max = {n}: E = {} (dim {})", result.energy, result.dim);
            records.push(Record { n_max: n, modes: spec.blocks.len(), result });
        }
        let slack = 1e3 * self.tol;
        let monotone = records.windows(2).all(|w| w[1].result.energy <= w[0].result.energy + slack);
        let lowest = records.iter().map(|r| r.result.energy).fold(f64::INFINITY, f64::min);
        let cb = coherent_bound(&psi, spec)?;
        let out = Output {
            space: self.space_name,
            sites: spec.space.sites(),
            alpha: spec.alpha,
            beta: spec.beta,
            delta: spec.delta,
            blocks: &spec.blocks,
            electron_energy: e0,
            records,
            monotone_in_n_max: monotone,
            coherent_bound: cb,
            coherent_above_ground: cb >= lowest - slack,
        };
        ctx.write("oracle.json", json(&out)?)?;
        Ok(())
    }
}
