use anyhow::Result;
use pekar_core::io::{fmt_f64, CsvWriter};
use pekar_core::localization::{
    dirichlet_mode, estimate_fj, localization_error, make_cutoff, merge_balls, partition_integral, BallCluster,
    CutoffProfile, FjEstimate, McEstimate, MergeEvent, Point, MC_MAX_N,
};
use serde::Serialize;

use super::{json, Job};
use crate::config::RunConfig;
use crate::RunContext;

pub struct Localize {
    r: f64,
    resolution: usize,
    mollified: bool,
    centers: Vec<Point>,
    positions: Vec<Point>,
    mc_samples: usize,
}

#[derive(Serialize)]
struct Profile {
    r: f64,
    mollified: bool,
    dirichlet_energy: f64,
    budget: f64,
}

#[derive(Serialize)]
struct Merge {
    cluster: BallCluster,
    events: Vec<MergeEvent>,
    localization_error: f64,
}

#[derive(Serialize)]
struct MonteCarlo {
    positions: Vec<Point>,
    samples: usize,
    partition: McEstimate,
    fj: FjEstimate,
    fj_bound: f64,
}

#[derive(Serialize)]
struct Output {
    profile: Profile,
    #[serde(skip_serializing_if = "Option::is_none")]
    merge: Option<Merge>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<MonteCarlo>,
}

impl Localize {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let mollified = cfg.choice("profile", "mollified", &["mollified", "dirichlet"])? == "mollified";
        let positions = cfg.points("positions", -1e6..=1e6)?;
        if positions.len() > MC_MAX_N {
            anyhow::bail!("key `positions`: at most {MC_MAX_N} points, got {}", positions.len());
        }
        Ok(Self {
            r: cfg.f64("r", 1.0, 1e-6..=1e6)?,
            resolution: cfg.usize("resolution", 801, 11..=200_001)?,
            mollified,
            centers: cfg.points("centers", -1e9..=1e9)?,
            positions,
            mc_samples: cfg.usize("mc_samples", 20_000, 2..=100_000_000)?,
        })
    }

    fn profile(&self) -> Result<CutoffProfile> {
        Ok(if self.mollified { make_cutoff(self.r, self.resolution)? } else { dirichlet_mode(self.r, self.resolution)? })
    }
}

impl Job for Localize {
    fn run(&self, ctx: &RunContext) -> Result<()> {
        let chi = self.profile()?;
        let merge = if self.centers.is_empty() {
            None
        } else {
            let (cluster, events) = merge_balls(&self.centers, self.r)?;
            let mut w = CsvWriter::new(Vec::new(), &["ball", "cx", "cy", "cz", "radius", "occupancy"])?;
            for i in 0..cluster.m() {
                let c = cluster.centers[i];
                w.row(&[
                    i.to_string(),
                    fmt_f64(c[0]),
                    fmt_f64(c[1]),
                    fmt_f64(c[2]),
                    fmt_f64(cluster.radii[i]),
                    cluster.occupancies[i].to_string(),
                ])?;
            }
            ctx.write("balls.csv", w.into_inner()?)?;
            Some(Merge { cluster, events, localization_error: localization_error(self.centers.len(), self.r) })
        };
        let monte_carlo = if self.positions.is_empty() {
            None
        } else {
            let partition = partition_integral(&self.positions, &chi, self.mc_samples, ctx.seed)?;
            let fj = estimate_fj(std::slice::from_ref(&self.positions), &chi, self.mc_samples, ctx.seed)?.remove(0);
            for f in fj.per_electron.iter().chain([&partition]) {
                if f.flagged() {
                    eprintln!("warning: Monte-Carlo relative error above threshold: {f:?}");
                }
            }
            Some(MonteCarlo {
                positions: self.positions.clone(),
                samples: self.mc_samples,
                partition,
                fj,
                fj_bound: self.positions.len() as f64 * chi.dirichlet_energy,
            })
        };
        let out = Output {
            profile: Profile {
                r: chi.r,
                mollified: chi.mollified,
                dirichlet_energy: chi.dirichlet_energy,
                budget: chi.budget(),
            },
            merge,
            monte_carlo,
        };
        ctx.write("localize.json", json(&out)?)?;
        Ok(())
    }
}
