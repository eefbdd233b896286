mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "pekar", version, about = "Batch driver for the pekar-core pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(clap::Args, Debug)]
struct Opts {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parent directory for run directories (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker cap; 1 gives byte-reproducible output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write the per-iteration trace CSV where one exists.
    #[arg(long, global = true)]
    trace: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Minimize the PT functional over N-electron determinants.
    Minimize,
    /// Scan the binding gap over a list of repulsion strengths.
    Binding,
    /// Energy sandwich and localization error budget.
    Bounds,
    /// Cutoff profile, ball merging and Monte-Carlo checks.
    Localize,
    /// Enumerate the momentum-space block modes.
    Blocks,
    /// Truncated-Fock ground energy of the block Hamiltonian.
    Oracle,
    /// Two separated clusters versus the sum of their energies.
    Subadd,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Minimize => "minimize",
            Command::Binding => "binding",
            Command::Bounds => "bounds",
            Command::Localize => "localize",
            Command::Blocks => "blocks",
            Command::Oracle => "oracle",
            Command::Subadd => "subadd",
        }
    }
}

/// Settings shared by every command.
pub struct RunContext {
    pub dir: PathBuf,
    pub seed: u64,
    pub trace: bool,
}

impl RunContext {
    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
    }
}

fn run(cli: Cli) -> Result<()> {
    let path = cli.opts.config.context("--config PATH is required")?;
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = RunConfig::parse(&text)?;

    let seed = match cli.opts.seed {
        Some(s) => {
            cfg.u64("seed", 0)?;
            s
        }
        None => cfg.u64("seed", 0)?,
    };
    let threads = match cli.opts.threads {
        Some(t) => {
            cfg.usize("threads", 0, 0..=4096)?;
            t
        }
        None => cfg.usize("threads", 0, 0..=4096)?,
    };
    let out_key = cfg.string("out");
    let out = cli.opts.out.or(out_key.map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }

    let mut hasher = Sha256::new();
    hasher.update(cli.command.name());
    hasher.update([0]);
    hasher.update(text.as_bytes());
    hasher.update([0]);
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    let hash: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    let dir = out.join(hash);

    let job: Box<dyn commands::Job> = match cli.command {
        Command::Minimize => Box::new(commands::minimize::Minimize::from_config(&cfg)?),
        Command::Binding => Box::new(commands::binding::Binding::from_config(&cfg)?),
        Command::Bounds => Box::new(commands::bounds::Bounds::from_config(&cfg)?),
        Command::Localize => Box::new(commands::localize::Localize::from_config(&cfg)?),
        Command::Blocks => Box::new(commands::blocks::Blocks::from_config(&cfg)?),
        Command::Oracle => Box::new(commands::oracle::Oracle::from_config(&cfg)?),
        Command::Subadd => Box::new(commands::subadd::Subadd::from_config(&cfg)?),
    };
    cfg.finish()?;

    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let ctx = RunContext { dir, seed, trace: cli.opts.trace };
    ctx.write("config.txt", &text)?;
    job.run(&ctx)?;
    println!("{}", ctx.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
