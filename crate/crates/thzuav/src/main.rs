use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thzuav::commands::{cmd_baseline, cmd_eval, cmd_linkbudget, cmd_train};
use thzuav::{CliError, RunConfig};
use thzuav_core::Vec3;

#[derive(Debug, Parser)]
#[command(name = "thzuav", version, about = "UAV trajectory training over directional THz fronthaul links")]
struct Cli {
    /// Flat `section.key = value` config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed; also selects the scenario for eval and baseline.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides evaluation-grade and grid-oracle Monte-Carlo sample counts.
    #[arg(long, global = true)]
    mc_samples: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on the seed's topology and write rewards, trace and checkpoint.
    Train,
    /// Roll out a saved agent and write its trajectory trace.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Grid-search oracle and static-centre baseline for the seed's topology.
    Baseline,
    /// One-shot per-link budget.
    Linkbudget {
        /// UAV position `x,y,z` in metres.
        #[arg(long, value_parser = parse_vec3)]
        uav: Vec3,
        /// Ground SBS position `x,y`; repeat per link.
        #[arg(long = "sbs", value_parser = parse_xy, required = true)]
        sbs: Vec<(f64, f64)>,
    },
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers"));
    }
    Ok(v)
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v = parse_floats(s, 3)?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn parse_xy(s: &str) -> Result<(f64, f64), String> {
    let v = parse_floats(s, 2)?;
    Ok((v[0], v[1]))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(n) = cli.mc_samples {
        cfg.env.eval_mc_samples = n;
        cfg.baseline.mc_samples = n;
    }
    cfg.validate()?;
    let seed = cfg.run.seed;
    match cli.command {
        Command::Train => {
            let a = cmd_train(&cfg, &cli.out_dir, seed)?;
            println!("wrote {} episodes to {}", a.episode_rewards.len(), a.out_dir.display());
        }
        Command::Eval { checkpoint } => {
            let t = cmd_eval(&cfg, &checkpoint, seed, &cli.out_dir)?;
            println!(
                "max outage {:.4} -> {:.4} over {} steps",
                t.initial().max_outage,
                t.last().max_outage,
                t.actions.len()
            );
        }
        Command::Baseline => {
            let s = cmd_baseline(&cfg, seed, &cli.out_dir)?;
            println!("oracle {:.4}, static centre {:.4}", s.oracle.1, s.static_center.1);
        }
        Command::Linkbudget { uav, sbs } => print!("{}", cmd_linkbudget(&cfg, uav, &sbs)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("thzuav: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
