//! The four subcommands. Each takes a resolved config and writes only
//! under its output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;
use thzuav_core::baseline::{argmin, grid_scan, static_center_policy};
use thzuav_core::channel::{
    free_space_loss, linear_to_db, outage_probability, LinkBudget, LinkState, LosState, Orientation,
};
use thzuav_core::environment::{Environment, Topology};
use thzuav_core::rng::mix;
use thzuav_core::td3::{greedy_rollout, moving_average, run_mission, Td3Agent, Trajectory};
use thzuav_core::Vec3;

use crate::checkpoint::{load_agent, save_agent};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::tables::{Cell, Table};

pub const REWARDS_FILE: &str = "rewards.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const LAYOUT_FILE: &str = "sbs_layout.csv";
pub const GRID_FILE: &str = "baseline_grid.csv";
pub const SUMMARY_FILE: &str = "baseline_summary.csv";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const MOVING_AVERAGE_WINDOW: usize = 40;

/// Seeds derived from the run seed.
pub fn agent_seed(seed: u64) -> u64 {
    mix(seed, 0xA6E7)
}

pub fn buffer_seed(seed: u64) -> u64 {
    mix(seed, 0xB0FF)
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

fn environment(cfg: &RunConfig, scenario_seed: u64) -> Result<Environment, CliError> {
    Ok(Environment::new(cfg.env_config()?, cfg.channel_params()?, scenario_seed)?)
}

fn trace_table(cfg: &RunConfig, seed: u64, rounds: &[(usize, &Trajectory)]) -> Table {
    let links = rounds
        .iter()
        .map(|(_, t)| t.points[0].per_link_outage.len())
        .max()
        .unwrap_or(0);
    let mut header: Vec<String> = ["round", "step", "t", "x", "y", "z", "max_outage"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=links).map(|k| format!("outage_{k}")));
    let mut table = Table::new(&header)
        .meta("seed", seed)
        .meta("eval_seed", cfg.run.eval_seed)
        .meta("mc_samples", cfg.env.eval_mc_samples)
        .meta("version", env!("CARGO_PKG_VERSION"));
    for (round, traj) in rounds {
        for p in &traj.points {
            let mut row: Vec<Cell> = vec![
                (*round).into(),
                p.step.into(),
                p.time.into(),
                p.position.x.into(),
                p.position.y.into(),
                p.position.z.into(),
                p.max_outage.into(),
            ];
            row.extend((0..links).map(|k| match p.per_link_outage.get(k) {
                Some(&v) => v.into(),
                None => "".into(),
            }));
            table.push(row);
        }
    }
    table
}

fn layout_table(seed: u64, rounds: &[(usize, &[Vec3])]) -> Table {
    let mut t = Table::new(&["round", "sbs", "x", "y", "z"]).meta("seed", seed);
    for (round, sbs) in rounds {
        for (k, p) in sbs.iter().enumerate() {
            t.push(vec![(*round).into(), (k + 1).into(), p.x.into(), p.y.into(), p.z.into()]);
        }
    }
    t
}

#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub out_dir: PathBuf,
    pub episode_rewards: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub sbs_positions: Vec<Vec<Vec3>>,
}

/// Trains per topology round, then writes rewards, trace, layout,
/// checkpoint and manifest.
pub fn cmd_train(cfg: &RunConfig, out_dir: &Path, seed: u64) -> Result<TrainArtifacts, CliError> {
    cfg.validate()?;
    prepare_dir(out_dir)?;
    let seeds = json!({
        "seed": seed,
        "agent_seed": agent_seed(seed),
        "buffer_seed": buffer_seed(seed),
        "eval_seed": cfg.run.eval_seed,
    });
    let mut manifest = RunManifest::begin("train", cfg, seeds, out_dir)?;
    let mut env = environment(cfg, seed)?;
    let mut agent = Td3Agent::new(cfg.td3_config(), agent_seed(seed))?;
    let rounds = run_mission(
        &mut env,
        &mut agent,
        cfg.run.mission_rounds,
        cfg.env.eval_mc_samples,
        buffer_seed(seed),
        cfg.run.eval_seed,
    )?;

    let mut rewards = Table::new(&[
        "round",
        "episode",
        "reward",
        "moving_avg_40",
        "final_max_outage",
        "episode_seconds",
    ])
    .meta("seed", seed)
    .meta("version", env!("CARGO_PKG_VERSION"));
    for (r, round) in rounds.iter().enumerate() {
        let log = &round.log;
        let ma = moving_average(&log.episode_rewards, MOVING_AVERAGE_WINDOW);
        for (k, (&reward, &avg)) in log.episode_rewards.iter().zip(&ma).enumerate() {
            rewards.push(vec![
                r.into(),
                (k + 1).into(),
                reward.into(),
                avg.into(),
                log.final_max_outage[k].into(),
                log.episode_seconds[k].into(),
            ]);
        }
    }
    manifest.write_output(REWARDS_FILE, &rewards.to_bytes()?)?;
    let trajs: Vec<(usize, &Trajectory)> = rounds.iter().enumerate().map(|(r, m)| (r, &m.trajectory)).collect();
    manifest.write_output(TRACE_FILE, &trace_table(cfg, seed, &trajs).to_bytes()?)?;
    let layouts: Vec<(usize, &[Vec3])> = rounds.iter().enumerate().map(|(r, m)| (r, m.sbs_positions.as_slice())).collect();
    manifest.write_output(LAYOUT_FILE, &layout_table(seed, &layouts).to_bytes()?)?;
    save_agent(&agent, agent_seed(seed), cfg, CHECKPOINT_DIR, &mut manifest)?;
    manifest.finish()?;

    Ok(TrainArtifacts {
        out_dir: out_dir.to_path_buf(),
        episode_rewards: rounds.iter().flat_map(|m| m.log.episode_rewards.iter().copied()).collect(),
        sbs_positions: rounds.iter().map(|m| m.sbs_positions.clone()).collect(),
        trajectories: rounds.into_iter().map(|m| m.trajectory).collect(),
    })
}

/// Greedy rollout of a saved agent on the first topology of `scenario_seed`,
/// re-scored with evaluation-grade sampling.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path, scenario_seed: u64, out_dir: &Path) -> Result<Trajectory, CliError> {
    cfg.validate()?;
    let agent = load_agent(checkpoint, cfg)?;
    prepare_dir(out_dir)?;
    let seeds = json!({ "scenario_seed": scenario_seed, "eval_seed": cfg.run.eval_seed });
    let mut manifest = RunManifest::begin("eval", cfg, seeds, out_dir)?;
    let mut env = environment(cfg, scenario_seed)?;
    let traj = greedy_rollout(
        &mut env,
        &agent,
        cfg.td3.steps_per_episode,
        cfg.env.eval_mc_samples,
        cfg.run.eval_seed,
    )?;
    manifest.write_output(TRACE_FILE, &trace_table(cfg, scenario_seed, &[(0, &traj)]).to_bytes()?)?;
    let sbs = env.topology().positions();
    manifest.write_output(LAYOUT_FILE, &layout_table(scenario_seed, &[(0, &sbs)]).to_bytes()?)?;
    manifest.finish()?;
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSummary {
    pub oracle: (Vec3, f64),
    pub static_center: (Vec3, f64),
    pub grid_rows: usize,
}

/// Grid oracle and static centroid on the first topology of `scenario_seed`.
pub fn cmd_baseline(cfg: &RunConfig, scenario_seed: u64, out_dir: &Path) -> Result<BaselineSummary, CliError> {
    cfg.validate()?;
    prepare_dir(out_dir)?;
    let seeds = json!({ "scenario_seed": scenario_seed, "eval_seed": cfg.run.eval_seed });
    let mut manifest = RunManifest::begin("baseline", cfg, seeds, out_dir)?;
    let env = environment(cfg, scenario_seed)?;
    let params = cfg.channel_params()?;
    let spec = cfg.grid_spec();
    let scan = grid_scan(env.topology(), &params, &spec)?;
    let best = argmin(&scan).ok_or_else(|| CliError::Config("empty grid".into()))?;

    let mut grid = Table::new(&["x", "y", "z", "max_outage"])
        .meta("scenario_seed", scenario_seed)
        .meta("eval_seed", spec.seed)
        .meta("mc_samples", spec.mc_samples);
    for s in &scan {
        grid.push(vec![s.position.x.into(), s.position.y.into(), s.position.z.into(), s.max_outage.into()]);
    }
    manifest.write_output(GRID_FILE, &grid.to_bytes()?)?;

    let centre = static_center_policy(env.topology(), &cfg.limits())?;
    let centre_out = outage_probability(&env.topology().sbs_list, centre, &params, spec.mc_samples, spec.seed)?.max()?;
    let oracle = (scan[best].position, scan[best].max_outage);
    let mut summary = Table::new(&["method", "x", "y", "z", "max_outage"])
        .meta("scenario_seed", scenario_seed)
        .meta("eval_seed", spec.seed)
        .meta("mc_samples", spec.mc_samples);
    for (name, (p, v)) in [("oracle", oracle), ("static_center", (centre, centre_out))] {
        summary.push(vec![name.into(), p.x.into(), p.y.into(), p.z.into(), v.into()]);
    }
    manifest.write_output(SUMMARY_FILE, &summary.to_bytes()?)?;
    let sbs = env.topology().positions();
    manifest.write_output(LAYOUT_FILE, &layout_table(scenario_seed, &[(0, &sbs)]).to_bytes()?)?;
    manifest.finish()?;
    Ok(BaselineSummary {
        oracle,
        static_center: (centre, centre_out),
        grid_rows: scan.len(),
    })
}

/// Per-link report for a UAV position and ground SBSs, at zero jitter with
/// every link in LoS.
pub fn cmd_linkbudget(cfg: &RunConfig, uav: Vec3, sbs: &[(f64, f64)]) -> Result<String, CliError> {
    cfg.validate()?;
    if sbs.is_empty() {
        return Err(CliError::Config("linkbudget needs at least one --sbs".into()));
    }
    let env_cfg = cfg.env_config()?;
    let params = cfg.channel_params()?;
    let topo = Topology::with_positions(&env_cfg, sbs).map_err(|e| CliError::Config(format!("sbs list: {e}")))?;
    let links: Vec<LinkState> = topo
        .sbs_list
        .iter()
        .map(|l| LinkState {
            los: LosState::Los,
            ..*l
        })
        .collect();
    for (k, l) in links.iter().enumerate() {
        if (uav - l.sbs_position).norm() <= 0.0 || uav.z <= 0.0 {
            return Err(CliError::Config(format!("link {}: degenerate geometry", k + 1)));
        }
    }
    let budget = LinkBudget::new(&links, uav, &params).map_err(|e| CliError::Config(format!("link budget: {e}")))?;
    let alpha = budget.fixed_los_factors();
    let o = Orientation::default();
    let mut t = Table::new(&[
        "link",
        "length_m",
        "elevation_deg",
        "p_los",
        "free_space_db",
        "path_loss_db",
        "uav_gain_db",
        "sbs_gain_db",
        "signal_w",
        "interference_w",
        "sinr_db",
        "verdict",
    ])
    .meta("uav", format!("{} {} {}", uav.x, uav.y, uav.z))
    .meta("noise_w", crate::tables::fmt_f64(params.noise_power_w))
    .meta("threshold_db", cfg.channel.sinr_threshold_db);
    for i in 0..budget.len() {
        let interference: f64 = (0..budget.len())
            .filter(|&j| j != i)
            .map(|j| budget.interference_power(i, j, o, &alpha))
            .sum();
        let sinr = budget.sinr(i, o, &alpha);
        let verdict = if sinr >= params.sinr_threshold { "ok" } else { "outage" };
        t.push(vec![
            (i + 1).into(),
            budget.length(i).into(),
            budget.elevation(i).to_degrees().into(),
            budget.los_probability(i).into(),
            linear_to_db(free_space_loss(&params, budget.length(i))?).into(),
            linear_to_db(budget.path_loss(i)).into(),
            linear_to_db(budget.uav_peak_gain(i)).into(),
            linear_to_db(budget.sbs_gain(i)).into(),
            budget.desired_power(i, o, &alpha).into(),
            interference.into(),
            linear_to_db(sinr).into(),
            verdict.into(),
        ]);
    }
    let bytes = t.to_bytes()?;
    let mut out = String::new();
    let _ = write!(out, "{}", String::from_utf8_lossy(&bytes));
    Ok(out)
}
