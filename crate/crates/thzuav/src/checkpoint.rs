//! Agent checkpoints: one file per network, one per optimizer state, and
//! a JSON sidecar with the config echo and training counters.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thzuav_core::neural::{decode_adam, decode_checkpoint, encode_adam, encode_checkpoint, DenseNet};
use thzuav_core::td3::Td3Agent;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::RunManifest;

const NETS: [&str; 6] = ["actor", "actor_target", "critic1", "critic2", "critic1_target", "critic2_target"];
const OPTS: [&str; 3] = ["actor", "critic1", "critic2"];

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    seed: u64,
    updates: u64,
    reward_stats: Option<(f64, f64)>,
    config: String,
}

fn nets(agent: &Td3Agent) -> [&DenseNet; 6] {
    [
        &agent.actor,
        &agent.actor_target,
        &agent.critic1,
        &agent.critic2,
        &agent.critic1_target,
        &agent.critic2_target,
    ]
}

/// Writes the agent under `sub/` of the manifest's directory.
pub fn save_agent(
    agent: &Td3Agent,
    seed: u64,
    cfg: &RunConfig,
    sub: &str,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    for (name, net) in NETS.iter().zip(nets(agent)) {
        manifest.write_output(&format!("{sub}/{name}.net"), &encode_checkpoint(net, seed))?;
    }
    for (name, st) in OPTS.iter().zip([&agent.actor_opt, &agent.critic1_opt, &agent.critic2_opt]) {
        manifest.write_output(&format!("{sub}/{name}.adam"), &encode_adam(st))?;
    }
    let side = Sidecar {
        seed,
        updates: agent.updates,
        reward_stats: agent.reward_stats,
        config: cfg.to_flat_string(),
    };
    let text = serde_json::to_string_pretty(&side).map_err(|e| CliError::io("checkpoint sidecar", e))?;
    manifest.write_output(&format!("{sub}/agent.json"), text.as_bytes())
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path.display(), e))
}

/// Loads an agent saved by [`save_agent`], checking every network against
/// the architecture `cfg` describes.
pub fn load_agent(dir: &Path, cfg: &RunConfig) -> Result<Td3Agent, CliError> {
    let side: Sidecar = serde_json::from_slice(&read(&dir.join("agent.json"))?)
        .map_err(|e| CliError::Config(format!("checkpoint sidecar: {e}")))?;
    let mut agent = Td3Agent::new(cfg.td3_config(), side.seed)?;
    let mut loaded = Vec::with_capacity(NETS.len());
    for (name, expected) in NETS.iter().zip(nets(&agent)) {
        let (net, _) = decode_checkpoint(&read(&dir.join(format!("{name}.net")))?)?;
        if !net.same_architecture(expected) {
            return Err(CliError::Config(format!(
                "checkpoint {name}: architecture {:?} does not match config {:?}",
                net.dims(),
                expected.dims()
            )));
        }
        loaded.push(net);
    }
    let mut it = loaded.into_iter();
    for slot in [
        &mut agent.actor,
        &mut agent.actor_target,
        &mut agent.critic1,
        &mut agent.critic2,
        &mut agent.critic1_target,
        &mut agent.critic2_target,
    ] {
        *slot = it.next().expect("six networks");
    }
    agent.actor_opt = decode_adam(&read(&dir.join("actor.adam"))?)?;
    agent.critic1_opt = decode_adam(&read(&dir.join("critic1.adam"))?)?;
    agent.critic2_opt = decode_adam(&read(&dir.join("critic2.adam"))?)?;
    agent.updates = side.updates;
    agent.reward_stats = side.reward_stats;
    Ok(agent)
}
