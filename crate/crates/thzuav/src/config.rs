//! Run configuration: flat `section.key = value` text (valid TOML), with
//! interface units (dBm, dB, degrees, GHz) converted to SI on resolution.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thzuav_core::antenna::ArrayAntennaConfig;
use thzuav_core::baseline::GridSearchSpec;
use thzuav_core::channel::{db_to_linear, dbm_to_watts, ChannelParams, InterferencePath, LosSampling};
use thzuav_core::environment::{AltitudeRule, EnvConfig, SbsLayout};
use thzuav_core::geometry::KinematicLimits;
use thzuav_core::td3::Td3Config;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub area_x: f64,
    pub area_y: f64,
    pub dt: f64,
    pub m_s_min: usize,
    pub m_s_max: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub m_d_max: usize,
    pub train_mc_samples: u32,
    pub eval_mc_samples: u32,
    pub p_floor: f64,
    pub outage_threshold: f64,
    /// `reject` or `clamp_z`.
    pub altitude_rule: String,
    pub confine_horizontal: bool,
    /// `uniform` or `clustered`.
    pub layout: String,
    pub cluster_spread: f64,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            area_x: 150.0,
            area_y: 150.0,
            dt: 1.0,
            m_s_min: 2,
            m_s_max: 4,
            t_min: 20.0,
            t_max: 35.0,
            m_d_max: 2,
            train_mc_samples: 500,
            eval_mc_samples: 100_000,
            p_floor: 1e-9,
            outage_threshold: 0.1,
            altitude_rule: "reject".into(),
            confine_horizontal: false,
            layout: "uniform".into(),
            cluster_spread: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicsSection {
    pub v_max: f64,
    pub a_max: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for KinematicsSection {
    fn default() -> Self {
        let k = KinematicLimits::default();
        Self {
            v_max: k.v_max,
            a_max: k.a_max,
            h_min: k.h_min,
            h_max: k.h_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaSection {
    pub uav_n_side: u32,
    pub sbs_n_side: u32,
    pub spacing_over_lambda: f64,
}

impl Default for AntennaSection {
    fn default() -> Self {
        Self {
            uav_n_side: 20,
            sbs_n_side: 10,
            spacing_over_lambda: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub carrier_ghz: f64,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub sinr_threshold_db: f64,
    /// Molecular absorption coefficient (1/m).
    pub absorption_coeff: f64,
    pub los_alpha: f64,
    pub los_b: f64,
    pub nlos_extra_loss: f64,
    pub vibration_std_deg: f64,
    pub roll_deg: f64,
    /// `per_sample`, `per_estimate` or `fixed`.
    pub los_sampling: String,
    /// `victim` or `interferer`.
    pub interference_path: String,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            carrier_ghz: 140.0,
            tx_power_dbm: 10.0,
            noise_power_dbm: -190.0,
            sinr_threshold_db: 5.0,
            absorption_coeff: 1e-3,
            los_alpha: 9.61,
            los_b: 0.16,
            nlos_extra_loss: 0.01,
            vibration_std_deg: 2.0,
            roll_deg: 0.0,
            los_sampling: "per_sample".into(),
            interference_path: "victim".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Section {
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub discount: f64,
    pub tau: f64,
    pub policy_delay: u32,
    pub exploration_noise_std: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub warmup_steps: usize,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub normalize_rewards: bool,
}

impl Default for Td3Section {
    fn default() -> Self {
        let t = Td3Config::default();
        Self {
            hidden: t.hidden,
            actor_lr: t.actor_lr,
            critic_lr: t.critic_lr,
            discount: t.discount,
            tau: t.tau,
            policy_delay: t.policy_delay,
            exploration_noise_std: t.exploration_noise_std,
            target_noise_std: t.target_noise_std,
            target_noise_clip: t.target_noise_clip,
            batch_size: t.batch_size,
            buffer_capacity: t.buffer_capacity,
            warmup_steps: t.warmup_steps,
            episodes: t.episodes,
            steps_per_episode: t.steps_per_episode,
            normalize_rewards: t.normalize_rewards,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub x_steps: usize,
    pub y_steps: usize,
    pub z_steps: usize,
    pub mc_samples: u32,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            x_steps: 15,
            y_steps: 15,
            z_steps: 5,
            mc_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Shared Monte-Carlo seed of trajectory re-scoring and the grid oracle.
    pub eval_seed: u64,
    /// Topology rounds flown by `train`.
    pub mission_rounds: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            eval_seed: 7,
            mission_rounds: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvSection,
    pub kinematics: KinematicsSection,
    pub antenna: AntennaSection,
    pub channel: ChannelSection,
    pub td3: Td3Section,
    pub baseline: BaselineSection,
    pub run: RunSection,
}

fn bad(key: &str, why: &str) -> CliError {
    CliError::Config(format!("{key}: {why}"))
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, "must be positive and finite"))
    }
}

fn finite(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, "must be finite"))
    }
}

fn unit_interval(key: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(bad(key, "must lie in [0, 1]"))
    }
}

fn nonzero(key: &str, v: usize) -> Result<(), CliError> {
    if v > 0 {
        Ok(())
    } else {
        Err(bad(key, "must be at least 1"))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Checks every key's range, naming the offending key on failure.
    pub fn validate(&self) -> Result<(), CliError> {
        let e = &self.env;
        positive("env.area_x", e.area_x)?;
        positive("env.area_y", e.area_y)?;
        positive("env.dt", e.dt)?;
        nonzero("env.m_s_min", e.m_s_min)?;
        if e.m_s_max < e.m_s_min {
            return Err(bad("env.m_s_max", "must be at least env.m_s_min"));
        }
        positive("env.t_min", e.t_min)?;
        if !(e.t_max >= e.t_min && e.t_max.is_finite()) {
            return Err(bad("env.t_max", "must be at least env.t_min"));
        }
        nonzero("env.train_mc_samples", e.train_mc_samples as usize)?;
        nonzero("env.eval_mc_samples", e.eval_mc_samples as usize)?;
        if !(e.p_floor > 0.0 && e.p_floor < 1.0) {
            return Err(bad("env.p_floor", "must lie in (0, 1)"));
        }
        unit_interval("env.outage_threshold", e.outage_threshold)?;
        self.altitude_rule()?;
        self.layout()?;
        if !(e.cluster_spread >= 0.0 && e.cluster_spread.is_finite()) {
            return Err(bad("env.cluster_spread", "must be non-negative"));
        }

        let k = &self.kinematics;
        positive("kinematics.v_max", k.v_max)?;
        positive("kinematics.a_max", k.a_max)?;
        finite("kinematics.h_min", k.h_min)?;
        if k.h_min <= 0.0 {
            return Err(bad("kinematics.h_min", "must be positive"));
        }
        if !(k.h_max > k.h_min && k.h_max.is_finite()) {
            return Err(bad("kinematics.h_max", "must exceed kinematics.h_min"));
        }

        let a = &self.antenna;
        nonzero("antenna.uav_n_side", a.uav_n_side as usize)?;
        nonzero("antenna.sbs_n_side", a.sbs_n_side as usize)?;
        positive("antenna.spacing_over_lambda", a.spacing_over_lambda)?;

        let c = &self.channel;
        positive("channel.carrier_ghz", c.carrier_ghz)?;
        finite("channel.tx_power_dbm", c.tx_power_dbm)?;
        finite("channel.noise_power_dbm", c.noise_power_dbm)?;
        finite("channel.sinr_threshold_db", c.sinr_threshold_db)?;
        if !(c.absorption_coeff >= 0.0 && c.absorption_coeff.is_finite()) {
            return Err(bad("channel.absorption_coeff", "must be non-negative"));
        }
        if !(c.los_alpha >= 0.0 && c.los_alpha.is_finite()) {
            return Err(bad("channel.los_alpha", "must be non-negative"));
        }
        if !(c.los_b >= 0.0 && c.los_b.is_finite()) {
            return Err(bad("channel.los_b", "must be non-negative"));
        }
        unit_interval("channel.nlos_extra_loss", c.nlos_extra_loss)?;
        if !(c.vibration_std_deg >= 0.0 && c.vibration_std_deg.is_finite()) {
            return Err(bad("channel.vibration_std_deg", "must be non-negative"));
        }
        finite("channel.roll_deg", c.roll_deg)?;
        self.los_sampling()?;
        self.interference_path()?;

        let t = &self.td3;
        if t.hidden.is_empty() || t.hidden.contains(&0) {
            return Err(bad("td3.hidden", "must list positive layer widths"));
        }
        if !(t.actor_lr >= 0.0 && t.actor_lr.is_finite()) {
            return Err(bad("td3.actor_lr", "must be non-negative"));
        }
        if !(t.critic_lr >= 0.0 && t.critic_lr.is_finite()) {
            return Err(bad("td3.critic_lr", "must be non-negative"));
        }
        if !(t.discount > 0.0 && t.discount < 1.0) {
            return Err(bad("td3.discount", "must lie in (0, 1)"));
        }
        unit_interval("td3.tau", t.tau)?;
        nonzero("td3.policy_delay", t.policy_delay as usize)?;
        for (key, v) in [
            ("td3.exploration_noise_std", t.exploration_noise_std),
            ("td3.target_noise_std", t.target_noise_std),
            ("td3.target_noise_clip", t.target_noise_clip),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(key, "must be non-negative"));
            }
        }
        nonzero("td3.batch_size", t.batch_size)?;
        nonzero("td3.buffer_capacity", t.buffer_capacity)?;
        nonzero("td3.episodes", t.episodes)?;
        nonzero("td3.steps_per_episode", t.steps_per_episode)?;

        let b = &self.baseline;
        nonzero("baseline.x_steps", b.x_steps)?;
        nonzero("baseline.y_steps", b.y_steps)?;
        nonzero("baseline.z_steps", b.z_steps)?;
        nonzero("baseline.mc_samples", b.mc_samples as usize)?;
        nonzero("run.mission_rounds", self.run.mission_rounds)?;

        // Cross-field checks owned by the core types.
        self.env_config()?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.channel_params()?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.td3_config().validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    fn altitude_rule(&self) -> Result<AltitudeRule, CliError> {
        match self.env.altitude_rule.as_str() {
            "reject" => Ok(AltitudeRule::RejectAction),
            "clamp_z" => Ok(AltitudeRule::ClampZ),
            _ => Err(bad("env.altitude_rule", "expected `reject` or `clamp_z`")),
        }
    }

    fn layout(&self) -> Result<SbsLayout, CliError> {
        match self.env.layout.as_str() {
            "uniform" => Ok(SbsLayout::Uniform),
            "clustered" => Ok(SbsLayout::Clustered {
                spread: self.env.cluster_spread,
            }),
            _ => Err(bad("env.layout", "expected `uniform` or `clustered`")),
        }
    }

    fn los_sampling(&self) -> Result<LosSampling, CliError> {
        match self.channel.los_sampling.as_str() {
            "per_sample" => Ok(LosSampling::PerSample),
            "per_estimate" => Ok(LosSampling::PerEstimate),
            "fixed" => Ok(LosSampling::Fixed),
            _ => Err(bad("channel.los_sampling", "expected `per_sample`, `per_estimate` or `fixed`")),
        }
    }

    fn interference_path(&self) -> Result<InterferencePath, CliError> {
        match self.channel.interference_path.as_str() {
            "victim" => Ok(InterferencePath::VictimLink),
            "interferer" => Ok(InterferencePath::InterfererLink),
            _ => Err(bad("channel.interference_path", "expected `victim` or `interferer`")),
        }
    }

    pub fn limits(&self) -> KinematicLimits {
        KinematicLimits {
            v_max: self.kinematics.v_max,
            a_max: self.kinematics.a_max,
            h_min: self.kinematics.h_min,
            h_max: self.kinematics.h_max,
        }
    }

    pub fn carrier_hz(&self) -> f64 {
        self.channel.carrier_ghz * 1e9
    }

    pub fn uav_array(&self) -> ArrayAntennaConfig {
        ArrayAntennaConfig {
            spacing_over_lambda: self.antenna.spacing_over_lambda,
            ..ArrayAntennaConfig::broadside(self.antenna.uav_n_side, self.carrier_hz())
        }
    }

    pub fn env_config(&self) -> Result<EnvConfig, CliError> {
        let e = &self.env;
        Ok(EnvConfig {
            area_x: e.area_x,
            area_y: e.area_y,
            limits: self.limits(),
            dt: e.dt,
            m_s_min: e.m_s_min,
            m_s_max: e.m_s_max,
            t_min: e.t_min,
            t_max: e.t_max,
            m_d_max: e.m_d_max,
            tx_power_w: dbm_to_watts(self.channel.tx_power_dbm),
            uav_array: self.uav_array(),
            sbs_n_side: self.antenna.sbs_n_side,
            train_mc_samples: e.train_mc_samples,
            eval_mc_samples: e.eval_mc_samples,
            p_floor: e.p_floor,
            outage_threshold: e.outage_threshold,
            altitude_rule: self.altitude_rule()?,
            confine_horizontal: e.confine_horizontal,
            layout: self.layout()?,
        })
    }

    pub fn channel_params(&self) -> Result<ChannelParams, CliError> {
        let c = &self.channel;
        Ok(ChannelParams {
            carrier_hz: self.carrier_hz(),
            absorption_coeff: c.absorption_coeff,
            noise_power_w: dbm_to_watts(c.noise_power_dbm),
            sinr_threshold: db_to_linear(c.sinr_threshold_db),
            los_alpha: c.los_alpha,
            los_b: c.los_b,
            nlos_extra_loss: c.nlos_extra_loss,
            vibration_std_rad: c.vibration_std_deg.to_radians(),
            roll_rad: c.roll_deg.to_radians(),
            los_sampling: self.los_sampling()?,
            interference_path: self.interference_path()?,
        })
    }

    pub fn td3_config(&self) -> Td3Config {
        let t = &self.td3;
        Td3Config {
            hidden: t.hidden.clone(),
            actor_lr: t.actor_lr,
            critic_lr: t.critic_lr,
            discount: t.discount,
            tau: t.tau,
            policy_delay: t.policy_delay,
            exploration_noise_std: t.exploration_noise_std,
            target_noise_std: t.target_noise_std,
            target_noise_clip: t.target_noise_clip,
            batch_size: t.batch_size,
            buffer_capacity: t.buffer_capacity,
            warmup_steps: t.warmup_steps,
            episodes: t.episodes,
            steps_per_episode: t.steps_per_episode,
            normalize_rewards: t.normalize_rewards,
        }
    }

    pub fn grid_spec(&self) -> GridSearchSpec {
        GridSearchSpec {
            x_steps: self.baseline.x_steps,
            y_steps: self.baseline.y_steps,
            z_steps: self.baseline.z_steps,
            x_range: (0.0, self.env.area_x),
            y_range: (0.0, self.env.area_y),
            z_range: (self.kinematics.h_min, self.kinematics.h_max),
            mc_samples: self.baseline.mc_samples,
            seed: self.run.eval_seed,
        }
    }

    /// Flat `section.key = value` rendering; parses back to `self`.
    pub fn to_flat_string(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes to a TOML table");
        let mut out = String::new();
        if let toml::Value::Table(sections) = value {
            for (section, body) in sections {
                if let toml::Value::Table(keys) = body {
                    for (key, v) in keys {
                        let _ = writeln!(out, "{section}.{key} = {}", render(&v));
                    }
                }
            }
        }
        out
    }

    /// SI values derived from interface units, recorded in manifests.
    pub fn si_echo(&self) -> Result<serde_json::Value, CliError> {
        let ch = self.channel_params()?;
        let env = self.env_config()?;
        Ok(serde_json::json!({
            "carrier_hz": ch.carrier_hz,
            "tx_power_w": env.tx_power_w,
            "noise_power_w": ch.noise_power_w,
            "sinr_threshold_linear": ch.sinr_threshold,
            "vibration_std_rad": ch.vibration_std_rad,
            "roll_rad": ch.roll_rad,
            "max_step_m": env.max_step(),
            "mean_change_interval_s": env.mean_change_interval(),
        }))
    }
}

fn render(v: &toml::Value) -> String {
    match v {
        // `{:?}` keeps a decimal point or exponent so floats stay floats.
        toml::Value::Float(f) => format!("{f:?}"),
        other => other.to_string(),
    }
}
