//! The dynamic-topology MDP: the UAV position is the state, a bounded 3D
//! displacement is the action, and the reward is `-ln` of the worst-link
//! outage probability.

use alloc::vec::Vec;

use libm::log;
use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::antenna::ArrayAntennaConfig;
use crate::channel::{max_outage, outage_probability, ChannelParams, LinkState, LosState, OutageEstimate};
use crate::geometry::{trajectory_time, KinematicLimits, Vec3};
use crate::rng::{mix, seeded, SimRng};
use crate::{Error, Result};

/// Behaviour when an action would leave the altitude band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AltitudeRule {
    /// Reject the whole displacement; the UAV stays put.
    #[default]
    RejectAction,
    /// Apply the horizontal part and clamp the altitude.
    ClampZ,
}

/// How SBS positions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SbsLayout {
    #[default]
    Uniform,
    /// The first two SBSs lie within `spread` metres of each other; the
    /// rest are uniform.
    Clustered { spread: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub area_x: f64,
    pub area_y: f64,
    pub limits: KinematicLimits,
    /// Control interval (s).
    pub dt: f64,
    pub m_s_min: usize,
    /// Upper SBS count, equal to the number of UAV antennas.
    pub m_s_max: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub m_d_max: usize,
    pub tx_power_w: f64,
    pub uav_array: ArrayAntennaConfig,
    pub sbs_n_side: u32,
    pub train_mc_samples: u32,
    pub eval_mc_samples: u32,
    /// Lower clamp on the outage inside the reward's logarithm.
    pub p_floor: f64,
    /// Per-link outage target; monitored, not enforced.
    pub outage_threshold: f64,
    pub altitude_rule: AltitudeRule,
    pub confine_horizontal: bool,
    pub layout: SbsLayout,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            area_x: 150.0,
            area_y: 150.0,
            limits: KinematicLimits::default(),
            dt: 1.0,
            m_s_min: 2,
            m_s_max: 4,
            t_min: 20.0,
            t_max: 35.0,
            m_d_max: 2,
            tx_power_w: 0.01,
            uav_array: ArrayAntennaConfig::broadside(20, 140e9),
            sbs_n_side: 10,
            train_mc_samples: 500,
            eval_mc_samples: 100_000,
            p_floor: 1e-9,
            outage_threshold: 0.1,
            altitude_rule: AltitudeRule::RejectAction,
            confine_horizontal: false,
            layout: SbsLayout::Uniform,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.limits.validate()?;
        self.uav_array.validate()?;
        if !(self.area_x > 0.0 && self.area_y > 0.0) {
            return Err(Error::invalid("service area must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        if self.m_s_min == 0 || self.m_s_min > self.m_s_max {
            return Err(Error::invalid("SBS counts must satisfy 1 <= m_s_min <= m_s_max"));
        }
        if !(0.0 < self.t_min && self.t_min <= self.t_max) {
            return Err(Error::invalid("topology interval must satisfy 0 < t_min <= t_max"));
        }
        if !(self.tx_power_w > 0.0) || self.sbs_n_side == 0 {
            return Err(Error::invalid("link template needs positive power and SBS array size"));
        }
        if self.train_mc_samples == 0 || self.eval_mc_samples == 0 {
            return Err(Error::invalid("Monte-Carlo sample counts must be positive"));
        }
        if !(self.p_floor > 0.0 && self.p_floor < 1.0) {
            return Err(Error::invalid("p_floor must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.outage_threshold) {
            return Err(Error::invalid("outage_threshold must lie in [0, 1]"));
        }
        if let SbsLayout::Clustered { spread } = self.layout {
            if !(spread >= 0.0 && spread.is_finite()) {
                return Err(Error::invalid("cluster spread must be non-negative"));
            }
        }
        Ok(())
    }

    /// Largest displacement of one step.
    pub fn max_step(&self) -> f64 {
        self.limits.max_step_displacement(self.dt)
    }

    /// Mean topology lifetime `(t_min + t_max) / 2`.
    pub fn mean_change_interval(&self) -> f64 {
        0.5 * (self.t_min + self.t_max)
    }

    pub fn area_center(&self) -> Vec3 {
        Vec3::new(0.5 * self.area_x, 0.5 * self.area_y, self.limits.mid_altitude())
    }

    pub fn link_template(&self) -> LinkState {
        LinkState {
            sbs_position: Vec3::ZERO,
            tx_power_w: self.tx_power_w,
            uav_array: self.uav_array,
            sbs_array_n_side: self.sbs_n_side,
            los: LosState::Los,
        }
    }

    /// Position scaled to `[-1, 1]` per axis (area for x/y, altitude band for z).
    pub fn normalize_position(&self, p: Vec3) -> [f64; 3] {
        let hx = 0.5 * self.area_x;
        let hy = 0.5 * self.area_y;
        let hz = 0.5 * (self.limits.h_max - self.limits.h_min);
        [
            ((p.x - hx) / hx).clamp(-1.0, 1.0),
            ((p.y - hy) / hy).clamp(-1.0, 1.0),
            ((p.z - self.limits.mid_altitude()) / hz).clamp(-1.0, 1.0),
        ]
    }
}

/// Active SBSs plus the parameters of their random evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub sbs_list: Vec<LinkState>,
    pub area_x: f64,
    pub area_y: f64,
    pub m_s_min: usize,
    pub m_s_max: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub m_d_max: usize,
    /// Drawn lifetime `T` of this topology (s).
    pub change_interval: f64,
}

impl Topology {
    /// Empty topology carrying `cfg`'s dynamics; fill `sbs_list` before use.
    pub fn empty(cfg: &EnvConfig) -> Self {
        Self {
            sbs_list: Vec::new(),
            area_x: cfg.area_x,
            area_y: cfg.area_y,
            m_s_min: cfg.m_s_min,
            m_s_max: cfg.m_s_max,
            t_min: cfg.t_min,
            t_max: cfg.t_max,
            m_d_max: cfg.m_d_max,
            change_interval: cfg.mean_change_interval(),
        }
    }

    /// Topology at fixed ground points, using `cfg`'s link template.
    pub fn with_positions(cfg: &EnvConfig, points: &[(f64, f64)]) -> Result<Self> {
        let mut t = Self::empty(cfg);
        let template = cfg.link_template();
        t.sbs_list = points
            .iter()
            .map(|&(x, y)| LinkState {
                sbs_position: Vec3::ground(x, y),
                ..template
            })
            .collect();
        t.validate()?;
        Ok(t)
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.sbs_list.iter().map(|l| l.sbs_position).collect()
    }

    pub fn len(&self) -> usize {
        self.sbs_list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sbs_list.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sbs_list.is_empty() || self.sbs_list.len() > self.m_s_max {
            return Err(Error::invalid("topology must hold between 1 and m_s_max SBSs"));
        }
        for l in &self.sbs_list {
            let p = l.sbs_position;
            if !(0.0..=self.area_x).contains(&p.x) || !(0.0..=self.area_y).contains(&p.y) || p.z != 0.0 {
                return Err(Error::invalid("SBS outside the service area or off the ground"));
            }
        }
        Ok(())
    }
}

fn uniform_point<R: Rng + ?Sized>(area_x: f64, area_y: f64, rng: &mut R) -> Vec3 {
    Vec3::ground(rng.random_range(0.0..=area_x), rng.random_range(0.0..=area_y))
}

/// Draws `M_s`, the SBS positions and the lifetime `T`.
pub fn sample_topology<R: Rng + ?Sized>(cfg: &EnvConfig, rng: &mut R) -> Topology {
    let count = rng.random_range(cfg.m_s_min..=cfg.m_s_max);
    let template = cfg.link_template();
    let mut points = Vec::with_capacity(count);
    match cfg.layout {
        SbsLayout::Uniform => {
            for _ in 0..count {
                points.push(uniform_point(cfg.area_x, cfg.area_y, rng));
            }
        }
        SbsLayout::Clustered { spread } => {
            let first = uniform_point(cfg.area_x, cfg.area_y, rng);
            points.push(first);
            if count > 1 {
                let dx = rng.random_range(-spread..=spread);
                let dy = rng.random_range(-spread..=spread);
                points.push(Vec3::ground(
                    (first.x + dx).clamp(0.0, cfg.area_x),
                    (first.y + dy).clamp(0.0, cfg.area_y),
                ));
            }
            for _ in 2..count {
                points.push(uniform_point(cfg.area_x, cfg.area_y, rng));
            }
        }
    }
    let mut t = Topology::empty(cfg);
    t.sbs_list = points
        .into_iter()
        .map(|p| LinkState {
            sbs_position: p,
            ..template
        })
        .collect();
    t.change_interval = rng.random_range(cfg.t_min..=cfg.t_max);
    t
}

/// One topology change: `m_d ~ U{0..min(m_d_max, M_s)}` SBSs disconnect
/// (chosen without replacement) and `m_c ~ U{0..M_s - m_d}` fresh SBSs
/// connect at uniform positions. When every SBS disconnects the fresh set
/// has `U{1..M_s}` members so the topology never empties.
pub fn evolve_topology<R: Rng + ?Sized>(topology: &Topology, rng: &mut R) -> Result<Topology> {
    if topology.is_empty() {
        return Err(Error::invalid("cannot evolve an empty topology"));
    }
    let m_s = topology.len();
    let m_d = rng.random_range(0..=topology.m_d_max.min(m_s));
    let remaining = m_s - m_d;
    let m_c = if remaining == 0 {
        rng.random_range(1..=m_s)
    } else {
        rng.random_range(0..=remaining)
    };
    let mut drop = alloc::vec![false; m_s];
    for i in sample_indices(rng, m_s, m_d) {
        drop[i] = true;
    }
    let template = topology.sbs_list[0];
    let mut next = topology.clone();
    next.sbs_list = topology
        .sbs_list
        .iter()
        .zip(&drop)
        .filter(|(_, &d)| !d)
        .map(|(l, _)| *l)
        .collect();
    for _ in 0..m_c {
        next.sbs_list.push(LinkState {
            sbs_position: uniform_point(topology.area_x, topology.area_y, rng),
            los: LosState::Los,
            ..template
        });
    }
    next.sbs_list.truncate(next.m_s_max);
    next.change_interval = rng.random_range(topology.t_min..=topology.t_max);
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvState {
    pub uav_position: Vec3,
}

/// Displacement for one control step (m).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnvAction {
    pub displacement: Vec3,
}

impl EnvAction {
    pub fn new(displacement: Vec3) -> Self {
        Self { displacement }
    }

    /// Shrinks the displacement onto the ball of radius `max_norm`.
    pub fn projected(self, max_norm: f64) -> Self {
        let n = self.displacement.norm();
        if n > max_norm && n > 0.0 {
            Self::new(self.displacement * (max_norm / n))
        } else {
            self
        }
    }

    /// From network units (`[-1, 1]` per axis) to metres, projected onto
    /// the step ball.
    pub fn from_normalized(a: [f64; 3], max_step: f64) -> Self {
        Self::new(Vec3::from_array(a) * max_step).projected(max_step)
    }

    pub fn to_normalized(self, max_step: f64) -> [f64; 3] {
        (self.displacement * (1.0 / max_step)).to_array()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: EnvState,
    pub reward: f64,
    pub outage: OutageEstimate,
    pub max_outage: f64,
    /// Flight time of the executed displacement (s).
    pub elapsed: f64,
    /// Whether the displacement was applied (altitude rule).
    pub accepted: bool,
    /// Every link met the per-link outage target.
    pub outage_target_met: bool,
}

/// Result of moving the UAV without scoring the new position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    pub from: Vec3,
    pub to: Vec3,
    pub accepted: bool,
    pub elapsed: f64,
}

/// `-ln(max(p, p_floor))`.
pub fn reward_from_outage(max_outage: f64, p_floor: f64) -> f64 {
    -log(max_outage.max(p_floor))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeTime {
    pub seconds: f64,
    /// Mean topology lifetime the trajectory must fit in.
    pub budget: f64,
    pub satisfied: bool,
}

/// Trajectory time of a displacement sequence flown at `speeds`, checked
/// against `budget`.
pub fn episode_time(actions: &[EnvAction], speeds: &[f64], budget: f64) -> Result<EpisodeTime> {
    let mut waypoints = Vec::with_capacity(actions.len() + 1);
    let mut p = Vec3::ZERO;
    waypoints.push(p);
    for a in actions {
        p += a.displacement;
        waypoints.push(p);
    }
    let seconds = trajectory_time(&waypoints, speeds)?;
    Ok(EpisodeTime {
        seconds,
        budget,
        satisfied: seconds <= budget,
    })
}

/// Sequential environment instance.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvConfig,
    channel: ChannelParams,
    topology: Topology,
    position: Vec3,
    start: Vec3,
    rng: SimRng,
    mc_seed: u64,
    step_index: u64,
    sim_time: f64,
}

impl Environment {
    /// Validates the configuration and performs the first [`Self::reset`].
    pub fn new(cfg: EnvConfig, channel: ChannelParams, seed: u64) -> Result<Self> {
        cfg.validate()?;
        channel.validate()?;
        let start = cfg.area_center();
        let mut env = Self {
            topology: Topology::empty(&cfg),
            cfg,
            channel,
            position: start,
            start,
            rng: seeded(seed),
            mc_seed: 0,
            step_index: 0,
            sim_time: 0.0,
        };
        env.reset(seed);
        Ok(env)
    }

    /// Draws a new topology and lifetime from `seed`. The UAV keeps its
    /// current position, which becomes the episode start point.
    pub fn reset(&mut self, seed: u64) -> (EnvState, Topology) {
        self.rng = seeded(mix(seed, 0));
        self.topology = sample_topology(&self.cfg, &mut self.rng);
        self.mc_seed = mix(seed, 1);
        self.step_index = 0;
        self.sim_time = 0.0;
        self.start = self.position;
        (self.state(), self.topology.clone())
    }

    /// Replaces the topology (e.g. a hand-built scenario).
    pub fn set_topology(&mut self, topology: Topology) -> Result<()> {
        topology.validate()?;
        self.topology = topology;
        Ok(())
    }

    /// Moves the UAV (and the episode start point) to `p`.
    pub fn place_uav(&mut self, p: Vec3) -> Result<()> {
        if !p.is_finite() || !(self.cfg.limits.h_min..=self.cfg.limits.h_max).contains(&p.z) {
            return Err(Error::invalid("UAV position outside the altitude band"));
        }
        self.position = p;
        self.start = p;
        Ok(())
    }

    /// Returns the UAV to the start point of the current topology round.
    pub fn restart_episode(&mut self) -> EnvState {
        self.position = self.start;
        self.state()
    }

    /// Applies the random topology change and makes the current position
    /// the start point of the next round.
    pub fn advance_topology(&mut self) -> Result<&Topology> {
        self.topology = evolve_topology(&self.topology, &mut self.rng)?;
        self.start = self.position;
        self.sim_time = 0.0;
        Ok(&self.topology)
    }

    pub fn state(&self) -> EnvState {
        EnvState {
            uav_position: self.position,
        }
    }

    pub fn start_point(&self) -> Vec3 {
        self.start
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.channel
    }

    pub fn sim_time(&self) -> f64 {
        self.sim_time
    }

    /// Hover in place for `seconds` of simulated time.
    pub fn hover(&mut self, seconds: f64) {
        self.sim_time += seconds.max(0.0);
    }

    pub fn normalized_state(&self) -> [f64; 3] {
        self.cfg.normalize_position(self.position)
    }

    /// Moves the UAV per the altitude rule without scoring.
    pub fn apply_action(&mut self, action: EnvAction) -> Motion {
        let limits = self.cfg.limits;
        let d = action.projected(self.cfg.max_step()).displacement;
        let from = self.position;
        let mut to = from + d;
        let inside = limits.h_min < to.z && to.z < limits.h_max;
        let accepted = match self.cfg.altitude_rule {
            AltitudeRule::RejectAction => inside,
            AltitudeRule::ClampZ => {
                to.z = to.z.clamp(limits.h_min, limits.h_max);
                true
            }
        };
        if !accepted || !to.is_finite() {
            return Motion {
                from,
                to: from,
                accepted: false,
                elapsed: 0.0,
            };
        }
        if self.cfg.confine_horizontal {
            to.x = to.x.clamp(0.0, self.cfg.area_x);
            to.y = to.y.clamp(0.0, self.cfg.area_y);
        }
        let elapsed = (to - from).norm() / limits.v_max;
        self.position = to;
        self.sim_time += elapsed;
        Motion {
            from,
            to,
            accepted: true,
            elapsed,
        }
    }

    /// Outage of the current topology seen from `position`.
    pub fn evaluate(&self, position: Vec3, n_samples: u32, seed: u64) -> Result<OutageEstimate> {
        outage_probability(&self.topology.sbs_list, position, &self.channel, n_samples, seed)
    }

    /// Seed of the `index`-th training-grade estimate.
    pub fn step_seed(&self, index: u64) -> u64 {
        mix(self.mc_seed, index)
    }

    /// Moves, then scores the new position with a fresh training-grade
    /// Monte-Carlo estimate.
    pub fn step(&mut self, action: EnvAction) -> Result<StepResult> {
        let motion = self.apply_action(action);
        let seed = self.step_seed(self.step_index);
        self.step_index += 1;
        let outage = self.evaluate(self.position, self.cfg.train_mc_samples, seed)?;
        let worst = max_outage(&outage)?;
        let reward = reward_from_outage(worst, self.cfg.p_floor);
        let outage_target_met = outage.per_link_outage.iter().all(|&p| p < self.cfg.outage_threshold);
        Ok(StepResult {
            next_state: self.state(),
            reward,
            outage,
            max_outage: worst,
            elapsed: motion.elapsed,
            accepted: motion.accepted,
            outage_target_met,
        })
    }
}
