//! Twin Delayed DDPG over the trajectory environment.
//!
//! Networks see positions normalized to `[-1, 1]` and emit actions in
//! units of the maximum step, so every action lies in the unit ball.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::environment::{episode_time, EnvAction, Environment, EpisodeTime};
use crate::geometry::Vec3;
use crate::neural::{adam_step, AdamState, DenseNet, Gradients, OutputActivation};
use crate::rng::{mix, seeded, SimRng};
use crate::{Error, Result};

pub const STATE_DIM: usize = 3;
pub const ACTION_DIM: usize = 3;

const OUTPUT_INIT: f64 = 3e-3;

/// Transition in network units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: [f64; STATE_DIM],
    pub action: [f64; ACTION_DIM],
    pub reward: f64,
    pub next_state: [f64; STATE_DIM],
}

impl Transition {
    pub fn is_valid(&self) -> bool {
        let unit = |v: &[f64]| v.iter().all(|x| x.is_finite() && x.abs() <= 1.0 + 1e-12);
        unit(&self.state) && unit(&self.action) && unit(&self.next_state) && self.reward.is_finite()
    }
}

/// Fixed-capacity ring buffer with uniform sampling (with replacement).
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    next: usize,
    rng: SimRng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("replay buffer capacity must be positive"));
        }
        Ok(Self {
            capacity,
            storage: Vec::with_capacity(capacity),
            next: 0,
            rng: seeded(seed),
        })
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if !t.is_valid() {
            return Err(Error::invalid("transition must be finite and normalized"));
        }
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, slot: usize) -> Option<&Transition> {
        self.storage.get(slot)
    }

    /// Slot indices of a uniform minibatch.
    pub fn sample_indices(&mut self, batch: usize) -> Vec<usize> {
        let n = self.storage.len();
        if n == 0 {
            return Vec::new();
        }
        (0..batch).map(|_| self.rng.random_range(0..n)).collect()
    }

    pub fn sample(&mut self, batch: usize) -> Vec<Transition> {
        self.sample_indices(batch).into_iter().map(|i| self.storage[i]).collect()
    }

    pub fn clear(&mut self) {
        self.storage.clear();
        self.next = 0;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Td3Config {
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub discount: f64,
    pub tau: f64,
    pub policy_delay: u32,
    /// Standard deviations and clip as fractions of the maximum step.
    pub exploration_noise_std: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Uniform random actions taken before the policy acts.
    pub warmup_steps: usize,
    pub episodes: usize,
    pub steps_per_episode: usize,
    /// Standardize rewards inside the critic targets with statistics frozen
    /// at the end of warm-up. Logged rewards stay raw.
    pub normalize_rewards: bool,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            hidden: vec![256, 128],
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            discount: 0.9,
            tau: 0.01,
            policy_delay: 2,
            exploration_noise_std: 0.1,
            target_noise_std: 0.2,
            target_noise_clip: 0.5,
            batch_size: 32,
            buffer_capacity: 1000,
            warmup_steps: 64,
            episodes: 150,
            steps_per_episode: 10,
            normalize_rewards: true,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::invalid("discount must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::invalid("tau must lie in [0, 1]"));
        }
        if !(self.actor_lr >= 0.0 && self.critic_lr >= 0.0) {
            return Err(Error::invalid("learning rates must be non-negative"));
        }
        if self.policy_delay == 0 || self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err(Error::invalid("policy delay, batch size and buffer capacity must be positive"));
        }
        let noise = [self.exploration_noise_std, self.target_noise_std, self.target_noise_clip];
        if noise.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("noise scales must be non-negative"));
        }
        if self.episodes == 0 || self.steps_per_episode == 0 {
            return Err(Error::invalid("episodes and steps per episode must be positive"));
        }
        Ok(())
    }

    fn dims(&self, input: usize, output: usize) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.hidden.len() + 2);
        d.push(input);
        d.extend_from_slice(&self.hidden);
        d.push(output);
        d
    }
}

/// Shrinks `a` onto the unit ball.
pub fn project_unit_ball(mut a: [f64; ACTION_DIM]) -> [f64; ACTION_DIM] {
    let n = sqrt(a.iter().map(|v| v * v).sum());
    if n > 1.0 {
        a.iter_mut().for_each(|v| *v /= n);
    }
    a
}

/// Pulls `g` back through [`project_unit_ball`] at `raw`.
fn project_unit_ball_vjp(raw: [f64; ACTION_DIM], g: [f64; ACTION_DIM]) -> [f64; ACTION_DIM] {
    let n = sqrt(raw.iter().map(|v| v * v).sum());
    if n <= 1.0 {
        return g;
    }
    let u = [raw[0] / n, raw[1] / n, raw[2] / n];
    let ug: f64 = u.iter().zip(&g).map(|(a, b)| a * b).sum();
    [(g[0] - u[0] * ug) / n, (g[1] - u[1] * ug) / n, (g[2] - u[2] * ug) / n]
}

/// Uniform draw from the unit ball (rejection from the cube).
pub fn random_unit_ball_action<R: Rng + ?Sized>(rng: &mut R) -> [f64; ACTION_DIM] {
    loop {
        let a = [
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        ];
        if a.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            return a;
        }
    }
}

fn critic_input(s: &[f64; STATE_DIM], a: &[f64; ACTION_DIM]) -> [f64; STATE_DIM + ACTION_DIM] {
    [s[0], s[1], s[2], a[0], a[1], a[2]]
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        std * rng.sample::<f64, _>(StandardNormal)
    }
}

#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub config: Td3Config,
    pub actor: DenseNet,
    pub actor_target: DenseNet,
    pub critic1: DenseNet,
    pub critic2: DenseNet,
    pub critic1_target: DenseNet,
    pub critic2_target: DenseNet,
    pub actor_opt: AdamState,
    pub critic1_opt: AdamState,
    pub critic2_opt: AdamState,
    /// Critic updates performed so far.
    pub updates: u64,
    /// Frozen `(mean, std)` used to standardize critic rewards.
    pub reward_stats: Option<(f64, f64)>,
    rng: SimRng,
}

impl Td3Agent {
    /// Random initialization; targets start as exact copies.
    pub fn new(config: Td3Config, seed: u64) -> Result<Self> {
        config.validate()?;
        let actor_dims = config.dims(STATE_DIM, ACTION_DIM);
        let critic_dims = config.dims(STATE_DIM + ACTION_DIM, 1);
        let mut init = seeded(mix(seed, 1));
        let mut actor = DenseNet::new_random(&actor_dims, OutputActivation::TanhScaled(1.0), &mut init)?;
        // Near-zero output layer: the untrained policy barely moves.
        let (w, b) = actor.layer_mut(actor.num_layers() - 1);
        w.iter_mut().chain(b.iter_mut()).for_each(|v| *v = init.random_range(-OUTPUT_INIT..OUTPUT_INIT));
        let critic1 = DenseNet::new_random(&critic_dims, OutputActivation::Linear, &mut seeded(mix(seed, 2)))?;
        let critic2 = DenseNet::new_random(&critic_dims, OutputActivation::Linear, &mut seeded(mix(seed, 3)))?;
        Self::from_networks(config, actor, critic1, critic2, seed)
    }

    pub fn from_networks(config: Td3Config, actor: DenseNet, critic1: DenseNet, critic2: DenseNet, seed: u64) -> Result<Self> {
        config.validate()?;
        if actor.input_dim() != STATE_DIM || actor.output_dim() != ACTION_DIM {
            return Err(Error::invalid("actor must map 3 state inputs to 3 action outputs"));
        }
        for c in [&critic1, &critic2] {
            if c.input_dim() != STATE_DIM + ACTION_DIM || c.output_dim() != 1 {
                return Err(Error::invalid("critics must map 6 inputs to one value"));
            }
        }
        if !critic1.same_architecture(&critic2) {
            return Err(Error::invalid("twin critics must share an architecture"));
        }
        Ok(Self {
            actor_opt: AdamState::for_net(&actor, config.actor_lr),
            critic1_opt: AdamState::for_net(&critic1, config.critic_lr),
            critic2_opt: AdamState::for_net(&critic2, config.critic_lr),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            config,
            updates: 0,
            reward_stats: None,
            rng: seeded(mix(seed, 4)),
        })
    }

    /// Deterministic policy output, projected onto the unit ball.
    pub fn policy(&self, state: &[f64; STATE_DIM]) -> Result<[f64; ACTION_DIM]> {
        let out = self.actor.forward(state)?;
        Ok(project_unit_ball([out[0], out[1], out[2]]))
    }

    /// Policy action, with clipped-to-ball Gaussian exploration if `explore`.
    pub fn select_action(&mut self, state: &[f64; STATE_DIM], explore: bool) -> Result<[f64; ACTION_DIM]> {
        let mut a = self.policy(state)?;
        if explore {
            let std = self.config.exploration_noise_std;
            a.iter_mut().for_each(|v| *v += gaussian(&mut self.rng, std));
        }
        Ok(project_unit_ball(a))
    }

    /// Uniform action in the ball, drawn from the agent's stream.
    pub fn random_action(&mut self) -> [f64; ACTION_DIM] {
        random_unit_ball_action(&mut self.rng)
    }

    /// Freezes reward statistics from `rewards` (no-op when disabled or
    /// already fitted).
    pub fn fit_reward_stats(&mut self, rewards: &[f64]) {
        if !self.config.normalize_rewards || self.reward_stats.is_some() || rewards.is_empty() {
            return;
        }
        let n = rewards.len() as f64;
        let mean = rewards.iter().sum::<f64>() / n;
        let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
        let std = sqrt(var);
        self.reward_stats = Some((mean, if std > 1e-6 { std } else { 1.0 }));
    }

    pub fn scaled_reward(&self, r: f64) -> f64 {
        match self.reward_stats {
            Some((mean, std)) => (r - mean) / std,
            None => r,
        }
    }

    /// Clipped double-Q bootstrap targets with target-policy smoothing.
    pub fn critic_targets(&mut self, batch: &[Transition]) -> Result<Vec<f64>> {
        let (std, clip) = (self.config.target_noise_std, self.config.target_noise_clip);
        let mut ys = Vec::with_capacity(batch.len());
        for t in batch {
            let out = self.actor_target.forward(&t.next_state)?;
            let mut a = [out[0], out[1], out[2]];
            a.iter_mut()
                .for_each(|v| *v += gaussian(&mut self.rng, std).clamp(-clip, clip));
            let a = project_unit_ball(a);
            let x = critic_input(&t.next_state, &a);
            let q1 = self.critic1_target.forward(&x)?[0];
            let q2 = self.critic2_target.forward(&x)?[0];
            ys.push(self.scaled_reward(t.reward) + self.config.discount * q1.min(q2));
        }
        Ok(ys)
    }

    /// One Adam step of both critics on the mean squared TD error. Returns
    /// the two pre-step losses.
    pub fn critic_update(&mut self, batch: &[Transition]) -> Result<(f64, f64)> {
        if batch.is_empty() {
            return Err(Error::invalid("empty minibatch"));
        }
        let ys = self.critic_targets(batch)?;
        let l1 = mse_step(&mut self.critic1, &mut self.critic1_opt, batch, &ys)?;
        let l2 = mse_step(&mut self.critic2, &mut self.critic2_opt, batch, &ys)?;
        Ok((l1, l2))
    }

    /// Actor step ascending `dq(s, a)`, which returns `(Q, dQ/da)`.
    pub fn actor_update_with<F>(&mut self, states: &[[f64; STATE_DIM]], mut dq: F) -> Result<f64>
    where
        F: FnMut(&[f64; STATE_DIM], &[f64; ACTION_DIM]) -> Result<(f64, [f64; ACTION_DIM])>,
    {
        actor_step(&mut self.actor, &mut self.actor_opt, states, &mut dq)
    }

    /// Actor step ascending the first critic. Returns the mean Q before the step.
    pub fn actor_update(&mut self, batch: &[Transition]) -> Result<f64> {
        let states: Vec<[f64; STATE_DIM]> = batch.iter().map(|t| t.state).collect();
        let critic = &self.critic1;
        let mut scratch = Gradients::zeros_like(critic);
        let mut dq = |s: &[f64; STATE_DIM], a: &[f64; ACTION_DIM]| -> Result<(f64, [f64; ACTION_DIM])> {
            let trace = critic.forward_trace(&critic_input(s, a))?;
            let dx = critic.backward_trace(&trace, &[1.0], &mut scratch)?;
            Ok((trace.output()[0], [dx[3], dx[4], dx[5]]))
        };
        actor_step(&mut self.actor, &mut self.actor_opt, &states, &mut dq)
    }

    /// Polyak-averages all three target networks.
    pub fn update_targets(&mut self) -> Result<()> {
        let tau = self.config.tau;
        self.actor_target.polyak_update(&self.actor, tau)?;
        self.critic1_target.polyak_update(&self.critic1, tau)?;
        self.critic2_target.polyak_update(&self.critic2, tau)
    }

    /// Critic step, then the actor and target step every `policy_delay`
    /// critic updates.
    pub fn update(&mut self, batch: &[Transition]) -> Result<UpdateStats> {
        let (critic1_loss, critic2_loss) = self.critic_update(batch)?;
        self.updates += 1;
        let actor_objective = if self.updates.is_multiple_of(u64::from(self.config.policy_delay)) {
            let j = self.actor_update(batch)?;
            self.update_targets()?;
            Some(j)
        } else {
            None
        };
        Ok(UpdateStats {
            critic1_loss,
            critic2_loss,
            actor_objective,
        })
    }
}

fn actor_step<F>(actor: &mut DenseNet, opt: &mut AdamState, states: &[[f64; STATE_DIM]], dq: &mut F) -> Result<f64>
where
    F: FnMut(&[f64; STATE_DIM], &[f64; ACTION_DIM]) -> Result<(f64, [f64; ACTION_DIM])>,
{
    if states.is_empty() {
        return Err(Error::invalid("empty minibatch"));
    }
    let inv_b = 1.0 / states.len() as f64;
    let mut grads = Gradients::zeros_like(actor);
    let mut objective = 0.0;
    for s in states {
        let trace = actor.forward_trace(s)?;
        let out = trace.output();
        let raw = [out[0], out[1], out[2]];
        let a = project_unit_ball(raw);
        let (q, g) = dq(s, &a)?;
        objective += q * inv_b;
        let g = project_unit_ball_vjp(raw, g);
        actor.backward_trace(&trace, &[-g[0] * inv_b, -g[1] * inv_b, -g[2] * inv_b], &mut grads)?;
    }
    if !objective.is_finite() || !grads.is_finite() {
        return Err(Error::numeric("non-finite actor gradient"));
    }
    adam_step(actor, &grads, opt)?;
    Ok(objective)
}

fn mse_step(critic: &mut DenseNet, opt: &mut AdamState, batch: &[Transition], ys: &[f64]) -> Result<f64> {
    let inv_b = 1.0 / batch.len() as f64;
    let mut grads = Gradients::zeros_like(critic);
    let mut loss = 0.0;
    for (t, &y) in batch.iter().zip(ys) {
        let trace = critic.forward_trace(&critic_input(&t.state, &t.action))?;
        let err = trace.output()[0] - y;
        loss += err * err * inv_b;
        critic.backward_trace(&trace, &[2.0 * err * inv_b], &mut grads)?;
    }
    if !loss.is_finite() || !grads.is_finite() {
        return Err(Error::numeric("non-finite critic loss"));
    }
    adam_step(critic, &grads, opt)?;
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_objective: Option<f64>,
}

/// Per-episode training series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    /// Sum of step rewards per episode.
    pub episode_rewards: Vec<f64>,
    /// Training-grade max-outage after the last step of each episode.
    pub final_max_outage: Vec<f64>,
    /// Flight time of each episode (s).
    pub episode_seconds: Vec<f64>,
    /// Mean critic-1 loss over the episode's updates (NaN if none).
    pub mean_critic_loss: Vec<f64>,
    pub updates: u64,
}

/// Trailing mean over at most `window` values ending at each index.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (k, v) in series.iter().enumerate() {
        sum += v;
        if k >= w {
            sum -= series[k - w];
        }
        out.push(sum / (k + 1).min(w) as f64);
    }
    out
}

/// Trains `agent` on the environment's current topology. Every episode
/// restarts at the round's start point.
pub fn train(env: &mut Environment, agent: &mut Td3Agent, buffer_seed: u64) -> Result<TrainLog> {
    let cfg = agent.config.clone();
    let max_step = env.config().max_step();
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, buffer_seed)?;
    let mut log = TrainLog::default();
    let mut total_steps = 0usize;
    for _ in 0..cfg.episodes {
        env.restart_episode();
        let mut state = env.normalized_state();
        let (mut reward_sum, mut seconds, mut last_outage) = (0.0, 0.0, f64::NAN);
        let (mut loss_sum, mut loss_n) = (0.0, 0usize);
        for _ in 0..cfg.steps_per_episode {
            let action = if total_steps < cfg.warmup_steps {
                agent.random_action()
            } else {
                agent.select_action(&state, true)?
            };
            let step = env.step(EnvAction::from_normalized(action, max_step))?;
            let next_state = env.normalized_state();
            buffer.push(Transition {
                state,
                action,
                reward: step.reward,
                next_state,
            })?;
            state = next_state;
            reward_sum += step.reward;
            seconds += step.elapsed;
            last_outage = step.max_outage;
            total_steps += 1;
            if total_steps >= cfg.warmup_steps && buffer.len() >= cfg.batch_size {
                if agent.reward_stats.is_none() {
                    let rewards: Vec<f64> = (0..buffer.len()).filter_map(|k| buffer.get(k)).map(|t| t.reward).collect();
                    agent.fit_reward_stats(&rewards);
                }
                let batch = buffer.sample(cfg.batch_size);
                let stats = agent.update(&batch)?;
                loss_sum += stats.critic1_loss;
                loss_n += 1;
            }
        }
        log.episode_rewards.push(reward_sum);
        log.final_max_outage.push(last_outage);
        log.episode_seconds.push(seconds);
        log.mean_critic_loss.push(if loss_n > 0 { loss_sum / loss_n as f64 } else { f64::NAN });
    }
    log.updates = agent.updates;
    Ok(log)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub step: usize,
    /// Flight time since the rollout start (s).
    pub time: f64,
    pub position: Vec3,
    pub max_outage: f64,
    pub per_link_outage: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `steps + 1` points, the first being the start position.
    pub points: Vec<TracePoint>,
    pub actions: Vec<EnvAction>,
    pub episode_time: EpisodeTime,
}

impl Trajectory {
    pub fn initial(&self) -> &TracePoint {
        &self.points[0]
    }

    pub fn last(&self) -> &TracePoint {
        self.points.last().unwrap_or(&self.points[0])
    }
}

/// Noise-free policy rollout from the current UAV position. Every point is
/// scored with `mc_samples` draws under the same `seed`.
pub fn greedy_rollout(env: &mut Environment, agent: &Td3Agent, max_steps: usize, mc_samples: u32, seed: u64) -> Result<Trajectory> {
    let max_step = env.config().max_step();
    let v_max = env.config().limits.v_max;
    let score = |env: &Environment, step: usize, time: f64| -> Result<TracePoint> {
        let position = env.state().uav_position;
        let est = env.evaluate(position, mc_samples, seed)?;
        Ok(TracePoint {
            step,
            time,
            position,
            max_outage: est.max()?,
            per_link_outage: est.per_link_outage,
        })
    };
    let mut points = vec![score(env, 0, 0.0)?];
    let mut actions = Vec::with_capacity(max_steps);
    let mut time = 0.0;
    for k in 1..=max_steps {
        let a = agent.policy(&env.normalized_state())?;
        let motion = env.apply_action(EnvAction::from_normalized(a, max_step));
        time += motion.elapsed;
        actions.push(EnvAction::new(motion.to - motion.from));
        points.push(score(env, k, time)?);
    }
    let speeds = vec![v_max; actions.len()];
    let episode_time = episode_time(&actions, &speeds, env.config().mean_change_interval())?;
    Ok(Trajectory {
        points,
        actions,
        episode_time,
    })
}

/// One topology round: training log, the flown trajectory and the hover time.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionRound {
    pub sbs_positions: Vec<Vec3>,
    pub change_interval: f64,
    pub log: TrainLog,
    pub trajectory: Trajectory,
    pub hover_seconds: f64,
}

/// Repeats train, fly to the end point and hover until the topology
/// changes, for `rounds` topologies. The agent carries over between rounds;
/// every trajectory is scored under the shared `eval_seed`.
pub fn run_mission(
    env: &mut Environment,
    agent: &mut Td3Agent,
    rounds: usize,
    eval_samples: u32,
    buffer_seed: u64,
    eval_seed: u64,
) -> Result<Vec<MissionRound>> {
    let mut out = Vec::with_capacity(rounds);
    for r in 0..rounds as u64 {
        if r > 0 {
            env.advance_topology()?;
        }
        let start = env.start_point();
        let log = train(env, agent, mix(buffer_seed, r))?;
        env.place_uav(start)?;
        let trajectory = greedy_rollout(env, agent, agent.config.steps_per_episode, eval_samples, eval_seed)?;
        let change_interval = env.topology().change_interval;
        let hover_seconds = (change_interval - trajectory.episode_time.seconds).max(0.0);
        env.hover(hover_seconds);
        out.push(MissionRound {
            sbs_positions: env.topology().positions(),
            change_interval,
            log,
            trajectory,
            hover_seconds,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::environment::EnvConfig;

    fn small_config() -> Td3Config {
        Td3Config {
            hidden: vec![16, 8],
            batch_size: 8,
            buffer_capacity: 64,
            warmup_steps: 8,
            episodes: 4,
            steps_per_episode: 5,
            ..Td3Config::default()
        }
    }

    fn small_env(seed: u64) -> Environment {
        let cfg = EnvConfig {
            train_mc_samples: 50,
            ..EnvConfig::default()
        };
        Environment::new(cfg, ChannelParams::default(), seed).unwrap()
    }

    fn transition(k: usize) -> Transition {
        let f = k as f64;
        Transition {
            state: [0.1 * (f % 7.0) - 0.3, -0.2, 0.05 * f % 1.0],
            action: project_unit_ball([0.3, -0.1 * (f % 5.0), 0.2]),
            reward: 1.0 + 0.1 * f,
            next_state: [0.2, 0.1 * (f % 3.0), -0.4],
        }
    }

    fn batch(n: usize) -> Vec<Transition> {
        (0..n).map(transition).collect()
    }

    #[test]
    fn greedy_action_is_deterministic() {
        let mut agent = Td3Agent::new(small_config(), 1).unwrap();
        let s = [0.2, -0.5, 0.1];
        let a = agent.select_action(&s, false).unwrap();
        assert_eq!(a, agent.select_action(&s, false).unwrap());
        agent.config.exploration_noise_std = 0.0;
        assert_eq!(a, agent.select_action(&s, true).unwrap());
    }

    #[test]
    fn exploration_noise_has_configured_std() {
        let mut agent = Td3Agent::new(small_config(), 2).unwrap();
        let (w, b) = agent.actor.layer_mut(2);
        w.fill(0.0);
        b.fill(0.0);
        let n = 10_000;
        let mut sq = 0.0;
        for _ in 0..n {
            let a = agent.select_action(&[0.0; 3], true).unwrap();
            sq += a[0] * a[0];
        }
        let std = (sq / n as f64).sqrt();
        assert!((std / 0.1 - 1.0).abs() < 0.05, "std = {std}");
    }

    #[test]
    fn zero_discount_targets_are_rewards() {
        let mut agent = Td3Agent::new(small_config(), 3).unwrap();
        agent.config.discount = 0.0;
        let b = batch(5);
        let ys = agent.critic_targets(&b).unwrap();
        for (y, t) in ys.iter().zip(&b) {
            assert_eq!(*y, t.reward);
        }
    }

    #[test]
    fn clipped_double_q_takes_the_minimum() {
        let mut agent = Td3Agent::new(small_config(), 4).unwrap();
        agent.config.target_noise_std = 0.0;
        let b = batch(6);
        let ys = agent.critic_targets(&b).unwrap();
        for (y, t) in ys.iter().zip(&b) {
            let out = agent.actor_target.forward(&t.next_state).unwrap();
            let a = project_unit_ball([out[0], out[1], out[2]]);
            let x = critic_input(&t.next_state, &a);
            let q1 = agent.critic1_target.forward(&x).unwrap()[0];
            let q2 = agent.critic2_target.forward(&x).unwrap()[0];
            assert!(*y <= t.reward + 0.9 * q1 + 1e-12);
            assert!(*y <= t.reward + 0.9 * q2 + 1e-12);
            assert!((*y - (t.reward + 0.9 * q1.min(q2))).abs() < 1e-12);
        }
        // Identical critics: the minimum is the first critic.
        agent.critic2_target = agent.critic1_target.clone();
        let t = transition(0);
        let out = agent.actor_target.forward(&t.next_state).unwrap();
        let a = project_unit_ball([out[0], out[1], out[2]]);
        let q1 = agent.critic1_target.forward(&critic_input(&t.next_state, &a)).unwrap()[0];
        assert_eq!(agent.critic_targets(&[t]).unwrap()[0], t.reward + 0.9 * q1);
    }

    #[test]
    fn critic_loss_matches_hand_evaluation() {
        // Critic: q = relu(w·x + b1) * v + b2 with one hidden unit.
        let critic = DenseNet::from_parts(
            &[6, 1, 1],
            vec![0.5, -0.25, 1.0, 0.75, -0.5, 0.25, 0.1, 2.0, -0.3],
            OutputActivation::Linear,
        )
        .unwrap();
        let actor = DenseNet::zeros(&[3, 2, 3], OutputActivation::TanhScaled(1.0)).unwrap();
        let cfg = Td3Config {
            target_noise_std: 0.0,
            normalize_rewards: false,
            ..small_config()
        };
        let mut agent = Td3Agent::from_networks(cfg, actor, critic.clone(), critic, 0).unwrap();
        let b = [
            Transition {
                state: [0.2, -0.4, 0.6],
                action: [0.1, 0.3, -0.2],
                reward: 1.5,
                next_state: [0.0, 0.5, -0.5],
            },
            Transition {
                state: [-0.8, 0.1, 0.0],
                action: [-0.5, 0.0, 0.4],
                reward: -0.5,
                next_state: [0.3, 0.3, 0.3],
            },
        ];
        let q = |x: [f64; 6]| {
            let w = [0.5, -0.25, 1.0, 0.75, -0.5, 0.25];
            let h: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + 0.1;
            h.max(0.0) * 2.0 - 0.3
        };
        let mut expected = 0.0;
        for t in &b {
            let s2 = t.next_state;
            // Zero actor: target action is the origin.
            let y = t.reward + 0.9 * q([s2[0], s2[1], s2[2], 0.0, 0.0, 0.0]);
            let s = t.state;
            let a = t.action;
            let e = q([s[0], s[1], s[2], a[0], a[1], a[2]]) - y;
            expected += e * e / 2.0;
        }
        let (l1, l2) = agent.critic_update(&b).unwrap();
        assert!((l1 - expected).abs() < 1e-12);
        assert_eq!(l1, l2);
    }

    #[test]
    fn critic_update_leaves_targets_alone() {
        let mut agent = Td3Agent::new(small_config(), 5).unwrap();
        let before = (agent.critic1_target.clone(), agent.critic2_target.clone(), agent.actor_target.clone());
        agent.critic_update(&batch(8)).unwrap();
        assert_eq!(before, (agent.critic1_target.clone(), agent.critic2_target.clone(), agent.actor_target.clone()));
        assert_ne!(agent.critic1, agent.critic1_target);
        let gap = agent.critic1.distance_sq(&agent.critic1_target);
        agent.update_targets().unwrap();
        assert!(agent.critic1.distance_sq(&agent.critic1_target) < gap);
    }

    #[test]
    fn constant_critic_gives_no_actor_step() {
        let mut agent = Td3Agent::new(small_config(), 6).unwrap();
        let before = agent.actor.clone();
        let states: Vec<_> = batch(8).iter().map(|t| t.state).collect();
        agent.actor_update_with(&states, |_, _| Ok((3.0, [0.0; 3]))).unwrap();
        assert_eq!(agent.actor, before);
    }

    #[test]
    fn actor_climbs_a_quadratic_bowl() {
        let cfg = Td3Config {
            actor_lr: 1e-3,
            ..small_config()
        };
        let mut agent = Td3Agent::new(cfg, 7).unwrap();
        let target = [0.3, -0.2, 0.4];
        let states: Vec<_> = batch(16).iter().map(|t| t.state).collect();
        let bowl = |_: &[f64; 3], a: &[f64; 3]| {
            let d = [a[0] - target[0], a[1] - target[1], a[2] - target[2]];
            Ok((-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]), [-2.0 * d[0], -2.0 * d[1], -2.0 * d[2]]))
        };
        let dist = |agent: &Td3Agent| -> f64 {
            states
                .iter()
                .map(|s| {
                    let a = agent.policy(s).unwrap();
                    (0..3).map(|k| (a[k] - target[k]).powi(2)).sum::<f64>()
                })
                .sum()
        };
        let d0 = dist(&agent);
        for _ in 0..1000 {
            agent.actor_update_with(&states, bowl).unwrap();
        }
        let d1 = dist(&agent);
        assert!(d1 < 1e-3 * d0, "{d0} -> {d1}");
    }

    #[test]
    fn actor_updates_only_every_policy_delay() {
        let mut agent = Td3Agent::new(small_config(), 8).unwrap();
        let b = batch(8);
        for call in 1..=6u64 {
            let before = (agent.actor.clone(), agent.actor_target.clone());
            let stats = agent.update(&b).unwrap();
            let changed = before != (agent.actor.clone(), agent.actor_target.clone());
            assert_eq!(changed, call % 2 == 0, "call {call}");
            assert_eq!(stats.actor_objective.is_some(), call % 2 == 0);
        }
        assert_eq!(agent.updates, 6);
    }

    #[test]
    fn replay_sampling_is_uniform() {
        let mut buf = ReplayBuffer::new(50, 11).unwrap();
        for k in 0..80 {
            buf.push(transition(k)).unwrap();
        }
        assert_eq!(buf.len(), 50);
        let n = 100_000;
        let mut counts = [0usize; 50];
        for _ in 0..n / 10 {
            for i in buf.sample_indices(10) {
                counts[i] += 1;
            }
        }
        let e = n as f64 / 50.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 49 degrees of freedom, 1% critical value.
        assert!(chi2 < 74.92, "chi2 = {chi2}");
    }

    #[test]
    fn ring_buffer_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3, 0).unwrap();
        for k in 0..5 {
            buf.push(transition(k)).unwrap();
        }
        assert_eq!(buf.get(0), Some(&transition(3)));
        assert_eq!(buf.get(1), Some(&transition(4)));
        assert_eq!(buf.get(2), Some(&transition(2)));
        let mut bad = transition(0);
        bad.state[0] = 2.0;
        assert!(buf.push(bad).is_err());
    }

    #[test]
    fn zero_learning_rates_freeze_parameters() {
        let cfg = Td3Config {
            actor_lr: 0.0,
            critic_lr: 0.0,
            warmup_steps: 0,
            ..small_config()
        };
        let mut agent = Td3Agent::new(cfg, 9).unwrap();
        let before = agent.clone();
        let mut env = small_env(9);
        let log = train(&mut env, &mut agent, 1).unwrap();
        assert!(log.updates > 0);
        assert_eq!(agent.actor, before.actor);
        assert_eq!(agent.critic1, before.critic1);
        assert_eq!(agent.critic2, before.critic2);
    }

    #[test]
    fn training_is_reproducible() {
        let run = || {
            let mut agent = Td3Agent::new(small_config(), 10).unwrap();
            let mut env = small_env(10);
            let log = train(&mut env, &mut agent, 3).unwrap();
            (log, agent.actor)
        };
        let (a, b) = (run(), run());
        assert_eq!(a.0.episode_rewards, b.0.episode_rewards);
        assert_eq!(a.1, b.1);
        assert_eq!(a.0.episode_rewards.len(), 4);
    }

    #[test]
    fn zero_actor_hovers_in_place() {
        let mut agent = Td3Agent::new(small_config(), 12).unwrap();
        let (w, b) = agent.actor.layer_mut(2);
        w.fill(0.0);
        b.fill(0.0);
        let mut env = small_env(12);
        let tr = greedy_rollout(&mut env, &agent, 6, 100, 5).unwrap();
        assert_eq!(tr.points.len(), 7);
        assert!(tr.points.iter().all(|p| p.position == tr.points[0].position));
        assert!(tr.points.iter().all(|p| p.max_outage == tr.points[0].max_outage));
        assert_eq!(tr.episode_time.seconds, 0.0);
    }

    #[test]
    fn rollout_time_fits_the_budget() {
        let agent = Td3Agent::new(small_config(), 13).unwrap();
        let mut env = small_env(13);
        let tr = greedy_rollout(&mut env, &agent, 10, 100, 5).unwrap();
        assert!(tr.episode_time.seconds <= 12.5 + 1e-9);
        assert!(tr.episode_time.satisfied);
        assert_eq!(tr.episode_time.budget, 27.5);
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.0, 1.5, 2.5, 3.5]);
        assert_eq!(moving_average(&[], 40), Vec::<f64>::new());
    }

    #[test]
    fn reward_stats_standardize() {
        let mut agent = Td3Agent::new(small_config(), 14).unwrap();
        agent.fit_reward_stats(&[1.0, 3.0]);
        assert_eq!(agent.reward_stats, Some((2.0, 1.0)));
        assert_eq!(agent.scaled_reward(4.0), 2.0);
        agent.fit_reward_stats(&[10.0, 30.0]);
        assert_eq!(agent.reward_stats, Some((2.0, 1.0)));
    }
}
