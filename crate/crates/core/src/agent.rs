//! Double-DQN agent over a timestamped replay buffer.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::envs::Environment;
use crate::grama::{GramaReport, DEFAULT_TAU};
use crate::nn::{Adam, GradientRecord, Mlp};
use crate::replay::{ReplayBuffer, TimestampedTransition};
use crate::sampling::{DecaySchedule, Sampler, SamplerKind};
use crate::seeding::{self, Rng as SeededRng};
use crate::{Error, Result};

pub type Transition = TimestampedTransition<Vec<f64>, usize>;

/// Linear epsilon decay from `start` to `end` over `fraction` of the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub fraction: f64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64, total_steps: u64) -> f64 {
        let span = self.fraction * total_steps as f64;
        if span <= 0.0 {
            return self.end;
        }
        let t = step as f64 / span;
        if t >= 1.0 {
            self.end
        } else {
            self.start + t * (self.end - self.start)
        }
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub batch_size: usize,
    pub learning_starts: u64,
    pub train_frequency: u64,
    pub target_update_interval: u64,
    /// Gradient updates per training event.
    pub utd: usize,
    pub epsilon: EpsilonSchedule,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub buffer_capacity: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub log_interval: u64,
    /// Size of the uniform batch the plasticity metrics are computed on.
    pub metrics_batch: usize,
    pub grama_tau: f64,
}

impl AgentConfig {
    /// Desk-scale defaults for a run of `total_steps` environment steps.
    pub fn desk_scale(total_steps: u64) -> Self {
        Self {
            gamma: 0.99,
            batch_size: 32,
            learning_starts: 500,
            train_frequency: 4,
            target_update_interval: 250,
            utd: 1,
            epsilon: EpsilonSchedule::default(),
            sampler: SamplerKind::Uniform,
            seed: 0,
            buffer_capacity: total_steps.max(1) as usize,
            learning_rate: 1e-3,
            hidden: vec![64, 64],
            log_interval: 500,
            metrics_batch: 512,
            grama_tau: DEFAULT_TAU,
        }
    }

    /// Linear decay with `T = 0.8 * total_steps` and `w_min = 0.1`.
    pub fn default_swd(total_steps: u64) -> Result<DecaySchedule> {
        DecaySchedule::linear(((total_steps as f64 * 0.8) as u64).max(1), 0.1)
    }

    /// The mirrored augmentation schedule with the same horizon.
    pub fn default_swa(total_steps: u64) -> Result<DecaySchedule> {
        DecaySchedule::swa(((total_steps as f64 * 0.8) as u64).max(1), 0.1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.batch_size == 0 || self.utd == 0 {
            return Err(Error::Config(
                "batch_size and utd must be at least 1".into(),
            ));
        }
        if self.train_frequency == 0 || self.target_update_interval == 0 || self.log_interval == 0 {
            return Err(Error::Config("intervals must be positive".into()));
        }
        if self.buffer_capacity == 0 || self.metrics_batch == 0 {
            return Err(Error::Config(
                "buffer_capacity and metrics_batch must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        let e = self.epsilon;
        if ![e.start, e.end].iter().all(|x| (0.0..=1.0).contains(x)) || !(e.fraction >= 0.0) {
            return Err(Error::Config("epsilon schedule out of range".into()));
        }
        Ok(())
    }
}

/// `y = r + gamma * Q_target(s', argmax_a Q_online(s', a))`, or `r` at terminals.
pub fn double_dqn_targets(
    batch: &[&Transition],
    online: &Mlp,
    target: &Mlp,
    gamma: f64,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if online.sizes() != target.sizes() {
        return Err(Error::Shape {
            expected: online.params().len(),
            got: target.params().len(),
        });
    }
    batch
        .iter()
        .map(|tr| {
            if tr.done {
                return Ok(tr.reward);
            }
            let q_online = online.predict(&tr.next_state)?;
            let q_target = target.predict(&tr.next_state)?;
            Ok(tr.reward + gamma * q_target[argmax(&q_online)])
        })
        .collect()
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// Loss value, summed gradient record and TD errors of a weighted batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub record: GradientRecord,
    pub td_errors: Vec<f64>,
}

/// Mean (optionally weighted) squared TD error and its gradient w.r.t. the
/// online parameters, without updating anything.
pub fn td_loss_gradient(
    batch: &[&Transition],
    weights: Option<&[f64]>,
    online: &Mlp,
    target: &Mlp,
    gamma: f64,
) -> Result<LossGradient> {
    if let Some(w) = weights {
        if w.len() != batch.len() {
            return Err(Error::Shape {
                expected: batch.len(),
                got: w.len(),
            });
        }
    }
    let targets = double_dqn_targets(batch, online, target, gamma)?;
    let mut record = GradientRecord::zeros_like(online);
    let mut td_errors = Vec::with_capacity(batch.len());
    let mut loss = 0.0;
    for (j, (tr, y)) in batch.iter().zip(&targets).enumerate() {
        let (q, cache) = online.forward(&tr.state)?;
        if tr.action >= q.len() {
            return Err(Error::OutOfBounds {
                index: tr.action,
                len: q.len(),
            });
        }
        let w = weights.map_or(1.0, |w| w[j]);
        let delta = q[tr.action] - y;
        loss += w * delta * delta;
        let mut grad = vec![0.0; q.len()];
        grad[tr.action] = 2.0 * w * delta;
        record.accumulate(&online.backward(&cache, &grad)?)?;
        td_errors.push(delta);
    }
    Ok(LossGradient {
        loss: loss / batch.len() as f64,
        record,
        td_errors,
    })
}

/// Learner state: networks, optimizer, buffer and sampler.
#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    online: Mlp,
    target: Mlp,
    optimizer: Adam,
    buffer: ReplayBuffer<Vec<f64>, usize>,
    sampler: Sampler,
    updates: u64,
}

impl Agent {
    pub fn new(config: AgentConfig, observation_dim: usize, num_actions: usize) -> Result<Self> {
        config.validate()?;
        let mut sizes = vec![observation_dim];
        sizes.extend(&config.hidden);
        sizes.push(num_actions);
        let mut init_rng = seeding::stream(config.seed, "agent_init", 0);
        let online = Mlp::init(&sizes, &mut init_rng)?;
        let optimizer = Adam::new(online.params().len(), config.learning_rate);
        Ok(Self {
            target: online.clone(),
            online,
            optimizer,
            buffer: ReplayBuffer::new(config.buffer_capacity)?,
            sampler: Sampler::new(config.sampler, config.buffer_capacity)?,
            updates: 0,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn online_mut(&mut self) -> &mut Mlp {
        &mut self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer<Vec<f64>, usize> {
        &self.buffer
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }

    pub fn act<R: Rng + ?Sized>(
        &self,
        observation: &[f64],
        epsilon: f64,
        rng: &mut R,
    ) -> Result<usize> {
        let n = self.online.output_dim();
        if rng.random::<f64>() < epsilon {
            Ok(rng.random_range(0..n))
        } else {
            Ok(argmax(&self.online.predict(observation)?))
        }
    }

    pub fn observe(&mut self, transition: Transition) -> Result<usize> {
        let slot = self.buffer.push(transition)?;
        self.sampler.on_push(slot)?;
        Ok(slot)
    }

    /// One Adam step on the transitions at buffer `slots`. Prioritized
    /// samplers get their priorities refreshed from the new TD errors.
    pub fn train_step(
        &mut self,
        slots: &[usize],
        is_weights: Option<&[f64]>,
    ) -> Result<(f64, GradientRecord)> {
        let batch = slots
            .iter()
            .map(|&i| self.buffer.get(i))
            .collect::<Result<Vec<_>>>()?;
        let out = td_loss_gradient(
            &batch,
            is_weights,
            &self.online,
            &self.target,
            self.config.gamma,
        )?;
        if !out.loss.is_finite() {
            return Err(Error::NonFinite {
                update: self.updates,
            });
        }
        let grads = out.record.mean_params();
        self.optimizer.step(self.online.params_mut(), &grads)?;
        self.sampler.update_priorities(slots, &out.td_errors)?;
        self.updates += 1;
        Ok((out.loss, out.record))
    }

    /// Samples a batch with the configured strategy and trains on it.
    pub fn sample_and_train<R: Rng + ?Sized>(
        &mut self,
        now: u64,
        rng: &mut R,
    ) -> Result<(f64, GradientRecord)> {
        let batch = self
            .sampler
            .sample(&self.buffer, now, self.config.batch_size, rng)?;
        self.train_step(&batch.indices, batch.is_weights.as_deref())
    }

    /// GraMa report on a uniform batch drawn with `rng`.
    pub fn plasticity<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GramaReport> {
        let len = self.buffer.len();
        if len == 0 {
            return Err(Error::EmptyBuffer);
        }
        let batch = (0..self.config.metrics_batch)
            .map(|_| self.buffer.get(rng.random_range(0..len)))
            .collect::<Result<Vec<_>>>()?;
        let out = td_loss_gradient(&batch, None, &self.online, &self.target, self.config.gamma)?;
        Ok(GramaReport::from_record(&out.record, self.config.grama_tau))
    }
}

/// One logging event.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub global_step: u64,
    /// Return of the most recently finished episode (0 before the first).
    pub episode_return: f64,
    pub grad_l1: f64,
    pub grama_inactive_frac: f64,
    pub sampler: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Episode {
    /// Global step of the episode's last transition.
    pub end_step: u64,
    pub episode_return: f64,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<MetricsRow>,
    pub episodes: Vec<Episode>,
    pub updates: u64,
}

impl RunOutput {
    /// Mean return of episodes finishing at or after `step`.
    pub fn mean_return_after(&self, step: u64) -> Option<f64> {
        let late: Vec<f64> = self
            .episodes
            .iter()
            .filter(|e| e.end_step >= step)
            .map(|e| e.episode_return)
            .collect();
        if late.is_empty() {
            None
        } else {
            Some(late.iter().sum::<f64>() / late.len() as f64)
        }
    }
}

/// Full training loop: epsilon-greedy acting, timestamped pushes, `utd`
/// updates every `train_frequency` steps once `learning_starts` is reached,
/// hard target syncs, and a metrics row every `log_interval` steps.
pub fn run<E: Environment>(config: AgentConfig, env: &E, total_steps: u64) -> Result<RunOutput> {
    let seed = config.seed;
    let mut agent = Agent::new(config, env.observation_dim(), env.num_actions())?;
    let cfg = agent.config.clone();
    let mut env_rng: SeededRng = seeding::stream(seed, "env", 0);
    let mut act_rng = seeding::stream(seed, "act", 0);
    let mut sample_rng = seeding::stream(seed, "sampler", 0);
    let mut metrics_rng = seeding::stream(seed, "metrics", 0);

    let mut rows = Vec::new();
    let mut episodes = Vec::new();
    let mut state = env.reset(&mut env_rng);
    let mut obs = env.observe(&state);
    let mut ep_return = 0.0;
    let mut ep_len = 0usize;
    let mut last_return = 0.0;

    for t in 0..total_steps {
        let eps = cfg.epsilon.value(t, total_steps);
        let action = agent.act(&obs, eps, &mut act_rng)?;
        let (next_state, reward, done) = env.step(t, &state, action, &mut env_rng);
        let next_obs = env.observe(&next_state);
        ep_return += reward;
        ep_len += 1;
        agent.observe(Transition {
            state: obs,
            action,
            reward,
            next_state: next_obs.clone(),
            done,
            timestamp: t,
        })?;
        if done || ep_len >= env.max_episode_steps() {
            episodes.push(Episode {
                end_step: t,
                episode_return: ep_return,
                length: ep_len,
            });
            last_return = ep_return;
            ep_return = 0.0;
            ep_len = 0;
            state = env.reset(&mut env_rng);
            obs = env.observe(&state);
        } else {
            state = next_state;
            obs = next_obs;
        }

        let step = t + 1;
        if step > cfg.learning_starts && step % cfg.train_frequency == 0 {
            for _ in 0..cfg.utd {
                agent.sample_and_train(t, &mut sample_rng)?;
            }
        }
        if step > cfg.learning_starts && step % cfg.target_update_interval == 0 {
            agent.sync_target();
        }
        if step % cfg.log_interval == 0 {
            let report = agent.plasticity(&mut metrics_rng)?;
            rows.push(MetricsRow {
                global_step: step,
                episode_return: last_return,
                grad_l1: report.grad_l1,
                grama_inactive_frac: report.inactive_fraction,
                sampler: String::from(cfg.sampler.name()),
                seed,
            });
        }
    }
    Ok(RunOutput {
        rows,
        episodes,
        updates: agent.updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::NonstationaryChain;
    use crate::nn::Activation;

    fn tr(state: f64, action: usize, reward: f64, next: f64, done: bool) -> Transition {
        Transition {
            state: vec![state],
            action,
            reward,
            next_state: vec![next],
            done,
            timestamp: 0,
        }
    }

    /// Net whose output ignores the input: `Q = bias`.
    fn constant_net(q: &[f64]) -> Mlp {
        let mut net = Mlp::zeros(&[1, q.len()], Activation::Identity).unwrap();
        net.bias_mut(0).copy_from_slice(q);
        net
    }

    #[test]
    fn terminal_target_is_reward() {
        let online = constant_net(&[5.0, 7.0]);
        let t = tr(0.0, 0, 2.0, 0.0, true);
        assert_eq!(
            double_dqn_targets(&[&t], &online, &online, 0.9).unwrap(),
            vec![2.0]
        );
    }

    #[test]
    fn selection_and_evaluation_are_decoupled() {
        let online = constant_net(&[1.0, 3.0]);
        let target = constant_net(&[10.0, 0.0]);
        let t = tr(0.0, 0, 0.0, 0.0, false);
        assert_eq!(
            double_dqn_targets(&[&t], &online, &target, 0.9).unwrap(),
            vec![0.0]
        );
        assert_eq!(
            double_dqn_targets(&[&t], &target, &target, 0.9).unwrap(),
            vec![9.0]
        );
        assert!(double_dqn_targets(&[], &online, &target, 0.9).is_err());
    }

    #[test]
    fn single_transition_loss_by_hand() {
        let net = constant_net(&[0.5, 1.5]);
        let t = tr(0.0, 1, 1.0, 0.0, false);
        let out = td_loss_gradient(&[&t], None, &net, &net, 0.5).unwrap();
        // y = 1 + 0.5 * 1.5, Q(s, 1) = 1.5
        assert_eq!(out.loss, (1.5f64 - 1.75).powi(2));
        let fixed = tr(0.0, 1, 1.5, 0.0, true);
        let out = td_loss_gradient(&[&fixed], None, &net, &net, 0.5).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.record.params.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn unit_weights_match_unweighted() {
        let mut rng = seeding::stream(1, "w", 0);
        let net = Mlp::init(&[2, 4, 2], &mut rng).unwrap();
        let a = Transition {
            state: vec![0.3, -0.2],
            action: 1,
            reward: 0.4,
            next_state: vec![0.1, 0.9],
            done: false,
            timestamp: 0,
        };
        let b = Transition {
            state: vec![-1.0, 0.5],
            action: 0,
            reward: -0.2,
            next_state: vec![0.0, 0.0],
            done: true,
            timestamp: 1,
        };
        let plain = td_loss_gradient(&[&a, &b], None, &net, &net, 0.9).unwrap();
        let weighted = td_loss_gradient(&[&a, &b], Some(&[1.0, 1.0]), &net, &net, 0.9).unwrap();
        assert_eq!(plain, weighted);
    }

    #[test]
    fn epsilon_schedule() {
        let e = EpsilonSchedule {
            start: 1.0,
            end: 0.1,
            fraction: 0.1,
        };
        assert_eq!(e.value(0, 1000), 1.0);
        assert!((e.value(50, 1000) - 0.55).abs() < 1e-15);
        assert_eq!(e.value(100, 1000), 0.1);
        assert_eq!(e.value(900, 1000), 0.1);
    }

    #[test]
    fn warmup_gate_and_determinism() {
        let env = NonstationaryChain::new(5, 300, 10).unwrap();
        let mut cfg = AgentConfig::desk_scale(600);
        cfg.learning_starts = 1000;
        cfg.log_interval = 100;
        cfg.hidden = vec![8];
        let out = run(cfg.clone(), &env, 600).unwrap();
        assert_eq!(out.updates, 0);
        assert_eq!(out.rows.len(), 6);
        assert!(!out.episodes.is_empty());

        cfg.learning_starts = 100;
        let a = run(cfg.clone(), &env, 600).unwrap();
        let b = run(cfg, &env, 600).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.updates, 125);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = AgentConfig::desk_scale(100);
        cfg.utd = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = AgentConfig::desk_scale(100);
        cfg.gamma = 0.0;
        assert!(cfg.validate().is_err());
    }
}
