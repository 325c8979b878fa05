//! Flat `key = value` run configuration with `--key=value` overrides.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use plastic_replay_core::agent::{AgentConfig, EpsilonSchedule};
use plastic_replay_core::sampling::{DecayKind, DecaySchedule, PerConfig, SamplerKind};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| bad(key, format!("`{value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

pub const SAMPLER_NAMES: [&str; 7] = [
    "uniform",
    "swd",
    "swa",
    "exp-decay",
    "poly-decay",
    "swd-bucketed",
    "per",
];

/// Everything `train` needs. Zero for `decay_steps` or `buffer_capacity`
/// means "derive from `total_steps`".
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: String,
    pub out_dir: PathBuf,
    pub samplers: Vec<String>,
    pub seeds: Vec<u64>,
    pub total_steps: u64,
    pub chain_length: usize,
    pub shift_step: u64,
    pub max_episode_steps: usize,
    pub gamma: f64,
    pub batch_size: usize,
    pub learning_starts: u64,
    pub train_frequency: u64,
    pub target_update_interval: u64,
    pub utd: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_fraction: f64,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub log_interval: u64,
    pub buffer_capacity: usize,
    pub metrics_batch: usize,
    pub decay_steps: u64,
    pub min_weight: f64,
    pub tau: f64,
    pub power: f64,
    pub buckets: usize,
    pub per_alpha: f64,
    pub per_beta: f64,
    pub per_beta_increment: f64,
    pub per_epsilon: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let agent = AgentConfig::desk_scale(20_000);
        let per = PerConfig::default();
        Self {
            experiment: "chain".into(),
            out_dir: PathBuf::from("out"),
            samplers: vec!["swd".into(), "uniform".into(), "swa".into()],
            seeds: vec![0, 1, 2, 3, 4],
            total_steps: 20_000,
            chain_length: 5,
            shift_step: 6_000,
            max_episode_steps: 20,
            gamma: agent.gamma,
            batch_size: agent.batch_size,
            learning_starts: agent.learning_starts,
            train_frequency: agent.train_frequency,
            target_update_interval: agent.target_update_interval,
            utd: agent.utd,
            epsilon_start: agent.epsilon.start,
            epsilon_end: agent.epsilon.end,
            epsilon_fraction: agent.epsilon.fraction,
            learning_rate: agent.learning_rate,
            hidden: agent.hidden,
            log_interval: agent.log_interval,
            buffer_capacity: 0,
            metrics_batch: agent.metrics_batch,
            decay_steps: 0,
            min_weight: 0.1,
            tau: 1.0,
            power: 2.0,
            buckets: 100,
            per_alpha: per.alpha,
            per_beta: per.beta,
            per_beta_increment: per.beta_increment,
            per_epsilon: per.epsilon,
        }
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "experiment" => {
                if v.is_empty() || v.contains(['/', '\\']) {
                    return Err(bad(key, "must be a plain directory name"));
                }
                self.experiment = v.to_string();
            }
            "out_dir" => self.out_dir = PathBuf::from(v),
            "samplers" => {
                let names: Vec<String> = v
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if let Some(unknown) = names.iter().find(|n| !SAMPLER_NAMES.contains(&n.as_str())) {
                    return Err(bad(
                        key,
                        format!(
                            "unknown sampler `{unknown}` (expected one of {})",
                            SAMPLER_NAMES.join(", ")
                        ),
                    ));
                }
                self.samplers = names;
            }
            "seeds" => self.seeds = parse_list(key, v)?,
            "total_steps" => self.total_steps = parse(key, v)?,
            "chain_length" => self.chain_length = parse(key, v)?,
            "shift_step" => self.shift_step = parse(key, v)?,
            "max_episode_steps" => self.max_episode_steps = parse(key, v)?,
            "gamma" => self.gamma = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "learning_starts" => self.learning_starts = parse(key, v)?,
            "train_frequency" => self.train_frequency = parse(key, v)?,
            "target_update_interval" => self.target_update_interval = parse(key, v)?,
            "utd" => self.utd = parse(key, v)?,
            "epsilon_start" => self.epsilon_start = parse(key, v)?,
            "epsilon_end" => self.epsilon_end = parse(key, v)?,
            "epsilon_fraction" => self.epsilon_fraction = parse(key, v)?,
            "learning_rate" => self.learning_rate = parse(key, v)?,
            "hidden" => self.hidden = parse_list(key, v)?,
            "log_interval" => self.log_interval = parse(key, v)?,
            "buffer_capacity" => self.buffer_capacity = parse(key, v)?,
            "metrics_batch" => self.metrics_batch = parse(key, v)?,
            "decay_steps" => self.decay_steps = parse(key, v)?,
            "min_weight" => self.min_weight = parse(key, v)?,
            "tau" => self.tau = parse(key, v)?,
            "power" => self.power = parse(key, v)?,
            "buckets" => self.buckets = parse(key, v)?,
            "per_alpha" => self.per_alpha = parse(key, v)?,
            "per_beta" => self.per_beta = parse(key, v)?,
            "per_beta_increment" => self.per_beta_increment = parse(key, v)?,
            "per_epsilon" => self.per_epsilon = parse(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a `key = value` document; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Applies `--key=value` (or `key=value`) overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for (i, o) in overrides.iter().enumerate() {
            let o = o.as_ref();
            let body = o.strip_prefix("--").unwrap_or(o);
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: o.to_string(),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        cfg.apply_overrides(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.samplers.is_empty() {
            return Err(bad("samplers", "at least one sampler is required"));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds", "at least one seed is required"));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(bad("seeds", "seeds must be distinct"));
        }
        if self.samplers.iter().collect::<BTreeSet<_>>().len() != self.samplers.len() {
            return Err(bad("samplers", "samplers must be distinct"));
        }
        if self.total_steps == 0 {
            return Err(bad("total_steps", "must be positive"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(bad("hidden", "needs one or more positive widths"));
        }
        plastic_replay_core::envs::NonstationaryChain::new(
            self.chain_length,
            self.shift_step,
            self.max_episode_steps,
        )
        .map_err(|e| bad("chain_length", e.to_string()))?;
        for name in &self.samplers {
            self.sampler_kind(name)?;
        }
        self.agent_config(SamplerKind::Uniform, 0)
            .validate()
            .map_err(|e| bad("agent", e.to_string()))?;
        Ok(())
    }

    pub fn effective_decay_steps(&self) -> u64 {
        if self.decay_steps == 0 {
            ((self.total_steps as f64 * 0.8) as u64).max(1)
        } else {
            self.decay_steps
        }
    }

    pub fn sampler_kind(&self, name: &str) -> Result<SamplerKind, ConfigError> {
        let t = self.effective_decay_steps();
        let sched = |kind| {
            DecaySchedule::new(kind, t, self.min_weight)
                .map_err(|e| bad("min_weight", e.to_string()))
        };
        Ok(match name {
            "uniform" => SamplerKind::Uniform,
            "swd" => SamplerKind::Weighted(sched(DecayKind::Linear)?),
            "swa" => SamplerKind::Weighted(sched(DecayKind::Swa)?),
            "exp-decay" => SamplerKind::Weighted(
                DecaySchedule::new(DecayKind::Exponential { tau: self.tau }, t, self.min_weight)
                    .map_err(|e| bad("tau", e.to_string()))?,
            ),
            "poly-decay" => SamplerKind::Weighted(
                DecaySchedule::new(
                    DecayKind::Polynomial { power: self.power },
                    t,
                    self.min_weight,
                )
                .map_err(|e| bad("power", e.to_string()))?,
            ),
            "swd-bucketed" => {
                if self.buckets == 0 {
                    return Err(bad("buckets", "must be positive"));
                }
                SamplerKind::Bucketed {
                    schedule: sched(DecayKind::Linear)?,
                    buckets: self.buckets,
                }
            }
            "per" => {
                let per = PerConfig {
                    alpha: self.per_alpha,
                    beta: self.per_beta,
                    beta_increment: self.per_beta_increment,
                    epsilon: self.per_epsilon,
                };
                per.validate()
                    .map_err(|e| bad("per_alpha", e.to_string()))?;
                SamplerKind::Prioritized(per)
            }
            other => return Err(bad("samplers", format!("unknown sampler `{other}`"))),
        })
    }

    pub fn agent_config(&self, sampler: SamplerKind, seed: u64) -> AgentConfig {
        AgentConfig {
            gamma: self.gamma,
            batch_size: self.batch_size,
            learning_starts: self.learning_starts,
            train_frequency: self.train_frequency,
            target_update_interval: self.target_update_interval,
            utd: self.utd,
            epsilon: EpsilonSchedule {
                start: self.epsilon_start,
                end: self.epsilon_end,
                fraction: self.epsilon_fraction,
            },
            sampler,
            seed,
            buffer_capacity: if self.buffer_capacity == 0 {
                self.total_steps as usize
            } else {
                self.buffer_capacity
            },
            learning_rate: self.learning_rate,
            hidden: self.hidden.clone(),
            log_interval: self.log_interval,
            metrics_batch: self.metrics_batch,
            grama_tau: plastic_replay_core::grama::DEFAULT_TAU,
        }
    }

    /// Canonical `key = value` dump; parsing it back yields the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment", self.experiment.clone());
        kv("out_dir", self.out_dir.display().to_string());
        kv("samplers", self.samplers.join(","));
        kv("seeds", join(&self.seeds));
        kv("total_steps", self.total_steps.to_string());
        kv("chain_length", self.chain_length.to_string());
        kv("shift_step", self.shift_step.to_string());
        kv("max_episode_steps", self.max_episode_steps.to_string());
        kv("gamma", self.gamma.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("learning_starts", self.learning_starts.to_string());
        kv("train_frequency", self.train_frequency.to_string());
        kv(
            "target_update_interval",
            self.target_update_interval.to_string(),
        );
        kv("utd", self.utd.to_string());
        kv("epsilon_start", self.epsilon_start.to_string());
        kv("epsilon_end", self.epsilon_end.to_string());
        kv("epsilon_fraction", self.epsilon_fraction.to_string());
        kv("learning_rate", self.learning_rate.to_string());
        kv("hidden", join(&self.hidden));
        kv("log_interval", self.log_interval.to_string());
        kv("buffer_capacity", self.buffer_capacity.to_string());
        kv("metrics_batch", self.metrics_batch.to_string());
        kv("decay_steps", self.decay_steps.to_string());
        kv("min_weight", self.min_weight.to_string());
        kv("tau", self.tau.to_string());
        kv("power", self.power.to_string());
        kv("buckets", self.buckets.to_string());
        kv("per_alpha", self.per_alpha.to_string());
        kv("per_beta", self.per_beta.to_string());
        kv("per_beta_increment", self.per_beta_increment.to_string());
        kv("per_epsilon", self.per_epsilon.to_string());
        s
    }
}
