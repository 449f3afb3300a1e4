//! The per-UAV learner: epsilon-greedy policy over a double deep Q-network,
//! a uniform FIFO replay buffer, periodic target-network sync, and the
//! observation-masking ablation variants used as baselines.
//!
//! Agents are fully decentralised: each owns its parameters, replay memory
//! and RNG stream, and never reads another agent's state except through the
//! environment's neighbour reports.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{LearningParams, WorldConfig};
use crate::env::{obs, ActionId, N_ACTIONS};
use crate::nn::{backward, forward, rmsprop_update, MlpSpec, NnError, ParameterSet, TrainSample};

/// Version tag of the checkpoint file layout.
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("cannot access checkpoint `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed checkpoint `{path}`: {reason}")]
    BadCheckpoint { path: String, reason: String },
    #[error("checkpoint was trained as {found}, requested {requested}")]
    VariantMismatch { found: String, requested: String },
}

// ---------------------------------------------------------------------------
// Deterministic stream derivation
// ---------------------------------------------------------------------------

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// An independent, reproducible RNG stream for `(seed, stream)`. Stream 0
/// drives scenario generation; agent `i` uses stream `i + 1`.
pub fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

// ---------------------------------------------------------------------------
// Replay buffer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: ActionId,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Fixed-capacity ring of transitions: oldest-first eviction, uniform
/// sampling without replacement within a batch.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity),
            next: 0,
        }
    }

    pub fn push(&mut self, transition: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(transition);
        } else {
            self.items[self.next] = transition;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// `n` distinct indices drawn uniformly. Requires `n <= len`.
    pub fn sample_indices(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
        rand::seq::index::sample(rng, self.items.len(), n).into_vec()
    }
}

// ---------------------------------------------------------------------------
// Variants
// ---------------------------------------------------------------------------

/// Which learner runs on a UAV. The ablations share one code path and
/// differ only in which observation components are zeroed and whether the
/// cooperative factor enters the reward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentVariant {
    /// Full observation (density memory + neighbour reports) and the
    /// cooperative reward term.
    Dacemad,
    /// Neighbour reports kept, density components zeroed.
    Cmad,
    /// Neighbour and density components zeroed; no cooperative reward term.
    Mad,
    /// Uniformly random actions, no learning. Needs no checkpoint.
    Random,
}

impl AgentVariant {
    pub const ALL: [AgentVariant; 4] = [
        AgentVariant::Dacemad,
        AgentVariant::Cmad,
        AgentVariant::Mad,
        AgentVariant::Random,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AgentVariant::Dacemad => "dacemad",
            AgentVariant::Cmad => "cmad",
            AgentVariant::Mad => "mad",
            AgentVariant::Random => "random",
        }
    }

    pub fn is_learning(&self) -> bool {
        !matches!(self, AgentVariant::Random)
    }

    pub fn uses_cooperative_factor(&self) -> bool {
        !matches!(self, AgentVariant::Mad)
    }

    /// Zero the observation components this variant is blind to. Density
    /// components are the score ratios and the remembered best position;
    /// neighbour components are the K report blocks.
    pub fn mask_observation(&self, observation: &mut [f64], n_neighbors: usize) {
        let density = [
            obs::SCORE_RATIO,
            obs::BEST_X,
            obs::BEST_Y,
            obs::NEIGHBORHOOD_RATIO,
        ];
        match self {
            AgentVariant::Dacemad | AgentVariant::Random => {}
            AgentVariant::Cmad => {
                for i in density {
                    observation[i] = 0.0;
                }
            }
            AgentVariant::Mad => {
                for i in density {
                    observation[i] = 0.0;
                }
                let end = obs::NEIGHBOR_BLOCKS + obs::NEIGHBOR_BLOCK_LEN * n_neighbors;
                for v in &mut observation[obs::NEIGHBOR_BLOCKS..end] {
                    *v = 0.0;
                }
            }
        }
    }
}

impl fmt::Display for AgentVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentVariant::ALL
            .iter()
            .find(|v| v.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown variant `{s}` (expected dacemad, cmad, mad or random)"))
    }
}

// ---------------------------------------------------------------------------
// Schedules and targets
// ---------------------------------------------------------------------------

/// Linear epsilon decay over episodes, constant at the floor afterwards.
pub fn epsilon_schedule(params: &LearningParams, episode: u32) -> f64 {
    if params.epsilon_decay_episodes == 0 || episode >= params.epsilon_decay_episodes {
        return params.epsilon_end;
    }
    let frac = f64::from(episode) / f64::from(params.epsilon_decay_episodes);
    params.epsilon_start + (params.epsilon_end - params.epsilon_start) * frac
}

/// Double-Q target: the online network selects the next action, the target
/// network evaluates it. Terminal transitions collapse to the reward.
pub fn double_q_target(
    reward: f64,
    next_state: &[f64],
    terminal: bool,
    online: &ParameterSet,
    target: &ParameterSet,
    discount: f64,
) -> Result<f64, NnError> {
    if terminal {
        return Ok(reward);
    }
    let online_q = forward(online, next_state)?;
    let best = argmax(&online_q);
    let target_q = forward(target, next_state)?;
    Ok(reward + discount * target_q[best])
}

/// First index of the maximum, so exact ties resolve to the lowest action.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// The learner
// ---------------------------------------------------------------------------

/// Outcome of one learner invocation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LearnStatus {
    /// Buffer below one batch; nothing changed.
    Skipped { buffer_len: usize },
    /// Variant does not learn.
    NotLearning,
    Learned {
        loss: f64,
        buffer_len: usize,
        synced_target: bool,
    },
}

pub struct DdqnAgent {
    pub variant: AgentVariant,
    pub agent_index: usize,
    online: ParameterSet,
    target: ParameterSet,
    rms_cache: ParameterSet,
    buffer: ReplayBuffer,
    params: LearningParams,
    learner_steps: u64,
    episodes_trained: u32,
    rng: ChaCha8Rng,
    n_neighbors: usize,
}

impl DdqnAgent {
    /// Fresh agent for UAV `agent_index` under the run seed `seed`.
    pub fn new(cfg: &WorldConfig, variant: AgentVariant, agent_index: usize, seed: u64) -> Self {
        let spec = MlpSpec::q_network(cfg.observation_len(), N_ACTIONS);
        let mut rng = derive_rng(seed, agent_index as u64 + 1);
        let online = ParameterSet::init(&spec, &mut rng);
        let target = online.clone();
        let rms_cache = online.zeros_like();
        Self {
            variant,
            agent_index,
            online,
            target,
            rms_cache,
            buffer: ReplayBuffer::new(cfg.learning.replay_capacity),
            params: cfg.learning.clone(),
            learner_steps: 0,
            episodes_trained: 0,
            rng,
            n_neighbors: cfg.learning.n_neighbors,
        }
    }

    pub fn episodes_trained(&self) -> u32 {
        self.episodes_trained
    }

    pub fn set_episodes_trained(&mut self, episodes: u32) {
        self.episodes_trained = episodes;
    }

    pub fn learner_steps(&self) -> u64 {
        self.learner_steps
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn online_params(&self) -> &ParameterSet {
        &self.online
    }

    pub fn target_params(&self) -> &ParameterSet {
        &self.target
    }

    /// Apply this agent's variant mask to an environment observation.
    pub fn mask_observation(&self, observation: &mut [f64]) {
        self.variant.mask_observation(observation, self.n_neighbors);
    }

    /// Q-values of the online network (greedy evaluation and diagnostics).
    pub fn q_values(&self, observation: &[f64]) -> Result<Vec<f64>, NnError> {
        forward(&self.online, observation)
    }

    /// Epsilon-greedy action. Ties in the greedy branch resolve to the
    /// lowest action index; the random variant always explores.
    pub fn select_action(&mut self, observation: &[f64], epsilon: f64) -> Result<ActionId, NnError> {
        let explore = !self.variant.is_learning() || self.rng.gen::<f64>() < epsilon;
        if explore {
            let i = self.rng.gen_range(0..N_ACTIONS);
            return Ok(ActionId::from_index(i).expect("in range"));
        }
        let q = forward(&self.online, observation)?;
        Ok(ActionId::from_index(argmax(&q)).expect("in range"))
    }

    pub fn record(&mut self, transition: Transition) {
        if self.variant.is_learning() {
            self.buffer.push(transition);
        }
    }

    /// One learner update: sample a minibatch, build double-Q targets, take
    /// an RMSprop step, and sync the target network every N⁻ steps.
    pub fn learn_step(&mut self) -> Result<LearnStatus, NnError> {
        if !self.variant.is_learning() {
            return Ok(LearnStatus::NotLearning);
        }
        if self.buffer.len() < self.params.batch_size {
            return Ok(LearnStatus::Skipped {
                buffer_len: self.buffer.len(),
            });
        }
        let indices = self.buffer.sample_indices(&mut self.rng, self.params.batch_size);
        let mut batch = Vec::with_capacity(indices.len());
        for i in indices {
            let tr = self.buffer.get(i);
            let target = double_q_target(
                tr.reward,
                &tr.next_state,
                tr.terminal,
                &self.online,
                &self.target,
                self.params.discount,
            )?;
            batch.push(TrainSample {
                input: tr.state.clone(),
                action: tr.action.index(),
                target,
            });
        }
        let (grads, loss) = backward(&self.online, &batch)?;
        rmsprop_update(
            &mut self.online,
            &grads,
            &mut self.rms_cache,
            self.params.learning_rate,
            self.params.rmsprop_decay,
            self.params.rmsprop_epsilon,
        )?;
        self.learner_steps += 1;
        let synced = self.learner_steps % u64::from(self.params.target_sync_period) == 0;
        if synced {
            self.target = self.online.clone();
        }
        Ok(LearnStatus::Learned {
            loss,
            buffer_len: self.buffer.len(),
            synced_target: synced,
        })
    }

    // -----------------------------------------------------------------------
    // Checkpointing
    // -----------------------------------------------------------------------

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<(), AgentError> {
        let path = path.as_ref();
        let file = Checkpoint {
            version: CHECKPOINT_VERSION,
            variant: self.variant,
            agent_index: self.agent_index,
            episodes_trained: self.episodes_trained,
            learner_steps: self.learner_steps,
            online: self.online.clone(),
            target: self.target.clone(),
            rms_cache: self.rms_cache.clone(),
        };
        let text = serde_json::to_string(&file).expect("checkpoint serialises");
        std::fs::write(path, text).map_err(|source| AgentError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Restore parameters and counters from a checkpoint. The replay buffer
    /// is not persisted; a resumed run refills it.
    pub fn load_checkpoint(
        cfg: &WorldConfig,
        variant: AgentVariant,
        agent_index: usize,
        seed: u64,
        path: impl AsRef<Path>,
    ) -> Result<Self, AgentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| AgentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: Checkpoint =
            serde_json::from_str(&text).map_err(|e| AgentError::BadCheckpoint {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        if file.version != CHECKPOINT_VERSION {
            return Err(AgentError::BadCheckpoint {
                path: path.display().to_string(),
                reason: format!("unsupported version {}", file.version),
            });
        }
        if file.variant != variant {
            return Err(AgentError::VariantMismatch {
                found: file.variant.to_string(),
                requested: variant.to_string(),
            });
        }
        let expected = MlpSpec::q_network(cfg.observation_len(), N_ACTIONS);
        if file.online.spec() != expected {
            return Err(AgentError::BadCheckpoint {
                path: path.display().to_string(),
                reason: format!(
                    "network shape {:?} does not match the configured {:?}",
                    file.online.spec().layer_sizes,
                    expected.layer_sizes
                ),
            });
        }
        let mut agent = Self::new(cfg, variant, agent_index, seed);
        agent.online = file.online;
        agent.target = file.target;
        agent.rms_cache = file.rms_cache;
        agent.learner_steps = file.learner_steps;
        agent.episodes_trained = file.episodes_trained;
        Ok(agent)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    variant: AgentVariant,
    agent_index: usize,
    episodes_trained: u32,
    learner_steps: u64,
    online: ParameterSet,
    target: ParameterSet,
    rms_cache: ParameterSet,
}
