//! Deep Q-learning search over bit-merging curves.
//!
//! The agent edits a curve one adjacent swap at a time. An action `a` in
//! `1..=d·l - 1` exchanges the slots at ranks `a - 1` and `a` (positions
//! counted from the least-significant bit, 1-indexed); swaps of two bits of
//! the same dimension are masked out, so every visited curve stays valid. The
//! reward for moving from `s_t` to `s_t+1` is `(C(s_t) - C(s_t+1)) / C(s_1)`
//! where `C = C_global * C_local` comes from the constant-time estimators.

mod network;
mod replay;

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use network::{QNetwork, Sample};
pub use replay::{ReplayMemory, Transition};

use crate::cost_global::GlobalCostAccumulator;
use crate::cost_local::PatternTableSet;
use crate::curve::{BmcSpec, Grid};
use crate::error::{Error, Result};
use crate::model::{CostModel, CurveCost};

/// Swap position, 1-indexed from the least-significant slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwapAction(pub usize);

impl SwapAction {
    /// Output index of the action in the Q-network (`position - 1`).
    pub fn index(self) -> usize {
        self.0 - 1
    }

    /// Action for output index `i`.
    pub fn from_index(i: usize) -> Self {
        SwapAction(i + 1)
    }
}

/// Exchanges the slots at positions `a` and `a + 1`.
pub fn apply_swap(curve: &BmcSpec, action: SwapAction) -> Result<BmcSpec> {
    if action.0 == 0 {
        return Err(Error::InvalidParameter("swap positions start at 1".into()));
    }
    curve.swap_adjacent(action.0 - 1)
}

/// Valid-action mask, indexed by output index.
pub fn action_mask(curve: &BmcSpec) -> Vec<bool> {
    curve.slots_lsb().windows(2).map(|w| w[0] != w[1]).collect()
}

/// One-hot encoding: for each slot from the most significant, `d` entries
/// with a one at the slot's dimension.
pub fn encode_state(curve: &BmcSpec) -> Vec<f64> {
    let d = curve.grid().dims();
    let mut out = vec![0.0; curve.slots_lsb().len() * d];
    for (i, dim) in curve.slots_msb().into_iter().enumerate() {
        out[i * d + dim as usize] = 1.0;
    }
    out
}

/// Inverse of [`encode_state`].
pub fn decode_state(grid: Grid, encoded: &[f64]) -> Result<BmcSpec> {
    let d = grid.dims();
    if encoded.len() != grid.total_bits() as usize * d {
        return Err(Error::LengthMismatch {
            expected: grid.total_bits() as usize * d,
            found: encoded.len(),
        });
    }
    let slots = encoded
        .chunks_exact(d)
        .map(|row| {
            let mut hot = row.iter().enumerate().filter(|(_, &x)| x == 1.0);
            match (hot.next(), hot.next()) {
                (Some((dim, _)), None) if row.iter().all(|&x| x == 0.0 || x == 1.0) => Ok(dim as u8),
                _ => Err(Error::InvalidParameter("encoding row is not one-hot".into())),
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    BmcSpec::from_slots_msb(grid, slots)
}

fn mask_from_encoding(encoded: &[f64], dims: usize) -> Vec<bool> {
    // Rows are MSB-first; output index i compares LSB positions i and i + 1.
    let rows: Vec<&[f64]> = encoded.chunks_exact(dims).collect();
    let n = rows.len();
    (0..n.saturating_sub(1))
        .map(|i| rows[n - 1 - i] != rows[n - 2 - i])
        .collect()
}

/// Normalized cost reduction `(prev - next) / initial`.
pub fn reward(cost_prev: f64, cost_next: f64, cost_initial: f64) -> Result<f64> {
    if cost_initial == 0.0 || !cost_initial.is_finite() {
        return Err(Error::InvalidParameter("initial cost must be positive".into()));
    }
    Ok((cost_prev - cost_next) / cost_initial)
}

/// Index of the largest unmasked value; ties go to the lowest index.
pub fn masked_argmax(values: &[f64], mask: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&v, &ok)) in values.iter().zip(mask).enumerate() {
        if ok && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Action values with masked actions set to negative infinity.
pub fn q_network_forward(net: &QNetwork, encoded: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    let mut out = net.try_forward(encoded)?;
    if mask.len() != out.len() {
        return Err(Error::LengthMismatch {
            expected: out.len(),
            found: mask.len(),
        });
    }
    for (v, &ok) in out.iter_mut().zip(mask) {
        if !ok {
            *v = f64::NEG_INFINITY;
        }
    }
    Ok(out)
}

/// Hyperparameters of the search.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    /// Episodes `M`; each restarts from the initial curve.
    pub episodes: usize,
    /// Steps `T` per episode.
    pub steps: usize,
    /// Replay capacity `N_MQ`.
    pub memory_capacity: usize,
    /// Transitions per training step.
    pub batch_size: usize,
    /// Adam step size.
    pub learning_rate: f64,
    /// Discount applied to the next state's best action value.
    pub discount: f64,
    /// Exploration probability at the first step.
    pub epsilon_start: f64,
    /// Exploration probability after annealing.
    pub epsilon_end: f64,
    /// Fraction of all steps over which epsilon anneals linearly.
    pub epsilon_anneal: f64,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    /// Seed for network initialization, exploration and replay sampling.
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            episodes: 50,
            steps: 30,
            memory_capacity: 4096,
            batch_size: 64,
            learning_rate: 1e-3,
            discount: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_anneal: 0.5,
            hidden: vec![128, 128],
            seed: 0,
        }
    }
}

impl LearnerConfig {
    /// Checks ranges of every field.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.into()));
        if self.episodes == 0 || self.steps == 0 {
            return bad("episodes and steps must be positive");
        }
        if self.memory_capacity == 0 || self.batch_size == 0 {
            return bad("memory capacity and batch size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1]");
        }
        for e in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&e) {
                return bad("epsilon must lie in [0, 1]");
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon_anneal) {
            return bad("epsilon anneal fraction must lie in [0, 1]");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        Ok(())
    }

    /// Total number of steps `M * T`.
    pub fn total_steps(&self) -> usize {
        self.episodes * self.steps
    }

    /// Exploration probability at 0-indexed global step `step`.
    pub fn epsilon_at(&self, step: usize) -> f64 {
        let span = self.epsilon_anneal * self.total_steps() as f64;
        if span <= 0.0 || step as f64 >= span {
            return self.epsilon_end;
        }
        let frac = step as f64 / span;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Anything that scores actions and learns from replayed transitions.
pub trait ActionValue {
    /// One value per action output index for an encoded state.
    fn action_values(&self, encoded: &[f64]) -> Vec<f64>;

    /// Fits the batch; returns the loss before the update.
    fn train(&mut self, batch: &[&Transition], dims: usize, config: &LearnerConfig) -> f64;
}

impl ActionValue for QNetwork {
    fn action_values(&self, encoded: &[f64]) -> Vec<f64> {
        self.forward(encoded)
    }

    fn train(&mut self, batch: &[&Transition], dims: usize, config: &LearnerConfig) -> f64 {
        let targets: Vec<f64> = batch
            .iter()
            .map(|t| {
                let future = if config.discount == 0.0 {
                    0.0
                } else {
                    let next = self.forward(&t.next_state);
                    let mask = mask_from_encoding(&t.next_state, dims);
                    masked_argmax(&next, &mask).map_or(0.0, |i| next[i])
                };
                t.reward + config.discount * future
            })
            .collect();
        let samples: Vec<Sample> = batch
            .iter()
            .zip(&targets)
            .map(|(t, &y)| Sample {
                state: &t.state,
                action: t.action,
                target: y,
            })
            .collect();
        let (loss, grad) = self.loss_and_gradient(&samples);
        self.apply_gradient(&grad, config.learning_rate);
        loss
    }
}

/// Samples a batch from `memory` and takes one gradient step.
pub fn train_step<Q: ActionValue, R: Rng + ?Sized>(
    memory: &ReplayMemory,
    q: &mut Q,
    dims: usize,
    config: &LearnerConfig,
    rng: &mut R,
) -> Result<f64> {
    if memory.is_empty() {
        return Err(Error::InvalidParameter("replay memory is empty".into()));
    }
    let batch = memory.sample(config.batch_size, rng);
    Ok(q.train(&batch, dims, config))
}

/// One recorded step of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// 1-based global step.
    pub step: usize,
    /// 0-based episode.
    pub episode: usize,
    /// Cost of the curve reached by this step.
    pub cost: f64,
    /// `cost / initial cost`.
    pub ratio: f64,
    /// Exploration probability used for this step.
    pub epsilon: f64,
    /// Training loss, when a training step ran.
    pub loss: Option<f64>,
}

/// Result of [`Learner::run`].
#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    /// Lowest-cost curve visited, the initial curve included.
    pub best: BmcSpec,
    /// Cost of `best`.
    pub best_cost: CurveCost,
    /// Cost of the initial curve.
    pub initial_cost: CurveCost,
    /// One entry per step.
    pub trace: Vec<TraceEntry>,
}

impl LearnOutcome {
    /// `best cost / initial cost`.
    pub fn improvement_ratio(&self) -> f64 {
        self.best_cost.product() / self.initial_cost.product()
    }
}

/// A learner owning its action-value function, replay memory and RNG.
#[derive(Debug, Clone)]
pub struct Learner<Q = QNetwork> {
    config: LearnerConfig,
    q: Q,
    memory: ReplayMemory,
    rng: ChaCha8Rng,
}

impl Learner<QNetwork> {
    /// Learner with a freshly initialized Q-network sized for `grid`.
    pub fn new(grid: Grid, config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let slots = grid.total_bits() as usize;
        let mut sizes = vec![slots * grid.dims()];
        sizes.extend_from_slice(&config.hidden);
        sizes.push(slots.saturating_sub(1).max(1));
        let q = QNetwork::random(&sizes, &mut rng)?;
        Ok(Learner {
            memory: ReplayMemory::new(config.memory_capacity),
            config,
            q,
            rng,
        })
    }
}

impl<Q: ActionValue> Learner<Q> {
    /// Learner with a caller-supplied action-value function.
    pub fn with_action_value(config: LearnerConfig, q: Q) -> Result<Self> {
        config.validate()?;
        Ok(Learner {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            memory: ReplayMemory::new(config.memory_capacity),
            config,
            q,
        })
    }

    /// The action-value function.
    pub fn action_value(&self) -> &Q {
        &self.q
    }

    /// The configuration.
    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    /// The replay memory.
    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }

    /// Runs `M` episodes of `T` steps from `start`.
    pub fn run(&mut self, start: &BmcSpec, model: &CostModel) -> Result<LearnOutcome> {
        let grid = start.grid();
        grid.ensure_same(&model.grid())?;
        let dims = grid.dims();
        let initial_cost = model.cost(start)?;
        let initial = initial_cost.product();
        if initial <= 0.0 {
            return Err(Error::InvalidParameter("initial curve has zero cost".into()));
        }
        let mut best = (start.clone(), initial_cost);
        let mut trace = Vec::with_capacity(self.config.total_steps());
        if action_mask(start).iter().all(|&ok| !ok) {
            // Only one curve exists (d = 1).
            return Ok(LearnOutcome {
                best: best.0,
                best_cost: best.1,
                initial_cost,
                trace,
            });
        }
        let mut global_step = 0;
        for episode in 0..self.config.episodes {
            let mut curve = start.clone();
            let mut cost = initial;
            for _ in 0..self.config.steps {
                let epsilon = self.config.epsilon_at(global_step);
                let state = encode_state(&curve);
                let mask = action_mask(&curve);
                let index = if self.rng.random::<f64>() < epsilon {
                    let valid: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
                    valid[self.rng.random_range(0..valid.len())]
                } else {
                    let values = self.q.action_values(&state);
                    masked_argmax(&values, &mask).expect("at least one valid action")
                };
                let next = apply_swap(&curve, SwapAction::from_index(index))?;
                let next_cost = model.cost(&next)?;
                let r = reward(cost, next_cost.product(), initial)?;
                self.memory.push(Transition {
                    state,
                    action: index,
                    reward: r,
                    next_state: encode_state(&next),
                });
                let loss = if self.memory.len() >= self.config.batch_size {
                    Some(train_step(&self.memory, &mut self.q, dims, &self.config, &mut self.rng)?)
                } else {
                    None
                };
                if next_cost.product() < best.1.product() {
                    best = (next.clone(), next_cost);
                }
                global_step += 1;
                cost = next_cost.product();
                trace.push(TraceEntry {
                    step: global_step,
                    episode,
                    cost,
                    ratio: cost / initial,
                    epsilon,
                    loss,
                });
                curve = next;
            }
        }
        Ok(LearnOutcome {
            best: best.0,
            best_cost: best.1,
            initial_cost,
            trace,
        })
    }
}

/// Learns a curve for the workload summarized by `tables` and `acc`,
/// starting from `start`.
pub fn learn_bmc(
    start: &BmcSpec,
    tables: &PatternTableSet,
    acc: &GlobalCostAccumulator,
    config: &LearnerConfig,
) -> Result<LearnOutcome> {
    let model = CostModel::from_parts(acc.clone(), tables.clone())?;
    Learner::new(start.grid(), config.clone())?.run(start, &model)
}
