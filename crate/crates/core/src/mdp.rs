//! Shared vocabulary of the decision layer: dense state and action ids,
//! action distributions, and the numeric primitives every expert and the
//! meta-controller build on (softmax, entropy in bits, exponential moving
//! averages, and seeded sampling).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every task exposes the same fixed action set.
pub const NUM_ACTIONS: usize = 7;

/// Tolerance used when validating that probabilities sum to one.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Dense index into a task's enumerated state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of one of the [`NUM_ACTIONS`] actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct ActionId(u8);

impl ActionId {
    pub fn new(index: usize) -> Option<Self> {
        (index < NUM_ACTIONS).then_some(ActionId(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = ActionId> {
        (0..NUM_ACTIONS as u8).map(ActionId)
    }
}

impl TryFrom<usize> for ActionId {
    type Error = String;

    fn try_from(value: usize) -> std::result::Result<Self, Self::Error> {
        ActionId::new(value).ok_or_else(|| format!("action index {value} out of range"))
    }
}

impl From<ActionId> for usize {
    fn from(a: ActionId) -> usize {
        a.index()
    }
}

/// Probability of each action in one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; NUM_ACTIONS]", into = "[f64; NUM_ACTIONS]")]
pub struct ActionDistribution([f64; NUM_ACTIONS]);

impl ActionDistribution {
    pub fn new(probs: [f64; NUM_ACTIONS]) -> Result<Self> {
        validate_probabilities(&probs)?;
        Ok(ActionDistribution(probs))
    }

    pub fn uniform() -> Self {
        ActionDistribution([1.0 / NUM_ACTIONS as f64; NUM_ACTIONS])
    }

    pub fn one_hot(action: ActionId) -> Self {
        let mut probs = [0.0; NUM_ACTIONS];
        probs[action.index()] = 1.0;
        ActionDistribution(probs)
    }

    pub fn probs(&self) -> &[f64; NUM_ACTIONS] {
        &self.0
    }

    pub fn prob(&self, action: ActionId) -> f64 {
        self.0[action.index()]
    }
}

impl TryFrom<[f64; NUM_ACTIONS]> for ActionDistribution {
    type Error = Error;

    fn try_from(probs: [f64; NUM_ACTIONS]) -> Result<Self> {
        ActionDistribution::new(probs)
    }
}

impl From<ActionDistribution> for [f64; NUM_ACTIONS] {
    fn from(d: ActionDistribution) -> Self {
        d.0
    }
}

fn validate_probabilities(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("no outcomes".into()));
    }
    let mut total = 0.0;
    for &p in probs {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!("probability {p} outside [0, 1]")));
        }
        total += p;
    }
    if (total - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    Ok(())
}

/// Boltzmann distribution over an arbitrary number of values.
///
/// The maximum is subtracted before exponentiation; at `tau = 0.02` raw
/// exponentials overflow for values above ~14.
pub fn softmax_weights(values: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0 && tau.is_finite()) || values.is_empty() {
        return Err(Error::InvalidActionValues);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidActionValues);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = values.iter().map(|v| ((v - max) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Action probabilities `exp(q_i / tau) / sum_j exp(q_j / tau)`.
pub fn softmax(values: &[f64; NUM_ACTIONS], tau: f64) -> Result<ActionDistribution> {
    let weights = softmax_weights(values, tau)?;
    let mut probs = [0.0; NUM_ACTIONS];
    probs.copy_from_slice(&weights);
    Ok(ActionDistribution(probs))
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy_bits(dist: &ActionDistribution) -> f64 {
    let h: f64 = dist
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    // rounding can push a one-hot distribution to -0.0 or a hair below zero
    h.max(0.0)
}

/// Exponential moving average `v <- (1 - s) v + s x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmaValue {
    pub value: f64,
    smoothing: f64,
}

impl EmaValue {
    pub fn new(initial: f64, smoothing: f64) -> Result<Self> {
        if !(smoothing > 0.0 && smoothing <= 1.0) {
            return Err(Error::Config(format!("EMA smoothing {smoothing} outside (0, 1]")));
        }
        Ok(EmaValue {
            value: initial,
            smoothing,
        })
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn is_valid(&self) -> bool {
        self.value.is_finite() && self.smoothing > 0.0 && self.smoothing <= 1.0
    }

    pub fn update(&mut self, observation: f64) {
        self.value = (1.0 - self.smoothing) * self.value + self.smoothing * observation;
    }

    pub fn updated(mut self, observation: f64) -> Self {
        self.update(observation);
        self
    }
}

/// Deterministic random stream. One algorithm (ChaCha8) is used project-wide;
/// independent streams are derived from `(master_seed, run, lane)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RngPosition", into = "RngPosition")]
pub struct RngStream(ChaCha8Rng);

/// Serialized form of a stream: key, stream number and position, with the
/// 128-bit position split so that any JSON reader can hold it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RngPosition {
    seed: [u8; 32],
    stream: u64,
    word_pos_high: u64,
    word_pos_low: u64,
}

impl From<RngStream> for RngPosition {
    fn from(r: RngStream) -> Self {
        let pos = r.0.get_word_pos();
        RngPosition {
            seed: r.0.get_seed(),
            stream: r.0.get_stream(),
            word_pos_high: (pos >> 64) as u64,
            word_pos_low: pos as u64,
        }
    }
}

impl TryFrom<RngPosition> for RngStream {
    type Error = String;

    fn try_from(p: RngPosition) -> std::result::Result<Self, String> {
        let pos = (u128::from(p.word_pos_high) << 64) | u128::from(p.word_pos_low);
        // the position counts 32-bit words in a 68-bit block counter
        if pos >> 68 != 0 {
            return Err("random stream position out of range".into());
        }
        let mut rng = ChaCha8Rng::from_seed(p.seed);
        rng.set_stream(p.stream);
        rng.set_word_pos(pos);
        Ok(RngStream(rng))
    }
}

/// Streams per run reserved for the different consumers of randomness.
const LANES_PER_RUN: u64 = 16;

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        RngStream(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn for_run(master_seed: u64, run_index: u64, lane: u64) -> Self {
        debug_assert!(lane < LANES_PER_RUN);
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(run_index * LANES_PER_RUN + lane);
        RngStream(rng)
    }

    /// One uniform draw in `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.0.gen::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.gen()
    }

    /// Draws an index with probability `probs[i]`, consuming exactly one draw.
    pub fn sample_index(&mut self, probs: &[f64]) -> Result<usize> {
        validate_probabilities(probs)?;
        let u = self.next_unit();
        let mut cumulative = 0.0;
        let mut last_positive = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = i;
            }
            cumulative += p;
            if u < cumulative {
                return Ok(i);
            }
        }
        // u landed in the rounding gap above the cumulative sum
        Ok(last_positive)
    }
}

/// Free-function form of [`RngStream::sample_index`].
pub fn sample_index(probs: &[f64], rng: &mut RngStream) -> Result<usize> {
    rng.sample_index(probs)
}
