use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Expert, InferenceReport};
use crate::mdp::{ActionId, StateId, NUM_ACTIONS};

/// How the stored reward of a state-action pair is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardModel {
    /// Latest reward times the estimated probability of the observed
    /// transition.
    #[default]
    Literal,
    /// Latest reward as received.
    Unscaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbParams {
    pub gamma: f64,
    pub tau: f64,
    /// Number of most recent visits a pair's transition estimate is built from.
    pub window: usize,
    pub vi_epsilon: f64,
    pub vi_max_sweeps: u32,
    pub reward_model: RewardModel,
}

impl Default for MbParams {
    fn default() -> Self {
        MbParams {
            gamma: 0.95,
            tau: 0.02,
            window: 10,
            vi_epsilon: 1e-4,
            vi_max_sweeps: 100,
            reward_model: RewardModel::Literal,
        }
    }
}

/// Learned model of one visited state-action pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    /// Successors of the most recent visits, oldest first.
    recent: VecDeque<StateId>,
    /// Estimated transition probabilities, sorted by successor.
    successors: Vec<(StateId, f64)>,
    reward: f64,
}

impl PairModel {
    pub fn successors(&self) -> &[(StateId, f64)] {
        &self.successors
    }

    pub fn probability(&self, next: StateId) -> f64 {
        self.successors
            .binary_search_by_key(&next, |&(s, _)| s)
            .map(|i| self.successors[i].1)
            .unwrap_or(0.0)
    }

    pub fn reward(&self) -> f64 {
        self.reward
    }

    pub fn visits_in_window(&self) -> usize {
        self.recent.len()
    }

    fn recount(&mut self) {
        let mut sorted: Vec<StateId> = self.recent.iter().copied().collect();
        sorted.sort_unstable();
        let n = sorted.len() as f64;
        self.successors.clear();
        for s in sorted {
            match self.successors.last_mut() {
                Some((last, count)) if *last == s => *count += 1.0,
                _ => self.successors.push((s, 1.0)),
            }
        }
        for (_, p) in &mut self.successors {
            *p /= n;
        }
    }
}

/// Model-based expert: windowed transition counts, latest-reward model and
/// value-iteration planning. The goal-directed expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbExpert {
    pub params: MbParams,
    num_states: usize,
    pairs: Vec<Option<PairModel>>,
    /// Indices into `pairs` of every visited pair, ascending.
    known: Vec<usize>,
    q: Vec<[f64; NUM_ACTIONS]>,
}

impl MbExpert {
    pub fn new(num_states: usize, params: MbParams) -> Self {
        MbExpert {
            params,
            num_states,
            pairs: vec![None; num_states * NUM_ACTIONS],
            known: Vec::new(),
            q: vec![[0.0; NUM_ACTIONS]; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn pair(&self, s: StateId, a: ActionId) -> Option<&PairModel> {
        self.pairs[s.0 * NUM_ACTIONS + a.index()].as_ref()
    }

    /// Estimated `T(s, a, next)`; zero for unvisited pairs.
    pub fn transition_probability(&self, s: StateId, a: ActionId, next: StateId) -> f64 {
        self.pair(s, a).map_or(0.0, |p| p.probability(next))
    }

    pub fn reward_estimate(&self, s: StateId, a: ActionId) -> f64 {
        self.pair(s, a).map_or(0.0, |p| p.reward)
    }

    pub fn known_pairs(&self) -> usize {
        self.known.len()
    }

    /// Structural checks for a deserialized expert.
    pub fn is_consistent(&self) -> bool {
        let n = self.num_states;
        let window = self.params.window;
        self.pairs.len() == n * NUM_ACTIONS
            && self.q.len() == n
            && self.q.iter().flatten().all(|v| v.is_finite())
            && self.known.windows(2).all(|w| w[0] < w[1])
            && self.known.iter().all(|&i| i < self.pairs.len() && self.pairs[i].is_some())
            && self.pairs.iter().filter(|p| p.is_some()).count() == self.known.len()
            && self.pairs.iter().flatten().all(|p| {
                !p.recent.is_empty()
                    && p.recent.len() <= window
                    && p.recent.iter().all(|s| s.0 < n)
                    && p.reward.is_finite()
                    && {
                        let mut check = p.clone();
                        check.recount();
                        check.successors == p.successors
                    }
            })
    }

    pub fn q(&self, s: StateId, a: ActionId) -> f64 {
        self.q[s.0][a.index()]
    }

    pub fn q_table(&self) -> &[[f64; NUM_ACTIONS]] {
        &self.q
    }

    fn max_q(&self, s: StateId) -> f64 {
        self.q[s.0].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Runs value-iteration sweeps over every visited pair, in place, until
    /// the largest change in a sweep drops below `vi_epsilon` or the sweep
    /// cap is hit. Returns `(sweeps, cell_updates)`.
    pub fn plan(&mut self) -> (u32, u64) {
        let gamma = self.params.gamma;
        let mut sweeps = 0;
        let mut work = 0u64;
        loop {
            sweeps += 1;
            let mut delta: f64 = 0.0;
            for &idx in &self.known {
                let pair = self.pairs[idx].as_ref().expect("known pairs have a model");
                let value: f64 = pair
                    .successors
                    .iter()
                    .map(|&(next, p)| p * (pair.reward + gamma * self.max_q(next)))
                    .sum();
                let cell = &mut self.q[idx / NUM_ACTIONS][idx % NUM_ACTIONS];
                delta = delta.max((value - *cell).abs());
                *cell = value;
            }
            work += self.known.len() as u64;
            if delta < self.params.vi_epsilon || sweeps >= self.params.vi_max_sweeps {
                return (sweeps, work);
            }
        }
    }
}

impl Expert for MbExpert {
    fn learn(&mut self, s: StateId, a: ActionId, r: f64, next: StateId) {
        let idx = s.0 * NUM_ACTIONS + a.index();
        if self.pairs[idx].is_none() {
            let pos = self.known.binary_search(&idx).unwrap_err();
            self.known.insert(pos, idx);
        }
        let window = self.params.window.max(1);
        let pair = self.pairs[idx].get_or_insert_with(|| PairModel {
            recent: VecDeque::with_capacity(window),
            successors: Vec::new(),
            reward: 0.0,
        });
        if pair.recent.len() == window {
            pair.recent.pop_front();
        }
        pair.recent.push_back(next);
        pair.recount();
        pair.reward = match self.params.reward_model {
            RewardModel::Literal => r * pair.probability(next),
            RewardModel::Unscaled => r,
        };
    }

    fn infer(&mut self, s: StateId) -> InferenceReport {
        let start = Instant::now();
        let (sweeps, work_units) = self.plan();
        let action_values = self.q[s.0];
        InferenceReport {
            action_values,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            work_units,
            sweeps,
        }
    }

    fn stored_values(&self, s: StateId) -> [f64; NUM_ACTIONS] {
        self.q[s.0]
    }

    fn tau(&self) -> f64 {
        self.params.tau
    }
}
