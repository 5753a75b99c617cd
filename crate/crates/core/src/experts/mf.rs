use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Expert, InferenceReport};
use crate::mdp::{ActionId, StateId, NUM_ACTIONS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfParams {
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
}

impl Default for MfParams {
    fn default() -> Self {
        MfParams {
            alpha: 0.6,
            gamma: 0.9,
            tau: 0.02,
        }
    }
}

/// Tabular Q-learning: the habitual expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfExpert {
    pub params: MfParams,
    q: Vec<[f64; NUM_ACTIONS]>,
}

impl MfExpert {
    pub fn new(num_states: usize, params: MfParams) -> Self {
        MfExpert {
            params,
            q: vec![[0.0; NUM_ACTIONS]; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self, s: StateId, a: ActionId) -> f64 {
        self.q[s.0][a.index()]
    }

    pub fn q_table(&self) -> &[[f64; NUM_ACTIONS]] {
        &self.q
    }

    pub fn is_consistent(&self) -> bool {
        self.q.iter().flatten().all(|v| v.is_finite())
    }

    fn max_q(&self, s: StateId) -> f64 {
        self.q[s.0].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Expert for MfExpert {
    /// `Q(s,a) += alpha * (r + gamma * max_b Q(s',b) - Q(s,a))`
    fn learn(&mut self, s: StateId, a: ActionId, r: f64, next: StateId) {
        let target = r + self.params.gamma * self.max_q(next);
        let cell = &mut self.q[s.0][a.index()];
        *cell += self.params.alpha * (target - *cell);
    }

    fn infer(&mut self, s: StateId) -> InferenceReport {
        let start = Instant::now();
        let action_values = self.q[s.0];
        InferenceReport {
            action_values,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            work_units: NUM_ACTIONS as u64,
            sweeps: 0,
        }
    }

    fn stored_values(&self, s: StateId) -> [f64; NUM_ACTIONS] {
        self.q[s.0]
    }

    fn tau(&self) -> f64 {
        self.params.tau
    }
}
