//! The two decision-layer experts.
//!
//! Both run the same three processes each step: *learning* from the executed
//! transition, *inference* of action values for the current state, and a
//! softmax *decision* over those values. They differ in what inference costs:
//! the model-free expert reads one table row, while the model-based expert
//! replans with value iteration over its learned model.

mod mb;
mod mf;

use serde::{Deserialize, Serialize};

pub use mb::{MbExpert, MbParams, PairModel, RewardModel};
pub use mf::{MfExpert, MfParams};

use crate::error::Result;
use crate::mdp::{softmax, ActionDistribution, ActionId, RngStream, StateId, NUM_ACTIONS};

/// What one inference pass produced and what it cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub action_values: [f64; NUM_ACTIONS],
    pub wall_clock_seconds: f64,
    /// Q-cell reads (model-free) or Q-cell updates (model-based).
    pub work_units: u64,
    /// Value-iteration sweeps; zero for the model-free expert.
    pub sweeps: u32,
}

/// Common surface of both experts.
pub trait Expert {
    fn learn(&mut self, s: StateId, a: ActionId, r: f64, next: StateId);
    fn infer(&mut self, s: StateId) -> InferenceReport;
    /// Current action values without running inference.
    fn stored_values(&self, s: StateId) -> [f64; NUM_ACTIONS];
    fn tau(&self) -> f64;
}

/// Softmax decision with the one-shot congratulation bonus:
/// `P(a) ∝ exp((Q(a) + zeta * G(a)) / tau)`.
///
/// The returned distribution includes the bonus; it is what the
/// meta-controller's entropy monitor sees.
pub fn decide(
    values: &[f64; NUM_ACTIONS],
    tau: f64,
    congrats: &[bool; NUM_ACTIONS],
    zeta: f64,
    rng: &mut RngStream,
) -> Result<(ActionId, ActionDistribution)> {
    let mut biased = *values;
    for (v, &g) in biased.iter_mut().zip(congrats) {
        if g {
            *v += zeta;
        }
    }
    let dist = softmax(&biased, tau)?;
    let index = rng.sample_index(dist.probs())?;
    Ok((ActionId::new(index).expect("softmax over seven actions"), dist))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decide_without_bias_is_plain_softmax() {
        let values = [0.3, 0.1, 0.0, 0.25, 0.0, 0.05, 0.2];
        let mut rng = RngStream::from_seed(1);
        let (_, d) = decide(&values, 0.02, &[false; 7], 0.1, &mut rng).unwrap();
        assert_eq!(d, softmax(&values, 0.02).unwrap());
        let (_, d0) = decide(&values, 0.02, &[true; 7], 0.0, &mut rng).unwrap();
        assert_eq!(d0, softmax(&values, 0.02).unwrap());
    }

    #[test]
    fn decide_uniform_and_bonus() {
        let mut rng = RngStream::from_seed(3);
        let (_, d) = decide(&[0.0; 7], 0.02, &[false; 7], 0.1, &mut rng).unwrap();
        assert_eq!(d, ActionDistribution::uniform());
        let mut g = [false; 7];
        g[0] = true;
        let (_, d) = decide(&[0.0; 7], 0.02, &g, 0.1, &mut rng).unwrap();
        let e5 = 5f64.exp();
        assert!((d.probs()[0] - e5 / (e5 + 6.0)).abs() < 1e-12);
    }
}
