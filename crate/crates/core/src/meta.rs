//! Arbitration between the two experts.
//!
//! For every state the meta-controller keeps a moving average of each
//! expert's decision entropy (how settled its preferences are) and of its
//! inference cost. The expert value `Q(s,E) = -(H(s,E) + kappa * T(s,E))`
//! trades one against the other, with `kappa = exp(-9 H(s,MF))` so cost only
//! starts to matter once the cheap expert has become confident. A softmax
//! over the two values picks who acts; the other expert skips inference.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{entropy_bits, softmax_weights, ActionDistribution, EmaValue, RngStream, StateId, NUM_ACTIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ExpertTag {
    Mf,
    Mb,
}

impl ExpertTag {
    pub const BOTH: [ExpertTag; 2] = [ExpertTag::Mf, ExpertTag::Mb];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ExpertTag::Mf => "MF",
            ExpertTag::Mb => "MB",
        }
    }
}

impl fmt::Display for ExpertTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which arbitration scheme drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    /// Model-free expert alone.
    Mf,
    /// Model-based expert alone.
    Mb,
    /// Fair coin between the experts at every step.
    Rnd,
    /// Entropy-and-cost criterion.
    Ec,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::Mf,
        ControllerKind::Mb,
        ControllerKind::Rnd,
        ControllerKind::Ec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Mf => "mf",
            ControllerKind::Mb => "mb",
            ControllerKind::Rnd => "rnd",
            ControllerKind::Ec => "ec",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ControllerKind::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown controller {s:?}")))
    }
}

/// Weight of inference cost in the expert value.
pub fn kappa(h_mf: f64) -> f64 {
    (-9.0 * h_mf).exp()
}

/// `-(h + kappa * t)`
pub fn expert_value(h: f64, t: f64, kappa: f64) -> f64 {
    -(h + kappa * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbitrationOutcome {
    pub chosen: ExpertTag,
    /// `[P(MF), P(MB)]`
    pub expert_probs: [f64; 2],
    pub kappa: f64,
    /// `[Q(s,MF), Q(s,MB)]`
    pub expert_values: [f64; 2],
}

/// Per-state, per-expert averages of decision entropy and inference cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaMonitor {
    pub tau: f64,
    entropy: Vec<[EmaValue; 2]>,
    cost: Vec<[EmaValue; 2]>,
}

impl MetaMonitor {
    /// Entropy averages start at `log2 7` (nothing learned yet), costs at 0.
    pub fn new(num_states: usize, smoothing: f64, tau: f64) -> Result<Self> {
        let h0 = EmaValue::new((NUM_ACTIONS as f64).log2(), smoothing)?;
        let c0 = EmaValue::new(0.0, smoothing)?;
        if !(tau > 0.0) {
            return Err(Error::Config(format!("meta-controller tau {tau} must be positive")));
        }
        Ok(MetaMonitor {
            tau,
            entropy: vec![[h0; 2]; num_states],
            cost: vec![[c0; 2]; num_states],
        })
    }

    pub fn num_states(&self) -> usize {
        self.entropy.len()
    }

    /// Range checks for a deserialized monitor.
    pub fn is_consistent(&self) -> bool {
        let h_max = (NUM_ACTIONS as f64).log2() + 1e-9;
        self.tau > 0.0
            && self.tau.is_finite()
            && self.cost.len() == self.entropy.len()
            && self
                .entropy
                .iter()
                .flatten()
                .all(|h| h.is_valid() && (0.0..=h_max).contains(&h.value))
            && self.cost.iter().flatten().all(|c| c.is_valid() && c.value >= 0.0)
    }

    pub fn entropy(&self, s: StateId, e: ExpertTag) -> f64 {
        self.entropy[s.0][e.index()].value
    }

    pub fn cost(&self, s: StateId, e: ExpertTag) -> f64 {
        self.cost[s.0][e.index()].value
    }

    /// Folds in the acting expert's decision distribution and inference cost.
    /// The other expert's averages are left alone.
    pub fn update(&mut self, s: StateId, e: ExpertTag, dist: &ActionDistribution, cost: f64) {
        self.entropy[s.0][e.index()].update(entropy_bits(dist));
        self.cost[s.0][e.index()].update(cost);
    }

    /// Folds in an entropy observation only.
    pub fn observe_entropy(&mut self, s: StateId, e: ExpertTag, dist: &ActionDistribution) {
        self.entropy[s.0][e.index()].update(entropy_bits(dist));
    }

    /// Expert values and probabilities under the entropy-and-cost criterion.
    pub fn evaluate(&self, s: StateId) -> Result<(f64, [f64; 2], [f64; 2])> {
        let k = kappa(self.entropy(s, ExpertTag::Mf));
        let values = ExpertTag::BOTH.map(|e| expert_value(self.entropy(s, e), self.cost(s, e), k));
        let w = softmax_weights(&values, self.tau)?;
        Ok((k, values, [w[0], w[1]]))
    }

    /// Picks the acting expert for state `s`.
    ///
    /// Fixed controllers draw nothing from `rng`; `Rnd` and `Ec` draw once.
    pub fn select(&self, kind: ControllerKind, s: StateId, rng: &mut RngStream) -> Result<ArbitrationOutcome> {
        let (k, values, ec_probs) = self.evaluate(s)?;
        let (chosen, expert_probs) = match kind {
            ControllerKind::Mf => (ExpertTag::Mf, [1.0, 0.0]),
            ControllerKind::Mb => (ExpertTag::Mb, [0.0, 1.0]),
            ControllerKind::Rnd => {
                let probs = [0.5, 0.5];
                (ExpertTag::BOTH[rng.sample_index(&probs)?], probs)
            }
            ControllerKind::Ec => (ExpertTag::BOTH[rng.sample_index(&ec_probs)?], ec_probs),
        };
        Ok(ArbitrationOutcome {
            chosen,
            expert_probs,
            kappa: k,
            expert_values: values,
        })
    }
}

/// Free-function form of [`MetaMonitor::select`].
pub fn select_expert(
    kind: ControllerKind,
    monitor: &MetaMonitor,
    s: StateId,
    rng: &mut RngStream,
) -> Result<ArbitrationOutcome> {
    monitor.select(kind, s, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::ActionId;
    use proptest::prelude::*;

    fn monitor() -> MetaMonitor {
        MetaMonitor::new(4, 0.1, 0.02).unwrap()
    }

    #[test]
    fn kappa_reference_points() {
        assert_eq!(kappa(0.0), 1.0);
        assert!((kappa(0.5) - (-4.5f64).exp()).abs() < 1e-15);
        assert!((kappa(0.5) - 0.01111).abs() < 1e-5);
        let k = kappa(7f64.log2());
        assert!(k > 1.0e-11 && k < 1.2e-11);
    }

    #[test]
    fn expert_value_arithmetic() {
        assert_eq!(expert_value(0.0, 0.0, 1.0), 0.0);
        assert!((expert_value(1.0, 0.002, 0.01) + 1.00002).abs() < 1e-12);
        assert!(expert_value(1.0, 0.1, 0.5) > expert_value(1.0, 0.2, 0.5));
    }

    #[test]
    fn fixed_controllers() {
        let m = monitor();
        let mut rng = RngStream::from_seed(0);
        let before = rng.clone();
        for s in 0..4 {
            let o = m.select(ControllerKind::Mf, StateId(s), &mut rng).unwrap();
            assert_eq!(o.chosen, ExpertTag::Mf);
            assert_eq!(o.expert_probs, [1.0, 0.0]);
            let o = m.select(ControllerKind::Mb, StateId(s), &mut rng).unwrap();
            assert_eq!(o.chosen, ExpertTag::Mb);
        }
        assert_eq!(rng, before);
    }

    #[test]
    fn random_controller_is_fair() {
        let m = monitor();
        let mut rng = RngStream::from_seed(77);
        let n = 10_000;
        let mf = (0..n)
            .filter(|_| m.select(ControllerKind::Rnd, StateId(0), &mut rng).unwrap().chosen == ExpertTag::Mf)
            .count();
        assert!((mf as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn ec_prefers_cheap_when_both_certain() {
        let mut m = MetaMonitor::new(1, 1.0, 0.02).unwrap();
        let certain = ActionDistribution::one_hot(ActionId::new(0).unwrap());
        m.update(StateId(0), ExpertTag::Mf, &certain, 7.0);
        m.update(StateId(0), ExpertTag::Mb, &certain, 7000.0);
        let mut rng = RngStream::from_seed(5);
        let o = m.select(ControllerKind::Ec, StateId(0), &mut rng).unwrap();
        assert_eq!(o.kappa, 1.0);
        assert_eq!(o.expert_values, [-7.0, -7000.0]);
        assert!(o.expert_probs[0] > 1.0 - 1e-12);
        assert_eq!(o.chosen, ExpertTag::Mf);
    }

    #[test]
    fn monitor_update_and_isolation() {
        let mut m = monitor();
        let snapshot = m.clone();
        let certain = ActionDistribution::one_hot(ActionId::new(2).unwrap());
        m.update(StateId(1), ExpertTag::Mf, &certain, 7.0);
        let h0 = 7f64.log2();
        assert!((m.entropy(StateId(1), ExpertTag::Mf) - 0.9 * h0).abs() < 1e-12);
        assert!((m.cost(StateId(1), ExpertTag::Mf) - 0.7).abs() < 1e-12);
        for s in 0..4 {
            assert_eq!(m.entropy[s][1], snapshot.entropy[s][1]);
            assert_eq!(m.cost[s][1], snapshot.cost[s][1]);
        }

        // from a zero start a one-hot step gives smoothing * 0
        let mut z = monitor();
        z.entropy[0][0] = EmaValue::new(0.0, 0.1).unwrap();
        z.update(StateId(0), ExpertTag::Mf, &certain, 7.0);
        assert_eq!(z.entropy(StateId(0), ExpertTag::Mf), 0.0);
    }

    #[test]
    fn uniform_decisions_keep_entropy_maximal() {
        let mut m = monitor();
        for _ in 0..200 {
            m.update(StateId(0), ExpertTag::Mb, &ActionDistribution::uniform(), 1.0);
        }
        assert!((m.entropy(StateId(0), ExpertTag::Mb) - 7f64.log2()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn confident_mf_dominates_expensive_mb(
            h_mf in 0.0f64..=0.2,
            h_mb in 0.0f64..2.81,
            c_mf in 1.0f64..50.0,
            ratio in 100.0f64..1000.0,
        ) {
            let mut m = MetaMonitor::new(1, 1.0, 0.02).unwrap();
            m.entropy[0] = [EmaValue::new(h_mf, 1.0).unwrap(), EmaValue::new(h_mb, 1.0).unwrap()];
            m.cost[0] = [EmaValue::new(c_mf, 1.0).unwrap(), EmaValue::new(c_mf * ratio, 1.0).unwrap()];
            let (_, _, p) = m.evaluate(StateId(0)).unwrap();
            prop_assert!(p[0] > 0.99, "p = {:?}", p);
        }

        #[test]
        fn ec_argmax_invariance(
            h in 0.0f64..2.8,
            h2 in 0.0f64..2.8,
            c1 in 0.0f64..5.0,
            c2 in 0.0f64..5.0,
        ) {
            let mut m = MetaMonitor::new(1, 1.0, 0.02).unwrap();
            // equal entropies: the cheaper expert is favoured
            m.entropy[0] = [EmaValue::new(h, 1.0).unwrap(); 2];
            m.cost[0] = [EmaValue::new(c1, 1.0).unwrap(), EmaValue::new(c2, 1.0).unwrap()];
            let (_, _, p) = m.evaluate(StateId(0)).unwrap();
            prop_assert!((p[0] + p[1] - 1.0).abs() <= 1e-9);
            if c1 < c2 { prop_assert!(p[0] >= p[1]); }
            if c2 < c1 { prop_assert!(p[1] >= p[0]); }
            // equal costs: the lower-entropy expert is favoured
            m.entropy[0] = [EmaValue::new(h, 1.0).unwrap(), EmaValue::new(h2, 1.0).unwrap()];
            m.cost[0] = [EmaValue::new(c1, 1.0).unwrap(); 2];
            let (_, _, p) = m.evaluate(StateId(0)).unwrap();
            if h < h2 { prop_assert!(p[0] >= p[1]); }
            if h2 < h { prop_assert!(p[1] >= p[0]); }
        }
    }
}
