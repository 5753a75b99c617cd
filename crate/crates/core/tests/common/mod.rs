//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use mbmf::experiment::{ExperimentConfig, LANE_AGENT};
use mbmf::experts::{decide, Expert, MbExpert, MbParams, MfExpert, RewardModel};
use mbmf::tidy::TidyTask;
use mbmf::{ActionDistribution, ActionId, RngStream, StateId, NUM_ACTIONS};

/// Transitions fed to a model-based expert, in order.
pub struct Experience {
    pub num_states: usize,
    pub samples: Vec<(usize, usize, f64, usize)>,
}

/// A random sparse MDP walked by random visits.
pub fn random_experience(seed: u64) -> Experience {
    let mut rng = RngStream::from_seed(seed);
    let draw = |rng: &mut RngStream, n: usize| (rng.next_unit() * n as f64) as usize % n;
    let n = 2 + draw(&mut rng, 19);
    let mut samples = Vec::new();
    for s in 0..n {
        for a in 0..NUM_ACTIONS {
            if rng.next_unit() < 0.25 {
                continue;
            }
            let support: Vec<usize> = (0..1 + draw(&mut rng, 3)).map(|_| draw(&mut rng, n)).collect();
            let visits = 1 + draw(&mut rng, 15);
            for _ in 0..visits {
                let next = support[draw(&mut rng, support.len())];
                let r = match draw(&mut rng, 4) {
                    0 => 1.0,
                    1 => rng.next_unit(),
                    _ => 0.0,
                };
                samples.push((s, a, r, next));
            }
        }
    }
    // interleave visits so windows see mixed orders
    for i in (1..samples.len()).rev() {
        let j = draw(&mut rng, i + 1);
        samples.swap(i, j);
    }
    Experience { num_states: n, samples }
}

/// Value iteration on the windowed empirical model, Jacobi style, run to
/// numerical convergence.
pub fn brute_force_q(exp: &Experience, gamma: f64, window: usize, literal: bool) -> Vec<[f64; NUM_ACTIONS]> {
    let mut history: HashMap<(usize, usize), Vec<(f64, usize)>> = HashMap::new();
    for &(s, a, r, next) in &exp.samples {
        history.entry((s, a)).or_default().push((r, next));
    }
    // (s, a) -> (successor probabilities, reward term)
    let mut model: HashMap<(usize, usize), (HashMap<usize, f64>, f64)> = HashMap::new();
    for (&key, visits) in &history {
        let recent = &visits[visits.len().saturating_sub(window)..];
        let mut probs: HashMap<usize, f64> = HashMap::new();
        for &(_, next) in recent {
            *probs.entry(next).or_default() += 1.0 / recent.len() as f64;
        }
        let &(r_last, next_last) = visits.last().unwrap();
        let reward = if literal { r_last * probs[&next_last] } else { r_last };
        model.insert(key, (probs, reward));
    }
    let mut q = vec![[0.0; NUM_ACTIONS]; exp.num_states];
    for _ in 0..200_000 {
        let v: Vec<f64> = q.iter().map(|row| row.iter().copied().fold(f64::MIN, f64::max)).collect();
        let mut next_q = q.clone();
        let mut delta: f64 = 0.0;
        for (&(s, a), (probs, reward)) in &model {
            let value: f64 = probs.iter().map(|(&n, &p)| p * (reward + gamma * v[n])).sum();
            delta = delta.max((value - q[s][a]).abs());
            next_q[s][a] = value;
        }
        q = next_q;
        if delta < 1e-13 {
            break;
        }
    }
    q
}

/// Largest per-cell gap between the expert's planned values and the oracle.
pub fn planner_gap(seed: u64) -> f64 {
    let exp = random_experience(seed);
    let params = MbParams {
        vi_epsilon: 1e-13,
        vi_max_sweeps: 1_000_000,
        ..MbParams::default()
    };
    let mut mb = MbExpert::new(exp.num_states, params);
    for &(s, a, r, next) in &exp.samples {
        mb.learn(StateId(s), ActionId::new(a).unwrap(), r, StateId(next));
    }
    mb.infer(StateId(0));
    let oracle = brute_force_q(&exp, params.gamma, params.window, params.reward_model == RewardModel::Literal);
    mb.q_table()
        .iter()
        .flatten()
        .zip(oracle.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `(state, executed action, reward)` per learning step of a lone expert.
pub type Trace = Vec<(StateId, ActionId, f64)>;

fn babble(task: &TidyTask, steps: usize, rng: &mut RngStream, mut learn: impl FnMut(StateId, ActionId, StateId)) {
    let mut s = task.initial();
    for _ in 0..steps {
        let a = ActionId::new(rng.sample_index(ActionDistribution::uniform().probs()).unwrap()).unwrap();
        let next = task.step(s, a).unwrap().next;
        learn(s, a, next);
        s = next;
    }
}

/// A lone expert acting without any meta-controller.
pub fn bare_loop<E: Expert>(config: &ExperimentConfig, run: u64, mut expert: E) -> (Trace, u64, E) {
    let task = TidyTask::new(config.task);
    let mut rng = RngStream::for_run(config.master_seed, run, LANE_AGENT);
    babble(&task, config.babble_steps, &mut rng, |s, a, n| expert.learn(s, a, 0.0, n));
    let mut s = task.initial();
    let mut trace = Vec::new();
    let mut work = 0;
    for _ in 0..config.resolved_steps() {
        let report = expert.infer(s);
        work += report.work_units;
        let (a, _) = decide(&report.action_values, config.tau, &[false; NUM_ACTIONS], config.zeta, &mut rng).unwrap();
        let step = task.step(s, a).unwrap();
        expert.learn(s, a, step.reward, step.next);
        trace.push((s, a, step.reward));
        s = step.next;
    }
    (trace, work, expert)
}

pub fn bare_mf(config: &ExperimentConfig, run: u64) -> (Trace, u64, MfExpert) {
    let n = TidyTask::new(config.task).num_states();
    bare_loop(config, run, MfExpert::new(n, config.mf_params()))
}

pub fn bare_mb(config: &ExperimentConfig, run: u64) -> (Trace, u64, MbExpert) {
    let n = TidyTask::new(config.task).num_states();
    bare_loop(config, run, MbExpert::new(n, config.mb_params()))
}

/// `U` by direct pair counting.
pub fn pair_count_u(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Two-sided p-value by enumerating every relabelling of the pooled sample.
pub fn permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let k = a.len();
    let centre = (a.len() * b.len()) as f64 / 2.0;
    let observed = (pair_count_u(a, b) - centre).abs();
    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let (mut xa, mut xb) = (Vec::new(), Vec::new());
        for (i, &v) in pooled.iter().enumerate() {
            if mask & (1 << i) != 0 {
                xa.push(v);
            } else {
                xb.push(v);
            }
        }
        total += 1;
        if (pair_count_u(&xa, &xb) - centre).abs() >= observed - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / total as f64
}

/// Every sample pair with `n1 + n2 <= max_total`, from a small value set so
/// that ties are common. Returns the largest disagreement in `(U, p)`.
pub fn mann_whitney_oracle_gap(max_total: usize, pairs_per_size: usize, seed: u64) -> (f64, f64) {
    let mut rng = RngStream::from_seed(seed);
    let (mut du, mut dp) = (0.0f64, 0.0f64);
    for n1 in 1..max_total {
        for n2 in 1..=(max_total - n1) {
            for _ in 0..pairs_per_size {
                let levels = 2 + (rng.next_unit() * 8.0) as usize;
                let mut sample = |n: usize| -> Vec<f64> {
                    (0..n).map(|_| (rng.next_unit() * levels as f64).floor()).collect()
                };
                let a = sample(n1);
                let b = sample(n2);
                let r = mbmf::stats::mann_whitney_u(&a, &b).unwrap();
                du = du.max((r.u - pair_count_u(&a, &b)).abs());
                dp = dp.max((r.p_two_sided - permutation_p(&a, &b)).abs());
            }
        }
    }
    (du, dp)
}
