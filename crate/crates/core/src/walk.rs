//! The general memory-reinforced random walk: at each time a previous time
//! is selected proportionally to its weight; with probability p the walk
//! repeats that time's increment, otherwise it draws a fresh step. Weights
//! grow by b either on memory times only or always, depending on the rule.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fenwick::WeightTree;
use crate::stable::{sample_isotropic_stable, StableParams};

/// When the selected time's weight is increased by b.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateRule {
    /// Reinforce only when the step is repeated (memory time).
    OnMemoryOnly,
    /// Reinforce the selected time unconditionally; on fresh times the
    /// selected increment is ignored but its weight still grows.
    Always,
}

/// Law of the fresh steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSource {
    /// Symmetric +-1 steps (d = 1).
    Rademacher,
    /// Isotropic alpha-stable steps.
    Stable(StableParams),
}

impl StepSource {
    pub fn dim(&self) -> usize {
        match self {
            StepSource::Rademacher => 1,
            StepSource::Stable(params) => params.dim(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WalkConfig {
    pub p: f64,
    pub b: f64,
    pub rule: UpdateRule,
    pub step_source: StepSource,
}

impl WalkConfig {
    pub fn new(p: f64, b: f64, rule: UpdateRule, step_source: StepSource) -> Result<Self> {
        crate::theory::validate_bp(b, p)?;
        Ok(WalkConfig { p, b, rule, step_source })
    }

    pub fn dim(&self) -> usize {
        self.step_source.dim()
    }
}

/// Live state of a walk: per-time weights (prefix-sum tree plus exact
/// reinforcement counts), all increments, and the current position.
///
/// RNG draw order per step is fixed as: the memory coin, then the selected
/// index, then (fresh times only) the new step. With b = 0 both rules
/// therefore consume identical streams and produce bitwise equal paths.
#[derive(Clone, Debug)]
pub struct WalkState {
    config: WalkConfig,
    dim: usize,
    weights: WeightTree,
    reinforce_counts: Vec<u32>,
    increments: Vec<f64>, // flat, n * dim
    position: Vec<f64>,
}

impl WalkState {
    /// Starts a walk with a sampled first step.
    pub fn new<R: Rng + ?Sized>(config: &WalkConfig, rng: &mut R) -> Self {
        let first = draw_fresh(&config.step_source, rng);
        Self::with_first_step(config, &first)
    }

    /// Starts a walk from a given first increment (used by enumeration
    /// tests and by callers that couple walks).
    pub fn with_first_step(config: &WalkConfig, first: &[f64]) -> Self {
        let dim = config.dim();
        assert_eq!(first.len(), dim, "first step has wrong dimension");
        let mut weights = WeightTree::new();
        weights.push(1.0);
        WalkState {
            config: *config,
            dim,
            weights,
            reinforce_counts: vec![0],
            increments: first.to_vec(),
            position: first.to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.reinforce_counts.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Current position S_n.
    pub fn position(&self) -> &[f64] {
        &self.position
    }

    /// Increment of time k (1-based).
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[(k - 1) * self.dim..k * self.dim]
    }

    /// Exact weight of time i: 1 + b * (reinforcement count).
    pub fn weight(&self, i: usize) -> f64 {
        1.0 + self.config.b * f64::from(self.reinforce_counts[i - 1])
    }

    /// Total weight as maintained by the prefix-sum tree.
    pub fn total_weight(&self) -> f64 {
        self.weights.total()
    }

    /// Samples a previous time proportionally to the current weights.
    pub fn select_memory_index<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.weights.is_empty() {
            return Err(Error::usage("selection requires at least one past time"));
        }
        Ok(self.weights.sample(rng))
    }

    /// Advances the walk by one step.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let memory = rng.random::<f64>() < self.config.p;
        let selected = self.weights.sample(rng);
        let fresh = if memory { None } else { Some(draw_fresh(&self.config.step_source, rng)) };
        self.apply_step(memory, selected, fresh.as_deref());
    }

    /// Deterministic transition given the step outcome: the memory coin,
    /// the selected index, and the fresh step when the coin came up fresh.
    /// Exposed so exact enumeration tests can drive the same code path the
    /// sampler uses.
    pub fn apply_step(&mut self, memory: bool, selected: usize, fresh: Option<&[f64]>) {
        assert!(selected >= 1 && selected <= self.n(), "selected index out of range");
        let reinforce = match self.config.rule {
            UpdateRule::Always => true,
            UpdateRule::OnMemoryOnly => memory,
        };
        if reinforce && self.config.b > 0.0 {
            let m = &mut self.reinforce_counts[selected - 1];
            let old = 1.0 + self.config.b * f64::from(*m);
            *m += 1;
            let new = 1.0 + self.config.b * f64::from(*m);
            self.weights.add(selected, new - old);
        }
        let start = self.increments.len();
        if memory {
            self.increments.extend_from_within((selected - 1) * self.dim..selected * self.dim);
        } else {
            let step = fresh.expect("fresh step required on a fresh time");
            assert_eq!(step.len(), self.dim);
            self.increments.extend_from_slice(step);
        }
        for d in 0..self.dim {
            self.position[d] += self.increments[start + d];
        }
        self.weights.push(1.0);
        self.reinforce_counts.push(0);
    }
}

fn draw_fresh<R: Rng + ?Sized>(source: &StepSource, rng: &mut R) -> Vec<f64> {
    match source {
        StepSource::Rademacher => {
            vec![if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 }]
        }
        StepSource::Stable(params) => sample_isotropic_stable(*params, rng),
    }
}

/// Full record of one walk run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dim: usize,
    /// Positions S_0..S_n, flat row-major.
    pub positions: Vec<f64>,
    /// Increments zeta_1..zeta_n, flat row-major.
    pub increments: Vec<f64>,
    pub final_weights: Vec<f64>,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.positions.len() / self.dim - 1
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }
}

/// Runs a walk for n steps and returns the full trajectory. n = 0 yields
/// only S_0 = 0.
pub fn run<R: Rng + ?Sized>(config: &WalkConfig, n: usize, rng: &mut R) -> Trajectory {
    let dim = config.dim();
    let mut positions = Vec::with_capacity((n + 1) * dim);
    positions.extend(std::iter::repeat_n(0.0, dim));
    if n == 0 {
        return Trajectory { dim, positions, increments: Vec::new(), final_weights: Vec::new() };
    }
    let mut state = WalkState::new(config, rng);
    positions.extend_from_slice(state.position());
    for _ in 2..=n {
        state.step(rng);
        positions.extend_from_slice(state.position());
    }
    let final_weights = (1..=state.n()).map(|i| state.weight(i)).collect();
    Trajectory { dim, positions, increments: state.increments, final_weights }
}

/// Runs a walk for max(checkpoints) steps and returns the positions at the
/// given checkpoint times only (ascending, values >= 1), flat row-major.
pub fn run_positions_at<R: Rng + ?Sized>(
    config: &WalkConfig,
    checkpoints: &[usize],
    rng: &mut R,
) -> Vec<f64> {
    assert!(!checkpoints.is_empty() && checkpoints.windows(2).all(|w| w[0] < w[1]));
    assert!(checkpoints[0] >= 1, "checkpoints start at time 1");
    let n = *checkpoints.last().unwrap();
    let dim = config.dim();
    let mut out = Vec::with_capacity(checkpoints.len() * dim);
    let mut state = WalkState::new(config, rng);
    let mut next = 0;
    if checkpoints[next] == 1 {
        out.extend_from_slice(state.position());
        next += 1;
    }
    for k in 2..=n {
        state.step(rng);
        if next < checkpoints.len() && checkpoints[next] == k {
            out.extend_from_slice(state.position());
            next += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use crate::stats;
    use std::collections::BTreeMap;

    fn rademacher_config(p: f64, b: f64, rule: UpdateRule) -> WalkConfig {
        WalkConfig::new(p, b, rule, StepSource::Rademacher).unwrap()
    }

    #[test]
    fn single_candidate_is_always_selected() {
        let config = rademacher_config(0.5, 1.0, UpdateRule::Always);
        let mut rng = replica_rng(1, 0);
        let state = WalkState::new(&config, &mut rng);
        for _ in 0..100 {
            assert_eq!(state.select_memory_index(&mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn b0_selection_is_uniform() {
        let config = rademacher_config(0.5, 0.0, UpdateRule::OnMemoryOnly);
        let mut rng = replica_rng(2, 0);
        let mut state = WalkState::new(&config, &mut rng);
        for _ in 2..=10 {
            state.step(&mut rng);
        }
        assert_eq!(state.n(), 10);
        let mut counts = [0u64; 10];
        let draws = 100_000;
        for _ in 0..draws {
            counts[state.select_memory_index(&mut rng).unwrap() - 1] += 1;
        }
        let expected = vec![draws as f64 / 10.0; 10];
        let (_, p_value) = stats::chi_square_gof(&counts, &expected).unwrap();
        assert!(p_value > 1e-3, "chi-square p-value {p_value}");
    }

    #[test]
    fn reinforced_selection_probability() {
        // after one reinforcement with b = 3 the weights are (4, 1):
        // P(select 1) = 4/5
        let config = rademacher_config(0.5, 3.0, UpdateRule::Always);
        let mut state = WalkState::with_first_step(&config, &[1.0]);
        state.apply_step(true, 1, None);
        assert_eq!(state.weight(1), 4.0);
        assert_eq!(state.weight(2), 1.0);
        let mut rng = replica_rng(3, 0);
        let draws = 100_000;
        let hits = (0..draws)
            .filter(|_| state.select_memory_index(&mut rng).unwrap() == 1)
            .count();
        let p_hat = hits as f64 / draws as f64;
        let se = (0.8 * 0.2 / draws as f64).sqrt();
        assert!((p_hat - 0.8).abs() <= 3.0 * se, "p_hat {p_hat}");
    }

    #[test]
    fn b0_rules_are_bitwise_identical() {
        for seed in 0..5 {
            for source in [
                StepSource::Rademacher,
                StepSource::Stable(StableParams::new(1.5, 1).unwrap()),
            ] {
                let n = if matches!(source, StepSource::Rademacher) { 300 } else { 60 };
                let ca = WalkConfig::new(0.4, 0.0, UpdateRule::OnMemoryOnly, source).unwrap();
                let cb = WalkConfig::new(0.4, 0.0, UpdateRule::Always, source).unwrap();
                let ta = run(&ca, n, &mut replica_rng(seed, 9));
                let tb = run(&cb, n, &mut replica_rng(seed, 9));
                assert_eq!(ta.positions, tb.positions);
                assert_eq!(ta.increments, tb.increments);
                assert_eq!(ta.final_weights, tb.final_weights);
            }
        }
    }

    #[test]
    fn forced_memory_time_repeats_first_step() {
        let config = rademacher_config(0.5, 1.0, UpdateRule::OnMemoryOnly);
        let mut state = WalkState::with_first_step(&config, &[-1.0]);
        state.apply_step(true, 1, None);
        assert_eq!(state.increment(2), state.increment(1));
        assert_eq!(state.position(), &[-2.0]);
    }

    #[test]
    fn always_rule_weight_sum_identity() {
        // every step adds exactly b + 1 of total weight
        let b = 0.7;
        let config = rademacher_config(0.3, b, UpdateRule::Always);
        let mut rng = replica_rng(4, 0);
        let mut state = WalkState::new(&config, &mut rng);
        let n = 100;
        for _ in 2..=n {
            state.step(&mut rng);
        }
        let exact: f64 = (1..=n).map(|i| state.weight(i)).sum();
        let target = n as f64 + b * (n as f64 - 1.0);
        assert!((exact - target).abs() <= 1e-9 * target);
        assert!((state.total_weight() - exact).abs() <= 1e-9 * exact);

        // forced all-fresh sequence gives the same total
        let mut forced = WalkState::with_first_step(&config, &[1.0]);
        for k in 2..=n {
            forced.apply_step(false, (k - 1 + 1) / 2, Some(&[1.0]));
        }
        let total: f64 = (1..=n).map(|i| forced.weight(i)).sum();
        assert!((total - target).abs() <= 1e-9 * target);
    }

    #[test]
    fn run_basics() {
        let config = rademacher_config(0.5, 1.0, UpdateRule::Always);
        let t0 = run(&config, 0, &mut replica_rng(5, 0));
        assert_eq!(t0.positions, vec![0.0]);
        assert_eq!(t0.n(), 0);

        let t1 = run(&config, 1, &mut replica_rng(5, 1));
        assert_eq!(t1.n(), 1);
        assert_eq!(t1.position(1), &t1.increments[..]);
        assert!(t1.position(1)[0].abs() == 1.0);

        let n = 500;
        let t = run(&config, n, &mut replica_rng(5, 2));
        for k in 0..=n {
            let s = t.position(k)[0];
            assert!(s.abs() <= k as f64);
            assert_eq!((s as i64 - k as i64) % 2, 0, "parity broken at k = {k}");
        }

        // determinism
        let t_again = run(&config, n, &mut replica_rng(5, 2));
        assert_eq!(t.positions, t_again.positions);
    }

    #[test]
    fn checkpoint_runner_matches_full_run() {
        let config = WalkConfig::new(
            0.5,
            1.0,
            UpdateRule::Always,
            StepSource::Stable(StableParams::new(1.5, 2).unwrap()),
        )
        .unwrap();
        let full = run(&config, 200, &mut replica_rng(6, 3));
        let checkpoints = [1, 7, 100, 200];
        let at = run_positions_at(&config, &checkpoints, &mut replica_rng(6, 3));
        for (ci, &k) in checkpoints.iter().enumerate() {
            assert_eq!(&at[ci * 2..ci * 2 + 2], full.position(k));
        }
    }

    // Exact law of S_n for Rademacher steps and n <= 6, two independent
    // routes: an oracle enumerating the definition with its own weight
    // bookkeeping, and an enumeration of the simulator's transitions that
    // reads probabilities and applies steps through WalkState itself.

    fn oracle_law(n: usize, p: f64, b: f64, rule: UpdateRule) -> BTreeMap<i64, f64> {
        fn recurse(
            incs: &mut Vec<i64>,
            weights: &mut Vec<f64>,
            prob: f64,
            n: usize,
            p: f64,
            b: f64,
            rule: UpdateRule,
            law: &mut BTreeMap<i64, f64>,
        ) {
            if incs.len() == n {
                *law.entry(incs.iter().sum()).or_insert(0.0) += prob;
                return;
            }
            let total: f64 = weights.iter().sum();
            for memory in [true, false] {
                let p_eps = if memory { p } else { 1.0 - p };
                for i in 0..weights.len() {
                    let p_sel = weights[i] / total;
                    let reinforce = memory || matches!(rule, UpdateRule::Always);
                    let steps: &[i64] = if memory { &[0] } else { &[1, -1] };
                    for &xi in steps {
                        let inc = if memory { incs[i] } else { xi };
                        let p_step = if memory { 1.0 } else { 0.5 };
                        if reinforce {
                            weights[i] += b;
                        }
                        incs.push(inc);
                        weights.push(1.0);
                        recurse(incs, weights, prob * p_eps * p_sel * p_step, n, p, b, rule, law);
                        weights.pop();
                        incs.pop();
                        if reinforce {
                            weights[i] -= b;
                        }
                    }
                }
            }
        }

        let mut law = BTreeMap::new();
        for xi in [1i64, -1] {
            let mut incs = vec![xi];
            let mut weights = vec![1.0];
            recurse(&mut incs, &mut weights, 0.5, n, p, b, rule, &mut law);
        }
        law
    }

    fn simulator_law(n: usize, p: f64, b: f64, rule: UpdateRule) -> BTreeMap<i64, f64> {
        fn recurse(state: &WalkState, prob: f64, n: usize, p: f64, law: &mut BTreeMap<i64, f64>) {
            if state.n() == n {
                *law.entry(state.position()[0].round() as i64).or_insert(0.0) += prob;
                return;
            }
            let total: f64 = (1..=state.n()).map(|i| state.weight(i)).sum();
            for memory in [true, false] {
                let p_eps = if memory { p } else { 1.0 - p };
                for i in 1..=state.n() {
                    let p_sel = state.weight(i) / total;
                    if memory {
                        let mut next = state.clone();
                        next.apply_step(true, i, None);
                        recurse(&next, prob * p_eps * p_sel, n, p, law);
                    } else {
                        for xi in [1.0, -1.0] {
                            let mut next = state.clone();
                            next.apply_step(false, i, Some(&[xi]));
                            recurse(&next, prob * p_eps * p_sel * 0.5, n, p, law);
                        }
                    }
                }
            }
        }

        let config = WalkConfig::new(p, b, rule, StepSource::Rademacher).unwrap();
        let mut law = BTreeMap::new();
        for xi in [1.0, -1.0] {
            let state = WalkState::with_first_step(&config, &[xi]);
            recurse(&state, 0.5, n, p, &mut law);
        }
        law
    }

    #[test]
    fn exact_law_matches_enumeration_oracle() {
        for rule in [UpdateRule::OnMemoryOnly, UpdateRule::Always] {
            let (n, p, b) = (6, 0.3, 1.5);
            let oracle = oracle_law(n, p, b, rule);
            let sim = simulator_law(n, p, b, rule);
            let keys: std::collections::BTreeSet<i64> =
                oracle.keys().chain(sim.keys()).copied().collect();
            let tv: f64 = keys
                .iter()
                .map(|k| (oracle.get(k).unwrap_or(&0.0) - sim.get(k).unwrap_or(&0.0)).abs())
                .sum::<f64>()
                / 2.0;
            assert!(tv < 1e-12, "total variation {tv} under {rule:?}");
            let mass: f64 = sim.values().sum();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }
}
