//! Three-color urns with random replacement representing both reinforced
//! ERW variants, plus the two-color mass urn behind the subtree-weight
//! variable eta(n, i).
//!
//! Color indices throughout: 0 = black, 1 = green, 2 = red.

use rand::Rng;

use crate::error::{Error, Result};
use crate::theory::validate_bp;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UrnModel {
    /// Urn of the reinforced ERW (weights update on memory times).
    ReinforcedErw,
    /// Urn of the strongly reinforced ERW (weights always update).
    StrongErw,
}

/// Urn contents as real-valued color masses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UrnState {
    pub masses: [f64; 3],
    pub draws: u64,
}

impl UrnState {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Per drawn color, the finite distribution over added-mass triples.
/// Replacements are sampled from these verbal-rule outcomes; the mean
/// matrix is derived from them and used only for validation and
/// eigen-analysis.
#[derive(Clone, Debug)]
pub struct ReplacementRule {
    pub model: UrnModel,
    pub b: f64,
    pub p: f64,
    outcomes: [Vec<([f64; 3], f64)>; 3],
}

/// Builds the replacement rule of a model.
pub fn replacement_rule(model: UrnModel, b: f64, p: f64) -> Result<ReplacementRule> {
    validate_bp(b, p)?;
    let q_half = (1.0 - p) / 2.0;
    let outcomes = match model {
        UrnModel::ReinforcedErw => {
            let light = vec![
                ([b + 1.0, 0.0, 0.0], p),
                ([0.0, 1.0, 0.0], q_half),
                ([0.0, 0.0, 1.0], q_half),
            ];
            let red = vec![
                ([0.0, 0.0, b + 1.0], p),
                ([0.0, 1.0, 0.0], q_half),
                ([0.0, 0.0, 1.0], q_half),
            ];
            [light.clone(), light, red]
        }
        UrnModel::StrongErw => {
            let light = vec![([b, 1.0, 0.0], (1.0 + p) / 2.0), ([b, 0.0, 1.0], q_half)];
            let red = vec![([0.0, 0.0, b + 1.0], (1.0 + p) / 2.0), ([0.0, 1.0, b], q_half)];
            [light.clone(), light, red]
        }
    };
    Ok(ReplacementRule { model, b, p, outcomes })
}

impl ReplacementRule {
    /// The finite law of added-mass triples when `color` is drawn.
    pub fn outcomes(&self, color: usize) -> &[([f64; 3], f64)] {
        &self.outcomes[color]
    }

    /// Mean replacement matrix derived from the outcomes: entry (i, j) is
    /// the mean mass of color i added when color j is drawn.
    pub fn mean_matrix(&self) -> [[f64; 3]; 3] {
        let mut a = [[0.0; 3]; 3];
        for (j, col) in self.outcomes.iter().enumerate() {
            for (add, prob) in col {
                for i in 0..3 {
                    a[i][j] += prob * add[i];
                }
            }
        }
        a
    }

    /// Samples one added-mass triple for the drawn color.
    pub fn sample_addition<R: Rng + ?Sized>(&self, color: usize, rng: &mut R) -> [f64; 3] {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let col = &self.outcomes[color];
        for (add, prob) in col {
            acc += prob;
            if u < acc {
                return *add;
            }
        }
        col.last().expect("nonempty outcome list").0
    }
}

/// Closed-form mean replacement matrices of the two models.
pub fn mean_replacement_matrix(model: UrnModel, b: f64, p: f64) -> Result<[[f64; 3]; 3]> {
    validate_bp(b, p)?;
    let q_half = (1.0 - p) / 2.0;
    Ok(match model {
        UrnModel::ReinforcedErw => [
            [(b + 1.0) * p, (b + 1.0) * p, 0.0],
            [q_half, q_half, q_half],
            [q_half, q_half, (b + 1.0) * p + q_half],
        ],
        UrnModel::StrongErw => [
            [b, b, 0.0],
            [(1.0 + p) / 2.0, (1.0 + p) / 2.0, q_half],
            [q_half, q_half, b + (1.0 + p) / 2.0],
        ],
    })
}

fn draw_color<R: Rng + ?Sized>(masses: &[f64; 3], rng: &mut R) -> usize {
    let total: f64 = masses.iter().sum();
    let u = rng.random::<f64>() * total;
    if u < masses[0] {
        0
    } else if u < masses[0] + masses[1] {
        1
    } else {
        2
    }
}

fn initial_state<R: Rng + ?Sized>(rng: &mut R) -> UrnState {
    let masses = if rng.random::<f64>() < 0.5 { [0.0, 1.0, 0.0] } else { [0.0, 0.0, 1.0] };
    UrnState { masses, draws: 0 }
}

fn advance<R: Rng + ?Sized>(state: &mut UrnState, rule: &ReplacementRule, rng: &mut R) {
    let color = draw_color(&state.masses, rng);
    let add = rule.sample_addition(color, rng);
    for i in 0..3 {
        state.masses[i] += add[i];
    }
    state.draws += 1;
}

/// Simulates the urn for n time steps and records the full mass path
/// X_1..X_n. X_1 is the random initial configuration (one green or red
/// ball with probability 1/2 each); each later time is one draw plus
/// replacement, so X_k has seen k - 1 draws.
pub fn simulate_urn<R: Rng + ?Sized>(
    rule: &ReplacementRule,
    n: usize,
    rng: &mut R,
) -> Result<Vec<UrnState>> {
    if n == 0 {
        return Err(Error::parameter("n must be >= 1"));
    }
    let mut state = initial_state(rng);
    let mut path = Vec::with_capacity(n);
    path.push(state);
    for _ in 2..=n {
        advance(&mut state, rule, rng);
        path.push(state);
    }
    Ok(path)
}

/// As `simulate_urn` but returns only the final state X_n.
pub fn simulate_urn_final<R: Rng + ?Sized>(
    rule: &ReplacementRule,
    n: usize,
    rng: &mut R,
) -> Result<UrnState> {
    if n == 0 {
        return Err(Error::parameter("n must be >= 1"));
    }
    let mut state = initial_state(rng);
    for _ in 2..=n {
        advance(&mut state, rule, rng);
    }
    Ok(state)
}

/// Runs one urn path to the largest checkpoint and returns the states at
/// the given times (ascending, >= 1).
pub fn simulate_urn_at<R: Rng + ?Sized>(
    rule: &ReplacementRule,
    checkpoints: &[usize],
    rng: &mut R,
) -> Result<Vec<UrnState>> {
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::usage("checkpoints must be ascending and >= 1"));
    }
    let n = *checkpoints.last().unwrap();
    let mut state = initial_state(rng);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    if checkpoints[0] == 1 {
        out.push(state);
        next = 1;
    }
    for k in 2..=n {
        advance(&mut state, rule, rng);
        if next < checkpoints.len() && checkpoints[next] == k {
            out.push(state);
            next += 1;
        }
    }
    Ok(out)
}

/// Walk position encoded by the urn contents at time n:
/// 2(B/(b+1) + G) - n for the reinforced model, 2G - n for the strong one.
/// Whether `masses` really came from a length-n simulation of `model` is
/// the caller's contract; it cannot be checked here.
pub fn position_from_urn(model: UrnModel, b: f64, masses: [f64; 3], n: usize) -> f64 {
    let right_steps = match model {
        UrnModel::ReinforcedErw => masses[0] / (b + 1.0) + masses[1],
        UrnModel::StrongErw => masses[1],
    };
    2.0 * right_steps - n as f64
}

/// Eigenvalues and dual eigenvector bases of the mean replacement matrix,
/// in the closed forms from the limit-theorem proofs. `right[k]` is the
/// L1-normalized right eigenvector of `lambda[k]`; `left[k]` the dual left
/// eigenvector (left[i] . right[j] = delta_ij).
#[derive(Clone, Copy, Debug)]
pub struct EigenData {
    pub lambda: [f64; 3],
    pub right: [[f64; 3]; 3],
    pub left: [[f64; 3]; 3],
}

pub fn eigen_data(model: UrnModel, b: f64, p: f64) -> Result<EigenData> {
    validate_bp(b, p)?;
    Ok(match model {
        UrnModel::ReinforcedErw => {
            let l1 = b * p + 1.0;
            EigenData {
                lambda: [l1, (b + 1.0) * p, 0.0],
                right: [
                    [(b + 1.0) * p / (2.0 * l1), (1.0 - p) / (2.0 * l1), 0.5],
                    [-0.5, 0.0, 0.5],
                    [-0.5, 0.5, 0.0],
                ],
                left: [
                    [1.0, 1.0, 1.0],
                    [-1.0, -1.0, 1.0],
                    [(p - 1.0) / l1, ((2.0 * b + 1.0) * p + 1.0) / l1, (p - 1.0) / l1],
                ],
            }
        }
        UrnModel::StrongErw => {
            let (l1, l2) = (b + 1.0, b + p);
            EigenData {
                lambda: [l1, l2, 0.0],
                right: [
                    [b / (2.0 * l1), 1.0 / (2.0 * l1), 0.5],
                    [b / (2.0 * l2), p / (2.0 * l2), -0.5],
                    [0.5, -0.5, 0.0],
                ],
                left: [
                    [1.0, 1.0, 1.0],
                    [1.0, 1.0, -1.0],
                    [
                        ((1.0 + p) * b + 2.0 * p) / (l1 * l2),
                        -(2.0 * b + 1.0 + p) * b / (l1 * l2),
                        (1.0 - p) * b / (l1 * l2),
                    ],
                ],
            }
        }
    })
}

/// Number of nodes attached (weakly) below node i in an n-node
/// preferential attachment tree, sampled through its two-color mass urn:
/// start from masses (1, (i-1)(b+1)) and perform n - i proportional draws,
/// each adding b + 1 to the drawn color. The result (G + b)/(b + 1) is an
/// integer up to float error.
pub fn sample_eta<R: Rng + ?Sized>(n: usize, i: usize, b: f64, rng: &mut R) -> Result<usize> {
    if i == 0 || i > n {
        return Err(Error::parameter(format!("need 1 <= i <= n, got i = {i}, n = {n}")));
    }
    if b < 0.0 {
        return Err(Error::parameter("b must be >= 0"));
    }
    let mut green_draws: u64 = 0;
    for step in 0..(n - i) as u64 {
        let green_mass = 1.0 + green_draws as f64 * (b + 1.0);
        let red_mass = ((i - 1) as u64 + (step - green_draws)) as f64 * (b + 1.0);
        if rng.random::<f64>() * (green_mass + red_mass) < green_mass {
            green_draws += 1;
        }
    }
    let eta = green_draws as usize + 1;
    let green_mass = 1.0 + green_draws as f64 * (b + 1.0);
    let residue = ((green_mass + b) / (b + 1.0) - eta as f64).abs();
    assert!(residue <= 1e-6, "eta recovery residue {residue} exceeds tolerance");
    Ok(eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use crate::stats;

    const MODELS: [UrnModel; 2] = [UrnModel::ReinforcedErw, UrnModel::StrongErw];

    #[test]
    fn outcome_means_match_closed_form_matrix() {
        for model in MODELS {
            for (b, p) in [(0.0, 0.5), (1.0, 0.2), (0.4, 0.7), (3.5, 0.35)] {
                let rule = replacement_rule(model, b, p).unwrap();
                let derived = rule.mean_matrix();
                let closed = mean_replacement_matrix(model, b, p).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        assert!(
                            (derived[i][j] - closed[i][j]).abs() < 1e-12,
                            "{model:?} b={b} p={p} entry ({i},{j})"
                        );
                    }
                }
                // probabilities form a distribution per column
                for c in 0..3 {
                    let total: f64 = rule.outcomes(c).iter().map(|(_, q)| q).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn strong_model_additions_sum_to_b_plus_one() {
        for (b, p) in [(0.0, 0.3), (1.0, 0.5), (0.4, 0.2)] {
            let rule = replacement_rule(UrnModel::StrongErw, b, p).unwrap();
            for c in 0..3 {
                for (add, _) in rule.outcomes(c) {
                    let s: f64 = add.iter().sum();
                    assert_eq!(s, b + 1.0);
                }
            }
        }
    }

    #[test]
    fn sampled_column_means_converge_to_matrix() {
        let cases = [(UrnModel::ReinforcedErw, 1.3, 0.35), (UrnModel::StrongErw, 0.8, 0.3)];
        let n = 100_000;
        for (case_idx, (model, b, p)) in cases.iter().enumerate() {
            let rule = replacement_rule(*model, *b, *p).unwrap();
            let a = mean_replacement_matrix(*model, *b, *p).unwrap();
            let mut rng = replica_rng(20 + case_idx as u64, 0);
            for color in 0..3 {
                let mut sums = [0.0; 3];
                let mut sq = [0.0; 3];
                for _ in 0..n {
                    let add = rule.sample_addition(color, &mut rng);
                    for i in 0..3 {
                        sums[i] += add[i];
                        sq[i] += add[i] * add[i];
                    }
                }
                for i in 0..3 {
                    let mean = sums[i] / n as f64;
                    let var = (sq[i] / n as f64 - mean * mean).max(0.0);
                    let se = (var / n as f64).sqrt();
                    assert!(
                        (mean - a[i][color]).abs() <= 4.0 * se.max(1e-12),
                        "{model:?} color {color} row {i}: mean {mean} vs {}",
                        a[i][color]
                    );
                }
            }
        }
    }

    #[test]
    fn initial_configuration_is_one_green_or_red() {
        let rule = replacement_rule(UrnModel::StrongErw, 1.0, 0.5).unwrap();
        let mut rng = replica_rng(21, 0);
        let (mut greens, mut reds) = (0u32, 0u32);
        let reps = 20_000;
        for _ in 0..reps {
            let path = simulate_urn(&rule, 1, &mut rng).unwrap();
            assert_eq!(path.len(), 1);
            match path[0].masses {
                [0.0, 1.0, 0.0] => greens += 1,
                [0.0, 0.0, 1.0] => reds += 1,
                other => panic!("unexpected initial state {other:?}"),
            }
        }
        let p_hat = greens as f64 / reps as f64;
        let se = (0.25 / reps as f64).sqrt();
        assert!((p_hat - 0.5).abs() <= 4.0 * se, "green share {p_hat}");
        assert_eq!(greens + reds, reps);
    }

    #[test]
    fn strong_model_mass_is_conserved() {
        let b = 0.3;
        let rule = replacement_rule(UrnModel::StrongErw, b, 0.4).unwrap();
        let mut rng = replica_rng(22, 0);
        let n = 500;
        let path = simulate_urn(&rule, n, &mut rng).unwrap();
        for (k, state) in path.iter().enumerate() {
            let target = 1.0 + k as f64 * (b + 1.0);
            assert!((state.total() - target).abs() <= 1e-9 * target, "k = {k}");
            assert_eq!(state.draws, k as u64);
        }
    }

    #[test]
    fn reinforced_mean_added_mass_is_bp_plus_one() {
        let (b, p) = (2.0, 0.3);
        let rule = replacement_rule(UrnModel::ReinforcedErw, b, p).unwrap();
        let mut rng = replica_rng(23, 0);
        let reps = 100_000;
        let added: Vec<f64> = (0..reps)
            .map(|_| {
                let state = simulate_urn_final(&rule, 2, &mut rng).unwrap();
                state.total() - 1.0
            })
            .collect();
        let m = stats::mc_moments(&added).unwrap();
        let target = b * p + 1.0;
        assert!((m.mean - target).abs() <= 3.0 * m.se_mean, "mean {} target {target}", m.mean);
    }

    #[test]
    fn position_encoding_at_time_one() {
        for model in MODELS {
            assert_eq!(position_from_urn(model, 1.0, [0.0, 1.0, 0.0], 1), 1.0);
            assert_eq!(position_from_urn(model, 1.0, [0.0, 0.0, 1.0], 1), -1.0);
        }
    }

    #[test]
    fn eigen_identities() {
        for model in MODELS {
            for (b, p) in [(0.0, 0.5), (1.0, 0.5), (0.4, 0.2), (2.0, 0.25), (1.0, 0.2)] {
                let a = mean_replacement_matrix(model, b, p).unwrap();
                let e = eigen_data(model, b, p).unwrap();
                for k in 0..3 {
                    let v = e.right[k];
                    // A v = lambda v
                    for i in 0..3 {
                        let av: f64 = (0..3).map(|j| a[i][j] * v[j]).sum();
                        assert!(
                            (av - e.lambda[k] * v[i]).abs() < 1e-12,
                            "{model:?} b={b} p={p} eigenpair {k} row {i}"
                        );
                    }
                    // L1 normalization of right eigenvectors
                    let l1: f64 = v.iter().map(|x| x.abs()).sum();
                    assert!((l1 - 1.0).abs() < 1e-12);
                    // duality
                    for j in 0..3 {
                        let dot: f64 = (0..3).map(|i| e.left[k][i] * e.right[j][i]).sum();
                        let expect = if k == j { 1.0 } else { 0.0 };
                        assert!((dot - expect).abs() < 1e-12, "{model:?} u{k} . v{j} = {dot}");
                    }
                }
            }
        }
        // lambda2/lambda1 = 0.75 > 1/2: supercritical
        let e = eigen_data(UrnModel::StrongErw, 1.0, 0.5).unwrap();
        assert!((e.lambda[1] / e.lambda[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn eta_boundary_cases() {
        let mut rng = replica_rng(24, 0);
        for b in [0.0, 1.0, 0.4] {
            assert_eq!(sample_eta(50, 1, b, &mut rng).unwrap(), 50);
            assert_eq!(sample_eta(50, 50, b, &mut rng).unwrap(), 1);
        }
        assert!(sample_eta(10, 0, 1.0, &mut rng).is_err());
        assert!(sample_eta(10, 11, 1.0, &mut rng).is_err());
    }

    #[test]
    fn eta_b0_i2_mean_is_uniform_limit() {
        let (n, reps) = (1000, 20_000);
        let mut rng = replica_rng(25, 0);
        let fractions: Vec<f64> = (0..reps)
            .map(|_| sample_eta(n, 2, 0.0, &mut rng).unwrap() as f64 / n as f64)
            .collect();
        let m = stats::mc_moments(&fractions).unwrap();
        assert!((m.mean - 0.5).abs() <= 3.0 * m.se_mean, "mean {} se {}", m.mean, m.se_mean);
    }
}
