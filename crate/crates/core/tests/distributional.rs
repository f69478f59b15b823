//! Cross-module distributional checks that are heavier than unit tests:
//! urn-vs-walk and direct-vs-clusters equality in law, discrete/continuous
//! tree equivalence, the half-edge ratio, and scaling-exponent slopes.

use reinforce_walk::patree;
use reinforce_walk::rng::replica_rng;
use reinforce_walk::srs::{self, SizeStatistic, SrsConfig, SrsMethod};
use reinforce_walk::stats;
use reinforce_walk::theory::{self, Model};
use reinforce_walk::urn::{self, UrnModel};
use reinforce_walk::walk::{self, StepSource, UpdateRule, WalkConfig};

#[test]
fn urn_and_walk_agree_in_law_reinforced_model() {
    // two-sample KS at the operation-example parameters
    let (b, p, n, reps) = (1.0, 0.3, 2000, 10_000);
    let config = WalkConfig::new(p, b, UpdateRule::OnMemoryOnly, StepSource::Rademacher).unwrap();
    let rule = urn::replacement_rule(UrnModel::ReinforcedErw, b, p).unwrap();
    let walk_samples: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(70, r as u64);
            walk::run_positions_at(&config, &[n], &mut rng)[0]
        })
        .collect();
    let urn_samples: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(71, r as u64);
            let state = urn::simulate_urn_final(&rule, n, &mut rng).unwrap();
            urn::position_from_urn(UrnModel::ReinforcedErw, b, state.masses, n)
        })
        .collect();
    let (_, p_value) = stats::ks_two_sample(&walk_samples, &urn_samples).unwrap();
    assert!(p_value > 1e-3, "KS p-value {p_value}");
}

#[test]
fn urn_and_walk_agree_in_law_at_the_strong_critical_point() {
    // the critical-variance checks simulate through the urn; pin the
    // equivalence at the critical parameters too
    let (b, p, n, reps) = (0.5, 0.25, 1000, 6_000);
    let config = WalkConfig::new(p, b, UpdateRule::Always, StepSource::Rademacher).unwrap();
    let rule = urn::replacement_rule(UrnModel::StrongErw, b, p).unwrap();
    let walk_samples: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(84, r as u64);
            walk::run_positions_at(&config, &[n], &mut rng)[0]
        })
        .collect();
    let urn_samples: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(85, r as u64);
            let state = urn::simulate_urn_final(&rule, n, &mut rng).unwrap();
            urn::position_from_urn(UrnModel::StrongErw, b, state.masses, n)
        })
        .collect();
    let (_, p_value) = stats::ks_two_sample(&walk_samples, &urn_samples).unwrap();
    assert!(p_value > 1e-3, "KS p-value {p_value}");
}

#[test]
fn direct_and_cluster_srs_agree_in_law() {
    let (alpha, b, p, n, reps) = (1.5, 1.0, 0.5, 500, 10_000);
    let config = SrsConfig::new(alpha, 1, b, p, n, reps, 7).unwrap();
    let direct: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(72, r as u64);
            srs::simulate_srs(&config, &mut rng, SrsMethod::Direct).unwrap()[0]
        })
        .collect();
    let clusters: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(73, r as u64);
            srs::simulate_srs(&config, &mut rng, SrsMethod::Clusters).unwrap()[0]
        })
        .collect();
    let (_, p_value) = stats::ks_two_sample(&direct, &clusters).unwrap();
    assert!(p_value > 1e-3, "KS p-value {p_value}");

    // second horizon and alpha, smaller scale
    let (alpha, n, reps) = (1.0, 200, 6_000);
    let config = SrsConfig::new(alpha, 1, b, p, n, reps, 7).unwrap();
    let direct: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(74, r as u64);
            srs::simulate_srs(&config, &mut rng, SrsMethod::Direct).unwrap()[0]
        })
        .collect();
    let clusters: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(75, r as u64);
            srs::simulate_srs(&config, &mut rng, SrsMethod::Clusters).unwrap()[0]
        })
        .collect();
    let (_, p_value) = stats::ks_two_sample(&direct, &clusters).unwrap();
    assert!(p_value > 1e-3, "KS p-value {p_value}");
}

#[test]
fn discrete_and_continuous_root_clusters_agree_in_law() {
    let (b, p, n, reps) = (1.0, 0.5, 500, 10_000);
    let discrete: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(76, r as u64);
            let tree = patree::grow_discrete(n, b, &mut rng).unwrap();
            let forest = patree::percolate(tree, p, &mut rng).unwrap();
            f64::from(forest.clusters()[0].size)
        })
        .collect();
    let continuous: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(77, r as u64);
            let tree = patree::grow_continuous(n, b, &mut rng).unwrap();
            let forest = patree::percolate(tree, p, &mut rng).unwrap();
            f64::from(forest.clusters()[0].size)
        })
        .collect();
    let (_, p_value) = stats::ks_two_sample(&discrete, &continuous).unwrap();
    assert!(p_value > 1e-3, "KS p-value {p_value}");
}

#[test]
fn half_edge_ratio_vanishes_for_positive_b() {
    // (H_1 - ((1-p)/(b+p)) Y_1) / n^kappa has mean near zero
    let (b, p, n, reps) = (1.0, 0.5, 3_000, 4_000);
    let kappa = theory::kappa(Model::Srs, b, p);
    let scale = (n as f64).powf(kappa);
    let vals: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = replica_rng(78, r as u64);
            let tree = patree::grow_discrete(n, b, &mut rng).unwrap();
            let forest = patree::percolate(tree, p, &mut rng).unwrap();
            let root = &forest.clusters()[0];
            let y = patree::cluster_y_value(&forest, 1);
            (f64::from(root.half_edges) - (1.0 - p) / (b + p) * y) / scale
        })
        .collect();
    let m = stats::mc_moments(&vals).unwrap();
    assert!(m.mean.abs() <= 4.0 * m.se_mean, "mean {} se {}", m.mean, m.se_mean);
}

#[test]
fn scaling_exponent_subcritical_slopes() {
    let grid = [500, 1_000, 2_000, 4_000];
    // alpha = 2 subcritical: diffusive exponent 1/2 on means
    let config = SrsConfig::new(2.0, 1, 0.2, 0.2, 4_000, 2_000, 80).unwrap();
    let fit =
        srs::scaling_exponent(&config, &grid, 2_000, SizeStatistic::default_for(2.0), 1).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.05, "slope {}", fit.slope);

    // alpha = 1 subcritical: exponent 1/alpha = 1 on medians
    let config = SrsConfig::new(1.0, 1, 0.0, 0.5, 4_000, 2_000, 81).unwrap();
    let fit =
        srs::scaling_exponent(&config, &grid, 2_000, SizeStatistic::default_for(1.0), 1).unwrap();
    assert!((fit.slope - 1.0).abs() < 0.05, "slope {}", fit.slope);
}
