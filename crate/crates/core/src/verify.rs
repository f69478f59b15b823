//! Named verification checks. Each check runs one acceptance criterion at
//! fixed desk-scale parameters and returns MCReport records; the CLI
//! `verify` subcommand and the acceptance test suite both dispatch here.

use crate::error::{Error, Result};
use crate::patree;
use crate::rng::{par_map_replicas, replica_rng};
use crate::srs::{self, CfMcParams, CfQuery, SizeStatistic, SrsConfig};
use crate::stable;
use crate::stats::{self, MCReport, ToleranceRule};
use crate::theory::{self, Model};
use crate::urn::{self, UrnModel};
use crate::walk::{self, StepSource, UpdateRule, WalkConfig};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Clone, Copy, Debug)]
pub struct CheckCtx {
    pub seed: u64,
    pub threads: usize,
}

impl Default for CheckCtx {
    fn default() -> Self {
        CheckCtx { seed: DEFAULT_SEED, threads: 1 }
    }
}

pub struct CheckDef {
    pub name: &'static str,
    pub criterion: u8,
    pub run: fn(&CheckCtx) -> Result<Vec<MCReport>>,
}

pub fn checks() -> &'static [CheckDef] {
    &[
        CheckDef { name: "urn-walk-equivalence", criterion: 1, run: urn_walk_equivalence },
        CheckDef { name: "erw1-subcritical-cov", criterion: 2, run: erw1_subcritical_cov },
        CheckDef { name: "erw2-subcritical-cov", criterion: 2, run: erw2_subcritical_cov },
        CheckDef { name: "cov-b0-equality", criterion: 2, run: cov_b0_equality },
        CheckDef { name: "erw1-critical-variance", criterion: 3, run: erw1_critical_variance },
        CheckDef { name: "erw2-critical-variance", criterion: 3, run: erw2_critical_variance },
        CheckDef {
            name: "erw-supercritical-exponents",
            criterion: 4,
            run: erw_supercritical_exponents,
        },
        CheckDef { name: "branching-martingale", criterion: 5, run: branching_martingale },
        CheckDef { name: "gamma-W", criterion: 5, run: gamma_w },
        CheckDef { name: "root-cluster-moments", criterion: 6, run: root_cluster_moments },
        CheckDef { name: "eta-beta-limit", criterion: 7, run: eta_beta_limit },
        CheckDef { name: "xbar-moment-slope", criterion: 8, run: xbar_moment_slope },
        CheckDef { name: "srs-subcritical-cf", criterion: 9, run: srs_subcritical_cf },
        CheckDef { name: "srs-critical-variance", criterion: 10, run: srs_critical_variance },
        CheckDef { name: "srs-supercritical", criterion: 11, run: srs_supercritical },
        CheckDef { name: "structural-invariants", criterion: 12, run: structural_invariants },
        CheckDef { name: "stable-cf", criterion: 13, run: stable_cf },
    ]
}

pub fn check_names() -> Vec<&'static str> {
    checks().iter().map(|c| c.name).collect()
}

pub fn run_check(name: &str, ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    match checks().iter().find(|c| c.name == name) {
        Some(def) => (def.run)(ctx),
        None => Err(Error::UnknownCheck(name.to_string(), check_names().join(", "))),
    }
}

pub fn run_all(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let mut out = Vec::new();
    for def in checks() {
        out.extend((def.run)(ctx)?);
    }
    Ok(out)
}

pub fn format_report_line(r: &MCReport) -> String {
    format!(
        "[{}] {} estimate={:?} target={:?} se={:?} rule=\"{}\"",
        if r.pass { "PASS" } else { "FAIL" },
        r.name,
        r.estimate,
        r.target,
        r.se,
        r.rule
    )
}

// distinct RNG base per sub-experiment of a check
fn salted(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn erw_walk_config(model: Model, b: f64, p: f64) -> Result<WalkConfig> {
    let rule = match model {
        Model::Erw1 => UpdateRule::OnMemoryOnly,
        Model::Erw2 | Model::Srs => UpdateRule::Always,
    };
    WalkConfig::new(p, b, rule, StepSource::Rademacher)
}

// ---- criterion 1 -------------------------------------------------------

fn urn_walk_equivalence(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let replicas = 10_000;
    let mut reports = Vec::new();
    let mut salt = 100;
    for (model, urn_model, tag) in [
        (Model::Erw1, UrnModel::ReinforcedErw, "erw1"),
        (Model::Erw2, UrnModel::StrongErw, "erw2"),
    ] {
        for (b, p) in [(1.0, 0.2), (1.0, 0.5), (0.0, 0.5)] {
            let config = erw_walk_config(model, b, p)?;
            let rule = urn::replacement_rule(urn_model, b, p)?;
            for n in [500usize, 2000] {
                let walk_seed = salted(ctx.seed, salt);
                let urn_seed = salted(ctx.seed, salt + 1);
                salt += 2;
                let walk_samples = par_map_replicas(replicas, ctx.threads, |r| {
                    let mut rng = replica_rng(walk_seed, r as u64);
                    walk::run_positions_at(&config, &[n], &mut rng)[0]
                });
                let urn_samples = par_map_replicas(replicas, ctx.threads, |r| {
                    let mut rng = replica_rng(urn_seed, r as u64);
                    let state = urn::simulate_urn_final(&rule, n, &mut rng)
                        .expect("n >= 1 by construction");
                    urn::position_from_urn(urn_model, b, state.masses, n)
                });
                let (_, p_value) = stats::ks_two_sample(&walk_samples, &urn_samples)?;
                reports.push(MCReport::new(
                    format!("urn-walk-equivalence/{tag}/b={b}/p={p}/n={n}"),
                    vec![p_value],
                    vec![0.0],
                    vec![1e-3],
                    ToleranceRule::PValueAbove(1e-3),
                    ctx.seed,
                    replicas as u64,
                ));
            }
        }
    }
    Ok(reports)
}

// ---- criterion 2 -------------------------------------------------------

fn subcritical_cov_check(
    ctx: &CheckCtx,
    model: Model,
    b: f64,
    p: f64,
    salt: u64,
) -> Result<Vec<MCReport>> {
    let n = 10_000usize;
    let replicas = 10_000;
    let config = erw_walk_config(model, b, p)?;
    let checkpoints = [n / 2, n];
    let sqrt_n = (n as f64).sqrt();
    let seed = salted(ctx.seed, salt);
    let rows: Vec<f64> = par_map_replicas(replicas, ctx.threads, |r| {
        let mut rng = replica_rng(seed, r as u64);
        let at = walk::run_positions_at(&config, &checkpoints, &mut rng);
        [at[0] / sqrt_n, at[1] / sqrt_n]
    })
    .into_iter()
    .flatten()
    .collect();
    let cov = stats::mc_cov(&rows, 2)?;
    let cov_fn = |s: f64, t: f64| match model {
        Model::Erw1 => theory::cov_erw1(s, t, b, p),
        _ => theory::cov_erw2(s, t, b, p),
    };
    let targets = vec![cov_fn(0.5, 0.5)?, cov_fn(0.5, 1.0)?, cov_fn(1.0, 1.0)?];
    let estimates = vec![cov.cov(0, 0), cov.cov(0, 1), cov.cov(1, 1)];
    let ses = vec![cov.se(0, 0), cov.se(0, 1), cov.se(1, 1)];
    let tag = if model == Model::Erw1 { "erw1" } else { "erw2" };
    Ok(vec![MCReport::new(
        format!("{tag}-subcritical-cov/b={b}/p={p}/grid=0.5,1"),
        estimates,
        ses,
        targets,
        ToleranceRule::WithinSes(4.0),
        ctx.seed,
        replicas as u64,
    )])
}

fn erw1_subcritical_cov(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    subcritical_cov_check(ctx, Model::Erw1, 1.0, 0.2, 200)
}

// Exact second moments of the strong-model walk: the total weight after n
// steps is deterministic, so E[S_m^2], E[S_m S_n], E[S_n^2] obey closed
// linear recursions in (E[S^2], E[SM], E[M^2]) for the weighted increment
// sum M. An independent oracle for the simulator and, via extrapolation,
// for the limit covariance.
fn erw2_exact_cov_entries(b: f64, p: f64, m: usize, n: usize) -> [f64; 3] {
    let (mut a, mut c, mut d) = (1.0_f64, 1.0_f64, 1.0_f64);
    let (mut h, mut g) = (0.0_f64, 0.0_f64);
    let mut a_m = 1.0;
    for k in 1..n {
        let w = k as f64 + b * (k as f64 - 1.0);
        if k == m {
            a_m = a;
            h = a;
            g = c;
        }
        if k >= m {
            h += p * g / w;
            g *= 1.0 + (b + p) / w;
        }
        (a, c, d) = (
            a + 2.0 * p * c / w + 1.0,
            c * (1.0 + (b + p) / w) + p * d / w + b * p + 1.0,
            d * (1.0 + (2.0 * b + 2.0 * p) / w) + b * b + 2.0 * b * p + 1.0,
        );
    }
    [a_m, h, a]
}

fn erw2_subcritical_cov(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let (b, p) = (0.4, 0.2);
    let mut reports = subcritical_cov_check(ctx, Model::Erw2, b, p, 201)?;

    // The as-specified comparison above has an irreducible transient at
    // this horizon (the finite-n covariance approaches its limit only like
    // n^{2 kappa - 1} = n^{-1/7}); the two oracle reports below separate
    // simulator correctness from formula correctness.
    let n = 10_000usize;
    let sqrt_scale = n as f64;
    let exact: Vec<f64> =
        erw2_exact_cov_entries(b, p, n / 2, n).iter().map(|v| v / sqrt_scale).collect();
    let mc = reports[0].clone();
    reports.push(MCReport::new(
        format!("erw2-subcritical-cov/finite-n-oracle/n={n}"),
        mc.estimate.clone(),
        mc.se.clone(),
        exact,
        ToleranceRule::WithinSes(4.0),
        ctx.seed,
        mc.replicas,
    ));

    // deterministic: the exact recursion extrapolated in n^{2 kappa - 1}
    // must land on the closed-form covariance
    let kappa = theory::kappa(Model::Erw2, b, p);
    let (n1, n2) = (1_000_000usize, 10_000_000usize);
    let e1 = erw2_exact_cov_entries(b, p, n1 / 2, n1);
    let e2 = erw2_exact_cov_entries(b, p, n2 / 2, n2);
    let expo = 2.0 * kappa - 1.0;
    let targets =
        vec![theory::cov_erw2(0.5, 0.5, b, p)?, theory::cov_erw2(0.5, 1.0, b, p)?, theory::cov_erw2(1.0, 1.0, b, p)?];
    let mut extrapolated = Vec::new();
    for i in 0..3 {
        let y1 = e1[i] / n1 as f64;
        let y2 = e2[i] / n2 as f64;
        let coeff = (y1 - y2) / ((n1 as f64).powf(expo) - (n2 as f64).powf(expo));
        extrapolated.push(y1 - coeff * (n1 as f64).powf(expo));
    }
    reports.push(MCReport::new(
        "erw2-subcritical-cov/limit-extrapolation",
        extrapolated,
        vec![0.0; 3],
        targets,
        ToleranceRule::RelativeWithin(0.005),
        ctx.seed,
        n2 as u64,
    ));
    Ok(reports)
}

fn cov_b0_equality(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let mut max_diff: f64 = 0.0;
    let mut count = 0u64;
    for p in [0.05, 0.1, 0.2, 0.3, 0.4, 0.45] {
        for (s, t) in [(0.5, 0.5), (0.5, 1.0), (1.0, 1.0), (0.25, 3.0)] {
            let diff = (theory::cov_erw1(s, t, 0.0, p)? - theory::cov_erw2(s, t, 0.0, p)?).abs();
            max_diff = max_diff.max(diff);
            count += 1;
        }
    }
    Ok(vec![MCReport::new(
        "cov-b0-equality/max-absolute-difference",
        vec![max_diff],
        vec![0.0],
        vec![0.0],
        ToleranceRule::AbsWithin(1e-12),
        ctx.seed,
        count,
    )])
}

// ---- criterion 3 -------------------------------------------------------

const CRITICAL_GRID: [usize; 9] =
    [1_000, 1_778, 3_162, 5_623, 10_000, 17_783, 31_623, 56_234, 100_000];
const CRITICAL_REPLICAS: usize = 6_000;

fn erw1_critical_variance(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    Ok(vec![stats::critical_variance_check(
        Model::Erw1,
        0.25,
        &CRITICAL_GRID,
        CRITICAL_REPLICAS,
        salted(ctx.seed, 300),
        ctx.threads,
    )?])
}

fn erw2_critical_variance(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    Ok(vec![stats::critical_variance_check(
        Model::Erw2,
        0.25,
        &CRITICAL_GRID,
        CRITICAL_REPLICAS,
        salted(ctx.seed, 301),
        ctx.threads,
    )?])
}

// ---- criterion 4 -------------------------------------------------------

fn erw_supercritical_exponents(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let grid = [1_000usize, 3_000, 10_000, 30_000];
    let replicas = 2_500;
    let mut reports = Vec::new();
    for (model, b, p, salt) in [(Model::Erw2, 1.0, 0.5, 400u64), (Model::Erw1, 0.0, 0.75, 401)] {
        let kappa = theory::kappa(model, b, p);
        let config = erw_walk_config(model, b, p)?;
        let seed = salted(ctx.seed, salt);
        let mut points = Vec::new();
        for (gi, &n) in grid.iter().enumerate() {
            let abs_mean = par_map_replicas(replicas, ctx.threads, |r| {
                let mut rng = replica_rng(seed, (gi as u64) << 32 | r as u64);
                walk::run_positions_at(&config, &[n], &mut rng)[0].abs()
            })
            .iter()
            .sum::<f64>()
                / replicas as f64;
            points.push((n as f64, abs_mean));
        }
        let fit = stats::loglog_slope(&points)?;
        let tag = if model == Model::Erw1 { "erw1" } else { "erw2" };
        reports.push(MCReport::new(
            format!("erw-supercritical-exponents/{tag}/b={b}/p={p}"),
            vec![fit.slope],
            vec![0.0],
            vec![kappa],
            ToleranceRule::AbsWithin(0.05),
            ctx.seed,
            replicas as u64,
        ));
    }
    Ok(reports)
}

// ---- criterion 5 -------------------------------------------------------

fn branching_martingale(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let p = 0.5;
    let times = [1.0, 2.0, 4.0];
    let replicas = 20_000;
    let mut reports = Vec::new();
    for (b, salt) in [(0.0, 500u64), (1.0, 501)] {
        let seed = salted(ctx.seed, salt);
        let rows = par_map_replicas(replicas, ctx.threads, |r| {
            let mut rng = replica_rng(seed, r as u64);
            let states = patree::cluster_chain_at_times(b, p, &times, &mut rng)
                .expect("valid chain parameters");
            let ys: Vec<f64> = states.iter().map(|s| s.y_value(b)).collect();
            ys
        });
        let mut mart_est = Vec::new();
        let mut mart_se = Vec::new();
        let mut moment_est = Vec::new();
        let mut moment_se = Vec::new();
        let mut moment_target = Vec::new();
        for (k, &t) in times.iter().enumerate() {
            let ys: Vec<f64> = rows.iter().map(|row| row[k]).collect();
            let mart: Vec<f64> = ys.iter().map(|y| (-(b + p) * t).exp() * y).collect();
            let m = stats::mc_moments(&mart)?;
            mart_est.push(m.mean);
            mart_se.push(m.se_mean);
            let (m1, m2) = theory::branching_moments(t, b, p)?;
            let ym = stats::mc_moments(&ys)?;
            let sq: Vec<f64> = ys.iter().map(|y| y * y).collect();
            let sqm = stats::mc_moments(&sq)?;
            moment_est.extend([ym.mean, sqm.mean]);
            moment_se.extend([ym.se_mean, sqm.se_mean]);
            moment_target.extend([m1, m2]);
        }
        reports.push(MCReport::new(
            format!("branching-martingale/b={b}/p={p}/t=1,2,4"),
            mart_est,
            mart_se,
            vec![1.0; times.len()],
            ToleranceRule::WithinSes(3.0),
            ctx.seed,
            replicas as u64,
        ));
        reports.push(MCReport::new(
            format!("branching-moments/b={b}/p={p}/t=1,2,4"),
            moment_est,
            moment_se,
            moment_target,
            ToleranceRule::WithinSes(4.0),
            ctx.seed,
            replicas as u64,
        ));
    }
    Ok(reports)
}

fn gamma_w(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let replicas = 10_000;
    let mut reports = Vec::new();
    for (b, salt) in [(0.0, 510u64), (1.0, 511)] {
        // horizon large enough that e^{(b+1) t_max} = 1e4
        let t_max = 10_000.0_f64.ln() / (b + 1.0);
        let seed = salted(ctx.seed, salt);
        let samples = par_map_replicas(replicas, ctx.threads, |r| {
            let mut rng = replica_rng(seed, r as u64);
            patree::sample_w(b, t_max, &mut rng).expect("valid parameters")
        });
        let shape = 1.0 / (b + 1.0);
        let (_, p_value) = stats::ks_test(&samples, |x| stats::gamma_cdf(shape, shape, x))?;
        reports.push(MCReport::new(
            format!("gamma-W/b={b}"),
            vec![p_value],
            vec![0.0],
            vec![1e-3],
            ToleranceRule::PValueAbove(1e-3),
            ctx.seed,
            replicas as u64,
        ));
    }
    Ok(reports)
}

// ---- criterion 6 -------------------------------------------------------

fn root_cluster_moments(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let n = 10_000usize;
    let replicas = 10_000;
    let mut reports = Vec::new();
    for (b, p, salt) in [(0.0, 0.5, 600u64), (1.0, 0.5, 601)] {
        let seed = salted(ctx.seed, salt);
        let zs = par_map_replicas(replicas, ctx.threads, |r| {
            let mut rng = replica_rng(seed, r as u64);
            patree::sample_root_cluster_scaled(n, b, p, &mut rng).expect("valid parameters")
        });
        let m = stats::mc_moments(&zs)?;
        let sq: Vec<f64> = zs.iter().map(|z| z * z).collect();
        let sqm = stats::mc_moments(&sq)?;
        let z1 = theory::z1_moments(b, p)?;
        reports.push(MCReport::new(
            format!("root-cluster-moments/b={b}/p={p}/n={n}"),
            vec![m.mean, sqm.mean],
            vec![m.se_mean, sqm.se_mean],
            vec![z1.z1_mean, z1.z1_second_moment],
            ToleranceRule::WithinSes(4.0),
            ctx.seed,
            replicas as u64,
        ));
    }
    Ok(reports)
}

// ---- criterion 7 -------------------------------------------------------

fn eta_beta_limit(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let n = 10_000usize;
    let replicas = 10_000;
    let mut reports = Vec::new();
    let mut salt = 700u64;
    for b in [0.0, 1.0] {
        for i in [2usize, 5] {
            let seed = salted(ctx.seed, salt);
            salt += 1;
            let fractions = par_map_replicas(replicas, ctx.threads, |r| {
                let mut rng = replica_rng(seed, r as u64);
                urn::sample_eta(n, i, b, &mut rng).expect("valid parameters") as f64 / n as f64
            });
            let m = stats::mc_moments(&fractions)?;
            let sq: Vec<f64> = fractions.iter().map(|x| x * x).collect();
            let sqm = stats::mc_moments(&sq)?;
            reports.push(MCReport::new(
                format!("eta-beta-limit/b={b}/i={i}/n={n}"),
                vec![m.mean, sqm.mean],
                vec![m.se_mean, sqm.se_mean],
                vec![theory::beta_moment(i, b, 1.0)?, theory::beta_moment(i, b, 2.0)?],
                ToleranceRule::WithinSes(4.0),
                ctx.seed,
                replicas as u64,
            ));
        }
    }
    Ok(reports)
}

// ---- criterion 8 -------------------------------------------------------

fn xbar_moment_slope(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let (b, p) = (1.0, 0.5);
    let kappa = theory::kappa(Model::Srs, b, p);
    let n = 12_800usize;
    let ratios = [8usize, 16, 32, 64, 128];
    let replicas = 100_000;
    let seed = salted(ctx.seed, 800);
    let mut points = Vec::new();
    for (gi, &ratio) in ratios.iter().enumerate() {
        let i = n / ratio;
        let fourth = par_map_replicas(replicas, ctx.threads, |r| {
            let mut rng = replica_rng(seed, (gi as u64) << 32 | r as u64);
            let (_, xbar) =
                patree::sample_xbar_xunder(i, n, 0.0, b, p, &mut rng).expect("valid parameters");
            xbar.powi(4)
        })
        .iter()
        .sum::<f64>()
            / replicas as f64;
        points.push((ratio as f64, fourth));
    }
    let fit = stats::loglog_slope(&points)?;
    Ok(vec![MCReport::new(
        format!("xbar-moment-slope/b={b}/p={p}/l=4"),
        vec![fit.slope],
        vec![0.0],
        vec![4.0 * kappa],
        ToleranceRule::AbsWithin(0.1),
        ctx.seed,
        replicas as u64,
    )])
}

// ---- criterion 9 -------------------------------------------------------

fn srs_subcritical_cf(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let (alpha, b, p) = (1.0, 0.5, 0.2);
    let n = 10_000usize;
    let replicas = 10_000;
    let thetas = [0.2, 0.5, 1.0, 1.5, 2.0];
    let seed = salted(ctx.seed, 900);

    let config = SrsConfig::new(alpha, 1, b, p, n, replicas, seed)?;
    let samples = par_map_replicas(replicas, ctx.threads, |r| {
        let mut rng = replica_rng(seed, r as u64);
        srs::simulate_srs(&config, &mut rng, srs::SrsMethod::Direct).expect("valid config")[0]
            / (n as f64).powf(1.0 / alpha)
    });

    // limit CF at theta and 2*theta from shared trajectories
    let mut queries: Vec<CfQuery> = thetas.iter().map(|&t| CfQuery::single(vec![t])).collect();
    queries.extend(thetas.iter().map(|&t| CfQuery::single(vec![2.0 * t])));
    let mc = CfMcParams {
        paths: 40_000,
        truncation_frac: 0.01,
        seed: salted(ctx.seed, 901),
        threads: ctx.threads,
    };
    let limit = srs::subcritical_limit_cf(&queries, &[1.0], alpha, b, p, &mc)?;

    let mut estimates = Vec::new();
    let mut ses = Vec::new();
    let mut targets = Vec::new();
    for (k, &theta) in thetas.iter().enumerate() {
        let (emp, emp_se) = stable::empirical_cf(&samples, 1, &[theta])?;
        estimates.push(emp.re);
        ses.push((emp_se * emp_se + limit[k].se * limit[k].se).sqrt());
        targets.push(limit[k].value.re);
    }
    let cf_report = MCReport::new(
        format!("srs-subcritical-cf/alpha={alpha}/b={b}/p={p}/n={n}"),
        estimates,
        ses,
        targets,
        ToleranceRule::WithinSes(4.0),
        ctx.seed,
        replicas as u64,
    );

    // alpha-homogeneity of -log CF, exact under shared paths
    let ratios: Vec<f64> =
        (0..thetas.len()).map(|k| limit[k + thetas.len()].neg_log / limit[k].neg_log).collect();
    let homogeneity = MCReport::new(
        "srs-subcritical-cf/alpha-homogeneity",
        ratios,
        vec![0.0; thetas.len()],
        vec![2.0_f64.powf(alpha); thetas.len()],
        ToleranceRule::AbsWithin(1e-9),
        ctx.seed,
        mc.paths as u64,
    );
    Ok(vec![cf_report, homogeneity])
}

// ---- criterion 10 ------------------------------------------------------

fn srs_critical_variance(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    Ok(vec![stats::critical_variance_check(
        Model::Srs,
        0.25,
        &CRITICAL_GRID,
        CRITICAL_REPLICAS,
        salted(ctx.seed, 1000),
        ctx.threads,
    )?])
}

// ---- criterion 11 ------------------------------------------------------

fn srs_supercritical(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let (b, p) = (1.0, 0.5);
    let kappa = theory::kappa(Model::Srs, b, p);
    let grid = [1_000usize, 3_000, 10_000, 30_000];
    let mut reports = Vec::new();
    // heavy-tailed route on medians (alpha = 1.5, alpha*kappa = 1.125) and
    // Gaussian route on means (alpha = 2, alpha*kappa = 1.5)
    for (alpha, stat, replicas, salt) in [
        (1.5, SizeStatistic::Median, 1_500usize, 1100u64),
        (2.0, SizeStatistic::Mean, 1_500, 1101),
    ] {
        let config = SrsConfig::new(alpha, 1, b, p, *grid.last().unwrap(), replicas, salted(ctx.seed, salt))?;
        let fit = srs::scaling_exponent(&config, &grid, replicas, stat, ctx.threads)?;
        reports.push(MCReport::new(
            format!("srs-supercritical/slope/alpha={alpha}/{stat:?}"),
            vec![fit.slope],
            vec![0.0],
            vec![kappa],
            ToleranceRule::AbsWithin(0.05),
            ctx.seed,
            replicas as u64,
        ));
    }

    // marginal of the i = 2 cluster weight: (1-p) E[beta_2^kappa] E[Z_1]
    let n = 10_000usize;
    let replicas = 6_000;
    let seed = salted(ctx.seed, 1102);
    let w2 = par_map_replicas(replicas, ctx.threads, |r| {
        let mut rng = replica_rng(seed, r as u64);
        srs::sample_supercritical_weights(b, p, n, &mut rng).expect("valid parameters")[1]
    });
    let m = stats::mc_moments(&w2)?;
    let target =
        (1.0 - p) * theory::beta_moment(2, b, kappa)? * theory::z1_moments(b, p)?.z1_mean;
    reports.push(MCReport::new(
        format!("srs-supercritical/z-marginal/i=2/n={n}"),
        vec![m.mean],
        vec![m.se_mean],
        vec![target],
        ToleranceRule::WithinSes(4.0),
        ctx.seed,
        replicas as u64,
    ));
    Ok(reports)
}

// ---- criterion 12 ------------------------------------------------------

fn structural_invariants(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let mut reports = Vec::new();

    // forests: weight-degree identity, cluster sizes, cluster count, Y sum
    let seed = salted(ctx.seed, 1200);
    let mut rng = replica_rng(seed, 0);
    let mut max_rel: f64 = 0.0;
    let mut forests = 0u64;
    for (b, p) in [(0.0, 0.5), (1.0, 0.3), (0.4, 0.7), (2.0, 0.5)] {
        for _ in 0..25 {
            let n = 1_000usize;
            let tree = patree::grow_discrete(n, b, &mut rng)?;
            for i in 1..=n {
                let expect = b * f64::from(tree.degree(i) - 1) + 1.0;
                max_rel = max_rel.max((tree.weight(i) - expect).abs());
            }
            let forest = patree::percolate(tree, p, &mut rng)?;
            let sizes: u64 = forest.clusters().iter().map(|c| u64::from(c.size)).sum();
            assert_eq!(sizes, n as u64, "cluster sizes must partition the nodes");
            assert_eq!(forest.cluster_count(), 1 + forest.cut_count());
            let y_sum: f64 =
                (1..=forest.cluster_count()).map(|i| patree::cluster_y_value(&forest, i)).sum();
            let y_target = b * (n as f64 - 1.0) + n as f64;
            max_rel = max_rel.max((y_sum - y_target).abs() / y_target);
            forests += 1;
        }
    }
    reports.push(MCReport::new(
        "structural-invariants/forest-identities",
        vec![max_rel],
        vec![0.0],
        vec![0.0],
        ToleranceRule::AbsWithin(1e-9),
        ctx.seed,
        forests,
    ));

    // strong urn: total mass after k draws is exactly 1 + k(b+1)
    let mut max_mass_rel: f64 = 0.0;
    let mut runs = 0u64;
    for (b, p) in [(0.0, 0.5), (1.0, 0.2), (0.7, 0.6)] {
        let rule = urn::replacement_rule(UrnModel::StrongErw, b, p)?;
        for _ in 0..50 {
            let n = 1_000;
            let state = urn::simulate_urn_final(&rule, n, &mut rng)?;
            let target = 1.0 + state.draws as f64 * (b + 1.0);
            max_mass_rel = max_mass_rel.max((state.total() - target).abs() / target);
            runs += 1;
        }
    }
    reports.push(MCReport::new(
        "structural-invariants/strong-urn-mass",
        vec![max_mass_rel],
        vec![0.0],
        vec![0.0],
        ToleranceRule::AbsWithin(1e-9),
        ctx.seed,
        runs,
    ));

    // b = 0: the two update rules are bitwise identical on shared streams
    let mut mismatches = 0u64;
    let mut pairs = 0u64;
    for s in 0..20u64 {
        let ca = WalkConfig::new(0.4, 0.0, UpdateRule::OnMemoryOnly, StepSource::Rademacher)?;
        let cb = WalkConfig::new(0.4, 0.0, UpdateRule::Always, StepSource::Rademacher)?;
        let ta = walk::run(&ca, 500, &mut replica_rng(salted(ctx.seed, 1201), s));
        let tb = walk::run(&cb, 500, &mut replica_rng(salted(ctx.seed, 1201), s));
        if ta.positions != tb.positions || ta.increments != tb.increments {
            mismatches += 1;
        }
        pairs += 1;
    }
    reports.push(MCReport::new(
        "structural-invariants/b0-rule-equivalence-bitwise",
        vec![mismatches as f64],
        vec![0.0],
        vec![0.0],
        ToleranceRule::AbsWithin(0.0),
        ctx.seed,
        pairs,
    ));
    Ok(reports)
}

// ---- criterion 13 ------------------------------------------------------

fn stable_cf(ctx: &CheckCtx) -> Result<Vec<MCReport>> {
    let n = 100_000usize;
    let thetas = [0.25, 0.5, 1.0, 1.5, 2.0];
    let tol = 4.0 / (n as f64).sqrt();
    let mut reports = Vec::new();
    for (k, alpha) in [0.8, 1.0, 1.5, 2.0].into_iter().enumerate() {
        let params = stable::StableParams::new(alpha, 1)?;
        let seed = salted(ctx.seed, 1300 + k as u64);
        let samples: Vec<f64> = par_map_replicas(n, ctx.threads, |r| {
            let mut rng = replica_rng(seed, r as u64);
            stable::sample_isotropic_stable(params, &mut rng)[0]
        });
        let mut estimates = Vec::new();
        let mut targets = Vec::new();
        for &theta in &thetas {
            let (cf, _) = stable::empirical_cf(&samples, 1, &[theta])?;
            estimates.push(cf.re);
            targets.push((-theta.powf(alpha)).exp());
        }
        reports.push(MCReport::new(
            format!("stable-cf/alpha={alpha}/n={n}"),
            estimates,
            vec![0.0; thetas.len()],
            targets,
            ToleranceRule::AbsWithin(tol),
            ctx.seed,
            n as u64,
        ));
        if alpha == 1.0 {
            let mut sorted = samples.clone();
            sorted.sort_by(f64::total_cmp);
            let q1 = sorted[n / 4];
            let q3 = sorted[3 * n / 4];
            reports.push(MCReport::new(
                "stable-cf/cauchy-quartiles",
                vec![q1, q3],
                vec![0.0, 0.0],
                vec![-1.0, 1.0],
                ToleranceRule::AbsWithin(0.04),
                ctx.seed,
                n as u64,
            ));
        }
    }
    Ok(reports)
}
