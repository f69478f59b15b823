//! The strongly reinforced shark random swim: direct and
//! cluster-representation simulators, Monte Carlo evaluators of the limit
//! characteristic functions, and scaling-exponent estimation.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::patree::{self, SizeJumpPath};
use crate::rng::{par_map_replicas, replica_rng};
use crate::stable::{sample_isotropic_stable, StableParams};
use crate::stats::{self, SlopeFit};
use crate::theory::{self, Model};
use crate::walk::{self, StepSource, UpdateRule, WalkConfig};

/// Parameters of one shark-swim experiment.
#[derive(Clone, Copy, Debug)]
pub struct SrsConfig {
    pub alpha: f64,
    pub dim: usize,
    pub b: f64,
    pub p: f64,
    /// Walk horizon.
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
}

impl SrsConfig {
    pub fn new(
        alpha: f64,
        dim: usize,
        b: f64,
        p: f64,
        n: usize,
        replicas: usize,
        seed: u64,
    ) -> Result<Self> {
        StableParams::new(alpha, dim)?;
        theory::validate_bp(b, p)?;
        if n == 0 || replicas == 0 {
            return Err(Error::parameter("n and replicas must be >= 1"));
        }
        Ok(SrsConfig { alpha, dim, b, p, n, replicas, seed })
    }

    pub fn kappa(&self) -> f64 {
        theory::kappa(Model::Srs, self.b, self.p)
    }

    pub fn stable_params(&self) -> StableParams {
        StableParams::new(self.alpha, self.dim).expect("validated at construction")
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig::new(self.p, self.b, UpdateRule::Always, StepSource::Stable(self.stable_params()))
            .expect("validated at construction")
    }

    pub fn regime_report(&self) -> Result<theory::RegimeReport> {
        theory::regime(Model::Srs, self.b, self.p, Some(self.alpha))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrsMethod {
    /// Run the strongly reinforced walk with stable steps.
    Direct,
    /// Build a percolated attachment tree and sum cluster sizes times
    /// fresh stable spins.
    Clusters,
}

/// Simulates one replicate of S_n.
pub fn simulate_srs<R: Rng + ?Sized>(
    config: &SrsConfig,
    rng: &mut R,
    method: SrsMethod,
) -> Result<Vec<f64>> {
    match method {
        SrsMethod::Direct => Ok(walk::run_positions_at(&config.walk_config(), &[config.n], rng)),
        SrsMethod::Clusters => {
            let tree = patree::grow_discrete(config.n, config.b, rng)?;
            let forest = patree::percolate(tree, config.p, rng)?;
            let params = config.stable_params();
            let mut s = vec![0.0; config.dim];
            for cluster in forest.clusters() {
                let spin = sample_isotropic_stable(params, rng);
                for (acc, x) in s.iter_mut().zip(&spin) {
                    *acc += f64::from(cluster.size) * x;
                }
            }
            Ok(s)
        }
    }
}

/// One theta-tuple of a finite-dimensional characteristic function query:
/// row j pairs with the j-th time.
#[derive(Clone, Debug)]
pub struct CfQuery {
    pub thetas: Vec<Vec<f64>>,
}

impl CfQuery {
    pub fn single(theta: Vec<f64>) -> Self {
        CfQuery { thetas: vec![theta] }
    }
}

/// Monte Carlo estimate of a characteristic-function value.
#[derive(Clone, Copy, Debug)]
pub struct CfEstimate {
    pub value: Complex64,
    pub se: f64,
    /// The estimated exponent I in CF = exp(-I).
    pub neg_log: f64,
    pub neg_log_se: f64,
}

/// Tuning of the subcritical CF integrator.
#[derive(Clone, Copy, Debug)]
pub struct CfMcParams {
    /// Number of sampled f-trajectories.
    pub paths: usize,
    /// Target bound on the truncated fraction of the integral.
    pub truncation_frac: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for CfMcParams {
    fn default() -> Self {
        CfMcParams { paths: 20_000, truncation_frac: 0.01, seed: 1, threads: 1 }
    }
}

// expected terminal Y value allowed for one sampled trajectory
const MAX_EXPECTED_Y: f64 = 1e5;

/// Evaluates the subcritical limit characteristic function
/// exp(-int_0^inf E || sum_j f(x/t_j) theta_j ||^alpha dx) by Monte Carlo
/// over f-trajectories. Each sampled trajectory is a step function of x,
/// so the inner integral is computed exactly segment by segment; the only
/// approximations are the path average and the truncation of the integral
/// below x_min, which is chosen from the moment bound
/// E[f(x)^alpha] <= c_alpha x^{-alpha kappa} so the discarded mass stays
/// below `truncation_frac` of the estimate.
pub fn subcritical_limit_cf(
    queries: &[CfQuery],
    times: &[f64],
    alpha: f64,
    b: f64,
    p: f64,
    mc: &CfMcParams,
) -> Result<Vec<CfEstimate>> {
    let kappa = validate_cf_inputs(queries, times, alpha, b, p)?;
    if alpha * kappa >= 1.0 {
        return Err(Error::regime(format!(
            "subcritical evaluator requires alpha*kappa < 1, got {}",
            alpha * kappa
        )));
    }
    let t_max = *times.last().unwrap();
    let x_hi = t_max * (1.0 - p);

    // nothing to integrate for all-zero tuples
    let norms_alpha: Vec<f64> = queries
        .iter()
        .map(|q| q.thetas.iter().map(|th| norm(th).powf(alpha)).sum::<f64>())
        .collect();
    if norms_alpha.iter().all(|&s| s == 0.0) {
        return Ok(queries
            .iter()
            .map(|_| CfEstimate {
                value: Complex64::new(1.0, 0.0),
                se: 0.0,
                neg_log: 0.0,
                neg_log_se: 0.0,
            })
            .collect());
    }

    // pilot estimate for the truncation point
    let pilot_x_min = x_hi * 1e-4;
    let pilot = integrate_paths(queries, times, alpha, b, p, pilot_x_min, x_hi, 200, mc.seed, 1)?;
    let c_alpha = theory::w_constants(b, p)?.w1_second_moment.powf(alpha / 2.0);
    let m_factor = (times.len() as f64).powf((alpha - 1.0).max(0.0));
    let mut x_min = pilot_x_min;
    for (q, query) in queries.iter().enumerate() {
        let i0 = pilot.means[q];
        if i0 <= 0.0 {
            continue;
        }
        let d: f64 = m_factor
            * c_alpha
            * query
                .thetas
                .iter()
                .zip(times)
                .map(|(th, &t)| norm(th).powf(alpha) * ((1.0 - p) * t).powf(alpha * kappa))
                .sum::<f64>();
        // solve D x^{1-ak}/(1-ak) = frac * I0
        let exponent = 1.0 - alpha * kappa;
        let solved = (mc.truncation_frac * i0 * exponent / d).powf(1.0 / exponent);
        x_min = x_min.min(solved);
    }
    // Near alpha*kappa = 1 the solved truncation point shrinks
    // exponentially (the limit integral barely converges); floor x_min so
    // the expected per-path event count stays bounded.
    let t_budget = MAX_EXPECTED_Y.ln() / (b + p);
    let x_floor = x_hi * (-(b + 1.0) * t_budget).exp();
    x_min = x_min.clamp(x_floor.min(x_hi * 1e-2), x_hi * 1e-2);

    let agg =
        integrate_paths(queries, times, alpha, b, p, x_min, x_hi, mc.paths, mc.seed, mc.threads)?;
    Ok((0..queries.len())
        .map(|q| {
            let neg_log = agg.means[q];
            let neg_log_se = agg.ses[q];
            let value = Complex64::new((-neg_log).exp(), 0.0);
            CfEstimate { value, se: value.re * neg_log_se, neg_log, neg_log_se }
        })
        .collect())
}

struct PathAggregate {
    means: Vec<f64>,
    ses: Vec<f64>,
}

fn integrate_paths(
    queries: &[CfQuery],
    times: &[f64],
    alpha: f64,
    b: f64,
    p: f64,
    x_min: f64,
    x_hi: f64,
    paths: usize,
    seed: u64,
    threads: usize,
) -> Result<PathAggregate> {
    let t_path = patree::f_time(x_min / times.last().unwrap(), b, p);
    let per_path: Vec<Vec<f64>> = par_map_replicas(paths, threads, |m| {
        let mut rng = replica_rng(seed, m as u64);
        let path = patree::cluster_chain_path(b, p, t_path, &mut rng)
            .expect("parameters validated upstream");
        integrate_one_path(&path, queries, times, alpha, b, p, x_min, x_hi)
    });
    let q = queries.len();
    let mut means = vec![0.0; q];
    let mut ses = vec![0.0; q];
    for (k, (mean, se)) in means.iter_mut().zip(ses.iter_mut()).enumerate() {
        let vals: Vec<f64> = per_path.iter().map(|row| row[k]).collect();
        let m = stats::mc_moments(&vals)?;
        *mean = m.mean;
        *se = m.se_mean;
    }
    Ok(PathAggregate { means, ses })
}

// Exact integral of x -> ||sum_j f(x/t_j) theta_j||^alpha over [x_min, x_hi]
// for one sampled trajectory, by walking the merged breakpoints of the k
// step functions in decreasing x.
fn integrate_one_path(
    path: &SizeJumpPath,
    queries: &[CfQuery],
    times: &[f64],
    alpha: f64,
    b: f64,
    p: f64,
    x_min: f64,
    x_hi: f64,
) -> Vec<f64> {
    let mut breakpoints: Vec<(f64, usize)> = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        let birth = t * (1.0 - p);
        if birth > x_min {
            breakpoints.push((birth.min(x_hi), j));
        } else {
            continue;
        }
        for &u in path.jump_times() {
            let x = birth * (-(b + 1.0) * u).exp();
            if x > x_min {
                breakpoints.push((x.min(x_hi), j));
            } else {
                break;
            }
        }
    }
    breakpoints.sort_by(|a, b| b.0.total_cmp(&a.0));

    let dim = queries[0].thetas[0].len();
    let mut sizes = vec![0.0f64; times.len()];
    let mut acc = vec![0.0f64; queries.len()];
    let mut cursor = x_hi;
    let add_segment = |sizes: &[f64], acc: &mut [f64], width: f64| {
        if width <= 0.0 {
            return;
        }
        for (a, query) in acc.iter_mut().zip(queries) {
            let mut norm2 = 0.0;
            for d in 0..dim {
                let mut c = 0.0;
                for (s, th) in sizes.iter().zip(&query.thetas) {
                    c += s * th[d];
                }
                norm2 += c * c;
            }
            if norm2 > 0.0 {
                *a += norm2.powf(alpha / 2.0) * width;
            }
        }
    };
    for &(x, j) in &breakpoints {
        if x < cursor {
            add_segment(&sizes, &mut acc, cursor - x);
            cursor = x;
        }
        sizes[j] += 1.0;
    }
    add_segment(&sizes, &mut acc, cursor - x_min);
    acc
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn validate_cf_inputs(
    queries: &[CfQuery],
    times: &[f64],
    alpha: f64,
    b: f64,
    p: f64,
) -> Result<f64> {
    theory::validate_bp(b, p)?;
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::parameter(format!("alpha must be in (0,2], got {alpha}")));
    }
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("times must be positive and strictly increasing"));
    }
    if queries.is_empty() {
        return Err(Error::usage("at least one theta tuple is required"));
    }
    let dim = queries
        .first()
        .and_then(|q| q.thetas.first())
        .map(Vec::len)
        .unwrap_or(0);
    for q in queries {
        if q.thetas.len() != times.len() || q.thetas.iter().any(|th| th.len() != dim || dim == 0) {
            return Err(Error::usage("each query needs one theta of fixed dimension per time"));
        }
    }
    Ok(theory::kappa(Model::Srs, b, p))
}

/// Closed-form critical limit characteristic function: an alpha-stable
/// Levy process with scale ((1-p)/(b+1)) E[Z_1^alpha]:
/// exp(-scale * sum_j (t_j - t_{j-1}) || sum_{i>=j} theta_i ||^alpha).
pub fn critical_limit_cf(
    queries: &[CfQuery],
    times: &[f64],
    alpha: f64,
    b: f64,
    p: f64,
    z1_alpha_moment: f64,
) -> Result<Vec<Complex64>> {
    let kappa = validate_cf_inputs(queries, times, alpha, b, p)?;
    if (alpha * kappa - 1.0).abs() > 1e-9 {
        return Err(Error::regime(format!(
            "critical evaluator requires alpha*kappa = 1, got {}",
            alpha * kappa
        )));
    }
    if !(z1_alpha_moment > 0.0 && z1_alpha_moment.is_finite()) {
        return Err(Error::parameter("E[Z1^alpha] must be positive and finite"));
    }
    let scale = (1.0 - p) / (b + 1.0) * z1_alpha_moment;
    Ok(queries
        .iter()
        .map(|query| {
            let mut neg_log = 0.0;
            let mut prev_t = 0.0;
            for j in 0..times.len() {
                let mut tail = vec![0.0; query.thetas[0].len()];
                for th in &query.thetas[j..] {
                    for (a, x) in tail.iter_mut().zip(th) {
                        *a += x;
                    }
                }
                neg_log += (times[j] - prev_t) * norm(&tail).powf(alpha);
                prev_t = times[j];
            }
            Complex64::new((-scale * neg_log).exp(), 0.0)
        })
        .collect())
}

/// Monte Carlo estimate of E[Z_1^alpha] as the mean of
/// (|c_{1,n}| / n^kappa)^alpha over replicas, with its standard error.
pub fn estimate_z1_alpha_moment(
    alpha: f64,
    b: f64,
    p: f64,
    n: usize,
    replicas: usize,
    seed: u64,
    threads: usize,
) -> Result<(f64, f64)> {
    if alpha < 0.0 {
        return Err(Error::parameter("alpha must be >= 0"));
    }
    theory::validate_bp(b, p)?;
    let vals = par_map_replicas(replicas, threads, |r| {
        let mut rng = replica_rng(seed, r as u64);
        patree::sample_root_cluster_scaled(n, b, p, &mut rng)
            .expect("parameters validated upstream")
            .powf(alpha)
    });
    let m = stats::mc_moments(&vals)?;
    Ok((m.mean, m.se_mean))
}

/// Scaled sizes |C_{i,n}| / n^kappa of the clusters rooted at each node
/// i = 1..n (zero when the subtree at i is not a cluster), from one
/// percolated tree.
pub fn sample_supercritical_weights<R: Rng + ?Sized>(
    b: f64,
    p: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    theory::validate_bp(b, p)?;
    let tree = patree::grow_discrete(n, b, rng)?;
    let forest = patree::percolate(tree, p, rng)?;
    let scale = (n as f64).powf(theory::kappa(Model::Srs, b, p));
    Ok((1..=n).map(|i| f64::from(forest.size_rooted_at(i)) / scale).collect())
}

/// Approximates the supercritical limit Z = sum_i Z_i xi_i by joint
/// simulation of one percolated tree at horizon n combined with fresh
/// stable spins. Requires alpha*kappa > 1.
pub fn sample_supercritical_z<R: Rng + ?Sized>(
    config: &SrsConfig,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if config.alpha * config.kappa() <= 1.0 {
        return Err(Error::regime(format!(
            "Z is summable only for alpha*kappa > 1, got {}",
            config.alpha * config.kappa()
        )));
    }
    let weights = sample_supercritical_weights(config.b, config.p, n, rng)?;
    let params = config.stable_params();
    let mut z = vec![0.0; config.dim];
    for &w in weights.iter().filter(|&&w| w > 0.0) {
        let spin = sample_isotropic_stable(params, rng);
        for (acc, x) in z.iter_mut().zip(&spin) {
            *acc += w * x;
        }
    }
    Ok(z)
}

/// Location statistic used for |S_n| when estimating scaling exponents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeStatistic {
    Median,
    Mean,
}

impl SizeStatistic {
    /// Medians for alpha <= 1 (means may not exist), means otherwise.
    pub fn default_for(alpha: f64) -> Self {
        if alpha <= 1.0 {
            SizeStatistic::Median
        } else {
            SizeStatistic::Mean
        }
    }
}

/// Log-log regression of a location statistic of |S_n| against n over a
/// grid, using the direct walk simulator.
pub fn scaling_exponent(
    config: &SrsConfig,
    n_grid: &[usize],
    replicas: usize,
    stat: SizeStatistic,
    threads: usize,
) -> Result<SlopeFit> {
    if n_grid.len() < 4 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("n_grid must be >= 4 strictly increasing points"));
    }
    let walk_config = config.walk_config();
    let mut points = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let mut sizes = par_map_replicas(replicas, threads, |r| {
            let mut rng = replica_rng(config.seed, (gi as u64) << 32 | r as u64);
            norm(&walk::run_positions_at(&walk_config, &[n], &mut rng))
        });
        let value = match stat {
            SizeStatistic::Mean => sizes.iter().sum::<f64>() / sizes.len() as f64,
            SizeStatistic::Median => {
                sizes.sort_by(f64::total_cmp);
                sizes[sizes.len() / 2]
            }
        };
        points.push((n as f64, value));
    }
    stats::loglog_slope(&points)
}
