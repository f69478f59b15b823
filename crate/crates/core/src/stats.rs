//! Statistical machinery: moment and covariance estimators with
//! batch-means standard errors, Kolmogorov-Smirnov and chi-square tests,
//! log-log regression, distribution evaluators, and the MCReport record
//! that every verification check produces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{par_map_replicas, replica_rng};
use crate::special::{kolmogorov_q, reg_gamma_p, reg_gamma_q};
use crate::theory::{self, Model};
use crate::urn::{self, UrnModel};

const BATCHES: usize = 32;

/// Mean and variance of a sample with batch-means standard errors.
#[derive(Clone, Copy, Debug)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

pub fn mc_moments(samples: &[f64]) -> Result<Moments> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData("mc_moments needs >= 2 samples".into()));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;

    let b = BATCHES.min(n);
    let batch_means: Vec<f64> = batches(samples, b)
        .map(|chunk| chunk.iter().sum::<f64>() / chunk.len() as f64)
        .collect();
    let se_mean = spread(&batch_means);

    let se_variance = if n / b >= 2 {
        let batch_vars: Vec<f64> = batches(samples, b)
            .map(|chunk| {
                let m = chunk.iter().sum::<f64>() / chunk.len() as f64;
                chunk.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (chunk.len() - 1) as f64
            })
            .collect();
        spread(&batch_vars)
    } else {
        variance * (2.0 / (n - 1) as f64).sqrt()
    };

    Ok(Moments { n, mean, variance, se_mean, se_variance })
}

fn batches(samples: &[f64], b: usize) -> impl Iterator<Item = &[f64]> {
    let size = samples.len().div_ceil(b);
    samples.chunks(size)
}

// sd of batch statistics / sqrt(B)
fn spread(batch_stats: &[f64]) -> f64 {
    let b = batch_stats.len();
    if b < 2 {
        return 0.0;
    }
    let m = batch_stats.iter().sum::<f64>() / b as f64;
    let var = batch_stats.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

/// Covariance matrix of `dim`-variate rows with entrywise batch-means SEs.
#[derive(Clone, Debug)]
pub struct CovEstimate {
    pub dim: usize,
    pub n: usize,
    cov: Vec<f64>,
    se: Vec<f64>,
}

impl CovEstimate {
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.dim + j]
    }
    pub fn se(&self, i: usize, j: usize) -> f64 {
        self.se[i * self.dim + j]
    }
}

pub fn mc_cov(rows: &[f64], dim: usize) -> Result<CovEstimate> {
    if dim == 0 || rows.len() % dim != 0 {
        return Err(Error::usage("rows must be a multiple of dim"));
    }
    let n = rows.len() / dim;
    if n < 2 {
        return Err(Error::InsufficientData("mc_cov needs >= 2 rows".into()));
    }
    let mut mean = vec![0.0; dim];
    for row in rows.chunks_exact(dim) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let cov_of = |lo: usize, hi: usize| {
        let count = hi - lo;
        let mut local_mean = vec![0.0; dim];
        for row in rows[lo * dim..hi * dim].chunks_exact(dim) {
            for (m, x) in local_mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut local_mean {
            *m /= count as f64;
        }
        let mut c = vec![0.0; dim * dim];
        for row in rows[lo * dim..hi * dim].chunks_exact(dim) {
            for i in 0..dim {
                for j in 0..dim {
                    c[i * dim + j] += (row[i] - local_mean[i]) * (row[j] - local_mean[j]);
                }
            }
        }
        for v in &mut c {
            *v /= (count - 1) as f64;
        }
        c
    };
    let cov = {
        let mut c = vec![0.0; dim * dim];
        for row in rows.chunks_exact(dim) {
            for i in 0..dim {
                for j in 0..dim {
                    c[i * dim + j] += (row[i] - mean[i]) * (row[j] - mean[j]);
                }
            }
        }
        for v in &mut c {
            *v /= (n - 1) as f64;
        }
        c
    };
    let b = BATCHES.min(n / 2).max(2);
    let size = n.div_ceil(b);
    let mut per_batch: Vec<Vec<f64>> = Vec::new();
    let mut lo = 0;
    while lo < n {
        let hi = (lo + size).min(n);
        if hi - lo >= 2 {
            per_batch.push(cov_of(lo, hi));
        }
        lo = hi;
    }
    let mut se = vec![0.0; dim * dim];
    for k in 0..dim * dim {
        let stats: Vec<f64> = per_batch.iter().map(|c| c[k]).collect();
        se[k] = spread(&stats);
    }
    Ok(CovEstimate { dim, n, cov, se })
}

/// One-sample Kolmogorov-Smirnov test against a CDF; returns the statistic
/// and its asymptotic p-value.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("ks_test needs samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok((d, ks_p_value(d, n)))
}

/// Two-sample Kolmogorov-Smirnov test with asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("ks_two_sample needs samples".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n + m) as f64;
    Ok((d, ks_p_value(d, ne)))
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sqrt_n = effective_n.sqrt();
    kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

/// Chi-square goodness-of-fit test; returns the statistic and p-value.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::usage("observed/expected must have equal length >= 2"));
    }
    if expected.iter().any(|&e| e <= 0.0) {
        return Err(Error::parameter("expected counts must be positive"));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    let df = (observed.len() - 1) as f64;
    Ok((stat, reg_gamma_q(df / 2.0, stat / 2.0)))
}

/// Ordinary least squares on log-transformed data.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData("loglog_slope needs >= 3 points".into()));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::parameter("loglog_slope needs strictly positive points"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::parameter("x values are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            e * e
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(SlopeFit { slope, intercept, r2 })
}

/// Weighted least squares of y on the regressors (n ln n, n); returns the
/// n ln n coefficient and its standard error. The n regressor absorbs the
/// linear-in-n transient that the critical walks carry below the n ln n
/// leading term; on pure c n ln n data the fit recovers c exactly.
pub fn nlogn_slope(ns: &[f64], ys: &[f64], ses: &[f64]) -> Result<(f64, f64)> {
    if ns.len() != ys.len() || ns.len() != ses.len() || ns.len() < 3 {
        return Err(Error::InsufficientData("nlogn_slope needs >= 3 points".into()));
    }
    if ns.iter().any(|&n| n <= 1.0) || ses.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::parameter("nlogn_slope needs n > 1 and positive finite SEs"));
    }
    let (mut suu, mut suv, mut svv, mut bu, mut bv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&n, &y), &se) in ns.iter().zip(ys).zip(ses) {
        let (u, v, w) = (n * n.ln(), n, 1.0 / (se * se));
        suu += w * u * u;
        suv += w * u * v;
        svv += w * v * v;
        bu += w * u * y;
        bv += w * v * y;
    }
    let det = suu * svv - suv * suv;
    if det <= 0.0 {
        return Err(Error::parameter("degenerate regression grid"));
    }
    Ok(((bu * svv - bv * suv) / det, (svv / det).sqrt()))
}

/// CDF of Gamma(shape, rate) via the regularized incomplete gamma function.
pub fn gamma_cdf(shape: f64, rate: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        reg_gamma_p(shape, rate * x)
    }
}

/// How an estimate is compared against its target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ToleranceRule {
    /// |estimate - target| <= k * SE entrywise; SE must be positive and
    /// finite (a zero SE flags a degenerate sampler and fails).
    WithinSes(f64),
    /// Estimates are p-values; every one must exceed the threshold.
    PValueAbove(f64),
    /// |estimate - target| <= tol entrywise.
    AbsWithin(f64),
    /// |estimate - target| <= frac * |target| entrywise.
    RelativeWithin(f64),
}

impl ToleranceRule {
    pub fn passes(&self, estimate: &[f64], se: &[f64], target: &[f64]) -> bool {
        if estimate.len() != target.len() || estimate.len() != se.len() || estimate.is_empty() {
            return false;
        }
        match *self {
            ToleranceRule::WithinSes(k) => estimate.iter().zip(se).zip(target).all(
                |((&e, &s), &t)| s.is_finite() && s > 0.0 && (e - t).abs() <= k * s,
            ),
            ToleranceRule::PValueAbove(thr) => estimate.iter().all(|&p| p.is_finite() && p > thr),
            ToleranceRule::AbsWithin(tol) => estimate
                .iter()
                .zip(target)
                .all(|(&e, &t)| e.is_finite() && (e - t).abs() <= tol),
            ToleranceRule::RelativeWithin(frac) => estimate
                .iter()
                .zip(target)
                .all(|(&e, &t)| e.is_finite() && (e - t).abs() <= frac * t.abs()),
        }
    }
}

impl std::fmt::Display for ToleranceRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ToleranceRule::WithinSes(k) => write!(f, "|estimate-target| <= {k}*SE"),
            ToleranceRule::PValueAbove(t) => write!(f, "p-value > {t}"),
            ToleranceRule::AbsWithin(t) => write!(f, "|estimate-target| <= {t}"),
            ToleranceRule::RelativeWithin(t) => write!(f, "relative error <= {t}"),
        }
    }
}

/// One Monte Carlo verification record.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MCReport {
    pub name: String,
    pub estimate: Vec<f64>,
    pub se: Vec<f64>,
    pub target: Vec<f64>,
    pub pass: bool,
    pub seed: u64,
    pub replicas: u64,
    pub rule: String,
}

impl MCReport {
    pub fn new(
        name: impl Into<String>,
        estimate: Vec<f64>,
        se: Vec<f64>,
        target: Vec<f64>,
        rule: ToleranceRule,
        seed: u64,
        replicas: u64,
    ) -> MCReport {
        let pass = rule.passes(&estimate, &se, &target);
        MCReport {
            name: name.into(),
            estimate,
            se,
            target,
            pass,
            seed,
            replicas,
            rule: rule.to_string(),
        }
    }
}

/// Regresses Var(S_n) against n ln n (with an n-scale nuisance term) over a
/// grid for a critical parameter point and compares the n ln n coefficient
/// with the squared Brownian prefactor: p/(1-p) for ERW1, 2p^2/(1-p) for
/// ERW2, 4p^2/(1-p) for the SRS at alpha = 2.
///
/// Simulation routes per model, all coupled across checkpoints (one path
/// per replica read at every grid point):
/// - ERW1/ERW2 run their urn representations (equal in law to the walks,
///   O(1) per draw);
/// - the SRS at alpha = 2 uses the cluster representation: conditionally
///   on the cluster sizes S_n is centered Gaussian with variance
///   2 sum |c_i|^2, so Var(S_n) = 2 E[sum |c_i|^2] is estimated without
///   spin noise.
pub fn critical_variance_check(
    model: Model,
    p: f64,
    n_grid: &[usize],
    replicas: usize,
    seed: u64,
    threads: usize,
) -> Result<MCReport> {
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("critical_variance_check needs >= 3 ascending grid points"));
    }
    let b = match model {
        Model::Erw1 => 1.0 / p - 2.0,
        Model::Erw2 | Model::Srs => 1.0 - 2.0 * p,
    };
    if b < 0.0 {
        return Err(Error::regime(format!("no critical b >= 0 exists for {model:?} at p = {p}")));
    }
    let alpha = matches!(model, Model::Srs).then_some(2.0);
    let report = theory::regime(model, b, p, alpha)?;
    if report.regime != theory::Regime::Critical {
        return Err(Error::regime(format!("({b}, {p}) is not critical for {model:?}")));
    }

    let k = n_grid.len();
    let mut ns = Vec::with_capacity(k);
    let mut vars = Vec::with_capacity(k);
    let mut ses = Vec::with_capacity(k);
    match model {
        Model::Erw1 | Model::Erw2 => {
            let urn_model = match model {
                Model::Erw1 => UrnModel::ReinforcedErw,
                _ => UrnModel::StrongErw,
            };
            let rule = urn::replacement_rule(urn_model, b, p)?;
            let rows = par_map_replicas(replicas, threads, |r| {
                let mut rng = replica_rng(seed, r as u64);
                let states = urn::simulate_urn_at(&rule, n_grid, &mut rng)
                    .expect("validated checkpoints");
                states
                    .iter()
                    .zip(n_grid)
                    .map(|(s, &n)| urn::position_from_urn(urn_model, b, s.masses, n))
                    .collect::<Vec<f64>>()
            });
            for (gi, &n) in n_grid.iter().enumerate() {
                let column: Vec<f64> = rows.iter().map(|row| row[gi]).collect();
                let m = mc_moments(&column)?;
                ns.push(n as f64);
                vars.push(m.variance);
                ses.push(m.se_variance);
            }
        }
        Model::Srs => {
            let rows = par_map_replicas(replicas, threads, |r| {
                let mut rng = replica_rng(seed, r as u64);
                crate::patree::percolated_sum_sq_at(b, p, n_grid, &mut rng)
                    .expect("validated checkpoints")
            });
            for (gi, &n) in n_grid.iter().enumerate() {
                let column: Vec<f64> = rows.iter().map(|row| row[gi]).collect();
                let m = mc_moments(&column)?;
                ns.push(n as f64);
                vars.push(2.0 * m.mean);
                ses.push(2.0 * m.se_mean);
            }
        }
    }
    let (slope, slope_se) = nlogn_slope(&ns, &vars, &ses)?;
    let target = theory::critical_prefactor(model, p)?.powi(2);
    Ok(MCReport::new(
        format!("critical-variance-{model:?}").to_lowercase(),
        vec![slope],
        vec![slope_se],
        vec![target],
        ToleranceRule::RelativeWithin(0.15),
        seed,
        replicas as u64,
    ))
}
