//! Closed-form constants, thresholds, covariance kernels, and moment
//! formulas for both reinforced elephant walks and the strongly reinforced
//! shark swim. Pure deterministic functions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma, ln_beta};

/// Which limit theorem family a parameter triple refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Reinforced ERW: weights update on memory times only.
    Erw1,
    /// Strongly reinforced ERW: weights always update.
    Erw2,
    /// Strongly reinforced shark swim (stable steps).
    Srs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Sub,
    Critical,
    Super,
}

/// Classified regime plus the theoretical constants for a parameter triple.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegimeReport {
    pub model: Model,
    pub regime: Regime,
    /// Critical value the comparison quantity is measured against
    /// (p-threshold for the ERWs, 1 for alpha*kappa in the SRS).
    pub threshold: f64,
    pub kappa: f64,
    pub extras: BTreeMap<String, f64>,
}

const CRITICAL_TOL: f64 = 1e-12;

pub(crate) fn validate_bp(b: f64, p: f64) -> Result<()> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::parameter(format!("b must be >= 0, got {b}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::parameter(format!("p must be in (0,1), got {p}")));
    }
    Ok(())
}

/// Scaling exponent kappa: (b+1)p/(bp+1) for the reinforced ERW,
/// (b+p)/(b+1) for both strong models.
pub fn kappa(model: Model, b: f64, p: f64) -> f64 {
    match model {
        Model::Erw1 => (b + 1.0) * p / (b * p + 1.0),
        Model::Erw2 | Model::Srs => (b + p) / (b + 1.0),
    }
}

/// Classifies the regime of a parameter triple. `alpha` is required for
/// `Model::Srs` (comparison alpha*kappa vs 1) and ignored otherwise.
pub fn regime(model: Model, b: f64, p: f64, alpha: Option<f64>) -> Result<RegimeReport> {
    validate_bp(b, p)?;
    let kap = kappa(model, b, p);
    let mut extras = BTreeMap::new();
    let (value, threshold) = match model {
        Model::Erw1 => (p, 1.0 / (2.0 + b)),
        Model::Erw2 => (p, (1.0 - b) / 2.0),
        Model::Srs => {
            let alpha = alpha
                .ok_or_else(|| Error::parameter("alpha is required for the SRS regime"))?;
            if !(alpha > 0.0 && alpha <= 2.0) {
                return Err(Error::parameter(format!("alpha must be in (0,2], got {alpha}")));
            }
            extras.insert("alpha".into(), alpha);
            extras.insert("alpha_kappa".into(), alpha * kap);
            (alpha * kap, 1.0)
        }
    };
    let regime = if (value - threshold).abs() <= CRITICAL_TOL {
        Regime::Critical
    } else if value < threshold {
        Regime::Sub
    } else {
        Regime::Super
    };
    let scaling = match (model, regime) {
        (Model::Srs, Regime::Sub | Regime::Critical) => 1.0 / alpha.unwrap_or(2.0),
        (_, Regime::Sub | Regime::Critical) => 0.5,
        (_, Regime::Super) => kap,
    };
    extras.insert("scaling_exponent".into(), scaling);
    if regime == Regime::Critical {
        match model {
            Model::Erw1 | Model::Erw2 => {
                extras.insert("critical_prefactor".into(), critical_prefactor(model, p)?);
            }
            Model::Srs => {
                if let Some(a) = alpha {
                    if (a - 2.0).abs() <= CRITICAL_TOL {
                        extras.insert("critical_prefactor".into(), critical_prefactor(model, p)?);
                    }
                }
            }
        }
    }
    Ok(RegimeReport { model, regime, threshold, kappa: kap, extras })
}

/// Subcritical limit covariance E[W_s W_t] of the reinforced ERW,
/// for 0 < s <= t and p below 1/(2+b):
/// (bp+1)/((1-(2+b)p)(b+1)) s (t/s)^kappa + (b/(b+1)) s.
///
/// Both coefficients come from solving the walk's second-moment recursion
/// (tracking E[S^2], E[SM], E[M^2] for the weighted increment sum M) in
/// closed form; the weighted cross moment E[SM] grows like
/// ((bp+1)/(1-(2+b)p)) n and the stationary remainder is b/(b+1) per unit
/// time. At b = 0 this recovers s (t/s)^p / (1-2p).
pub fn cov_erw1(s: f64, t: f64, b: f64, p: f64) -> Result<f64> {
    validate_bp(b, p)?;
    check_times(s, t)?;
    if p >= 1.0 / (2.0 + b) - CRITICAL_TOL {
        return Err(Error::regime(format!(
            "cov_erw1 requires p < 1/(2+b) = {}, got p = {p}",
            1.0 / (2.0 + b)
        )));
    }
    let kap = kappa(Model::Erw1, b, p);
    let lead = (b * p + 1.0) / ((1.0 - (2.0 + b) * p) * (b + 1.0));
    let second = b / (b + 1.0);
    Ok(lead * s * (t / s).powf(kap) + second * s)
}

/// Subcritical limit covariance E[W_s W_t] of the strongly reinforced ERW,
/// for 0 < s <= t and p below (1-b)/2.
pub fn cov_erw2(s: f64, t: f64, b: f64, p: f64) -> Result<f64> {
    validate_bp(b, p)?;
    check_times(s, t)?;
    if p >= (1.0 - b) / 2.0 - CRITICAL_TOL {
        return Err(Error::regime(format!(
            "cov_erw2 requires p < (1-b)/2 = {}, got p = {p}",
            (1.0 - b) / 2.0
        )));
    }
    let kap = kappa(Model::Erw2, b, p);
    let lead = (1.0 - b * b) * p / ((1.0 - b - 2.0 * p) * (b + p));
    let second = (1.0 + p) * b / (b + p);
    Ok(lead * s * (t / s).powf(kap) + second * s)
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(s > 0.0 && s <= t) {
        return Err(Error::parameter(format!("need 0 < s <= t, got s = {s}, t = {t}")));
    }
    Ok(())
}

/// Brownian scaling constant of the critical regime: sqrt(p/(1-p)) for the
/// reinforced ERW, sqrt(2p^2/(1-p)) for the strong ERW, and (alpha = 2 case)
/// sqrt(4p^2/(1-p)) for the strong SRS.
pub fn critical_prefactor(model: Model, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::parameter(format!("p must be in (0,1), got {p}")));
    }
    Ok(match model {
        Model::Erw1 => (p / (1.0 - p)).sqrt(),
        Model::Erw2 => (2.0 * p * p / (1.0 - p)).sqrt(),
        Model::Srs => (4.0 * p * p / (1.0 - p)).sqrt(),
    })
}

/// First and second moment of the cluster birth process Y_1^(p) at time
/// t >= 0 after its birth.
///
/// The second moment solves m2' = 2(b+p) m2 + (b^2 + 2bp + p) m1 with
/// m1(t) = e^{(b+p)t} and m2(0) = 1, giving
/// m2(t) = c (e^{2(b+p)t} - e^{(b+p)t}) + e^{(b+p)t},
/// c = (b+1)(b+2p)/(b+p). At t = 0 this is exactly (1, 1).
pub fn branching_moments(t: f64, b: f64, p: f64) -> Result<(f64, f64)> {
    validate_bp(b, p)?;
    if t < 0.0 {
        return Err(Error::parameter(format!("t must be >= 0, got {t}")));
    }
    let lambda = b + p;
    let m1 = (lambda * t).exp();
    let c = (b + 1.0) * (b + 2.0 * p) / lambda;
    let m2 = c * ((2.0 * lambda * t).exp() - m1) + m1;
    Ok((m1, m2))
}

/// Constants of the martingale limits W (whole tree) and W_i (clusters).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WConstants {
    /// Gamma shape of W.
    pub gamma_shape: f64,
    /// Gamma rate of W.
    pub gamma_rate: f64,
    pub w1_mean: f64,
    pub w1_second_moment: f64,
}

/// W is Gamma(1/(b+1), 1/(b+1)); W_i has mean 1 and second moment
/// (b+1)(b+2p)/(b+p).
pub fn w_constants(b: f64, p: f64) -> Result<WConstants> {
    validate_bp(b, p)?;
    Ok(WConstants {
        gamma_shape: 1.0 / (b + 1.0),
        gamma_rate: 1.0 / (b + 1.0),
        w1_mean: 1.0,
        w1_second_moment: (b + 1.0) * (b + 2.0 * p) / (b + p),
    })
}

/// First and second moments of the root-cluster limits Zhat_1 and
/// Z_1 = (p/(b+p)) Zhat_1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Z1Moments {
    pub zhat1_mean: f64,
    pub zhat1_second_moment: f64,
    pub z1_mean: f64,
    pub z1_second_moment: f64,
}

pub fn z1_moments(b: f64, p: f64) -> Result<Z1Moments> {
    validate_bp(b, p)?;
    let inv = 1.0 / (b + 1.0);
    let zhat1_mean = gamma(inv) / gamma(1.0 + p * inv);
    let zhat1_second_moment =
        (b + 1.0) * (b + 1.0) / (b + p) * gamma(inv) / gamma((b + 2.0 * p) * inv);
    let scale = p / (b + p);
    Ok(Z1Moments {
        zhat1_mean,
        zhat1_second_moment,
        z1_mean: scale * zhat1_mean,
        z1_second_moment: scale * scale * zhat1_second_moment,
    })
}

/// Deterministic birth-time bound offsets (t_minus, t_plus) for cluster i
/// in an n-node tree. t_plus is +infinity at i = 1 (its log diverges).
/// t_minus may be negative; callers reading a size process clamp via the
/// convention that sizes are 0 before birth.
pub fn birth_time_bounds(n: usize, i: usize, b: f64, p: f64, eps: f64) -> Result<(f64, f64)> {
    validate_bp(b, p)?;
    if i == 0 || i > n {
        return Err(Error::parameter(format!("need 1 <= i <= n, got i = {i}, n = {n}")));
    }
    if eps < 0.0 {
        return Err(Error::parameter(format!("eps must be >= 0, got {eps}")));
    }
    let ln_n = (n as f64).ln();
    let ln_q = (1.0 - p).ln();
    let t_minus = (ln_n - ((i + 1) as f64).ln() + ln_q - eps) / (b + 1.0);
    let t_plus = if i == 1 {
        f64::INFINITY
    } else {
        (ln_n - ((i - 1) as f64).ln() + ln_q + eps) / (b + 1.0)
    };
    Ok((t_minus, t_plus))
}

/// q-th moment of Beta(1/(b+1), i-1), with the convention Beta(r, 0) = 1
/// (so the value is 1 for i = 1).
pub fn beta_moment(i: usize, b: f64, q: f64) -> Result<f64> {
    if i == 0 {
        return Err(Error::parameter("i must be >= 1"));
    }
    if q < 0.0 || b < 0.0 {
        return Err(Error::parameter("need q >= 0 and b >= 0"));
    }
    if i == 1 || q == 0.0 {
        return Ok(1.0);
    }
    let r = 1.0 / (b + 1.0);
    let s = (i - 1) as f64;
    Ok((ln_beta(r + q, s) - ln_beta(r, s)).exp())
}

/// Whether sum_i E[Z_i^alpha] converges, which holds iff alpha*kappa > 1.
pub fn zi_alpha_moment_summable(alpha: f64, b: f64, p: f64) -> Result<bool> {
    validate_bp(b, p)?;
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::parameter(format!("alpha must be in (0,2], got {alpha}")));
    }
    Ok(alpha * kappa(Model::Srs, b, p) > 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_reference_points() {
        // ERW1 at b = 0: threshold 1/2, kappa = p
        let r = regime(Model::Erw1, 0.0, 0.3, None).unwrap();
        assert!((r.threshold - 0.5).abs() < 1e-15);
        assert!((r.kappa - 0.3).abs() < 1e-15);
        assert_eq!(r.regime, Regime::Sub);

        // ERW2 at b = 1: supercritical for every p
        for p in [0.05, 0.3, 0.6, 0.95] {
            let r = regime(Model::Erw2, 1.0, p, None).unwrap();
            assert_eq!(r.regime, Regime::Super, "p = {p}");
        }

        // SRS at b = 0, p = 0.5, alpha = 2: alpha*kappa = 1, critical
        let r = regime(Model::Srs, 0.0, 0.5, Some(2.0)).unwrap();
        assert_eq!(r.regime, Regime::Critical);
        assert!((r.kappa - 0.5).abs() < 1e-15);

        assert!(regime(Model::Srs, 0.0, 0.5, None).is_err());
    }

    #[test]
    fn thresholds_are_critical_on_the_nose() {
        for b in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let p = 1.0 / (2.0 + b);
            assert_eq!(regime(Model::Erw1, b, p, None).unwrap().regime, Regime::Critical);
        }
        for b in [0.0, 0.3, 0.6, 0.9] {
            let p = (1.0 - b) / 2.0;
            assert_eq!(regime(Model::Erw2, b, p, None).unwrap().regime, Regime::Critical);
        }
        for (b, p) in [(0.5, 0.25), (1.0, 0.2)] {
            let alpha = 1.0 / kappa(Model::Srs, b, p);
            assert_eq!(
                regime(Model::Srs, b, p, Some(alpha)).unwrap().regime,
                Regime::Critical
            );
        }
    }

    #[test]
    fn cov_b0_closed_form_and_cross_model_equality() {
        for p in [0.1, 0.2, 0.35, 0.49] {
            for (s, t) in [(0.5, 0.5), (0.5, 1.0), (1.0, 1.0), (0.25, 2.0)] {
                let c1 = cov_erw1(s, t, 0.0, p).unwrap();
                let c2 = cov_erw2(s, t, 0.0, p).unwrap();
                let reference = s * (t / s).powf(p) / (1.0 - 2.0 * p);
                assert!((c1 - reference).abs() < 1e-12);
                assert!((c1 - c2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cov_domain_errors() {
        assert!(matches!(cov_erw1(1.0, 0.5, 0.0, 0.2), Err(Error::Parameter(_))));
        assert!(matches!(cov_erw1(0.5, 1.0, 1.0, 0.4), Err(Error::Regime(_))));
        assert!(matches!(cov_erw2(0.5, 1.0, 0.4, 0.31), Err(Error::Regime(_))));
    }

    // plain Cholesky; fails on a pivot below -1e-9
    fn cholesky_psd(m: &[Vec<f64>]) -> bool {
        let k = m.len();
        let mut l = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..=i {
                let mut s = m[i][j];
                for t in 0..j {
                    s -= l[i][t] * l[j][t];
                }
                if i == j {
                    if s < -1e-9 {
                        return false;
                    }
                    l[i][j] = s.max(0.0).sqrt();
                } else if l[j][j] > 0.0 {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        true
    }

    #[test]
    fn covariances_are_positive_semidefinite() {
        use rand::Rng;
        let mut rng = crate::rng::replica_rng(42, 0);
        for trial in 0..20 {
            let k = 2 + (trial % 7);
            let mut grid: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..4.0)).collect();
            grid.sort_by(f64::total_cmp);
            let (b1, p1) = (1.0, 0.2);
            let (b2, p2) = (0.4, 0.2);
            let mut m1 = vec![vec![0.0; k]; k];
            let mut m2 = vec![vec![0.0; k]; k];
            for i in 0..k {
                for j in 0..k {
                    let (s, t) = (grid[i].min(grid[j]), grid[i].max(grid[j]));
                    m1[i][j] = cov_erw1(s, t, b1, p1).unwrap();
                    m2[i][j] = cov_erw2(s, t, b2, p2).unwrap();
                }
            }
            assert!(cholesky_psd(&m1), "erw1 grid {grid:?}");
            assert!(cholesky_psd(&m2), "erw2 grid {grid:?}");
        }
    }

    #[test]
    fn critical_prefactor_values() {
        assert!((critical_prefactor(Model::Erw1, 0.25).unwrap() - (1.0_f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((critical_prefactor(Model::Erw2, 0.25).unwrap() - (1.0_f64 / 6.0).sqrt()).abs() < 1e-15);
        // critical p of ERW2 solves p = (1-b)/2
        let b = 0.5_f64;
        let p = (1.0 - b) / 2.0;
        assert_eq!(regime(Model::Erw2, b, p, None).unwrap().regime, Regime::Critical);
    }

    #[test]
    fn branching_moments_initial_value_and_limits() {
        for (b, p) in [(0.0, 0.5), (1.0, 0.5), (0.7, 0.2)] {
            let (m1, m2) = branching_moments(0.0, b, p).unwrap();
            assert_eq!((m1, m2), (1.0, 1.0));
            // e^{-2(b+p)t} m2(t) -> E[W_1^2]; the residual is (c-1) e^{-(b+p)t}
            let w = w_constants(b, p).unwrap();
            let t = 25.0 / (b + p);
            let (_, m2) = branching_moments(t, b, p).unwrap();
            let scaled = m2 * (-2.0 * (b + p) * t).exp();
            assert!((scaled - w.w1_second_moment).abs() < 1e-8, "b={b} p={p}");
        }
        assert!((w_constants(0.0, 0.3).unwrap().w1_second_moment - 2.0).abs() < 1e-15);
        assert!((w_constants(1.0, 0.5).unwrap().w1_second_moment - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn branching_second_moment_solves_forward_equation() {
        // independent oracle: central finite differences on m2 must satisfy
        // m2' = 2(b+p) m2 + (b^2 + 2bp + p) m1
        let (b, p) = (0.8, 0.35);
        let lambda = b + p;
        let mu = b * b + 2.0 * b * p + p;
        let h = 1e-6;
        for t in [0.3, 1.0, 2.5] {
            let (m1, m2) = branching_moments(t, b, p).unwrap();
            let (_, up) = branching_moments(t + h, b, p).unwrap();
            let (_, dn) = branching_moments(t - h, b, p).unwrap();
            let deriv = (up - dn) / (2.0 * h);
            let rhs = 2.0 * lambda * m2 + mu * m1;
            assert!((deriv - rhs).abs() < 1e-3 * rhs.abs(), "t = {t}");
        }
    }

    #[test]
    fn z1_moment_formulas_at_b0() {
        for p in [0.2, 0.5, 0.8] {
            let z = z1_moments(0.0, p).unwrap();
            assert!((z.zhat1_mean - 1.0 / gamma(1.0 + p)).abs() < 1e-12);
            assert!((z.zhat1_second_moment - 1.0 / (p * gamma(2.0 * p))).abs() < 1e-12);
            // Z1 = Zhat1 at b = 0
            assert!((z.z1_mean - z.zhat1_mean).abs() < 1e-12);
            assert!(z.z1_mean > 0.0);
        }
    }

    #[test]
    fn z1_moments_satisfy_jensen() {
        for b in [0.0, 0.5, 1.0, 3.0] {
            for p in [0.1, 0.5, 0.9] {
                let z = z1_moments(b, p).unwrap();
                assert!(z.zhat1_second_moment >= z.zhat1_mean * z.zhat1_mean - 1e-12);
                assert!(z.z1_second_moment >= z.z1_mean * z.z1_mean - 1e-12);
            }
        }
    }

    #[test]
    fn birth_time_bound_values() {
        let (tm, tp) = birth_time_bounds(10_000, 100, 0.0, 0.5, 0.0).unwrap();
        assert!((tp - (10_000.0_f64 * 0.5 / 99.0).ln()).abs() < 1e-12);
        assert!((tm - (10_000.0_f64 * 0.5 / 101.0).ln()).abs() < 1e-12);

        // gap formula and shrinkage in i
        for (i, eps) in [(5usize, 0.1), (50, 0.01), (5000, 0.0)] {
            let (tm, tp) = birth_time_bounds(100_000, i, 0.7, 0.3, eps).unwrap();
            let gap = (((i + 1) as f64 / (i - 1) as f64).ln() + 2.0 * eps) / 1.7;
            assert!((tp - tm - gap).abs() < 1e-12);
        }

        // i = n at b = 0: t_minus = ln(n(1-p)/(n+1)) < 0
        let n = 1000;
        let (tm, _) = birth_time_bounds(n, n, 0.0, 0.5, 0.0).unwrap();
        assert!((tm - (n as f64 * 0.5 / (n as f64 + 1.0)).ln()).abs() < 1e-12);
        assert!(tm < 0.0);

        // i = 1 has an infinite upper bound
        let (_, tp) = birth_time_bounds(100, 1, 1.0, 0.5, 0.0).unwrap();
        assert!(tp.is_infinite());
        assert!(birth_time_bounds(10, 0, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn beta_moment_values_and_monotonicity() {
        for q in [0.5, 1.0, 2.0] {
            assert_eq!(beta_moment(1, 1.0, q).unwrap(), 1.0);
        }
        assert!((beta_moment(2, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        // Beta(1,2): E[x^2] = 1/6
        assert!((beta_moment(3, 0.0, 2.0).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        for b in [0.0, 1.0, 2.5] {
            for q in [0.2, 1.0, 3.0] {
                let mut last = f64::INFINITY;
                for i in 1..40 {
                    let m = beta_moment(i, b, q).unwrap();
                    assert!(m <= last + 1e-14, "i = {i} b = {b} q = {q}");
                    last = m;
                }
            }
        }
    }

    #[test]
    fn summability_criterion() {
        assert!(zi_alpha_moment_summable(2.0, 1.0, 0.5).unwrap()); // alpha*kappa = 1.5
        assert!(!zi_alpha_moment_summable(1.0, 1.0, 0.5).unwrap()); // kappa < 1 always
        assert!(!zi_alpha_moment_summable(2.0, 0.0, 0.5).unwrap()); // exactly 1 is not summable
    }
}
