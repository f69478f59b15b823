//! Sampling of d-dimensional isotropic alpha-stable vectors with
//! characteristic function exp(-||theta||^alpha), plus empirical
//! characteristic-function estimation.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Parameters of an isotropic stable law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableParams {
    alpha: f64,
    dim: usize,
}

impl StableParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::parameter(format!("alpha must be in (0,2], got {alpha}")));
        }
        if dim == 0 {
            return Err(Error::parameter("dim must be >= 1"));
        }
        Ok(StableParams { alpha, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// One-sided stable variate with Laplace transform exp(-lambda^index),
/// `index` in (0,1), via the Kanter transform of a uniform and an
/// exponential variate.
pub fn sample_positive_stable<R: Rng + ?Sized>(index: f64, rng: &mut R) -> Result<f64> {
    if !(index > 0.0 && index < 1.0) {
        return Err(Error::parameter(format!("one-sided stable index must be in (0,1), got {index}")));
    }
    Ok(positive_stable_unchecked(index, rng))
}

fn positive_stable_unchecked<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> f64 {
    let theta = std::f64::consts::PI * open_unit(rng);
    let exp = standard_exponential(rng);
    let ratio = (1.0 - rho) / rho;
    (rho * theta).sin() * ((1.0 - rho) * theta).sin().powf(ratio)
        / (theta.sin().powf(1.0 / rho) * exp.powf(ratio))
}

// uniform on the open interval (0,1)
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

// strictly positive Exp(1)
fn standard_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        let e = -(1.0 - u).ln();
        if e > 0.0 {
            return e;
        }
    }
}

/// Isotropic stable vector with E[exp(i<theta,X>)] = exp(-||theta||^alpha).
///
/// For alpha < 2 this uses the sub-Gaussian representation
/// X = sqrt(2 A) G with A one-sided (alpha/2)-stable; alpha == 2 is the
/// exact Gaussian branch X = sqrt(2) G.
pub fn sample_isotropic_stable<R: Rng + ?Sized>(params: StableParams, rng: &mut R) -> Vec<f64> {
    let scale = if params.alpha == 2.0 {
        std::f64::consts::SQRT_2
    } else {
        let a = positive_stable_unchecked(params.alpha / 2.0, rng);
        (2.0 * a).sqrt()
    };
    (0..params.dim)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            scale * g
        })
        .collect()
}

/// Empirical characteristic function of flat `samples` (row-major, `dim`
/// coordinates per observation) at `theta`, with its 1/sqrt(N) standard
/// error.
pub fn empirical_cf(samples: &[f64], dim: usize, theta: &[f64]) -> Result<(Complex64, f64)> {
    if dim == 0 || theta.len() != dim {
        return Err(Error::usage("theta dimension must match sample dimension"));
    }
    if samples.is_empty() || samples.len() % dim != 0 {
        return Err(Error::usage("samples must be a nonempty multiple of dim"));
    }
    let n = samples.len() / dim;
    let mut sum = Complex64::new(0.0, 0.0);
    for row in samples.chunks_exact(dim) {
        let dot: f64 = row.iter().zip(theta).map(|(x, t)| x * t).sum();
        sum += Complex64::new(0.0, dot).exp();
    }
    Ok((sum / n as f64, 1.0 / (n as f64).sqrt()))
}
