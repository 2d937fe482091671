//! Exact Gaussian law of the fractional Ornstein–Uhlenbeck process
//! `dX = −αX dt + σ_W dW + σ_B dB^H`, `X_0 = x_0`.

use crate::error::{Error, Result};
use crate::fgn::HurstParam;
use crate::quad::power_weighted_integral_with_estimate;

/// Relative accuracy demanded of the fractional variance quadrature.
pub const VARIANCE_RTOL: f64 = 1e-7;
const START_PANELS: usize = 16;
const MAX_PANELS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub alpha: f64,
    pub sigma_w: f64,
    pub sigma_b: f64,
    pub x0: f64,
    pub hurst: HurstParam,
}

impl OuParams {
    pub fn new(alpha: f64, sigma_w: f64, sigma_b: f64, x0: f64, hurst: HurstParam) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(sigma_w >= 0.0 && sigma_b >= 0.0) || (sigma_w == 0.0 && sigma_b == 0.0) {
            return Err(Error::domain("noise intensities must be >= 0 and not both zero"));
        }
        Ok(Self {
            alpha,
            sigma_w,
            sigma_b,
            x0,
            hurst,
        })
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

/// `x₀ e^{−αt}`.
pub fn ou_mean(p: &OuParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(p.x0 * (-p.alpha * t).exp())
}

/// White-noise part of the variance, `σ_W²(1 − e^{−2αt})/(2α)`.
pub fn ou_variance_white(p: &OuParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(p.sigma_w * p.sigma_w * (-(-2.0 * p.alpha * t).exp_m1()) / (2.0 * p.alpha))
}

/// Fractional part `σ_B² ∫∫ e^{−α(t−u)} e^{−α(t−v)} φ(u,v) du dv`.
///
/// Folding the square onto `r = |u − v|` leaves
/// `(σ_B²/α) ∫_0^t φ(r) e^{−αr}(1 − e^{−2α(t−r)}) dr`, integrated with the
/// power weight handled exactly and panels doubled until the estimate settles.
pub fn ou_variance_fractional(p: &OuParams, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 || p.sigma_b == 0.0 {
        return Ok(0.0);
    }
    let h = p.hurst.value();
    let beta = p.hurst.memory_exponent();
    let alpha = p.alpha;
    let scale = p.sigma_b * p.sigma_b * h * beta / alpha;
    let integrand = |r: f64| (-alpha * r).exp() * (-(-2.0 * alpha * (t - r)).exp_m1());
    let mut panels = START_PANELS;
    loop {
        let (value, est) = power_weighted_integral_with_estimate(beta, t, panels, integrand);
        if est <= VARIANCE_RTOL * value.abs() {
            return Ok(scale * value);
        }
        if panels >= MAX_PANELS {
            return Err(Error::Accuracy {
                achieved: est / value.abs(),
                target: VARIANCE_RTOL,
            });
        }
        panels *= 2;
    }
}

/// Total variance `σ_x²(t)`.
pub fn ou_variance(p: &OuParams, t: f64) -> Result<f64> {
    Ok(ou_variance_white(p, t)? + ou_variance_fractional(p, t)?)
}

/// Gaussian density with mean [`ou_mean`] and variance [`ou_variance`].
pub fn ou_pdf(p: &OuParams, x: f64, t: f64) -> Result<f64> {
    let var = ou_variance(p, t)?;
    if !(var > 0.0) {
        return Err(Error::domain(format!("variance {var} at t = {t} is not positive")));
    }
    let m = ou_mean(p, t)?;
    Ok((-(x - m) * (x - m) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
}

/// [`ou_pdf`] at every node, computing the variance once.
pub fn ou_pdf_nodes(p: &OuParams, nodes: &[f64], t: f64) -> Result<Vec<f64>> {
    let var = ou_variance(p, t)?;
    if !(var > 0.0) {
        return Err(Error::domain(format!("variance {var} at t = {t} is not positive")));
    }
    let m = ou_mean(p, t)?;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    Ok(nodes
        .iter()
        .map(|x| norm * (-(x - m) * (x - m) / (2.0 * var)).exp())
        .collect())
}
