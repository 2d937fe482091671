//! Ready-made systems: Ornstein–Uhlenbeck, bistable Duffing, Verhulst,
//! the energy process of a quasi-non-integrable Hamiltonian system, and
//! polynomial coefficients for custom models.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sde::{ScalarFn, SystemSpec};

fn constant(c: f64) -> ScalarFn {
    Arc::new(move |_| c)
}

/// `f = −αx`, `g = σ_W`, `h = σ_B`.
pub fn ornstein_uhlenbeck(alpha: f64, sigma_w: f64, sigma_b: f64) -> SystemSpec {
    SystemSpec {
        label: "ou".into(),
        f: Arc::new(move |x| -alpha * x),
        f_prime: constant(-alpha),
        g: constant(sigma_w),
        g_prime: constant(0.0),
        g_second: constant(0.0),
        h: constant(sigma_b),
        h_prime: constant(0.0),
        h_second: constant(0.0),
    }
}

/// `f = αx + βx³`, `g = σ_W`, `h = σ_B`.
pub fn duffing(alpha: f64, beta: f64, sigma_w: f64, sigma_b: f64) -> SystemSpec {
    SystemSpec {
        label: "duffing".into(),
        f: Arc::new(move |x| alpha * x + beta * x * x * x),
        f_prime: Arc::new(move |x| alpha + 3.0 * beta * x * x),
        g: constant(sigma_w),
        g_prime: constant(0.0),
        g_second: constant(0.0),
        h: constant(sigma_b),
        h_prime: constant(0.0),
        h_second: constant(0.0),
    }
}

/// `f = αx − βx²`, `g = σ_W x`, `h = σ_B x`, defined for `x > 0`.
pub fn verhulst(alpha: f64, beta: f64, sigma_w: f64, sigma_b: f64) -> SystemSpec {
    SystemSpec {
        label: "verhulst".into(),
        f: Arc::new(move |x| alpha * x - beta * x * x),
        f_prime: Arc::new(move |x| alpha - 2.0 * beta * x),
        g: Arc::new(move |x| sigma_w * x),
        g_prime: constant(sigma_w),
        g_second: constant(0.0),
        h: Arc::new(move |x| sigma_b * x),
        h_prime: constant(sigma_b),
        h_second: constant(0.0),
    }
}

/// Alternative Verhulst memory exponent rate `−2βx`.
pub fn verhulst_printed_rate(beta: f64) -> ScalarFn {
    Arc::new(move |x| -2.0 * beta * x)
}

/// Averaged energy process `dH = m(H) dt + σ(H) ∘dB^H` of a two-DOF
/// quasi-non-integrable Hamiltonian system.
///
/// With `S = √(1+4λH)`, `R = (S−1)/λ` and `Q = H − R/4 + λR²/12`:
/// `m = −2γQ`, `σ = √(2(D₁+D₂)Q)`. Defined for `H ≥ 0`; negative energies
/// evaluate to NaN.
pub fn hamiltonian(lambda: f64, gamma: f64, d1: f64, d2: f64) -> Result<SystemSpec> {
    let d = d1 + d2;
    if !(d > 0.0) {
        return Err(Error::domain(format!("D1 + D2 must be positive, got {d}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    let parts = Arc::new(HamiltonianParts { lambda, d });
    let q = {
        let p = parts.clone();
        move |e: f64| p.q(e)
    };
    let dq = {
        let p = parts.clone();
        move |e: f64| p.dq(e)
    };
    let sigma = {
        let p = parts.clone();
        move |e: f64| p.sigma(e)
    };
    let dsigma = {
        let p = parts.clone();
        move |e: f64| p.dsigma(e)
    };
    let d2sigma = {
        let p = parts.clone();
        move |e: f64| p.d2sigma(e)
    };
    let dq_for_f = dq.clone();
    Ok(SystemSpec {
        label: "hamiltonian".into(),
        f: Arc::new(move |e| -2.0 * gamma * q(e)),
        f_prime: Arc::new(move |e| -2.0 * gamma * dq_for_f(e)),
        g: constant(0.0),
        g_prime: constant(0.0),
        g_second: constant(0.0),
        h: Arc::new(sigma),
        h_prime: Arc::new(dsigma),
        h_second: Arc::new(d2sigma),
    })
}

struct HamiltonianParts {
    lambda: f64,
    d: f64,
}

impl HamiltonianParts {
    fn s(&self, e: f64) -> f64 {
        (1.0 + 4.0 * self.lambda * e).sqrt()
    }

    fn q(&self, e: f64) -> f64 {
        let r = (self.s(e) - 1.0) / self.lambda;
        e - 0.25 * r + self.lambda * r * r / 12.0
    }

    /// `Q' = 1 − R'/4 + λRR'/6` with `R' = 2/S`, simplifying to `4/3 − 5/(6S)`.
    fn dq(&self, e: f64) -> f64 {
        4.0 / 3.0 - 5.0 / (6.0 * self.s(e))
    }

    fn d2q(&self, e: f64) -> f64 {
        let s = self.s(e);
        5.0 * self.lambda / (3.0 * s * s * s)
    }

    fn sigma(&self, e: f64) -> f64 {
        if e < 0.0 {
            return f64::NAN;
        }
        (2.0 * self.d * self.q(e)).sqrt()
    }

    fn dsigma(&self, e: f64) -> f64 {
        self.d * self.dq(e) / self.sigma(e)
    }

    fn d2sigma(&self, e: f64) -> f64 {
        let s = self.sigma(e);
        let ds = self.dsigma(e);
        (self.d * self.d2q(e) - ds * ds) / s
    }
}

/// Custom model with polynomial coefficients (`coeffs[k]` multiplies `x^k`).
pub fn polynomial(f: &[f64], g: &[f64], h: &[f64]) -> SystemSpec {
    let poly = |c: &[f64]| -> ScalarFn {
        let c = c.to_vec();
        Arc::new(move |x| c.iter().rev().fold(0.0, |acc, &a| acc * x + a))
    };
    let deriv = |c: &[f64]| -> Vec<f64> { c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect() };
    let (df, dg, dh) = (deriv(f), deriv(g), deriv(h));
    SystemSpec {
        label: "custom".into(),
        f: poly(f),
        f_prime: poly(&df),
        g: poly(g),
        g_prime: poly(&dg),
        g_second: poly(&deriv(&dg)),
        h: poly(h),
        h_prime: poly(&dh),
        h_second: poly(&deriv(&dh)),
    }
}
