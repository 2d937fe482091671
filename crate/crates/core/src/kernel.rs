//! Memory kernel machinery.
//!
//! The fractional channel enters the Fokker–Planck coefficients through
//! `Ψ(x,t) = E[∫_0^t exp{∫_s^t φ₁(X_u)du + ∫_s^t φ₂(X_u)dW_u} φ(t,s) ds | X_t = x]`
//! with `φ(t,s) = H(2H−1)(t−s)^{2H−2}`. This module provides the closed
//! forms for constant and linear-drift systems, and the decoupling
//! approximation that replaces the conditional expectation by the mean
//! history of `φ₁` plus a Taylor expansion in the current fluctuation
//! `φ₁(x) − E[φ₁(X_t)]`.

use crate::error::{Error, Result};
use crate::fgn::HurstParam;
use crate::fpk::Grid1D;
use crate::quad;
use crate::sde::SystemSpec;
use crate::special::lower_incomplete_gamma;

/// Lower bound applied to the memory diffusion coefficient.
pub const DIFFUSION_FLOOR: f64 = 1e-12;

/// `φ(t,s) = H(2H−1)(t−s)^{2H−2}` for `s < t`.
pub fn phi(t: f64, s: f64, hurst: HurstParam) -> Result<f64> {
    if !(s < t) {
        return Err(Error::domain(format!("phi requires s < t, got t = {t}, s = {s}")));
    }
    let h = hurst.value();
    Ok(h * (2.0 * h - 1.0) * (t - s).powf(2.0 * h - 2.0))
}

pub(crate) fn phi1_unchecked(spec: &SystemSpec, x: f64) -> f64 {
    let (f, fp) = ((spec.f)(x), (spec.f_prime)(x));
    let (g, gp, gpp) = ((spec.g)(x), (spec.g_prime)(x), (spec.g_second)(x));
    let (h, hp, hpp) = ((spec.h)(x), (spec.h_prime)(x), (spec.h_second)(x));
    fp - f * hp / h + 0.5 * g * (gpp - (gp * h * hp + g * h * hpp - gp * hp * hp) / (h * h))
}

pub(crate) fn phi2_unchecked(spec: &SystemSpec, x: f64) -> f64 {
    (spec.g_prime)(x) - (spec.g)(x) * (spec.h_prime)(x) / (spec.h)(x)
}

fn require_nonzero_h(spec: &SystemSpec, x: f64) -> Result<()> {
    if (spec.h)(x) == 0.0 {
        Err(Error::SingularPoint { x })
    } else {
        Ok(())
    }
}

/// Deterministic exponent rate `φ₁ = f′ − f h′/h + ½g(g″ − (g′hh′ + ghh″ − g′h′²)/h²)`.
pub fn phi1(spec: &SystemSpec, x: f64) -> Result<f64> {
    require_nonzero_h(spec, x)?;
    Ok(phi1_unchecked(spec, x))
}

/// Itô exponent rate `φ₂ = g′ − g h′/h`.
pub fn phi2(spec: &SystemSpec, x: f64) -> Result<f64> {
    require_nonzero_h(spec, x)?;
    Ok(phi2_unchecked(spec, x))
}

/// True when `|g h′ − h g′| ≤ tol` at every grid node.
pub fn commutativity_check(spec: &SystemSpec, grid: &Grid1D, tol: f64) -> bool {
    grid.nodes().all(|x| {
        let defect = (spec.g)(x) * (spec.h_prime)(x) - (spec.h)(x) * (spec.g_prime)(x);
        defect.abs() <= tol
    })
}

/// `∫_0^t φ(t,s) ds = H t^{2H−1}`.
pub fn kernel_case_constant(hurst: HurstParam, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    Ok(hurst.value() * t.powf(hurst.memory_exponent()))
}

/// `∫_0^t e^{−α(t−s)} φ(t,s) ds = H(2H−1) α^{1−2H} (Γ(2H−1) − Γ(2H−1, αt))`.
pub fn kernel_case_linear(alpha: f64, hurst: HurstParam, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let h = hurst.value();
    let a = hurst.memory_exponent();
    // Γ(a) − Γ(a, z) is the lower incomplete gamma γ(a, z).
    Ok(h * a * alpha.powf(-a) * lower_incomplete_gamma(a, alpha * t)?)
}

/// History integrals `K_j = ∫_0^t exp{∫_s^t m₁(u)du} (t−s)^j φ(t,s) ds`, `j = 0..3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMoments {
    pub t: f64,
    pub k: [f64; 4],
}

impl KernelMoments {
    pub fn zero(t: f64) -> Self {
        Self { t, k: [0.0; 4] }
    }

    pub fn k0(&self) -> f64 {
        self.k[0]
    }

    pub fn k1(&self) -> f64 {
        self.k[1]
    }

    pub fn k2(&self) -> f64 {
        self.k[2]
    }

    /// Moments for a vanishing mean rate: `H(2H−1) t^{2H−1+j} / (2H−1+j)`.
    pub fn power_law(hurst: HurstParam, t: f64) -> Self {
        let h = hurst.value();
        let a = hurst.memory_exponent();
        let mut k = [0.0; 4];
        for (j, kj) in k.iter_mut().enumerate() {
            let b = a + j as f64;
            *kj = h * a * t.powf(b) / b;
        }
        Self { t, k }
    }
}

/// Exponent of the `j`-th moment's leading power law, `2H−1+j`.
pub(crate) fn moment_exponent(hurst: HurstParam, j: usize) -> f64 {
    hurst.memory_exponent() + j as f64
}

/// Mean history of `φ₁` on the macro time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VadaState {
    refresh: f64,
    tolerance: f64,
    times: Vec<f64>,
    m1: Vec<f64>,
    integral: Vec<f64>,
}

impl VadaState {
    /// `tolerance` bounds the admissible jitter of record times (typically half a micro step).
    pub fn new(refresh: f64, tolerance: f64) -> Result<Self> {
        if !(refresh > 0.0 && refresh.is_finite()) {
            return Err(Error::domain(format!(
                "refresh interval must be positive, got {refresh}"
            )));
        }
        Ok(Self {
            refresh,
            tolerance: tolerance.abs(),
            times: Vec::new(),
            m1: Vec::new(),
            integral: Vec::new(),
        })
    }

    pub fn refresh(&self) -> f64 {
        self.refresh
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn mean_history(&self) -> &[f64] {
        &self.m1
    }

    pub fn integral(&self) -> &[f64] {
        &self.integral
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Drops the most recent record.
    pub fn pop(&mut self) -> Option<(f64, f64)> {
        self.integral.pop();
        Some((self.times.pop()?, self.m1.pop()?))
    }

    /// `m₁` linearly interpolated at `s` inside the recorded span.
    fn m1_at(&self, s: f64) -> f64 {
        let i = self.panel_of(s);
        if i + 1 >= self.times.len() {
            return self.m1[self.m1.len() - 1];
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (s - t0) / (t1 - t0);
        self.m1[i] + w * (self.m1[i + 1] - self.m1[i])
    }

    /// `I(s) = ∫_0^s m₁`, exact for piecewise-linear `m₁`.
    fn integral_at(&self, s: f64) -> f64 {
        let i = self.panel_of(s);
        if i + 1 >= self.times.len() {
            return self.integral[i];
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let d = s - t0;
        let slope = (self.m1[i + 1] - self.m1[i]) / (t1 - t0);
        self.integral[i] + self.m1[i] * d + 0.5 * slope * d * d
    }

    /// Index `i` with `times[i] <= s < times[i+1]` (clamped).
    fn panel_of(&self, s: f64) -> usize {
        match self.times.partition_point(|&t| t <= s) {
            0 => 0,
            n => (n - 1).min(self.times.len() - 1),
        }
    }
}

/// Appends `E[φ₁(X_t)]` at the next macro time and extends `∫m₁` by the trapezoid rule.
pub fn vada_record_mean(state: &mut VadaState, t: f64, m1: f64) -> Result<()> {
    if !(t.is_finite() && m1.is_finite()) {
        return Err(Error::History(format!("non-finite record (t = {t}, m1 = {m1})")));
    }
    match state.times.last().copied() {
        None => {
            if t.abs() > state.tolerance {
                return Err(Error::History(format!("first record must be at t = 0, got {t}")));
            }
            state.times.push(0.0);
            state.m1.push(m1);
            state.integral.push(0.0);
        }
        Some(last) => {
            let expected = last + state.refresh;
            if (t - expected).abs() > state.tolerance {
                return Err(Error::History(format!(
                    "record at t = {t} does not follow {last} by one refresh interval ({})",
                    state.refresh
                )));
            }
            let prev_m1 = *state.m1.last().expect("non-empty");
            let prev_i = *state.integral.last().expect("non-empty");
            state.times.push(t);
            state.m1.push(m1);
            state.integral.push(prev_i + 0.5 * (prev_m1 + m1) * (t - last));
        }
    }
    Ok(())
}

/// Kernel moments `K_0..K_3` at time `t` from the recorded mean history.
///
/// The power weight is integrated exactly. On the panel touching `s = t`
/// the exponential factor is expanded in a Taylor series in `t − s` and the
/// resulting power moments are summed in closed form; the other panels use
/// Gauss–Legendre on the smooth remainder.
pub fn vada_kernel_moments(state: &VadaState, t: f64, hurst: HurstParam) -> Result<KernelMoments> {
    let last = state
        .last_time()
        .ok_or_else(|| Error::History("no mean history recorded".into()))?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    if t > last + state.tolerance {
        return Err(Error::History(format!("t = {t} beyond recorded history (last {last})")));
    }
    let t = t.min(last);
    if t == 0.0 {
        return Ok(KernelMoments::zero(0.0));
    }
    let h = hurst.value();
    let a = hurst.memory_exponent();
    let scale = h * a;
    let i_t = state.integral_at(t);

    // Panel holding s = t (its left node is strictly below t).
    let head = state.times.partition_point(|&s| s < t) - 1;
    let s_head = state.times[head];
    let len = t - s_head;
    let m1_t = state.m1_at(t);
    let slope = if head + 1 < state.times.len() {
        (state.m1[head + 1] - state.m1[head]) / (state.times[head + 1] - state.times[head])
    } else {
        0.0
    };
    let mut k = singular_panel(a, len, m1_t, slope);

    // exp{I(t) − I(s)} on the remaining panels, in u = t − s.
    let factor = |u: f64| (i_t - state.integral_at(t - u)).exp();
    for i in (0..head).rev() {
        let (ua, ub) = (t - state.times[i + 1], t - state.times[i]);
        if i + 1 == head {
            // Adjacent to the singularity: map u = v^{1/β} per moment.
            for (j, kj) in k.iter_mut().enumerate() {
                let b = a + j as f64;
                let inv = 1.0 / b;
                *kj += quad::gl24().integrate(ua.powf(b), ub.powf(b), |v| factor(v.powf(inv))) / b;
            }
        } else {
            let mid = 0.5 * (ua + ub);
            let half = 0.5 * (ub - ua);
            let mut acc = [0.0; 4];
            for &(node, w) in quad::gl8_pairs() {
                let u = mid + half * node;
                let base = w * u.powf(a - 1.0) * factor(u);
                acc[0] += base;
                acc[1] += base * u;
                acc[2] += base * u * u;
                acc[3] += base * u * u * u;
            }
            for (kj, aj) in k.iter_mut().zip(acc) {
                *kj += aj * half;
            }
        }
    }
    for kj in k.iter_mut() {
        *kj *= scale;
    }
    Ok(KernelMoments { t, k })
}

/// `∫_0^L u^{β_j−1} exp(p₁u + p₂u²) du` for `β_j = a + j`, `j = 0..3`,
/// where `p₁ = m₁(t)` and `p₂ = −slope/2` (so the exponent is `∫_{t−u}^t m₁`).
fn singular_panel(a: f64, len: f64, m1_t: f64, slope: f64) -> [f64; 4] {
    let p1 = m1_t;
    let p2 = -0.5 * slope;
    // Taylor coefficients c_n of exp(p₁u + p₂u²), scaled by L^n.
    let (q1, q2) = (p1 * len, p2 * len * len);
    let mut coeffs: Vec<f64> = vec![1.0];
    let mut out = [0.0; 4];
    for n in 0..200 {
        if n > 0 {
            let mut c = q1 * coeffs[n - 1];
            if n >= 2 {
                c += 2.0 * q2 * coeffs[n - 2];
            }
            coeffs.push(c / n as f64);
        }
        let c = coeffs[n];
        let mut biggest = 0.0f64;
        for (j, o) in out.iter_mut().enumerate() {
            let term = c / (a + (j + n) as f64);
            *o += term;
            biggest = biggest.max(term.abs() / o.abs().max(f64::MIN_POSITIVE));
        }
        if n >= 3 && biggest < 1e-17 && coeffs[n - 1].abs() < 1e-17 * out[0].abs().max(1.0) {
            break;
        }
    }
    for (j, o) in out.iter_mut().enumerate() {
        *o *= len.powf(a + j as f64);
    }
    out
}

/// Truncation order of the decoupling approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VadaOrder {
    First,
    #[default]
    Second,
    Third,
}

/// `Ψ(x,t) ≈ K₀ + δK₁ + ½δ²K₂` with `δ = φ₁(x) − E[φ₁(X_t)]`.
pub fn vada_psi(moments: &KernelMoments, phi1_x: f64, m1_now: f64) -> f64 {
    vada_psi_order(moments, phi1_x, m1_now, VadaOrder::Second)
}

pub fn vada_psi_order(moments: &KernelMoments, phi1_x: f64, m1_now: f64, order: VadaOrder) -> f64 {
    let d = phi1_x - m1_now;
    let k = &moments.k;
    match order {
        VadaOrder::First => k[0] + d * k[1],
        VadaOrder::Second => k[0] + d * k[1] + 0.5 * d * d * k[2],
        VadaOrder::Third => k[0] + d * k[1] + 0.5 * d * d * k[2] + d * d * d * k[3] / 6.0,
    }
}

/// Memory-dependent drift and diffusion at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemCoefficients {
    pub drift: f64,
    pub diffusion: f64,
    /// The diffusion was raised to [`DIFFUSION_FLOOR`].
    pub clamped: bool,
}

/// `a = f + ½gg′ + hh′Ψ`, `b = max(½g² + h²Ψ, ε_b)`.
pub fn mem_coefficients(spec: &SystemSpec, x: f64, psi: f64) -> MemCoefficients {
    let (g, h) = ((spec.g)(x), (spec.h)(x));
    let drift = (spec.f)(x) + 0.5 * g * (spec.g_prime)(x) + h * (spec.h_prime)(x) * psi;
    let raw = 0.5 * g * g + h * h * psi;
    let clamped = !(raw >= DIFFUSION_FLOOR);
    MemCoefficients {
        drift,
        diffusion: if clamped { DIFFUSION_FLOOR } else { raw },
        clamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use approx::assert_relative_eq;

    fn hp(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn phi_values() {
        assert_relative_eq!(phi(1.0, 0.0, hp(0.75)).unwrap(), 0.375, max_relative = 1e-15);
        let expect = 0.65 * 0.3 * 0.5f64.powf(-0.7);
        assert_relative_eq!(phi(0.5, 0.0, hp(0.65)).unwrap(), expect, max_relative = 1e-15);
        assert!(phi(1.0, 1.0, hp(0.7)).is_err());
        assert!(phi(0.0, 1.0, hp(0.7)).is_err());
        assert!(phi(1.0, 0.0, hp(0.500_001)).unwrap() < 1e-5);
    }

    #[test]
    fn phi_matches_derivative_of_fbm_covariance() {
        // ∂²/∂t∂s ½(t^{2H} + s^{2H} − |t−s|^{2H}) = φ(t,s) for s < t.
        let h = 0.65;
        let r = |t: f64, s: f64| 0.5 * (t.powf(2.0 * h) + s.powf(2.0 * h) - (t - s).abs().powf(2.0 * h));
        let (t, s, e) = (1.5, 1.0, 1e-4);
        let mixed = (r(t + e, s + e) - r(t + e, s - e) - r(t - e, s + e) + r(t - e, s - e)) / (4.0 * e * e);
        assert_relative_eq!(mixed, phi(t, s, hp(h)).unwrap(), max_relative = 1e-6);
    }

    #[test]
    fn exponent_rates_for_shipped_models() {
        let duffing = models::duffing(1.0, -1.0, 0.8, 0.6);
        assert_relative_eq!(phi1(&duffing, 1.0).unwrap(), -2.0, max_relative = 1e-15);
        assert_eq!(phi2(&duffing, 1.0).unwrap(), 0.0);

        let verhulst = models::verhulst(4.0, 1.0, 0.1, 0.3);
        assert_eq!(phi2(&verhulst, 1.0).unwrap(), 0.0);
        assert_relative_eq!(phi1(&verhulst, 1.0).unwrap(), -1.0, max_relative = 1e-15);
        let x = 2.5;
        let expect = -x - 0.5 * 0.01 * (x - 1.0) / x;
        assert_relative_eq!(phi1(&verhulst, x).unwrap(), expect, max_relative = 1e-14);
        assert!(matches!(phi1(&verhulst, 0.0), Err(Error::SingularPoint { .. })));

        let ou = models::ornstein_uhlenbeck(1.3, 1.0, 1.0);
        assert_eq!(phi1(&ou, 0.7).unwrap(), -1.3);
    }

    #[test]
    fn commutativity() {
        let verhulst = models::verhulst(4.0, 1.0, 0.1, 0.3);
        let grid = Grid1D::new(0.0, 7.0, 70).unwrap();
        assert!(commutativity_check(&verhulst, &grid, 1e-12));
        let duffing = models::duffing(1.0, -1.0, 0.8, 0.6);
        assert!(commutativity_check(&duffing, &grid, 1e-12));
        let mixed = models::polynomial(&[0.0], &[0.5], &[0.0, 0.3]);
        assert!(!commutativity_check(&mixed, &grid, 1e-12));
    }

    #[test]
    fn case_constant_values() {
        assert_relative_eq!(kernel_case_constant(hp(0.7), 1.0).unwrap(), 0.7);
        assert_relative_eq!(
            kernel_case_constant(hp(0.6), 4.0).unwrap(),
            0.6 * 4f64.powf(0.2),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            kernel_case_constant(hp(0.500_000_1), 3.0).unwrap(),
            0.5,
            max_relative = 1e-6
        );
        assert_eq!(kernel_case_constant(hp(0.7), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn case_linear_limits() {
        assert_eq!(kernel_case_linear(1.0, hp(0.65), 0.0).unwrap(), 0.0);
        let sat = 0.65 * 0.3 * crate::special::gamma_fn(0.3).unwrap();
        assert_relative_eq!(
            kernel_case_linear(1.0, hp(0.65), 60.0).unwrap(),
            sat,
            max_relative = 1e-12
        );
        let mut prev = 0.0;
        for i in 1..50 {
            let v = kernel_case_linear(1.0, hp(0.65), 0.1 * i as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(kernel_case_linear(0.0, hp(0.65), 1.0).is_err());
    }

    #[test]
    fn record_mean_builds_trapezoid_integral() {
        let mut st = VadaState::new(0.1, 1e-9).unwrap();
        vada_record_mean(&mut st, 0.0, 2.0).unwrap();
        assert_eq!(st.integral(), &[0.0]);
        vada_record_mean(&mut st, 0.1, 2.0).unwrap();
        vada_record_mean(&mut st, 0.2, 2.0).unwrap();
        assert_relative_eq!(st.integral()[1], 0.2, max_relative = 1e-14);
        assert_relative_eq!(st.integral()[2], 0.4, max_relative = 1e-14);
        assert!(vada_record_mean(&mut st, 0.25, 2.0).is_err());
        assert!(vada_record_mean(&mut st, 0.1, 2.0).is_err());

        // Linear m1 = 3t: trapezoid is exact, I = 1.5 t².
        let mut st = VadaState::new(0.5, 1e-9).unwrap();
        for k in 0..5 {
            let t = 0.5 * k as f64;
            vada_record_mean(&mut st, t, 3.0 * t).unwrap();
        }
        for (k, &i) in st.integral().iter().enumerate() {
            let t = 0.5 * k as f64;
            assert_relative_eq!(i, 1.5 * t * t, max_relative = 1e-14, epsilon = 1e-15);
        }
    }

    #[test]
    fn first_record_must_be_at_origin() {
        let mut st = VadaState::new(0.1, 1e-9).unwrap();
        assert!(vada_record_mean(&mut st, 0.1, 0.0).is_err());
        assert!(vada_kernel_moments(&st, 0.0, hp(0.7)).is_err());
    }

    fn constant_history(rate: f64, refresh: f64, t_end: f64) -> VadaState {
        let mut st = VadaState::new(refresh, 1e-9).unwrap();
        let n = (t_end / refresh).round() as usize;
        for k in 0..=n {
            vada_record_mean(&mut st, k as f64 * refresh, rate).unwrap();
        }
        st
    }

    #[test]
    fn zero_history_gives_power_laws() {
        for &h in &[0.6, 0.7, 0.8, 0.95] {
            let st = constant_history(0.0, 0.01, 10.0);
            for &t in &[0.01, 0.37, 1.0, 4.2, 10.0] {
                let got = vada_kernel_moments(&st, t, hp(h)).unwrap();
                let exact = KernelMoments::power_law(hp(h), t);
                for j in 0..4 {
                    assert_relative_eq!(got.k[j], exact.k[j], max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn constant_negative_history_matches_case_linear() {
        for &h in &[0.6, 0.65, 0.95] {
            let st = constant_history(-1.0, 0.01, 3.0);
            for &t in &[0.01, 0.5, 1.0, 3.0] {
                let got = vada_kernel_moments(&st, t, hp(h)).unwrap();
                let exact = kernel_case_linear(1.0, hp(h), t).unwrap();
                assert_relative_eq!(got.k0(), exact, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn moments_at_origin_and_beyond_history() {
        let st = constant_history(-1.0, 0.1, 1.0);
        assert_eq!(vada_kernel_moments(&st, 0.0, hp(0.7)).unwrap().k, [0.0; 4]);
        assert!(vada_kernel_moments(&st, 1.2, hp(0.7)).is_err());
    }

    #[test]
    fn psi_quadratic_form() {
        let m = KernelMoments {
            t: 1.0,
            k: [1.0, 2.0, 3.0, 4.0],
        };
        assert_eq!(vada_psi(&m, 0.3, 0.3), 1.0);
        assert_relative_eq!(vada_psi(&m, 1.5, 0.5), 4.5);
        assert_eq!(vada_psi(&KernelMoments::zero(1.0), 5.0, -1.0), 0.0);
        assert_relative_eq!(vada_psi_order(&m, 1.5, 0.5, VadaOrder::First), 3.0);
        assert_relative_eq!(vada_psi_order(&m, 1.5, 0.5, VadaOrder::Third), 4.5 + 4.0 / 6.0);
    }

    #[test]
    fn coefficients_reduce_to_classical() {
        let duffing = models::duffing(1.0, -1.0, 0.8, 0.6);
        let c = mem_coefficients(&duffing, 0.3, 0.0);
        assert_relative_eq!(c.diffusion, 0.32, max_relative = 1e-15);
        assert_relative_eq!(c.drift, 0.3 - 0.027, max_relative = 1e-15);
        assert!(!c.clamped);

        let verhulst = models::verhulst(4.0, 1.0, 0.1, 0.3);
        let c = mem_coefficients(&verhulst, 2.0, 0.0);
        assert_relative_eq!(c.drift, 8.0 - 4.0 + 0.5 * 0.1 * 2.0 * 0.1, max_relative = 1e-15);
        assert_relative_eq!(c.diffusion, 0.5 * 0.04, max_relative = 1e-15);

        let ou = models::ornstein_uhlenbeck(1.0, 1.0, 1.0);
        let psi = kernel_case_linear(1.0, hp(0.65), 1.0).unwrap();
        let c = mem_coefficients(&ou, 0.0, psi);
        assert_relative_eq!(c.diffusion, 0.5 + psi, max_relative = 1e-15);

        let ham = models::hamiltonian(2.0, 0.01, 0.01, 0.01).unwrap();
        let c = mem_coefficients(&ham, 2.0, 0.0);
        assert!(c.clamped);
        assert_eq!(c.diffusion, DIFFUSION_FLOOR);
    }
}
