use gauss_quad::{GaussJacobi, GaussLegendre};
use memfpk_core::fgn::HurstParam;
use memfpk_core::kernel::{
    kernel_case_constant, kernel_case_linear, mem_coefficients, vada_kernel_moments, vada_psi, vada_record_mean,
    KernelMoments, VadaState,
};
use memfpk_core::models;
use proptest::prelude::*;

/// `∫_0^t e^{−α(t−s)} H(2H−1)(t−s)^{2H−2} ds` by Gauss–Jacobi on the last unit
/// of the range and composite Gauss–Legendre on the remainder.
fn case_linear_oracle(alpha: f64, h: f64, t: f64) -> f64 {
    let c = h * (2.0 * h - 1.0);
    let e = 2.0 * h - 2.0;
    let near = t.min(1.0);
    // u = t − s ∈ [0, near]: weight (1 + x)^e with u = near(1 + x)/2.
    let jac = GaussJacobi::new(60, 0.0, e).unwrap();
    let head = jac.integrate(0.0, near, |u| (-alpha * u).exp()) * (near / 2.0).powf(e);
    let mut tail = 0.0;
    if t > near {
        let gl = GaussLegendre::new(30).unwrap();
        let panels = ((t - near) * 4.0).ceil() as usize;
        let w = (t - near) / panels as f64;
        for k in 0..panels {
            let a = near + k as f64 * w;
            tail += gl.integrate(a, a + w, |u| u.powf(e) * (-alpha * u).exp());
        }
    }
    c * (head + tail)
}

#[test]
fn case_linear_against_jacobi_quadrature() {
    for &h in &[0.6, 0.7, 0.9] {
        for &t in &[0.1, 1.0, 10.0] {
            let closed = kernel_case_linear(1.0, HurstParam::new(h).unwrap(), t).unwrap();
            let oracle = case_linear_oracle(1.0, h, t);
            let rel = ((closed - oracle) / oracle).abs();
            assert!(rel <= 1e-6, "H = {h}, t = {t}: {closed} vs {oracle} ({rel:e})");
        }
    }
}

#[test]
fn case_constant_is_integral_of_phi() {
    for &h in &[0.55, 0.7, 0.95] {
        for &t in &[0.3, 2.0] {
            let oracle = case_linear_oracle(1e-12, h, t);
            let closed = kernel_case_constant(HurstParam::new(h).unwrap(), t).unwrap();
            assert!(((closed - oracle) / oracle).abs() <= 1e-9);
        }
    }
}

fn history(rates: impl Fn(f64) -> f64, refresh: f64, t_end: f64) -> VadaState {
    let mut st = VadaState::new(refresh, 1e-9).unwrap();
    let n = (t_end / refresh).round() as usize;
    for k in 0..=n {
        let t = k as f64 * refresh;
        vada_record_mean(&mut st, t, rates(t)).unwrap();
    }
    st
}

#[test]
fn moments_for_varying_history_match_direct_quadrature() {
    // m₁(t) = −1 − sin t recorded every 0.01; the exponent uses the same
    // piecewise-linear interpolant, evaluated here with a fine direct rule.
    let refresh = 0.01;
    let rate = |t: f64| -1.0 - t.sin();
    let st = history(rate, refresh, 2.0);
    let hp = HurstParam::new(0.7).unwrap();
    let t = 2.0;
    let got = vada_kernel_moments(&st, t, hp).unwrap();
    let e = 2.0 * 0.7 - 2.0;
    // I(t) − I(s) for the linear interpolant, accumulated exactly panel by panel.
    let interp = |s: f64| {
        let i = ((s / refresh).floor() as usize).min(199);
        let (t0, t1) = (i as f64 * refresh, (i + 1) as f64 * refresh);
        rate(t0) + (s - t0) / (t1 - t0) * (rate(t1) - rate(t0))
    };
    let gl = GaussLegendre::new(20).unwrap();
    let cum = |s: f64| -> f64 {
        let mut acc = 0.0;
        let mut a = s;
        while a < t - 1e-15 {
            let b = (((a / refresh).floor() + 1.0) * refresh).min(t);
            let b = if b <= a { (a + refresh).min(t) } else { b };
            acc += gl.integrate(a, b, interp);
            a = b;
        }
        acc
    };
    let jac = GaussJacobi::new(40, 0.0, e).unwrap();
    for j in 0..3 {
        let mut total = 0.0;
        // Graded panels in u = t − s toward the singularity.
        let edges: Vec<f64> = (0..=24).map(|k| t * 2f64.powi(k - 24)).collect();
        total += jac.integrate(0.0, edges[0], |u| u.powi(j) * cum(t - u).exp()) * (edges[0] / 2.0).powf(e);
        for w in edges.windows(2) {
            total += gl.integrate(w[0], w[1], |u| u.powf(e) * u.powi(j) * cum(t - u).exp());
        }
        total *= 0.7 * 0.4;
        let rel = ((got.k[j as usize] - total) / total).abs();
        assert!(rel <= 1e-6, "K{j}: {} vs {total} ({rel:e})", got.k[j as usize]);
    }
}

#[test]
fn vada_coefficients_match_closed_form_for_ou() {
    let spec = models::ornstein_uhlenbeck(1.0, 1.0, 1.0);
    let st = history(|_| -1.0, 0.01, 2.0);
    for &h in &[0.65, 0.95] {
        let hp = HurstParam::new(h).unwrap();
        for k in 1..=200 {
            let t = k as f64 * 0.01;
            let m = vada_kernel_moments(&st, t, hp).unwrap();
            let closed = kernel_case_linear(1.0, hp, t).unwrap();
            let bv = mem_coefficients(&spec, 0.3, vada_psi(&m, -1.0, -1.0)).diffusion;
            let bc = mem_coefficients(&spec, 0.3, closed).diffusion;
            assert!((bv - bc).abs() <= 1e-6 * bc);
        }
    }
}

proptest! {
    #[test]
    fn moments_satisfy_cauchy_schwarz(
        h in 0.55f64..0.95,
        c0 in -3.0f64..1.0,
        c1 in -2.0f64..2.0,
        t in 0.05f64..3.0,
    ) {
        let st = history(|s| c0 + c1 * (3.0 * s).sin(), 0.01, 3.0);
        let t = (t / 0.01).round() * 0.01;
        let m = vada_kernel_moments(&st, t, HurstParam::new(h).unwrap()).unwrap();
        prop_assert!(m.k.iter().all(|&k| k > 0.0));
        prop_assert!(m.k[1] * m.k[1] <= m.k[0] * m.k[2] * (1.0 + 1e-12));
        // Ψ stays positive for any fluctuation.
        for d in [-50.0, -3.0, -0.2, 0.0, 0.7, 9.0] {
            prop_assert!(vada_psi(&m, d, 0.0) > 0.0);
        }
    }

    #[test]
    fn zero_history_is_power_law(h in 0.55f64..0.95, k in 1usize..300) {
        let st = history(|_| 0.0, 0.01, 3.0);
        let hp = HurstParam::new(h).unwrap();
        let t = k as f64 * 0.01;
        let got = vada_kernel_moments(&st, t, hp).unwrap();
        let exact = KernelMoments::power_law(hp, t);
        for j in 0..4 {
            prop_assert!(((got.k[j] - exact.k[j]) / exact.k[j]).abs() <= 1e-9);
        }
    }

    #[test]
    fn case_linear_increases_toward_saturation(h in 0.55f64..0.95, alpha in 0.2f64..5.0, t in 0.01f64..20.0) {
        let hp = HurstParam::new(h).unwrap();
        let a = kernel_case_linear(alpha, hp, t).unwrap();
        let b = kernel_case_linear(alpha, hp, t * 1.1).unwrap();
        prop_assert!(b >= a);
        if alpha * t < 20.0 {
            prop_assert!(b > a);
        }
        prop_assert!(a < kernel_case_constant(hp, t).unwrap());
    }
}
