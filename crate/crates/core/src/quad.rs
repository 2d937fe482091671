//! Quadrature helpers for integrals carrying a weakly singular power weight.
//!
//! The memory kernels all reduce to `∫_0^T u^{β−1} f(u) du` with `β ∈ (0, 3)`
//! and `f` smooth. The first panel is mapped by `u = h z^{1/β}`, which turns
//! the power weight into a constant; remaining panels use plain
//! Gauss–Legendre.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

/// Node/weight pairs on `[-1, 1]`.
pub(crate) struct Rule {
    pairs: Vec<(f64, f64)>,
}

impl Rule {
    fn build(deg: usize) -> Self {
        let rule = GaussLegendre::new(deg).expect("Gauss-Legendre degree >= 2");
        Self {
            pairs: rule.into_node_weight_pairs(),
        }
    }

    /// Integrates `f` over `[a, b]`.
    #[inline]
    pub(crate) fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.pairs.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
    }
}

pub(crate) fn gl8() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| Rule::build(8))
}

pub(crate) fn gl8_pairs() -> &'static [(f64, f64)] {
    &gl8().pairs
}

pub(crate) fn gl24() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| Rule::build(24))
}

/// `∫_0^T u^{β−1} f(u) du` on `panels` uniform panels.
pub fn power_weighted_integral(beta: f64, upper: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    debug_assert!(beta > 0.0);
    if upper <= 0.0 {
        return 0.0;
    }
    let panels = panels.max(1);
    let h = upper / panels as f64;
    let inv_beta = 1.0 / beta;
    // u = h z^{1/β}  ⇒  u^{β−1} du = h^β / β dz
    let head = gl24().integrate(0.0, 1.0, |z| f(h * z.powf(inv_beta))) * h.powf(beta) / beta;
    let rule = gl8();
    let tail: f64 = (1..panels)
        .map(|i| {
            let a = i as f64 * h;
            rule.integrate(a, a + h, |u| u.powf(beta - 1.0) * f(u))
        })
        .sum();
    head + tail
}

/// Power-weighted integral with a panel-doubling error estimate.
///
/// Returns `(value, |I_2N − I_N|)`.
pub fn power_weighted_integral_with_estimate(
    beta: f64,
    upper: f64,
    panels: usize,
    mut f: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    let coarse = power_weighted_integral(beta, upper, panels, &mut f);
    let fine = power_weighted_integral(beta, upper, 2 * panels, &mut f);
    (fine, (fine - coarse).abs())
}
