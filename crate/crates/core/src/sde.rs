//! Scalar Stratonovich SDE driven by white and fractional noise, and the
//! Monte Carlo reference built on it.
//!
//! `dX = f(X) dt + g(X) ∘dW + h(X) ∘dB^H`, integrated with the two-stage
//! Heun scheme. Alongside each path the simulator can accumulate the
//! exponent `∫φ₁(X)du + ∫φ₂(X)dW` (Itô, left endpoint) needed to evaluate
//! the memory functional path by path.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fgn::{substream, HurstParam, NoiseEnsemble, NoiseSampler, Stream};
use crate::fpk::{Grid1D, PdfField};
use crate::stats::MomentSet;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Fraction of divergent paths above which a warning is logged.
const DIVERGENCE_WARN: f64 = 1e-3;
/// Fraction of divergent paths above which simulation fails.
const DIVERGENCE_FAIL: f64 = 0.05;
/// Minimum number of paths in a bin for a conditional-expectation estimate.
pub const KERNEL_BIN_FLOOR: usize = 50;

/// Drift `f`, white-noise coefficient `g`, fractional-noise coefficient `h`
/// and the derivatives the memory coefficients need.
#[derive(Clone)]
pub struct SystemSpec {
    pub label: String,
    pub f: ScalarFn,
    pub f_prime: ScalarFn,
    pub g: ScalarFn,
    pub g_prime: ScalarFn,
    pub g_second: ScalarFn,
    pub h: ScalarFn,
    pub h_prime: ScalarFn,
    pub h_second: ScalarFn,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

/// Largest derivative mismatch found by [`SystemSpec::derivative_mismatch`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeMismatch {
    pub which: &'static str,
    pub x: f64,
    pub rel_error: f64,
}

impl SystemSpec {
    /// Worst relative disagreement between the analytic derivatives and
    /// central differences over the probe points.
    ///
    /// Errors are measured relative to `max(|analytic|, 1)`.
    pub fn derivative_mismatch(&self, probes: &[f64]) -> DerivativeMismatch {
        let pairs: [(&'static str, &ScalarFn, &ScalarFn); 5] = [
            ("f'", &self.f, &self.f_prime),
            ("g'", &self.g, &self.g_prime),
            ("g''", &self.g_prime, &self.g_second),
            ("h'", &self.h, &self.h_prime),
            ("h''", &self.h_prime, &self.h_second),
        ];
        let mut worst = DerivativeMismatch {
            which: "f'",
            x: f64::NAN,
            rel_error: 0.0,
        };
        for &x in probes {
            let step = 1e-5 * x.abs().max(1.0);
            for (which, fun, deriv) in pairs.iter() {
                let fd = (fun(x + step) - fun(x - step)) / (2.0 * step);
                let exact = deriv(x);
                let rel = (fd - exact).abs() / exact.abs().max(1.0);
                if rel > worst.rel_error || rel.is_nan() {
                    worst = DerivativeMismatch {
                        which,
                        x,
                        rel_error: rel,
                    };
                }
            }
        }
        worst
    }
}

/// Law of the initial state `X_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLaw {
    Point { x0: f64 },
    Gaussian { mean: f64, variance: f64 },
}

impl InitialLaw {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite() && mean.is_finite()) {
            return Err(Error::domain(format!(
                "gaussian initial law needs finite mean and variance > 0, got ({mean}, {variance})"
            )));
        }
        Ok(Self::Gaussian { mean, variance })
    }

    pub fn point(x0: f64) -> Result<Self> {
        if !x0.is_finite() {
            return Err(Error::domain("initial point must be finite"));
        }
        Ok(Self::Point { x0 })
    }

    fn draw(&self, seed: u64, path: usize) -> f64 {
        match *self {
            InitialLaw::Point { x0 } => x0,
            InitialLaw::Gaussian { mean, variance } => {
                let mut rng = substream(seed, path, Stream::Initial);
                let z: f64 = StandardNormal.sample(&mut rng);
                mean + variance.sqrt() * z
            }
        }
    }
}

/// One Stratonovich Heun step; non-finite results signal divergence.
#[inline]
pub fn heun_step(spec: &SystemSpec, x: f64, dw: f64, dbh: f64, dt: f64) -> f64 {
    let (f0, g0, h0) = ((spec.f)(x), (spec.g)(x), (spec.h)(x));
    let pred = x + f0 * dt + g0 * dw + h0 * dbh;
    let (f1, g1, h1) = ((spec.f)(pred), (spec.g)(pred), (spec.h)(pred));
    x + 0.5 * (f0 + f1) * dt + 0.5 * (g0 + g1) * dw + 0.5 * (h0 + h1) * dbh
}

/// Exponent rates of the memory functional at `x`: `(φ₁(x), φ₂(x))`.
fn exponent_rates(spec: &SystemSpec, x: f64) -> (f64, f64) {
    (
        crate::kernel::phi1_unchecked(spec, x),
        crate::kernel::phi2_unchecked(spec, x),
    )
}

/// Which steps to keep and whether to evaluate the memory functional.
#[derive(Debug, Clone)]
pub struct RecordPlan {
    /// Step indices (0 = initial state) to store, strictly increasing.
    pub steps: Vec<usize>,
    /// Evaluate `∫_0^t exp{…} φ(t,s) ds` per path at every recorded step.
    pub kernel: Option<HurstParam>,
    /// Keep the cumulative exponent at every step (memory heavy).
    pub full_exponent: bool,
}

impl RecordPlan {
    pub fn all_steps(n_steps: usize) -> Self {
        Self {
            steps: (0..=n_steps).collect(),
            kernel: None,
            full_exponent: true,
        }
    }
}

/// Simulated paths sampled at the recorded steps.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub label: String,
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    /// `n_paths × steps.len()`; NaN after a path diverges.
    pub states: Array2<f64>,
    /// Cumulative exponent, `n_paths × (n_steps + 1)`.
    pub exponent: Option<Array2<f64>>,
    /// Memory functional per path at each recorded step.
    pub kernel: Option<(HurstParam, Array2<f64>)>,
    pub divergent: Vec<bool>,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.states.nrows()
    }

    pub fn divergent_count(&self) -> usize {
        self.divergent.iter().filter(|&&d| d).count()
    }

    fn column(&self, t_index: usize) -> Result<usize> {
        if t_index < self.steps.len() {
            Ok(t_index)
        } else {
            Err(Error::domain(format!(
                "time index {t_index} out of range ({} recorded)",
                self.steps.len()
            )))
        }
    }

    /// Non-divergent samples at a recorded column.
    pub fn samples(&self, t_index: usize) -> Result<Vec<f64>> {
        let col = self.column(t_index)?;
        Ok(self
            .states
            .column(col)
            .iter()
            .zip(&self.divergent)
            .filter(|(_, &d)| !d)
            .map(|(&x, _)| x)
            .collect())
    }
}

/// Product-integration weights `∫_{s_i}^{s_{i+1}} φ(t,s) ds` for `t = k·dt`.
fn kernel_weights(hurst: HurstParam, k: usize, dt: f64) -> Vec<f64> {
    let h = hurst.value();
    let p = hurst.memory_exponent();
    let t = k as f64 * dt;
    (0..k)
        .map(|i| {
            let a = t - i as f64 * dt;
            let b = t - (i + 1) as f64 * dt;
            h * (a.powf(p) - b.max(0.0).powf(p))
        })
        .collect()
}

/// Per-path output buffers.
struct PathRows<'a> {
    states: &'a mut [f64],
    kernel: Option<&'a mut [f64]>,
    exponent: Option<&'a mut [f64]>,
}

#[allow(clippy::too_many_arguments)]
fn integrate_path(
    spec: &SystemSpec,
    x0: f64,
    fgn: &[f64],
    gwn: &[f64],
    dt: f64,
    plan: &RecordPlan,
    weights: &[Vec<f64>],
    history: &mut Vec<f64>,
    rows: PathRows<'_>,
) -> bool {
    let PathRows {
        states,
        mut kernel,
        exponent,
    } = rows;
    let track = plan.kernel.is_some() || exponent.is_some();
    history.clear();
    let mut x = x0;
    let mut e = 0.0;
    let mut divergent = !x.is_finite();
    let mut next = 0;
    for step in 0..=fgn.len() {
        if track {
            history.push(e);
        }
        if next < plan.steps.len() && plan.steps[next] == step {
            states[next] = if divergent { f64::NAN } else { x };
            if let Some(k) = kernel.as_deref_mut() {
                k[next] = if divergent {
                    f64::NAN
                } else {
                    memory_functional(history, &weights[next])
                };
            }
            next += 1;
        }
        if step == fgn.len() || divergent {
            if divergent {
                for s in states[next..].iter_mut() {
                    *s = f64::NAN;
                }
                if let Some(k) = kernel.as_deref_mut() {
                    for v in k[next..].iter_mut() {
                        *v = f64::NAN;
                    }
                }
            }
            break;
        }
        if track {
            // A non-finite exponent (e.g. h(x) = 0) poisons only the memory
            // functional of this path, not its state.
            let (r1, r2) = exponent_rates(spec, x);
            e += r1 * dt + r2 * gwn[step];
        }
        x = heun_step(spec, x, gwn[step], fgn[step], dt);
        if !x.is_finite() {
            divergent = true;
        }
    }
    if let Some(row) = exponent {
        for (dst, src) in row.iter_mut().zip(history.iter().chain(std::iter::repeat(&f64::NAN))) {
            *dst = if divergent { f64::NAN } else { *src };
        }
    }
    divergent
}

/// `Σ_i exp(E_k − E_{i+½}) w_i` with `E_{i+½}` the midpoint average.
fn memory_functional(history: &[f64], weights: &[f64]) -> f64 {
    let k = weights.len();
    if k == 0 {
        return 0.0;
    }
    let e_now = history[k];
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| w * (e_now - 0.5 * (history[i] + history[i + 1])).exp())
        .sum()
}

enum NoiseInput<'a> {
    Stored(&'a NoiseEnsemble),
    Sampled { sampler: &'a NoiseSampler, n_paths: usize },
}

fn run(
    spec: &SystemSpec,
    init: InitialLaw,
    noise: NoiseInput<'_>,
    seed: u64,
    plan: &RecordPlan,
) -> Result<PathEnsemble> {
    let (grid, n_paths) = match &noise {
        NoiseInput::Stored(e) => (e.grid, e.n_paths()),
        NoiseInput::Sampled { sampler, n_paths } => (sampler.grid(), *n_paths),
    };
    let n_steps = grid.n_steps();
    let dt = grid.dt();
    if n_paths == 0 {
        return Err(Error::domain("ensemble needs at least one path"));
    }
    if plan.steps.windows(2).any(|w| w[0] >= w[1]) || plan.steps.iter().any(|&s| s > n_steps) {
        return Err(Error::domain("record steps must be increasing and within the horizon"));
    }
    let n_rec = plan.steps.len();
    let weights: Vec<Vec<f64>> = match plan.kernel {
        Some(hurst) => plan.steps.iter().map(|&k| kernel_weights(hurst, k, dt)).collect(),
        None => Vec::new(),
    };

    let mut states = Array2::<f64>::zeros((n_paths, n_rec));
    let mut kernel = plan.kernel.map(|_| Array2::<f64>::zeros((n_paths, n_rec)));
    let mut exponent = plan.full_exponent.then(|| Array2::<f64>::zeros((n_paths, n_steps + 1)));
    let mut divergent = vec![false; n_paths];

    {
        let state_rows = states
            .as_slice_mut()
            .expect("standard layout")
            .par_chunks_mut(n_rec.max(1));
        let kernel_rows: Vec<Option<&mut [f64]>> = match kernel.as_mut() {
            Some(k) => k
                .as_slice_mut()
                .expect("standard layout")
                .chunks_mut(n_rec.max(1))
                .map(Some)
                .collect(),
            None => (0..n_paths).map(|_| None).collect(),
        };
        let exponent_rows: Vec<Option<&mut [f64]>> = match exponent.as_mut() {
            Some(e) => e
                .as_slice_mut()
                .expect("standard layout")
                .chunks_mut(n_steps + 1)
                .map(Some)
                .collect(),
            None => (0..n_paths).map(|_| None).collect(),
        };
        state_rows
            .zip(kernel_rows.into_par_iter())
            .zip(exponent_rows.into_par_iter())
            .zip(divergent.par_iter_mut())
            .enumerate()
            .for_each_init(
                || (vec![0.0; n_steps], vec![0.0; n_steps], Vec::with_capacity(n_steps + 1)),
                |(fgn_buf, gwn_buf, history), (p, (((srow, krow), erow), div))| {
                    let x0 = init.draw(seed, p);
                    let (fgn, gwn): (&[f64], &[f64]) = match &noise {
                        NoiseInput::Stored(e) => (
                            e.fgn.row(p).to_slice().expect("standard layout"),
                            e.gwn.row(p).to_slice().expect("standard layout"),
                        ),
                        NoiseInput::Sampled { sampler, .. } => {
                            sampler.fill_path(seed, p, fgn_buf, gwn_buf);
                            (fgn_buf.as_slice(), gwn_buf.as_slice())
                        }
                    };
                    let rows = PathRows {
                        states: srow,
                        kernel: krow,
                        exponent: erow,
                    };
                    *div = integrate_path(spec, x0, fgn, gwn, dt, plan, &weights, history, rows);
                },
            );
    }

    let ensemble = PathEnsemble {
        label: spec.label.clone(),
        dt,
        n_steps,
        seed,
        times: plan.steps.iter().map(|&s| s as f64 * dt).collect(),
        steps: plan.steps.clone(),
        states,
        exponent,
        kernel: plan.kernel.zip(kernel),
        divergent,
    };
    check_divergence(&ensemble)?;
    Ok(ensemble)
}

fn check_divergence(ensemble: &PathEnsemble) -> Result<()> {
    let bad = ensemble.divergent_count();
    let total = ensemble.n_paths();
    let frac = bad as f64 / total as f64;
    if frac > DIVERGENCE_FAIL {
        return Err(Error::Divergence { divergent: bad, total });
    }
    if frac > DIVERGENCE_WARN {
        log::warn!(
            "{bad} of {total} paths diverged ({}); excluded from statistics",
            ensemble.label
        );
    }
    Ok(())
}

/// Integrates every path of a stored noise ensemble, keeping all steps and
/// the cumulative memory exponent.
pub fn simulate_ensemble(spec: &SystemSpec, init: InitialLaw, noise: &NoiseEnsemble) -> Result<PathEnsemble> {
    let plan = RecordPlan::all_steps(noise.grid.n_steps());
    run(spec, init, NoiseInput::Stored(noise), noise.seed, &plan)
}

/// Streams noise path by path from `sampler` and keeps only the planned steps.
///
/// Bit-identical to [`simulate_ensemble`] on `sampler.sample(n_paths, seed)`
/// at the recorded steps.
pub fn simulate_streaming(
    spec: &SystemSpec,
    init: InitialLaw,
    sampler: &NoiseSampler,
    n_paths: usize,
    seed: u64,
    plan: &RecordPlan,
) -> Result<PathEnsemble> {
    run(spec, init, NoiseInput::Sampled { sampler, n_paths }, seed, plan)
}

/// Histogram density of the non-divergent samples at a recorded column.
///
/// Normalised so that the trapezoid mass equals the fraction of samples
/// that fall inside the grid.
pub fn empirical_pdf(ensemble: &PathEnsemble, t_index: usize, grid: &Grid1D) -> Result<PdfField> {
    let samples = ensemble.samples(t_index)?;
    let t = ensemble.times[t_index];
    histogram_pdf(&samples, t, grid)
}

pub fn histogram_pdf(samples: &[f64], t: f64, grid: &Grid1D) -> Result<PdfField> {
    if samples.is_empty() {
        return Err(Error::Samples("no non-divergent samples".into()));
    }
    let mut counts = vec![0usize; grid.n_cells()];
    let mut inside = 0usize;
    for &x in samples {
        if let Some(i) = grid.cell_of(x) {
            counts[i] += 1;
            inside += 1;
        }
    }
    let fraction = inside as f64 / samples.len() as f64;
    if fraction < 0.9 {
        return Err(Error::Samples(format!(
            "only {:.2}% of samples fall inside [{}, {}]",
            100.0 * fraction,
            grid.x_min(),
            grid.x_max()
        )));
    }
    if fraction < 0.995 {
        log::warn!(
            "{:.3}% of samples fall outside the histogram grid",
            100.0 * (1.0 - fraction)
        );
    }
    let scale = 1.0 / (samples.len() as f64 * grid.dx());
    let mut values: Vec<f64> = counts.iter().map(|&c| c as f64 * scale).collect();
    let mass = grid.trapezoid(&values);
    if mass > 0.0 {
        let fix = fraction / mass;
        values.iter_mut().for_each(|v| *v *= fix);
    }
    Ok(PdfField { values, t })
}

/// Sample mean, standard deviation, skewness and kurtosis at a recorded column.
pub fn empirical_moments(ensemble: &PathEnsemble, t_index: usize) -> Result<MomentSet> {
    sample_moments(&ensemble.samples(t_index)?)
}

/// Standard sample statistics: `n−1` variance, biased standardized 3rd/4th moments.
pub fn sample_moments(samples: &[f64]) -> Result<MomentSet> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Samples(format!("need at least 2 samples, got {n}")));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let (skewness, kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
    } else {
        (None, None)
    };
    Ok(MomentSet {
        mean,
        std,
        skewness,
        kurtosis,
    })
}

/// Conditional mean of the per-path memory functional, binned by `X_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    pub t: f64,
    /// `None` where fewer than [`KERNEL_BIN_FLOOR`] paths landed.
    pub values: Vec<Option<f64>>,
    /// Standard error of each bin mean.
    pub std_err: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

/// Monte Carlo estimate of `Ψ(x,t) = E[∫_0^t exp{∫_s^t φ₁ du + ∫_s^t φ₂ dW} φ(t,s) ds | X_t = x]`.
pub fn mc_kernel_estimate(
    spec: &SystemSpec,
    ensemble: &PathEnsemble,
    t_index: usize,
    hurst: HurstParam,
    grid: &Grid1D,
) -> Result<KernelField> {
    let col = ensemble.column(t_index)?;
    if spec.label != ensemble.label {
        return Err(Error::domain(format!(
            "ensemble was simulated for '{}', not '{}'",
            ensemble.label, spec.label
        )));
    }
    let functional: Vec<f64> = match (&ensemble.kernel, &ensemble.exponent) {
        (Some((h, k)), _) if *h == hurst => k.column(col).to_vec(),
        (_, Some(exp)) => {
            let step = ensemble.steps[col];
            let weights = kernel_weights(hurst, step, ensemble.dt);
            exp.rows()
                .into_iter()
                .map(|row| memory_functional(row.as_slice().expect("standard layout"), &weights))
                .collect()
        }
        _ => {
            return Err(Error::domain(
                "ensemble carries neither the memory functional nor the exponent history",
            ))
        }
    };

    let n = grid.n_cells();
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for ((&x, &v), &div) in ensemble
        .states
        .column(col)
        .iter()
        .zip(&functional)
        .zip(&ensemble.divergent)
    {
        if div || !v.is_finite() {
            continue;
        }
        if let Some(i) = grid.cell_of(x) {
            sum[i] += v;
            sum_sq[i] += v * v;
            counts[i] += 1;
        }
    }
    let mut values = vec![None; n];
    let mut std_err = vec![None; n];
    for i in 0..n {
        let c = counts[i];
        if c >= KERNEL_BIN_FLOOR {
            let cf = c as f64;
            let mean = sum[i] / cf;
            let var = ((sum_sq[i] / cf - mean * mean) * cf / (cf - 1.0)).max(0.0);
            values[i] = Some(mean);
            std_err[i] = Some((var / cf).sqrt());
        }
    }
    Ok(KernelField {
        t: ensemble.times[col],
        values,
        std_err,
        counts,
    })
}
