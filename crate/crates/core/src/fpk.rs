//! Explicit finite-volume integrator for the memory Fokker–Planck equation
//! `∂p/∂t = −∂x(a p) + ∂xx(b p)` on a cell-centred grid with zero-flux walls.

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::fgn::HurstParam;
use crate::kernel::{
    self, commutativity_check, kernel_case_constant, kernel_case_linear, moment_exponent, vada_kernel_moments,
    vada_psi_order, vada_record_mean, KernelMoments, VadaOrder, VadaState, DIFFUSION_FLOOR,
};
use crate::sde::{InitialLaw, ScalarFn, SystemSpec};

/// Densities below this value are a solver failure.
pub const NEGATIVITY_TOL: f64 = -1e-8;
/// Width of the Gaussian standing in for a point initial law, in cells.
pub const POINT_WIDTH_CELLS: f64 = 2.0;
const STABILITY_MARGIN: f64 = 0.9;
const INIT_SIGMAS: f64 = 4.0;

/// Uniform cell-centred grid on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::domain(format!(
                "grid needs x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_cells < 8 {
            return Err(Error::domain(format!("grid needs at least 8 cells, got {n_cells}")));
        }
        Ok(Self { x_min, x_max, n_cells })
    }

    /// Grid with spacing `dx`; the span must hold a whole number of cells.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::domain(format!("dx must be positive, got {dx}")));
        }
        let cells = (x_max - x_min) / dx;
        let n = cells.round();
        if (cells - n).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::domain(format!(
                "dx = {dx} does not divide [{x_min}, {x_max}] into whole cells"
            )));
        }
        Self::new(x_min, x_max, n as usize)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.node(i))
    }

    pub fn node_vec(&self) -> Vec<f64> {
        self.nodes().collect()
    }

    /// Cell containing `x`; the right wall belongs to the last cell.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.x_min && x <= self.x_max) {
            return None;
        }
        let i = ((x - self.x_min) / self.dx()).floor() as usize;
        Some(i.min(self.n_cells - 1))
    }

    /// Trapezoid rule over `[x_min, x_max]`, with node values held constant
    /// across the two half cells next to the walls.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_cells);
        values.iter().sum::<f64>() * self.dx()
    }
}

/// Density sampled at the grid nodes at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfField {
    pub values: Vec<f64>,
    pub t: f64,
}

impl PdfField {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Drift and diffusion at every node at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSnapshot {
    pub t: f64,
    pub drift: Vec<f64>,
    pub diffusion: Vec<f64>,
}

/// Time stack of densities plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct PdfSurface {
    pub grid: Grid1D,
    pub fields: Vec<PdfField>,
    /// `(t, trapezoid mass)` at macro and output times.
    pub mass_history: Vec<(f64, f64)>,
    /// `(t, clamp events since the previous macro time)`.
    pub clamp_history: Vec<(f64, usize)>,
    /// `(t, E[φ₁(X_t)])` at macro times; empty unless the kernel is decoupled.
    pub m1_history: Vec<(f64, f64)>,
    /// Coefficients at every macro time.
    pub coefficients: Vec<CoefficientSnapshot>,
    pub min_density: f64,
    pub init_sigma: Option<f64>,
}

impl PdfSurface {
    /// Surface without solver diagnostics, e.g. from a histogram or closed form.
    pub fn from_fields(grid: Grid1D, fields: Vec<PdfField>) -> Result<Self> {
        if fields.windows(2).any(|w| !(w[0].t < w[1].t)) {
            return Err(Error::domain("output times must be strictly increasing"));
        }
        if let Some(f) = fields.iter().find(|f| f.values.len() != grid.n_cells()) {
            return Err(Error::GridMismatch(format!(
                "field at t = {} has {} values, grid has {} nodes",
                f.t,
                f.values.len(),
                grid.n_cells()
            )));
        }
        let mass_history = fields.iter().map(|f| (f.t, grid.trapezoid(&f.values))).collect();
        let min_density = fields.iter().map(PdfField::min).fold(f64::INFINITY, f64::min);
        Ok(Self {
            grid,
            fields,
            mass_history,
            clamp_history: Vec::new(),
            m1_history: Vec::new(),
            coefficients: Vec::new(),
            min_density,
            init_sigma: None,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f.t).collect()
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_history.iter().map(|&(_, c)| c).sum()
    }

    /// Largest `|mass − 1|` over the recorded history.
    pub fn max_mass_error(&self) -> f64 {
        self.mass_history
            .iter()
            .map(|&(_, m)| (m - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn field_at(&self, t: f64, tol: f64) -> Option<&PdfField> {
        self.fields.iter().find(|f| (f.t - t).abs() <= tol)
    }

    pub fn coefficients_at(&self, t: f64, tol: f64) -> Option<&CoefficientSnapshot> {
        self.coefficients.iter().find(|c| (c.t - t).abs() <= tol)
    }
}

/// Initial density on the grid, renormalized to unit trapezoid mass.
pub fn init_pdf(init: InitialLaw, grid: &Grid1D) -> Result<PdfField> {
    let (mean, sigma) = match init {
        InitialLaw::Point { x0 } => {
            if !(x0 > grid.x_min() && x0 < grid.x_max()) {
                return Err(Error::domain(format!(
                    "initial point {x0} not strictly inside [{}, {}]",
                    grid.x_min(),
                    grid.x_max()
                )));
            }
            (x0, POINT_WIDTH_CELLS * grid.dx())
        }
        InitialLaw::Gaussian { mean, variance } => {
            let s = variance.sqrt();
            if mean - INIT_SIGMAS * s < grid.x_min() || mean + INIT_SIGMAS * s > grid.x_max() {
                return Err(Error::domain(format!(
                    "initial law N({mean}, {variance}) not contained in [{}, {}]",
                    grid.x_min(),
                    grid.x_max()
                )));
            }
            (mean, s)
        }
    };
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mut values: Vec<f64> = grid
        .nodes()
        .map(|x| {
            let z = (x - mean) / sigma;
            norm * (-0.5 * z * z).exp()
        })
        .collect();
    let mass = grid.trapezoid(&values);
    if !(mass > 0.0) {
        return Err(Error::domain("initial law has no mass on the grid"));
    }
    values.iter_mut().for_each(|v| *v /= mass);
    Ok(PdfField { values, t: 0.0 })
}

fn check_stability(drift: &[f64], diffusion: &[f64], dt: f64, dx: f64) -> Result<()> {
    let max_b = diffusion.iter().copied().fold(0.0, f64::max);
    let max_a = drift.iter().map(|a| a.abs()).fold(0.0, f64::max);
    if !(max_b.is_finite() && max_a.is_finite()) {
        return Err(Error::domain("non-finite coefficients"));
    }
    if max_b > 0.0 {
        let limit = STABILITY_MARGIN * dx * dx / (2.0 * max_b);
        if dt > limit {
            return Err(Error::Stability {
                constraint: "diffusion",
                dt,
                limit,
            });
        }
    }
    if max_a > 0.0 {
        let limit = STABILITY_MARGIN * dx / max_a;
        if dt > limit {
            return Err(Error::Stability {
                constraint: "advection",
                dt,
                limit,
            });
        }
    }
    Ok(())
}

/// Monotonized-central slope limiter.
fn mc_limit(d1: f64, d2: f64) -> f64 {
    if d1 * d2 <= 0.0 {
        0.0
    } else {
        d1.signum() * (2.0 * d1.abs()).min(2.0 * d2.abs()).min(0.5 * (d1 + d2).abs())
    }
}

/// Writes the explicit Euler update of `p` into `out`.
///
/// Advective face flux: central average of `a p` where the cell Péclet
/// number `|a|Δx/b` is at most 2 on both sides, otherwise an upwind-biased
/// limited reconstruction of `a p`.
fn step_into(p: &[f64], a: &[f64], b: &[f64], dt: f64, dx: f64, out: &mut [f64]) {
    let n = p.len();
    let r = dt / dx;
    let central = |i: usize| a[i].abs() * dx <= 2.0 * b[i];
    let q = |k: usize| a[k] * p[k];
    out.copy_from_slice(p);
    for i in 0..n - 1 {
        let j = i + 1;
        let adv = if central(i) && central(j) {
            0.5 * (q(i) + q(j))
        } else if a[i] + a[j] >= 0.0 {
            let left = if i > 0 { q(i) - q(i - 1) } else { 0.0 };
            q(i) + 0.5 * mc_limit(left, q(j) - q(i))
        } else {
            let right = if j + 1 < n { q(j + 1) - q(j) } else { 0.0 };
            q(j) - 0.5 * mc_limit(q(j) - q(i), right)
        };
        let flux = adv - (b[j] * p[j] - b[i] * p[i]) / dx;
        out[i] -= r * flux;
        out[j] += r * flux;
    }
}

/// One explicit step of the conservative flux scheme.
pub fn fd_step(p: &PdfField, a: &[f64], b: &[f64], dt: f64, grid: &Grid1D) -> Result<PdfField> {
    let n = grid.n_cells();
    if p.values.len() != n || a.len() != n || b.len() != n {
        return Err(Error::GridMismatch(
            "coefficient and density lengths must match the grid".into(),
        ));
    }
    check_stability(a, b, dt, grid.dx())?;
    let mut out = vec![0.0; n];
    step_into(&p.values, a, b, dt, grid.dx(), &mut out);
    let t = p.t + dt;
    check_negativity(&out, t)?;
    Ok(PdfField { values: out, t })
}

fn check_negativity(values: &[f64], t: f64) -> Result<()> {
    if let Some((node, &value)) = values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .filter(|(_, &v)| v < NEGATIVITY_TOL || v.is_nan())
    {
        return Err(Error::Negativity { value, node, t });
    }
    Ok(())
}

/// How the memory term `Ψ` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelMode {
    Vada,
    ClosedCaseII,
    ClosedCaseIV { alpha: f64 },
    Classical,
}

/// Time stepping and kernel options for [`solve_memfpk`].
#[derive(Clone)]
pub struct SolverOptions {
    pub dt: f64,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub kernel_mode: KernelMode,
    pub macro_refresh: f64,
    pub vada_order: VadaOrder,
    /// Replaces `φ₁` in the decoupled kernel.
    pub rate_override: Option<ScalarFn>,
}

impl SolverOptions {
    pub fn new(dt: f64, t_end: f64, output_times: Vec<f64>, kernel_mode: KernelMode) -> Self {
        Self {
            dt,
            t_end,
            output_times,
            kernel_mode,
            macro_refresh: 0.01,
            vada_order: VadaOrder::Second,
            rate_override: None,
        }
    }
}

impl std::fmt::Debug for SolverOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolverOptions")
            .field("dt", &self.dt)
            .field("t_end", &self.t_end)
            .field("output_times", &self.output_times)
            .field("kernel_mode", &self.kernel_mode)
            .field("macro_refresh", &self.macro_refresh)
            .field("vada_order", &self.vada_order)
            .field("rate_override", &self.rate_override.is_some())
            .finish()
    }
}

fn steps_for(t: f64, dt: f64, what: &str) -> Result<usize> {
    let n = (t / dt).round();
    if !(t >= 0.0) || (n * dt - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::domain(format!("{what} = {t} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

/// Kernel moments as `K_j(t) = R_j(t) t^{β_j}` with `R_j` linear between macro times.
#[derive(Debug, Clone, Copy)]
struct Anchor {
    t: f64,
    ratio: [f64; 4],
    m1: f64,
}

impl Anchor {
    fn new(moments: &KernelMoments, hurst: HurstParam, m1: f64) -> Self {
        let t = moments.t;
        let mut ratio = [0.0; 4];
        for (j, r) in ratio.iter_mut().enumerate() {
            let b = moment_exponent(hurst, j);
            *r = if t > 0.0 {
                moments.k[j] / t.powf(b)
            } else {
                hurst.value() * hurst.memory_exponent() / b
            };
        }
        Self { t, ratio, m1 }
    }
}

struct Schedule {
    mode: KernelMode,
    hurst: HurstParam,
    order: VadaOrder,
    state: Option<VadaState>,
    left: Anchor,
    right: Anchor,
}

impl Schedule {
    fn closed_moments(&self, t: f64) -> Result<KernelMoments> {
        let k0 = match self.mode {
            KernelMode::ClosedCaseII => kernel_case_constant(self.hurst, t)?,
            KernelMode::ClosedCaseIV { alpha } => kernel_case_linear(alpha, self.hurst, t)?,
            _ => 0.0,
        };
        Ok(KernelMoments {
            t,
            k: [k0, 0.0, 0.0, 0.0],
        })
    }

    /// Starts the macro interval `[t, t + refresh]`; `m1` is the current mean rate.
    fn advance(&mut self, t: f64, t_next: f64, m1: f64) -> Result<()> {
        match self.mode {
            KernelMode::Classical => {}
            KernelMode::Vada => {
                let state = self.state.as_mut().expect("vada state");
                vada_record_mean(state, t, m1)?;
                let now = vada_kernel_moments(state, t, self.hurst)?;
                let hist = state.mean_history();
                let m1_pred = match hist.len() {
                    0 | 1 => m1,
                    n => 2.0 * hist[n - 1] - hist[n - 2],
                };
                vada_record_mean(state, t_next, m1_pred)?;
                let next = vada_kernel_moments(state, t_next, self.hurst);
                state.pop();
                self.left = Anchor::new(&now, self.hurst, m1);
                self.right = Anchor::new(&next?, self.hurst, m1_pred);
            }
            _ => {
                self.left = Anchor::new(&self.closed_moments(t)?, self.hurst, 0.0);
                self.right = Anchor::new(&self.closed_moments(t_next)?, self.hurst, 0.0);
            }
        }
        Ok(())
    }

    /// Moments and mean rate at `t` inside the current macro interval.
    fn moments_at(&self, t: f64) -> (KernelMoments, f64) {
        let span = self.right.t - self.left.t;
        let w = if span > 0.0 { (t - self.left.t) / span } else { 0.0 };
        let mut k = [0.0; 4];
        for (j, kj) in k.iter_mut().enumerate() {
            let r = self.left.ratio[j] + w * (self.right.ratio[j] - self.left.ratio[j]);
            *kj = r * t.powf(moment_exponent(self.hurst, j));
        }
        let m1 = self.left.m1 + w * (self.right.m1 - self.left.m1);
        (KernelMoments { t, k }, m1)
    }

    fn psi(&self, moments: &KernelMoments, rate: f64, m1: f64) -> f64 {
        match self.mode {
            KernelMode::Classical => 0.0,
            KernelMode::Vada => vada_psi_order(moments, rate, m1, self.order),
            _ => moments.k[0],
        }
    }
}

/// Per-node coefficient pieces that do not depend on time.
struct NodeTerms {
    f_wz: Vec<f64>,
    hh: Vec<f64>,
    half_g2: Vec<f64>,
    h2: Vec<f64>,
    rate: Vec<f64>,
}

impl NodeTerms {
    fn assemble(&self, schedule: &Schedule, t: f64, a: &mut [f64], b: &mut [f64]) -> usize {
        let (moments, m1) = schedule.moments_at(t);
        let mut clamps = 0;
        for i in 0..a.len() {
            let psi = schedule.psi(&moments, self.rate[i], m1);
            a[i] = self.f_wz[i] + self.hh[i] * psi;
            let raw = self.half_g2[i] + self.h2[i] * psi;
            if raw >= DIFFUSION_FLOOR {
                b[i] = raw;
            } else {
                b[i] = DIFFUSION_FLOOR;
                clamps += 1;
            }
        }
        clamps
    }
}

/// Integrates the memory Fokker–Planck equation from `init` to `t_end`.
///
/// Coefficients are evaluated at the midpoint of each micro step. Kernel
/// moments are refreshed every `macro_refresh` and interpolated in between.
pub fn solve_memfpk(
    spec: &SystemSpec,
    init: InitialLaw,
    hurst: HurstParam,
    grid: &Grid1D,
    opts: &SolverOptions,
) -> Result<PdfSurface> {
    let dt = opts.dt;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    let n_steps = steps_for(opts.t_end, dt, "t_end")?;
    if n_steps == 0 {
        return Err(Error::domain("t_end must be positive"));
    }
    let per_macro = steps_for(opts.macro_refresh, dt, "macro refresh")?.max(1);
    let refresh = per_macro as f64 * dt;
    let mut output_steps = Vec::with_capacity(opts.output_times.len());
    for &t in &opts.output_times {
        let s = steps_for(t, dt, "output time")?;
        if s > n_steps {
            return Err(Error::domain(format!("output time {t} beyond t_end = {}", opts.t_end)));
        }
        if output_steps.last().is_some_and(|&last| last >= s) {
            return Err(Error::domain("output times must be strictly increasing"));
        }
        output_steps.push(s);
    }

    let nodes = grid.node_vec();
    let n = nodes.len();
    let eval = |fun: &ScalarFn| nodes.iter().map(|&x| fun(x)).collect::<Vec<_>>();
    let (f, g, gp, h, hp) = (
        eval(&spec.f),
        eval(&spec.g),
        eval(&spec.g_prime),
        eval(&spec.h),
        eval(&spec.h_prime),
    );
    let mut rate = vec![0.0; n];

    match opts.kernel_mode {
        KernelMode::Vada => {
            if !commutativity_check(spec, grid, 1e-10) {
                return Err(Error::KernelRefused(format!(
                    "system '{}' violates g h' = h g' on the grid; the decoupled kernel does not apply",
                    spec.label
                )));
            }
            for (i, &x) in nodes.iter().enumerate() {
                rate[i] = match &opts.rate_override {
                    Some(r) => {
                        kernel::phi1(spec, x)?;
                        r(x)
                    }
                    None => kernel::phi1(spec, x)?,
                };
            }
        }
        KernelMode::ClosedCaseIV { .. } | KernelMode::ClosedCaseII => {
            if hp.iter().any(|&v| v != 0.0) {
                return Err(Error::KernelRefused(format!(
                    "closed-form kernel needs constant h, system '{}' has h' != 0",
                    spec.label
                )));
            }
        }
        KernelMode::Classical => {}
    }

    let terms = NodeTerms {
        f_wz: (0..n).map(|i| f[i] + 0.5 * g[i] * gp[i]).collect(),
        hh: (0..n).map(|i| h[i] * hp[i]).collect(),
        half_g2: g.iter().map(|v| 0.5 * v * v).collect(),
        h2: h.iter().map(|v| v * v).collect(),
        rate,
    };

    let p0 = init_pdf(init, grid)?;
    let init_sigma = matches!(init, InitialLaw::Point { .. }).then(|| POINT_WIDTH_CELLS * grid.dx());
    let zero = Anchor::new(&KernelMoments::zero(0.0), hurst, 0.0);
    let mut schedule = Schedule {
        mode: opts.kernel_mode,
        hurst,
        order: opts.vada_order,
        state: match opts.kernel_mode {
            KernelMode::Vada => Some(VadaState::new(refresh, 0.5 * dt)?),
            _ => None,
        },
        left: zero,
        right: zero,
    };

    let mut surface = PdfSurface {
        grid: *grid,
        fields: Vec::with_capacity(output_steps.len()),
        mass_history: Vec::new(),
        clamp_history: Vec::new(),
        m1_history: Vec::new(),
        coefficients: Vec::new(),
        min_density: p0.min(),
        init_sigma,
    };
    let mut outputs = output_steps.iter().peekable();
    if outputs.peek() == Some(&&0) {
        surface.fields.push(p0.clone());
        outputs.next();
    }

    let dx = grid.dx();
    let mut p = p0.values;
    let mut next = vec![0.0; n];
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    let mut clamps = 0usize;
    for step in 0..n_steps {
        let t = step as f64 * dt;
        if step % per_macro == 0 {
            let k = step / per_macro;
            let t_macro = k as f64 * refresh;
            let m1 = if opts.kernel_mode == KernelMode::Vada {
                let weighted: Vec<f64> = p.iter().zip(&terms.rate).map(|(pi, r)| pi * r).collect();
                grid.trapezoid(&weighted)
            } else {
                0.0
            };
            schedule.advance(t_macro, t_macro + refresh, m1)?;
            if opts.kernel_mode == KernelMode::Vada {
                surface.m1_history.push((t_macro, m1));
            }
            let (mut sa, mut sb) = (vec![0.0; n], vec![0.0; n]);
            terms.assemble(&schedule, t_macro, &mut sa, &mut sb);
            surface.coefficients.push(CoefficientSnapshot {
                t: t_macro,
                drift: sa,
                diffusion: sb,
            });
            surface.mass_history.push((t_macro, grid.trapezoid(&p)));
            if k > 0 {
                surface.clamp_history.push((t_macro, clamps));
                clamps = 0;
            }
        }
        clamps += terms.assemble(&schedule, t + 0.5 * dt, &mut a, &mut b);
        check_stability(&a, &b, dt, dx)?;
        step_into(&p, &a, &b, dt, dx, &mut next);
        std::mem::swap(&mut p, &mut next);
        let t_new = (step + 1) as f64 * dt;
        check_negativity(&p, t_new)?;
        let low = p.iter().copied().fold(f64::INFINITY, f64::min);
        surface.min_density = surface.min_density.min(low);
        if outputs.peek() == Some(&&(step + 1)) {
            outputs.next();
            let mass = grid.trapezoid(&p);
            if (mass - 1.0).abs() > 1e-6 {
                warn!("mass {mass} at t = {t_new}");
            }
            surface.mass_history.push((t_new, mass));
            surface.fields.push(PdfField {
                values: p.clone(),
                t: t_new,
            });
        }
    }
    surface.clamp_history.push((opts.t_end, clamps));
    if n_steps % per_macro == 0 {
        let t_macro = n_steps as f64 * dt;
        let m1 = if opts.kernel_mode == KernelMode::Vada {
            let weighted: Vec<f64> = p.iter().zip(&terms.rate).map(|(pi, r)| pi * r).collect();
            let m1 = grid.trapezoid(&weighted);
            surface.m1_history.push((t_macro, m1));
            m1
        } else {
            0.0
        };
        schedule.advance(t_macro, t_macro + refresh, m1)?;
        let (mut sa, mut sb) = (vec![0.0; n], vec![0.0; n]);
        terms.assemble(&schedule, t_macro, &mut sa, &mut sb);
        surface.coefficients.push(CoefficientSnapshot {
            t: t_macro,
            drift: sa,
            diffusion: sb,
        });
    }
    surface.mass_history.sort_by(|x, y| x.0.total_cmp(&y.0));
    debug!(
        "memFPK '{}' finished: {} steps, {} clamp events",
        spec.label,
        n_steps,
        surface.clamp_events()
    );
    Ok(surface)
}
