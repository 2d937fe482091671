//! Experiment pipeline: solve, simulate, compare, then serialize.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::info;
use serde_json::{Map, Number, Value};

use memfpk_core::analytic::{ou_mean, ou_pdf_nodes, ou_variance};
use memfpk_core::fgn::{HurstParam, IncrementGrid, NoiseSampler};
use memfpk_core::fpk::{solve_memfpk, Grid1D, KernelMode, PdfField, PdfSurface, SolverOptions};
use memfpk_core::kernel::VadaOrder;
use memfpk_core::models::verhulst_printed_rate;
use memfpk_core::sde::{
    histogram_pdf, mc_kernel_estimate, sample_moments, simulate_streaming, InitialLaw, PathEnsemble, RecordPlan,
    SystemSpec,
};
use memfpk_core::stats::{compare_surfaces, moments_from_pdf, pdf_to_cdf, MomentSet, SurfaceComparison};

use crate::config::{Echo, KernelChoice, KernelExponent, Method, Scenario, ScenarioConfig};
use crate::error::CliError;
use crate::scenario;

/// Density rows, CDF rows and moments of one method.
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub surface: PdfSurface,
    pub moments: Vec<MomentSet>,
}

/// One memory-exponent variant scored against the Monte Carlo kernel oracle.
#[derive(Debug, Clone)]
pub struct VariantScore {
    pub exponent: KernelExponent,
    pub times: Vec<f64>,
    /// Mean `|Ψ − Ψ_mc| / |Ψ_mc|` over bins with `p ≥ 0.1 max p`.
    pub oracle_rel: Vec<f64>,
    pub oracle_bins: Vec<usize>,
    pub l1_vs_mcs: Vec<f64>,
}

impl VariantScore {
    pub fn mean_oracle_rel(&self) -> f64 {
        self.oracle_rel.iter().sum::<f64>() / self.oracle_rel.len().max(1) as f64
    }
}

/// Everything a run produces, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub grid: Grid1D,
    pub results: Vec<MethodResult>,
    pub comparisons: Vec<(Method, Method, SurfaceComparison)>,
    pub variants: Vec<VariantScore>,
    pub divergent_paths: Option<usize>,
    pub effective_kernel_mode: Option<KernelMode>,
    pub timing: Vec<(&'static str, f64)>,
}

impl RunOutput {
    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }

    pub fn comparison(&self, method: Method, reference: Method) -> Option<&SurfaceComparison> {
        self.comparisons
            .iter()
            .find(|(m, r, _)| *m == method && *r == reference)
            .map(|(_, _, c)| c)
    }

    /// The exponent variant closer to the kernel oracle, when both were scored.
    pub fn favoured_exponent(&self) -> Option<KernelExponent> {
        self.variants
            .iter()
            .min_by(|a, b| a.mean_oracle_rel().total_cmp(&b.mean_oracle_rel()))
            .map(|v| v.exponent)
    }
}

fn steps_of(t: f64, dt: f64, what: &str) -> Result<usize, CliError> {
    let n = (t / dt).round();
    if (n * dt - t).abs() > 1e-9 * t.max(1.0) {
        return Err(CliError::config(format!("{what} = {t} is not a multiple of {dt}")));
    }
    Ok(n as usize)
}

fn solver_options(cfg: &ScenarioConfig, mode: KernelMode, exponent: KernelExponent) -> SolverOptions {
    let mut opts = SolverOptions::new(cfg.dt, cfg.t_end, cfg.output_times.clone(), mode);
    opts.macro_refresh = cfg.macro_refresh;
    opts.vada_order = match cfg.vada_order {
        1 => VadaOrder::First,
        2 => VadaOrder::Second,
        _ => VadaOrder::Third,
    };
    if exponent == KernelExponent::PaperPrinted {
        // validated as verhulst-only
        opts.rate_override = cfg.params.get("beta").map(|&b| verhulst_printed_rate(b));
    }
    opts
}

fn memfpk_moments(surface: &PdfSurface) -> Result<Vec<MomentSet>, CliError> {
    Ok(surface
        .fields
        .iter()
        .map(|f| moments_from_pdf(f, &surface.grid))
        .collect::<Result<_, _>>()?)
}

fn simulate(
    cfg: &ScenarioConfig,
    spec: &SystemSpec,
    init: InitialLaw,
    hurst: HurstParam,
    with_kernel: bool,
) -> Result<PathEnsemble, CliError> {
    let n_steps = steps_of(cfg.t_end, cfg.mcs_dt, "t_end")?;
    let steps = cfg
        .output_times
        .iter()
        .map(|&t| steps_of(t, cfg.mcs_dt, "output time"))
        .collect::<Result<Vec<_>, _>>()?;
    let sampler = NoiseSampler::new(hurst, IncrementGrid::new(n_steps, cfg.mcs_dt)?)?;
    let plan = RecordPlan {
        steps,
        kernel: with_kernel.then_some(hurst),
        full_exponent: false,
    };
    Ok(simulate_streaming(
        spec,
        init,
        &sampler,
        cfg.mcs_paths,
        cfg.seed,
        &plan,
    )?)
}

fn score_variant(
    exponent: KernelExponent,
    surface: &PdfSurface,
    mcs: &PdfSurface,
    spec: &SystemSpec,
    ensemble: &PathEnsemble,
    hurst: HurstParam,
    dt: f64,
) -> Result<VariantScore, CliError> {
    let grid = surface.grid;
    let mut score = VariantScore {
        exponent,
        times: Vec::new(),
        oracle_rel: Vec::new(),
        oracle_bins: Vec::new(),
        l1_vs_mcs: compare_surfaces(surface, mcs)?.l1_per_time,
    };
    for (k, field) in surface.fields.iter().enumerate() {
        if field.t <= 0.0 {
            continue;
        }
        let oracle = mc_kernel_estimate(spec, ensemble, k, hurst, &grid)?;
        let coeffs = surface
            .coefficients_at(field.t, 0.5 * dt)
            .ok_or_else(|| memfpk_core::Error::domain(format!("no coefficient snapshot at t = {}", field.t)))?;
        let peak = field.values.iter().copied().fold(0.0, f64::max);
        let (mut acc, mut bins) = (0.0, 0usize);
        for i in 0..grid.n_cells() {
            let (Some(v), true) = (oracle.values[i], field.values[i] >= 0.1 * peak) else {
                continue;
            };
            let x = grid.node(i);
            let (g, h) = ((spec.g)(x), (spec.h)(x));
            let psi = (coeffs.diffusion[i] - 0.5 * g * g) / (h * h);
            acc += ((psi - v) / v).abs();
            bins += 1;
        }
        score.times.push(field.t);
        score
            .oracle_rel
            .push(if bins > 0 { acc / bins as f64 } else { f64::NAN });
        score.oracle_bins.push(bins);
    }
    Ok(score)
}

/// Runs every requested method and comparison without writing anything.
pub fn execute(cfg: &ScenarioConfig) -> Result<RunOutput, CliError> {
    let (spec, init) = scenario::build_system(cfg)?;
    let grid = scenario::build_grid(cfg)?;
    let hurst = scenario::hurst(cfg)?;
    for &t in &cfg.output_times {
        steps_of(t, cfg.dt, "output time")?;
    }
    steps_of(cfg.t_end, cfg.dt, "t_end")?;

    let mut out = RunOutput {
        config: cfg.clone(),
        grid,
        results: Vec::new(),
        comparisons: Vec::new(),
        variants: Vec::new(),
        divergent_paths: None,
        effective_kernel_mode: None,
        timing: Vec::new(),
    };

    let mut mode = scenario::kernel_mode(cfg)?;
    if grid.nodes().all(|x| (spec.h)(x) == 0.0) {
        // Without fractional forcing the memory term vanishes.
        mode = KernelMode::Classical;
    }
    let scored = cfg.scenario == Scenario::Verhulst
        && mode == KernelMode::Vada
        && cfg.methods.contains(&Method::MemFpk)
        && cfg.methods.contains(&Method::Mcs);

    let mut memfpk_surfaces = Vec::new();
    if cfg.methods.contains(&Method::MemFpk) {
        out.effective_kernel_mode = Some(mode);
        let clock = Instant::now();
        let exponents = if scored {
            let other = match cfg.kernel_exponent {
                KernelExponent::Eq4 => KernelExponent::PaperPrinted,
                KernelExponent::PaperPrinted => KernelExponent::Eq4,
            };
            vec![cfg.kernel_exponent, other]
        } else {
            vec![cfg.kernel_exponent]
        };
        for e in exponents {
            info!("memFPK solve ({}, exponent {})", cfg.scenario.name(), e.name());
            let surface = solve_memfpk(&spec, init, hurst, &grid, &solver_options(cfg, mode, e))?;
            memfpk_surfaces.push((e, surface));
        }
        out.timing.push(("memfpk", clock.elapsed().as_secs_f64()));
        let surface = memfpk_surfaces[0].1.clone();
        out.results.push(MethodResult {
            method: Method::MemFpk,
            moments: memfpk_moments(&surface)?,
            surface,
        });
    }

    let mut ensemble = None;
    if cfg.methods.contains(&Method::Mcs) {
        let clock = Instant::now();
        info!("Monte Carlo: {} paths, dt = {}", cfg.mcs_paths, cfg.mcs_dt);
        let ens = simulate(cfg, &spec, init, hurst, scored)?;
        let mut fields = Vec::new();
        let mut moments = Vec::new();
        for (k, &t) in cfg.output_times.iter().enumerate() {
            let samples = ens.samples(k)?;
            fields.push(histogram_pdf(&samples, t, &grid)?);
            moments.push(sample_moments(&samples)?);
        }
        out.divergent_paths = Some(ens.divergent_count());
        out.timing.push(("mcs", clock.elapsed().as_secs_f64()));
        out.results.push(MethodResult {
            method: Method::Mcs,
            surface: PdfSurface::from_fields(grid, fields)?,
            moments,
        });
        ensemble = Some(ens);
    }

    if cfg.methods.contains(&Method::Analytic) {
        let clock = Instant::now();
        let p = scenario::ou_params(cfg)?;
        let nodes = grid.node_vec();
        let mut fields = Vec::new();
        let mut moments = Vec::new();
        for &t in &cfg.output_times {
            fields.push(PdfField {
                values: ou_pdf_nodes(&p, &nodes, t)?,
                t,
            });
            moments.push(MomentSet {
                mean: ou_mean(&p, t)?,
                std: ou_variance(&p, t)?.sqrt(),
                skewness: Some(0.0),
                kurtosis: Some(3.0),
            });
        }
        out.timing.push(("analytic", clock.elapsed().as_secs_f64()));
        out.results.push(MethodResult {
            method: Method::Analytic,
            surface: PdfSurface::from_fields(grid, fields)?,
            moments,
        });
    }

    let clock = Instant::now();
    if let Some(memfpk) = out.result(Method::MemFpk).cloned() {
        for reference in [Method::Analytic, Method::Mcs] {
            if let Some(r) = out.result(reference) {
                let c = compare_surfaces(&memfpk.surface, &r.surface)?;
                out.comparisons.push((Method::MemFpk, reference, c));
            }
        }
    }
    if let (Some(ens), Some(mcs)) = (&ensemble, out.result(Method::Mcs)) {
        if scored {
            let mut variants = Vec::new();
            for (e, surface) in &memfpk_surfaces {
                variants.push(score_variant(*e, surface, &mcs.surface, &spec, ens, hurst, cfg.dt)?);
            }
            out.variants = variants;
        }
    }
    out.timing.push(("comparison", clock.elapsed().as_secs_f64()));
    Ok(out)
}

/// 17 significant digits; non-finite values become `null`.
pub fn json_num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float parses"))
    } else {
        Value::Null
    }
}

fn json_nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| json_num(x)).collect())
}

fn json_opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, json_num)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn report_json(out: &RunOutput) -> Value {
    let mut root = Map::new();

    let mut config = Map::new();
    for (k, v) in out.config.echo() {
        let value = match v {
            Echo::Text(s) => Value::String(s),
            Echo::Num(x) => json_num(x),
            Echo::Int(i) => Value::Number(i.into()),
            Echo::Nums(xs) => json_nums(&xs),
        };
        config.insert(k.to_string(), value);
    }
    root.insert("config".into(), Value::Object(config));

    let mut metrics = Map::new();
    for (method, reference, c) in &out.comparisons {
        let mut m = Map::new();
        m.insert("times".into(), json_nums(&c.times));
        m.insert("linf".into(), json_num(c.linf));
        m.insert("linf_per_time".into(), json_nums(&c.linf_per_time));
        m.insert("l1_per_time".into(), json_nums(&c.l1_per_time));
        if let (Some(a), Some(b)) = (out.result(*method), out.result(*reference)) {
            let pairs = a.moments.iter().zip(&b.moments);
            let means: Vec<f64> = pairs.clone().map(|(x, y)| rel(x.mean, y.mean)).collect();
            let stds: Vec<f64> = pairs.map(|(x, y)| rel(x.std, y.std)).collect();
            let diffs: Vec<f64> = a
                .moments
                .iter()
                .zip(&b.moments)
                .map(|(x, y)| (x.mean - y.mean).abs())
                .collect();
            m.insert("mean_abs_diff_per_time".into(), json_nums(&diffs));
            m.insert("mean_rel_per_time".into(), json_nums(&means));
            m.insert("std_rel_per_time".into(), json_nums(&stds));
        }
        metrics.insert(format!("{}_vs_{}", method.name(), reference.name()), Value::Object(m));
    }
    if !out.variants.is_empty() {
        let mut v = Map::new();
        for s in &out.variants {
            let mut m = Map::new();
            m.insert("times".into(), json_nums(&s.times));
            m.insert("oracle_rel_per_time".into(), json_nums(&s.oracle_rel));
            m.insert(
                "oracle_bins".into(),
                Value::Array(s.oracle_bins.iter().map(|&b| Value::Number(b.into())).collect()),
            );
            m.insert("oracle_rel_mean".into(), json_num(s.mean_oracle_rel()));
            m.insert("l1_vs_mcs_per_time".into(), json_nums(&s.l1_vs_mcs));
            v.insert(s.exponent.name().into(), Value::Object(m));
        }
        if let Some(f) = out.favoured_exponent() {
            v.insert("favoured".into(), Value::String(f.name().into()));
        }
        metrics.insert("kernel_exponent".into(), Value::Object(v));
    }
    root.insert("metrics".into(), Value::Object(metrics));

    if let Some(r) = out.result(Method::MemFpk) {
        let s = &r.surface;
        let masses: Vec<f64> = s.mass_history.iter().map(|&(_, m)| m).collect();
        let mut mass = Map::new();
        mass.insert(
            "min".into(),
            json_num(masses.iter().copied().fold(f64::INFINITY, f64::min)),
        );
        mass.insert(
            "max".into(),
            json_num(masses.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        );
        mass.insert("max_abs_error".into(), json_num(s.max_mass_error()));
        root.insert("mass".into(), Value::Object(mass));
        root.insert("min_density".into(), json_num(s.min_density));
        root.insert("clamp_events".into(), Value::Number(s.clamp_events().into()));
        root.insert("init_sigma".into(), json_opt(s.init_sigma));
    }
    if let Some(mode) = out.effective_kernel_mode {
        let name = match mode {
            KernelMode::Vada => KernelChoice::Vada.name(),
            KernelMode::ClosedCaseII => KernelChoice::ClosedCaseII.name(),
            KernelMode::ClosedCaseIV { .. } => KernelChoice::ClosedCaseIV.name(),
            KernelMode::Classical => KernelChoice::Classical.name(),
        };
        root.insert("effective_kernel_mode".into(), Value::String(name.into()));
    }
    if let Some(d) = out.divergent_paths {
        root.insert("divergent_paths".into(), Value::Number(d.into()));
    }
    let mut timing = Map::new();
    for (phase, secs) in &out.timing {
        timing.insert((*phase).into(), json_num(*secs));
    }
    root.insert("timing_s".into(), Value::Object(timing));
    Value::Object(root)
}

fn header(grid: &Grid1D) -> String {
    let mut s = String::from("method,t");
    for x in grid.nodes() {
        s.push_str(&format!(",{x:.16e}"));
    }
    s.push('\n');
    s
}

fn row(method: Method, t: f64, values: &[f64]) -> String {
    let mut s = format!("{},{t:.16e}", method.name());
    for v in values {
        s.push_str(&format!(",{v:.16e}"));
    }
    s.push('\n');
    s
}

fn opt_cell(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), |v| format!("{v:.16e}"))
}

/// `(file name, contents)` of every artifact.
pub fn render(out: &RunOutput) -> Vec<(&'static str, String)> {
    let mut pdf = header(&out.grid);
    let mut cdf = header(&out.grid);
    let mut moments = String::from("method,t,mean,std,skewness,kurtosis\n");
    for r in &out.results {
        for (field, m) in r.surface.fields.iter().zip(&r.moments) {
            pdf.push_str(&row(r.method, field.t, &field.values));
            cdf.push_str(&row(r.method, field.t, &pdf_to_cdf(field, &out.grid)));
            moments.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{},{}\n",
                r.method.name(),
                field.t,
                m.mean,
                m.std,
                opt_cell(m.skewness),
                opt_cell(m.kurtosis)
            ));
        }
    }
    let report = serde_json::to_string_pretty(&report_json(out)).expect("report serializes") + "\n";
    vec![
        ("pdf_surface.csv", pdf),
        ("cdf.csv", cdf),
        ("moments.csv", moments),
        ("report.json", report),
    ]
}

/// Writes all artifacts into `dir`, removing any already written if one fails.
pub fn write_artifacts(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, contents) in render(out) {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, contents) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            let _ = std::fs::remove_file(&path);
            return Err(e.into());
        }
        written.push(path);
    }
    Ok(written)
}

/// Executes the configuration and writes its artifacts.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, CliError> {
    let out = execute(cfg)?;
    write_artifacts(&out, &cfg.out_dir)?;
    Ok(out)
}
