//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion is red.

use std::io::Write;
use std::time::Instant;

use gauss_quad::{GaussJacobi, GaussLegendre};
use memfpk_cli::config::{Method, RawConfig, ScenarioConfig};
use memfpk_cli::run::{execute, RunOutput};
use memfpk_core::analytic::{ou_variance, OuParams};
use memfpk_core::fgn::{fgn_increment_autocov, HurstParam, IncrementGrid, NoiseSampler};
use memfpk_core::fpk::{solve_memfpk, Grid1D, KernelMode, SolverOptions};
use memfpk_core::kernel::kernel_case_linear;
use memfpk_core::models;
use memfpk_core::sde::{sample_moments, simulate_streaming, InitialLaw, RecordPlan};
use memfpk_core::special::upper_incomplete_gamma;
use memfpk_core::stats::compare_surfaces;
use statrs::function::erf::erfc;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome) {
    let mut out = std::io::stdout().lock();
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "[{verdict}] criterion {id:>2} {name}: {}", o.detail);
}

fn config(pairs: &[(&str, &str)]) -> ScenarioConfig {
    let mut raw = RawConfig::default();
    for (k, v) in pairs {
        raw.set(k, *v).unwrap();
    }
    ScenarioConfig::resolve(&raw).unwrap()
}

fn hp(h: f64) -> HurstParam {
    HurstParam::new(h).unwrap()
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

fn ou_run(h: f64, dx: f64) -> (RunOutput, f64) {
    let cfg = config(&[
        ("scenario", "ou"),
        ("hurst", &h.to_string()),
        ("dx", &dx.to_string()),
        ("method", "memfpk,analytic"),
    ]);
    let clock = Instant::now();
    let out = execute(&cfg).unwrap();
    (out, clock.elapsed().as_secs_f64())
}

fn criterion_1(runs: &[(f64, RunOutput, f64)]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (h, out, secs) in runs {
        let c = out.comparison(Method::MemFpk, Method::Analytic).unwrap();
        let mem = out.result(Method::MemFpk).unwrap();
        let exact = out.result(Method::Analytic).unwrap();
        let (mut dm, mut ds, mut dk, mut sk) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (k, f) in mem.surface.fields.iter().enumerate() {
            if ![0.5, 1.0, 2.0].contains(&f.t) {
                continue;
            }
            let (m, e) = (&mem.moments[k], &exact.moments[k]);
            dm = dm.max(((m.mean - e.mean) / e.mean).abs());
            ds = ds.max(((m.std - e.std) / e.std).abs());
            sk = sk.max(m.skewness.unwrap().abs());
            dk = dk.max((m.kurtosis.unwrap() / 3.0 - 1.0).abs());
        }
        let ok = c.linf <= 1e-2 && dm <= 0.01 && ds <= 0.01 && sk <= 0.02 && dk <= 0.02 && *secs <= 120.0;
        pass &= ok;
        detail.push(format!(
            "H={h}: Linf {:.2e}, mean {:.1e}, std {:.1e}, |skew| {:.1e}, kurt {:.1e}, {:.2}s",
            c.linf, dm, ds, sk, dk, secs
        ));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn case_linear_oracle(alpha: f64, h: f64, t: f64) -> f64 {
    // Product integration: Gauss–Jacobi absorbs (t−s)^{2H−2} near s = t.
    let c = h * (2.0 * h - 1.0);
    let e = 2.0 * h - 2.0;
    let near = t.min(1.0);
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

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for &h in &[0.6, 0.7, 0.9] {
        for &t in &[0.1, 1.0, 10.0] {
            let closed = kernel_case_linear(1.0, hp(h), t).unwrap();
            let oracle = case_linear_oracle(1.0, h, t);
            worst = worst.max(((closed - oracle) / oracle).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("max rel error {worst:.2e}"),
    }
}

fn criterion_3() -> Outcome {
    let spec = models::ornstein_uhlenbeck(1.0, 1.0, 1.0);
    let grid = Grid1D::with_spacing(-5.0, 5.0, 0.05).unwrap();
    let init = InitialLaw::point(1.0).unwrap();
    let (mut b_err, mut s_err) = (0.0f64, 0.0f64);
    for &h in &[0.65, 0.95] {
        let run = |mode| {
            let opts = SolverOptions::new(1e-4, 2.0, vec![0.5, 1.0, 1.5, 2.0], mode);
            solve_memfpk(&spec, init, hp(h), &grid, &opts).unwrap()
        };
        let vada = run(KernelMode::Vada);
        let closed = run(KernelMode::ClosedCaseIV { alpha: 1.0 });
        for (x, y) in vada.coefficients.iter().zip(&closed.coefficients) {
            for (bv, bc) in x.diffusion.iter().zip(&y.diffusion) {
                b_err = b_err.max(((bv - bc) / bc).abs());
            }
        }
        s_err = s_err.max(compare_surfaces(&vada, &closed).unwrap().linf);
    }
    Outcome {
        pass: b_err <= 1e-6 && s_err <= 1e-6,
        detail: format!("b_mem rel {b_err:.2e}, surface Linf {s_err:.2e}"),
    }
}

fn criterion_4() -> Outcome {
    let (paths, n) = (20_000usize, 512usize);
    let dt = 1.0 / n as f64;
    let mut pass = true;
    let mut detail = Vec::new();
    for &h in &[0.6, 0.8] {
        let sampler = NoiseSampler::new(hp(h), IncrementGrid::new(n, dt).unwrap()).unwrap();
        let (mut fgn, mut gwn) = (vec![0.0; n], vec![0.0; n]);
        let mut lag_means: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(paths)).collect();
        let blocks = [1usize, 4, 16, 64];
        let mut agg = vec![0.0; blocks.len()];
        for path in 0..paths {
            sampler.fill_path(4242, path, &mut fgn, &mut gwn);
            for (lag, store) in lag_means.iter_mut().enumerate() {
                let s: f64 = (0..n - lag).map(|i| fgn[i] * fgn[i + lag]).sum();
                store.push(s / (n - lag) as f64);
            }
            for (a, &m) in agg.iter_mut().zip(&blocks) {
                *a += fgn.chunks(m).map(|c| c.iter().sum::<f64>().powi(2)).sum::<f64>() / (n / m) as f64;
            }
        }
        let mut worst_z = 0.0f64;
        for (lag, store) in lag_means.iter().enumerate() {
            let nf = paths as f64;
            let mean = store.iter().sum::<f64>() / nf;
            let var = store.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            let exact = fgn_increment_autocov(hp(h), lag, dt).unwrap();
            worst_z = worst_z.max((mean - exact).abs() / (var / nf).sqrt());
        }
        let logs: Vec<(f64, f64)> = blocks
            .iter()
            .zip(&agg)
            .map(|(&m, &a)| ((m as f64).ln(), (a / paths as f64).ln()))
            .collect();
        let k = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
        let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        pass &= worst_z <= 4.0 && (slope - 2.0 * h).abs() <= 0.03;
        detail.push(format!(
            "H={h}: max |z| {worst_z:.2}, slope {slope:.4} vs {:.1}",
            2.0 * h
        ));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn mc_variance(sigma_b: f64, t_end: f64) -> f64 {
    let h = hp(0.65);
    let dt = 1e-3;
    let n = (t_end / dt).round() as usize;
    let spec = models::ornstein_uhlenbeck(1.0, 1.0, sigma_b);
    let sampler = NoiseSampler::new(h, IncrementGrid::new(n, dt).unwrap()).unwrap();
    let plan = RecordPlan {
        steps: vec![n],
        kernel: None,
        full_exponent: false,
    };
    let ens = simulate_streaming(&spec, InitialLaw::point(1.0).unwrap(), &sampler, 100_000, 99, &plan).unwrap();
    sample_moments(&ens.samples(0).unwrap()).unwrap().std.powi(2)
}

fn criterion_5() -> Outcome {
    let p = OuParams::new(1.0, 1.0, 1.0, 1.0, hp(0.65)).unwrap();
    let exact = ou_variance(&p, 1.0).unwrap();
    let frac = mc_variance(1.0, 1.0);
    let white = mc_variance(0.0, 5.0);
    let (r1, r2) = ((frac / exact - 1.0).abs(), (white / 0.5 - 1.0).abs());
    Outcome {
        pass: r1 <= 0.02 && r2 <= 0.02,
        detail: format!(
            "var(1) {frac:.5} vs {exact:.5} ({:.2}%), stationary {white:.5} ({:.2}%)",
            100.0 * r1,
            100.0 * r2
        ),
    }
}

/// Per-time L1 and relative std differences of memFPK against Monte Carlo.
fn mc_summary(out: &RunOutput) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let c = out.comparison(Method::MemFpk, Method::Mcs).unwrap();
    let mem = out.result(Method::MemFpk).unwrap();
    let mc = out.result(Method::Mcs).unwrap();
    let std_rel = mem
        .moments
        .iter()
        .zip(&mc.moments)
        .map(|(a, b)| (a.std / b.std - 1.0).abs())
        .collect();
    let mean_rel = mem
        .moments
        .iter()
        .zip(&mc.moments)
        .map(|(a, b)| (a.mean / b.mean - 1.0).abs())
        .collect();
    (c.l1_per_time.clone(), std_rel, mean_rel)
}

fn fmt(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")
}

fn local_maxima(values: &[f64]) -> usize {
    let peak = max(values);
    values
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2] && w[1] > 0.05 * peak)
        .count()
}

fn criterion_6(out: &RunOutput) -> Outcome {
    let (l1, std_rel, _) = mc_summary(out);
    let last = out.result(Method::MemFpk).unwrap().surface.fields.last().unwrap();
    let modes = local_maxima(&last.values);
    Outcome {
        pass: max(&l1) <= 0.05 && max(&std_rel) <= 0.05 && modes == 2,
        detail: format!("L1 {}, std rel {}, maxima at t=2: {modes}", fmt(&l1), fmt(&std_rel)),
    }
}

fn criterion_7(out: &RunOutput) -> Outcome {
    let (l1, std_rel, _) = mc_summary(out);
    let eq4 = out.variants.iter().find(|v| v.exponent.name() == "eq4").unwrap();
    let printed = out
        .variants
        .iter()
        .find(|v| v.exponent.name() == "paper-printed")
        .unwrap();
    let favoured = out.favoured_exponent().map(|e| e.name()).unwrap_or("none");
    Outcome {
        pass: max(&l1) <= 0.05 && max(&std_rel) <= 0.05 && max(&eq4.oracle_rel) <= 0.15,
        detail: format!(
            "L1 {}, std rel {}, oracle rel eq4 {} / printed {}, favoured {favoured}",
            fmt(&l1),
            fmt(&std_rel),
            fmt(&eq4.oracle_rel),
            fmt(&printed.oracle_rel)
        ),
    }
}

fn criterion_8(out: &RunOutput) -> Outcome {
    let (l1, std_rel, mean_rel) = mc_summary(out);
    Outcome {
        pass: max(&l1) <= 0.05 && max(&std_rel) <= 0.05 && max(&mean_rel) <= 0.05,
        detail: format!(
            "L1 {}, mean rel {}, std rel {}, divergent paths {}",
            fmt(&l1),
            fmt(&mean_rel),
            fmt(&std_rel),
            out.divergent_paths.unwrap_or(0)
        ),
    }
}

fn criterion_9(runs: &[(&str, &RunOutput, bool)]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, out, no_clamps) in runs {
        let s = &out.result(Method::MemFpk).unwrap().surface;
        let (mass, low, clamps) = (s.max_mass_error(), s.min_density, s.clamp_events());
        pass &= mass <= 1e-6 && low >= -1e-8 && (!no_clamps || clamps == 0);
        detail.push(format!("{name}: |mass-1| {mass:.1e}, min {low:.1e}, clamps {clamps}"));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn criterion_10() -> Outcome {
    let mut worst1 = 0.0f64;
    for &z in &[0.1f64, 1.0, 5.0] {
        worst1 = worst1.max((upper_incomplete_gamma(1.0, z).unwrap() - (-z).exp()).abs());
    }
    let mut worst2 = 0.0f64;
    for &z in &[0.25f64, 1.0, 4.0] {
        let exact = std::f64::consts::PI.sqrt() * erfc(z.sqrt());
        worst2 = worst2.max((upper_incomplete_gamma(0.5, z).unwrap() - exact).abs());
    }
    Outcome {
        pass: worst1 <= 1e-12 && worst2 <= 1e-10,
        detail: format!("Γ(1,z) err {worst1:.1e}, Γ(0.5,z) err {worst2:.1e}"),
    }
}

fn criterion_11(coarse: &RunOutput, fine: &RunOutput) -> Outcome {
    let lc = coarse.comparison(Method::MemFpk, Method::Analytic).unwrap().linf;
    let lf = fine.comparison(Method::MemFpk, Method::Analytic).unwrap().linf;
    let ratio = lc / lf;

    let spec = models::duffing(1.0, -1.0, 0.8, 0.6);
    let grid = Grid1D::with_spacing(-2.5, 2.5, 0.05).unwrap();
    let init = InitialLaw::point(0.0).unwrap();
    let solve = |refresh: f64| {
        let mut opts = SolverOptions::new(1e-4, 2.0, vec![0.5, 1.0, 2.0], KernelMode::Vada);
        opts.macro_refresh = refresh;
        solve_memfpk(&spec, init, hp(0.6), &grid, &opts).unwrap()
    };
    let (a, b) = (solve(0.01), solve(0.005));
    let mut worst = 0.0f64;
    for ca in &a.coefficients {
        let cb = b.coefficients.iter().find(|c| (c.t - ca.t).abs() < 5e-5).unwrap();
        for (x, y) in ca.diffusion.iter().zip(&cb.diffusion) {
            worst = worst.max(((x - y) / y).abs());
        }
    }
    Outcome {
        pass: ratio >= 3.0 && worst <= 1e-4,
        detail: format!("Linf {lc:.2e} -> {lf:.2e} (x{ratio:.2}), refresh halving b_mem rel {worst:.1e}"),
    }
}

#[test]
fn acceptance_criteria() {
    let mut outcomes: Vec<(usize, &str, Outcome)> = Vec::new();

    let ou: Vec<(f64, RunOutput, f64)> = [0.65, 0.95]
        .iter()
        .map(|&h| {
            let (out, secs) = ou_run(h, 0.05);
            (h, out, secs)
        })
        .collect();
    outcomes.push((1, "OU analytic reproduction", criterion_1(&ou)));
    outcomes.push((2, "case IV kernel closed form", criterion_2()));
    outcomes.push((3, "VADA exactness for constant rate", criterion_3()));
    outcomes.push((4, "FGN sampler law", criterion_4()));
    outcomes.push((5, "Monte Carlo integrator", criterion_5()));

    let duffing = execute(&config(&[("scenario", "duffing")])).unwrap();
    outcomes.push((6, "Duffing vs Monte Carlo", criterion_6(&duffing)));
    let verhulst = execute(&config(&[("scenario", "verhulst")])).unwrap();
    outcomes.push((7, "Verhulst vs Monte Carlo and kernel oracle", criterion_7(&verhulst)));
    let hamiltonian = execute(&config(&[("scenario", "hamiltonian")])).unwrap();
    outcomes.push((8, "Hamiltonian energy vs Monte Carlo", criterion_8(&hamiltonian)));

    outcomes.push((
        9,
        "conservation and positivity",
        criterion_9(&[
            ("ou H=0.65", &ou[0].1, true),
            ("ou H=0.95", &ou[1].1, true),
            ("duffing", &duffing, true),
            ("verhulst", &verhulst, false),
            ("hamiltonian", &hamiltonian, true),
        ]),
    ));
    outcomes.push((10, "special functions", criterion_10()));
    let (fine, _) = ou_run(0.65, 0.025);
    outcomes.push((11, "convergence order", criterion_11(&ou[0].1, &fine)));

    for (id, name, o) in &outcomes {
        report(*id, name, o);
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.2.pass).map(|o| o.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
