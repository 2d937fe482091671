use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use memfpk_cli::{run, CliError, RawConfig, ScenarioConfig};

/// Solve the memory Fokker–Planck equation for a scenario and compare it
/// with Monte Carlo or closed-form references.
#[derive(Debug, Parser)]
#[command(name = "memfpk", version)]
struct Args {
    /// ou, duffing, verhulst, hamiltonian or custom
    #[arg(long)]
    scenario: Option<String>,
    /// Flat `key = value` file, or a previous report.json
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    hurst: Option<String>,
    #[arg(long)]
    dx: Option<String>,
    #[arg(long)]
    x_min: Option<String>,
    #[arg(long)]
    x_max: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    /// Comma separated
    #[arg(long)]
    output_times: Option<String>,
    /// Comma separated subset of memfpk, mcs, analytic
    #[arg(long)]
    method: Option<String>,
    /// vada, closed_case_II, closed_case_IV or classical
    #[arg(long)]
    kernel_mode: Option<String>,
    /// eq4 or paper-printed (verhulst only)
    #[arg(long)]
    kernel_exponent: Option<String>,
    #[arg(long)]
    vada_order: Option<String>,
    #[arg(long)]
    mcs_paths: Option<String>,
    #[arg(long)]
    mcs_dt: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    macro_refresh: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    sigma_w: Option<String>,
    #[arg(long)]
    sigma_b: Option<String>,
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    mu0: Option<String>,
    #[arg(long)]
    var0: Option<String>,
    #[arg(long)]
    omega1: Option<String>,
    #[arg(long)]
    omega2: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    d1: Option<String>,
    #[arg(long)]
    d2: Option<String>,
    #[arg(long)]
    h0: Option<String>,
    /// Polynomial coefficients of f, lowest order first (custom only)
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
}

impl Args {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("scenario", &self.scenario),
            ("hurst", &self.hurst),
            ("dx", &self.dx),
            ("x_min", &self.x_min),
            ("x_max", &self.x_max),
            ("dt", &self.dt),
            ("t_end", &self.t_end),
            ("output_times", &self.output_times),
            ("method", &self.method),
            ("kernel_mode", &self.kernel_mode),
            ("kernel_exponent", &self.kernel_exponent),
            ("vada_order", &self.vada_order),
            ("mcs_paths", &self.mcs_paths),
            ("mcs_dt", &self.mcs_dt),
            ("seed", &self.seed),
            ("macro_refresh", &self.macro_refresh),
            ("out_dir", &self.out_dir),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("sigma_w", &self.sigma_w),
            ("sigma_b", &self.sigma_b),
            ("x0", &self.x0),
            ("mu0", &self.mu0),
            ("var0", &self.var0),
            ("omega1", &self.omega1),
            ("omega2", &self.omega2),
            ("lambda", &self.lambda),
            ("gamma", &self.gamma),
            ("d1", &self.d1),
            ("d2", &self.d2),
            ("h0", &self.h0),
            ("f", &self.f),
            ("g", &self.g),
            ("h", &self.h),
        ]
    }
}

fn resolve(args: &Args) -> Result<ScenarioConfig, CliError> {
    let mut raw = match &args.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    let mut flags = RawConfig::default();
    for (key, value) in args.overrides() {
        if let Some(v) = value {
            flags.set(key, v.clone())?;
        }
    }
    raw.merge(flags);
    ScenarioConfig::resolve(&raw)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let result = resolve(&args).and_then(|cfg| run::run(&cfg));
    match result {
        Ok(out) => {
            log::info!("artifacts written to {}", out.config.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("memfpk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
