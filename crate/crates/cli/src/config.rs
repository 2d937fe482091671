//! Scenario configuration: defaults per scenario, a flat `key = value` file,
//! and command-line overrides on top.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Ou,
    Duffing,
    Verhulst,
    Hamiltonian,
    Custom,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ou" => Ok(Self::Ou),
            "duffing" => Ok(Self::Duffing),
            "verhulst" => Ok(Self::Verhulst),
            "hamiltonian" => Ok(Self::Hamiltonian),
            "custom" => Ok(Self::Custom),
            other => Err(CliError::config(format!("unknown scenario '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Ou => "ou",
            Self::Duffing => "duffing",
            Self::Verhulst => "verhulst",
            Self::Hamiltonian => "hamiltonian",
            Self::Custom => "custom",
        }
    }

    /// Model parameters accepted by this scenario.
    fn params(self) -> &'static [&'static str] {
        match self {
            Self::Ou => &["alpha", "sigma_w", "sigma_b", "x0"],
            Self::Duffing => &["alpha", "beta", "sigma_w", "sigma_b", "x0"],
            Self::Verhulst => &["alpha", "beta", "sigma_w", "sigma_b", "mu0", "var0", "x0"],
            Self::Hamiltonian => &["omega1", "omega2", "lambda", "gamma", "d1", "d2", "h0"],
            Self::Custom => &["x0", "mu0", "var0", "alpha"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MemFpk,
    Mcs,
    Analytic,
}

impl Method {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "memfpk" => Ok(Self::MemFpk),
            "mcs" => Ok(Self::Mcs),
            "analytic" => Ok(Self::Analytic),
            other => Err(CliError::config(format!("unknown method '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::MemFpk => "memfpk",
            Self::Mcs => "mcs",
            Self::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    Vada,
    ClosedCaseII,
    ClosedCaseIV,
    Classical,
}

impl KernelChoice {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "vada" => Ok(Self::Vada),
            "closed_case_ii" => Ok(Self::ClosedCaseII),
            "closed_case_iv" => Ok(Self::ClosedCaseIV),
            "classical" => Ok(Self::Classical),
            other => Err(CliError::config(format!("unknown kernel mode '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Vada => "vada",
            Self::ClosedCaseII => "closed_case_II",
            Self::ClosedCaseIV => "closed_case_IV",
            Self::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelExponent {
    Eq4,
    PaperPrinted,
}

impl KernelExponent {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "eq4" => Ok(Self::Eq4),
            "paper-printed" => Ok(Self::PaperPrinted),
            other => Err(CliError::config(format!("unknown kernel exponent '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Eq4 => "eq4",
            Self::PaperPrinted => "paper-printed",
        }
    }
}

/// Polynomial coefficients of a custom model, lowest order first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomials {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

/// One fully specified experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub params: BTreeMap<String, f64>,
    pub polynomials: Polynomials,
    pub hurst: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub methods: Vec<Method>,
    pub kernel_mode: KernelChoice,
    pub kernel_exponent: KernelExponent,
    pub vada_order: u8,
    pub mcs_paths: usize,
    pub mcs_dt: f64,
    pub seed: u64,
    pub macro_refresh: f64,
    pub out_dir: PathBuf,
}

/// Every key understood by the configuration layer.
pub const KEYS: &[&str] = &[
    "scenario",
    "hurst",
    "x_min",
    "x_max",
    "dx",
    "dt",
    "t_end",
    "output_times",
    "method",
    "kernel_mode",
    "kernel_exponent",
    "vada_order",
    "mcs_paths",
    "mcs_dt",
    "seed",
    "macro_refresh",
    "out_dir",
    "alpha",
    "beta",
    "sigma_w",
    "sigma_b",
    "x0",
    "mu0",
    "var0",
    "omega1",
    "omega2",
    "lambda",
    "gamma",
    "d1",
    "d2",
    "h0",
    "f",
    "g",
    "h",
];

/// Raw `key → value` pairs, later layers overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig(BTreeMap<String, String>);

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        let key = normalize_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::config(format!("unknown configuration key '{key}'")));
        }
        self.0.insert(key, value.into().trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn merge(&mut self, other: RawConfig) {
        self.0.extend(other.0);
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_flat(text: &str) -> Result<Self, CliError> {
        let mut raw = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected 'key = value'", n + 1)))?;
            raw.set(k, v)?;
        }
        Ok(raw)
    }

    /// Reads the `config` object of a previous run's `report.json`.
    pub fn parse_report(text: &str) -> Result<Self, CliError> {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;
        let obj = doc
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| CliError::config("JSON file has no 'config' object"))?;
        let mut raw = Self::default();
        for (k, v) in obj {
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|i| match i {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                serde_json::Value::Object(params) if k == "params" => {
                    for (pk, pv) in params {
                        raw.set(pk, pv.to_string())?;
                    }
                    continue;
                }
                other => return Err(CliError::config(format!("unsupported value for '{k}': {other}"))),
            };
            raw.set(k, text)?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Self::parse_report(&text)
        } else {
            Self::parse_flat(&text)
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::config(format!("{key}: '{v}' is not a finite number")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

struct Defaults {
    params: &'static [(&'static str, f64)],
    hurst: f64,
    domain: (f64, f64, f64),
    t_end: f64,
    output_times: &'static [f64],
    methods: &'static [Method],
    mcs_dt: f64,
}

fn defaults(s: Scenario) -> Defaults {
    match s {
        Scenario::Ou => Defaults {
            params: &[("alpha", 1.0), ("sigma_w", 1.0), ("sigma_b", 1.0), ("x0", 1.0)],
            hurst: 0.65,
            domain: (-5.0, 5.0, 0.05),
            t_end: 2.0,
            output_times: &[0.5, 1.0, 1.5, 2.0],
            methods: &[Method::MemFpk, Method::Analytic],
            mcs_dt: 1e-3,
        },
        Scenario::Duffing => Defaults {
            params: &[
                ("alpha", 1.0),
                ("beta", -1.0),
                ("sigma_w", 0.8),
                ("sigma_b", 0.6),
                ("x0", 0.0),
            ],
            hurst: 0.6,
            domain: (-2.5, 2.5, 0.05),
            t_end: 2.0,
            output_times: &[0.5, 1.0, 2.0],
            methods: &[Method::MemFpk, Method::Mcs],
            mcs_dt: 1e-3,
        },
        Scenario::Verhulst => Defaults {
            params: &[
                ("alpha", 4.0),
                ("beta", 1.0),
                ("sigma_w", 0.1),
                ("sigma_b", 0.3),
                ("mu0", 1.0),
                ("var0", 0.05),
            ],
            hurst: 0.8,
            domain: (0.0, 7.0, 0.1),
            t_end: 2.0,
            output_times: &[0.5, 1.0, 2.0],
            methods: &[Method::MemFpk, Method::Mcs],
            mcs_dt: 1e-3,
        },
        Scenario::Hamiltonian => Defaults {
            params: &[
                ("omega1", 1.414),
                ("omega2", 2.0),
                ("lambda", 2.0),
                ("gamma", 0.01),
                ("d1", 0.01),
                ("d2", 0.01),
                ("h0", 2.0),
            ],
            hurst: 0.7,
            domain: (0.0, 10.0, 0.1),
            t_end: 10.0,
            output_times: &[5.0, 10.0],
            methods: &[Method::MemFpk, Method::Mcs],
            mcs_dt: 1e-2,
        },
        Scenario::Custom => Defaults {
            params: &[],
            hurst: 0.7,
            domain: (f64::NAN, f64::NAN, 0.05),
            t_end: 1.0,
            output_times: &[1.0],
            methods: &[Method::MemFpk],
            mcs_dt: 1e-3,
        },
    }
}

impl ScenarioConfig {
    /// Defaults for `scenario` with `raw` applied on top.
    pub fn resolve(raw: &RawConfig) -> Result<Self, CliError> {
        let scenario = Scenario::parse(
            raw.get("scenario")
                .ok_or_else(|| CliError::config("no scenario given (use --scenario)"))?,
        )?;
        let d = defaults(scenario);
        let num = |k: &str, default: f64| raw.get(k).map_or(Ok(default), |v| parse_f64(k, v));

        let mut params: BTreeMap<String, f64> = d.params.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        for &k in &[
            "alpha", "beta", "sigma_w", "sigma_b", "x0", "mu0", "var0", "omega1", "omega2", "lambda", "gamma", "d1",
            "d2", "h0",
        ] {
            if let Some(v) = raw.get(k) {
                if !scenario.params().contains(&k) {
                    return Err(CliError::config(format!(
                        "'{k}' is not a parameter of scenario {}",
                        scenario.name()
                    )));
                }
                params.insert(k.to_string(), parse_f64(k, v)?);
            }
        }
        // An explicit point start replaces the Gaussian initial law.
        if raw.get("x0").is_some() {
            params.remove("mu0");
            params.remove("var0");
        }

        let mut polynomials = Polynomials::default();
        for (k, slot) in [
            ("f", &mut polynomials.f),
            ("g", &mut polynomials.g),
            ("h", &mut polynomials.h),
        ] {
            if let Some(v) = raw.get(k) {
                if scenario != Scenario::Custom {
                    return Err(CliError::config(format!("'{k}' only applies to the custom scenario")));
                }
                *slot = parse_list(k, v)?;
            }
        }

        let methods = match raw.get("method") {
            Some(v) => {
                let mut m = Vec::new();
                for part in v.split(',').filter(|s| !s.trim().is_empty()) {
                    let method = Method::parse(part)?;
                    if !m.contains(&method) {
                        m.push(method);
                    }
                }
                m
            }
            None => d.methods.to_vec(),
        };

        let seed = match raw.get("seed") {
            Some(v) => v
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::config(format!("seed: '{v}' is not a 64-bit unsigned integer")))?,
            None => 20_240_601,
        };
        let mcs_paths = match raw.get("mcs_paths") {
            Some(v) => v
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("mcs_paths: '{v}' is not a count")))?,
            None => 100_000,
        };
        let vada_order = match raw.get("vada_order") {
            Some(v) => v
                .trim()
                .parse::<u8>()
                .map_err(|_| CliError::config(format!("vada_order: '{v}' is not 1, 2 or 3")))?,
            None => 2,
        };

        let cfg = Self {
            scenario,
            params,
            polynomials,
            hurst: num("hurst", d.hurst)?,
            x_min: num("x_min", d.domain.0)?,
            x_max: num("x_max", d.domain.1)?,
            dx: num("dx", d.domain.2)?,
            dt: num("dt", 1e-4)?,
            t_end: num("t_end", d.t_end)?,
            output_times: match raw.get("output_times") {
                Some(v) => parse_list("output_times", v)?,
                None => d.output_times.to_vec(),
            },
            methods,
            kernel_mode: raw
                .get("kernel_mode")
                .map_or(Ok(KernelChoice::Vada), KernelChoice::parse)?,
            kernel_exponent: raw
                .get("kernel_exponent")
                .map_or(Ok(KernelExponent::Eq4), KernelExponent::parse)?,
            vada_order,
            mcs_paths,
            mcs_dt: num("mcs_dt", d.mcs_dt)?,
            seed,
            macro_refresh: num("macro_refresh", 0.01)?,
            out_dir: PathBuf::from(raw.get("out_dir").unwrap_or("memfpk-out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::config(m));
        if !(self.x_min < self.x_max) {
            return bad(format!("x_min = {} must be below x_max = {}", self.x_min, self.x_max));
        }
        if !(self.dx > 0.0 && self.dt > 0.0 && self.t_end > 0.0 && self.mcs_dt > 0.0 && self.macro_refresh > 0.0) {
            return bad("dx, dt, t_end, mcs_dt and macro_refresh must be positive".into());
        }
        if self.output_times.is_empty() {
            return bad("output_times must not be empty".into());
        }
        if self.output_times.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("output_times must be strictly increasing".into());
        }
        if self
            .output_times
            .iter()
            .any(|&t| t < 0.0 || t > self.t_end * (1.0 + 1e-12))
        {
            return bad(format!("output_times must lie in [0, {}]", self.t_end));
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.methods.contains(&Method::Analytic) {
            if self.scenario != Scenario::Ou {
                return bad("the analytic method exists only for the ou scenario".into());
            }
            if self.output_times[0] <= 0.0 {
                return bad("the analytic law needs output times > 0".into());
            }
        }
        if self.methods.contains(&Method::Mcs) && self.mcs_paths < 2 {
            return bad("mcs_paths must be at least 2".into());
        }
        if !(1..=3).contains(&self.vada_order) {
            return bad(format!("vada_order must be 1, 2 or 3, got {}", self.vada_order));
        }
        if self.kernel_exponent == KernelExponent::PaperPrinted && self.scenario != Scenario::Verhulst {
            return bad("kernel_exponent paper-printed applies to the verhulst scenario only".into());
        }
        if self.kernel_mode == KernelChoice::ClosedCaseIV && !self.params.contains_key("alpha") {
            return bad("closed_case_IV needs alpha".into());
        }
        if self.scenario == Scenario::Custom {
            if self.polynomials.f.is_empty() || self.polynomials.g.is_empty() || self.polynomials.h.is_empty() {
                return bad("custom scenario needs f, g and h coefficient lists".into());
            }
            if !(self.x_min.is_finite() && self.x_max.is_finite()) {
                return bad("custom scenario needs x_min and x_max".into());
            }
        }
        let has_point = self.params.contains_key("x0") || self.params.contains_key("h0");
        let has_gauss = self.params.contains_key("mu0") && self.params.contains_key("var0");
        if !has_point && !has_gauss {
            return bad("an initial law is required: x0, or mu0 and var0".into());
        }
        Ok(())
    }

    /// Echo as ordered `key → value`, readable back through [`RawConfig::parse_report`].
    pub fn echo(&self) -> Vec<(&'static str, Echo)> {
        let mut out = vec![
            ("scenario", Echo::Text(self.scenario.name().into())),
            ("hurst", Echo::Num(self.hurst)),
            ("x_min", Echo::Num(self.x_min)),
            ("x_max", Echo::Num(self.x_max)),
            ("dx", Echo::Num(self.dx)),
            ("dt", Echo::Num(self.dt)),
            ("t_end", Echo::Num(self.t_end)),
            ("output_times", Echo::Nums(self.output_times.clone())),
            (
                "method",
                Echo::Text(self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")),
            ),
            ("kernel_mode", Echo::Text(self.kernel_mode.name().into())),
            ("kernel_exponent", Echo::Text(self.kernel_exponent.name().into())),
            ("vada_order", Echo::Int(self.vada_order as u64)),
            ("mcs_paths", Echo::Int(self.mcs_paths as u64)),
            ("mcs_dt", Echo::Num(self.mcs_dt)),
            ("seed", Echo::Int(self.seed)),
            ("macro_refresh", Echo::Num(self.macro_refresh)),
            ("out_dir", Echo::Text(self.out_dir.display().to_string())),
        ];
        for key in KEYS {
            if let Some(&v) = self.params.get(*key) {
                out.push((key, Echo::Num(v)));
            }
        }
        for (k, v) in [
            ("f", &self.polynomials.f),
            ("g", &self.polynomials.g),
            ("h", &self.polynomials.h),
        ] {
            if !v.is_empty() {
                out.push((k, Echo::Nums(v.clone())));
            }
        }
        out
    }

    pub fn param(&self, key: &str) -> Result<f64, CliError> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| CliError::config(format!("missing parameter '{key}'")))
    }
}

/// A config value as echoed into the report.
#[derive(Debug, Clone, PartialEq)]
pub enum Echo {
    Text(String),
    Num(f64),
    Int(u64),
    Nums(Vec<f64>),
}

impl fmt::Display for Echo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Echo::Text(s) => write!(f, "{s}"),
            Echo::Num(v) => write!(f, "{v:.16e}"),
            Echo::Int(v) => write!(f, "{v}"),
            Echo::Nums(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}
