//! Maps a resolved configuration onto a model, initial law and grid.

use memfpk_core::analytic::OuParams;
use memfpk_core::fgn::HurstParam;
use memfpk_core::fpk::{Grid1D, KernelMode};
use memfpk_core::models;
use memfpk_core::sde::{InitialLaw, SystemSpec};

use crate::config::{KernelChoice, Scenario, ScenarioConfig};
use crate::error::CliError;

pub fn build_system(cfg: &ScenarioConfig) -> Result<(SystemSpec, InitialLaw), CliError> {
    let p = |k: &str| cfg.param(k);
    let spec = match cfg.scenario {
        Scenario::Ou => models::ornstein_uhlenbeck(p("alpha")?, p("sigma_w")?, p("sigma_b")?),
        Scenario::Duffing => models::duffing(p("alpha")?, p("beta")?, p("sigma_w")?, p("sigma_b")?),
        Scenario::Verhulst => {
            let grid = build_grid(cfg)?;
            if grid.node(0) <= 0.0 {
                return Err(CliError::config(format!(
                    "verhulst needs positive grid nodes, first node is {}",
                    grid.node(0)
                )));
            }
            models::verhulst(p("alpha")?, p("beta")?, p("sigma_w")?, p("sigma_b")?)
        }
        Scenario::Hamiltonian => {
            let (d1, d2) = (p("d1")?, p("d2")?);
            if !(d1 + d2 > 0.0) {
                return Err(CliError::config(format!(
                    "hamiltonian needs d1 + d2 > 0, got {}",
                    d1 + d2
                )));
            }
            if !(p("lambda")? > 0.0) {
                return Err(CliError::config("hamiltonian needs lambda > 0"));
            }
            models::hamiltonian(p("lambda")?, p("gamma")?, d1, d2)?
        }
        Scenario::Custom => models::polynomial(&cfg.polynomials.f, &cfg.polynomials.g, &cfg.polynomials.h),
    };
    Ok((spec, initial_law(cfg)?))
}

fn initial_law(cfg: &ScenarioConfig) -> Result<InitialLaw, CliError> {
    let law = if let Some(&x0) = cfg.params.get("x0").or_else(|| cfg.params.get("h0")) {
        InitialLaw::point(x0)
    } else {
        InitialLaw::gaussian(cfg.param("mu0")?, cfg.param("var0")?)
    };
    law.map_err(|e| CliError::config(e.to_string()))
}

pub fn build_grid(cfg: &ScenarioConfig) -> Result<Grid1D, CliError> {
    Grid1D::with_spacing(cfg.x_min, cfg.x_max, cfg.dx).map_err(|e| CliError::config(e.to_string()))
}

pub fn hurst(cfg: &ScenarioConfig) -> Result<HurstParam, CliError> {
    HurstParam::new(cfg.hurst).map_err(|e| CliError::config(e.to_string()))
}

pub fn kernel_mode(cfg: &ScenarioConfig) -> Result<KernelMode, CliError> {
    Ok(match cfg.kernel_mode {
        KernelChoice::Vada => KernelMode::Vada,
        KernelChoice::ClosedCaseII => KernelMode::ClosedCaseII,
        KernelChoice::ClosedCaseIV => KernelMode::ClosedCaseIV {
            alpha: cfg.param("alpha")?,
        },
        KernelChoice::Classical => KernelMode::Classical,
    })
}

pub fn ou_params(cfg: &ScenarioConfig) -> Result<OuParams, CliError> {
    OuParams::new(
        cfg.param("alpha")?,
        cfg.param("sigma_w")?,
        cfg.param("sigma_b")?,
        cfg.param("x0")?,
        hurst(cfg)?,
    )
    .map_err(|e| CliError::config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    fn cfg(pairs: &[(&str, &str)]) -> ScenarioConfig {
        let mut raw = RawConfig::default();
        for (k, v) in pairs {
            raw.set(k, *v).unwrap();
        }
        ScenarioConfig::resolve(&raw).unwrap()
    }

    #[test]
    fn hamiltonian_drift_matches_table() {
        let (spec, init) = build_system(&cfg(&[("scenario", "hamiltonian")])).unwrap();
        let r = (17f64.sqrt() - 1.0) / 2.0;
        let m = -2.0 * 0.01 * (2.0 - r / 4.0 + 2.0 * r * r / 12.0);
        assert!(((spec.f)(2.0) - m).abs() <= 1e-14 * m.abs());
        assert_eq!(init, InitialLaw::point(2.0).unwrap());
    }

    #[test]
    fn scenario_coefficients() {
        let (ou, _) = build_system(&cfg(&[("scenario", "ou")])).unwrap();
        assert_eq!(((ou.f)(2.0), (ou.g)(2.0), (ou.h)(2.0)), (-2.0, 1.0, 1.0));
        let (duf, _) = build_system(&cfg(&[("scenario", "duffing")])).unwrap();
        assert_eq!((duf.f)(2.0), 2.0 - 8.0);
        let (ver, init) = build_system(&cfg(&[("scenario", "verhulst")])).unwrap();
        assert_eq!(((ver.f)(2.0), (ver.g)(2.0), (ver.h)(2.0)), (8.0 - 4.0, 0.2, 0.6));
        assert_eq!(init, InitialLaw::gaussian(1.0, 0.05).unwrap());
    }

    #[test]
    fn invalid_systems_are_config_errors() {
        let bad = [
            cfg(&[("scenario", "verhulst"), ("x_min", "-1")]),
            cfg(&[("scenario", "hamiltonian"), ("d1", "0"), ("d2", "0")]),
        ];
        for c in &bad {
            assert!(matches!(build_system(c), Err(CliError::Config(_))));
        }
    }
}
