//! Calibrated power and energy model.
//!
//! `P = P_leak + P_idle * f_clk + E_SOP * r_SOP`; the global energy per SOP
//! is `P / r_SOP`. Defaults are the 0.55 V silicon measurements.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineStats;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("SOP rate {r_sop} exceeds f_clk/2 = {max}")]
    InfeasibleRate { r_sop: f64, max: f64 },
    #[error("SOP rate must be strictly positive")]
    UndefinedRate,
    #[error("energy parameter `{0}` must be finite and strictly positive")]
    InvalidParam(&'static str),
    #[error("cannot read energy parameters: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse energy parameters: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Power-model coefficients, all in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    /// Leakage power (W).
    pub p_leak: f64,
    /// Idle power per clock frequency (W/Hz).
    pub p_idle: f64,
    /// Incremental energy per synaptic operation (J).
    pub e_sop: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            p_leak: 27.3e-6,
            p_idle: 1.78e-12,
            e_sop: 8.43e-12,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        for (name, v) in [("p_leak", self.p_leak), ("p_idle", self.p_idle), ("e_sop", self.e_sop)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EnergyError::InvalidParam(name));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self, EnergyError> {
        let p: Self = toml::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, EnergyError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Total power (W) at clock `f_clk` (Hz) and SOP rate `r_sop` (SOP/s).
pub fn total_power(p: &EnergyParams, f_clk: f64, r_sop: f64) -> Result<f64, EnergyError> {
    let max = f_clk / 2.0;
    if r_sop > max {
        return Err(EnergyError::InfeasibleRate { r_sop, max });
    }
    Ok(p.p_leak + p.p_idle * f_clk + p.e_sop * r_sop)
}

pub fn global_energy_per_sop(power: f64, r_sop: f64) -> Result<f64, EnergyError> {
    if r_sop <= 0.0 {
        return Err(EnergyError::UndefinedRate);
    }
    Ok(power / r_sop)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub leak: f64,
    pub idle: f64,
    pub dynamic: f64,
}

impl PowerBreakdown {
    pub fn new(p: &EnergyParams, f_clk: f64, r_sop: f64) -> Result<Self, EnergyError> {
        total_power(p, f_clk, r_sop)?;
        Ok(Self {
            leak: p.p_leak,
            idle: p.p_idle * f_clk,
            dynamic: p.e_sop * r_sop,
        })
    }

    pub fn total(&self) -> f64 {
        self.leak + self.idle + self.dynamic
    }

    pub fn leak_share(&self) -> f64 {
        self.leak / self.total()
    }

    pub fn idle_share(&self) -> f64 {
        self.idle / self.total()
    }
}

/// Energy (J) of a run: leakage and idle power over the busy time implied by
/// `cycle_count` at `f_clk`, plus the per-SOP energy.
pub fn inference_energy(stats: &EngineStats, p: &EnergyParams, f_clk: f64) -> f64 {
    let static_energy = if stats.cycle_count == 0 {
        0.0
    } else {
        (p.p_leak + p.p_idle * f_clk) * (stats.cycle_count as f64 / f_clk)
    };
    static_energy + p.e_sop * stats.sop_count as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn accelerated_point() {
        let p = EnergyParams::default();
        let pw = total_power(&p, 75e6, 37.5e6).unwrap();
        assert!(rel(pw, 477e-6) < 0.005, "{pw}");
        let e = global_energy_per_sop(pw, 37.5e6).unwrap();
        assert!(rel(e, 12.7e-12) < 0.005, "{e}");
        let b = PowerBreakdown::new(&p, 75e6, 37.5e6).unwrap();
        assert!((b.idle_share() - 0.28).abs() < 0.01);
    }

    #[test]
    fn biological_point() {
        let p = EnergyParams::default();
        let pw = total_power(&p, 1.3e6, 650e3).unwrap();
        assert!(rel(pw, 35e-6) < 0.01, "{pw}");
        let e = global_energy_per_sop(pw, 650e3).unwrap();
        assert!(rel(e, 54e-12) < 0.01, "{e}");
        let b = PowerBreakdown::new(&p, 1.3e6, 650e3).unwrap();
        assert!((b.leak_share() - 0.78).abs() < 0.01);
    }

    #[test]
    fn degenerate_cases() {
        let p = EnergyParams::default();
        assert_eq!(total_power(&p, 0.0, 0.0).unwrap(), p.p_leak);
        assert!(matches!(
            total_power(&p, 1e6, 0.6e6),
            Err(EnergyError::InfeasibleRate { .. })
        ));
        assert!(matches!(global_energy_per_sop(1.0, 0.0), Err(EnergyError::UndefinedRate)));
        let pure = EnergyParams {
            p_leak: 0.0,
            p_idle: 0.0,
            ..p
        };
        let pw = total_power(&pure, 1e6, 3e5).unwrap();
        assert!(rel(global_energy_per_sop(pw, 3e5).unwrap(), p.e_sop) < 1e-12);
        assert_eq!(inference_energy(&EngineStats::default(), &p, 75e6), 0.0);
    }

    #[test]
    fn params_file() {
        let p = EnergyParams::from_toml_str("p_leak = 1e-6\np_idle = 2e-12\ne_sop = 3e-12\n").unwrap();
        assert_eq!(p.p_idle, 2e-12);
        assert!(EnergyParams::from_toml_str("p_leak = 0\np_idle = 1\ne_sop = 1\n").is_err());
        assert!(EnergyParams::from_toml_str("p_leak = 1\n").is_err());
    }
}
