//! Run configuration in laboratory units (MHz, GHz, kHz, ns).
//!
//! Ω and δ are cyclic frequencies (`x MHz` means `2π·x·10⁶ rad/s`); the
//! blockade shift and noise widths are angular frequencies (`x GHz` means
//! `x·10⁹ rad/s`). See [`crate::units`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{PulseParams, PulseShape};
use crate::noisemc::NoiseConfig;
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Square,
    Erf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub omega_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    pub delta_rr_ghz: f64,
    pub m: u32,
    /// Target phase in radians; 0 selects a CZ.
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "default_shape")]
    pub shape: ShapeKind,
    #[serde(default = "default_delta_t")]
    pub delta_t_ns: f64,
}

fn default_shape() -> ShapeKind {
    ShapeKind::Square
}

fn default_delta_t() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    #[serde(default)]
    pub sigma_delta_khz: f64,
    #[serde(default)]
    pub sigma_omega_khz: f64,
    #[serde(default)]
    pub sigma_doppler_khz: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default)]
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physics: Physics,
    pub noise: Noise,
    #[serde(default = "default_output")]
    pub output: Output,
}

fn default_output() -> Output {
    Output { directory: None, formats: vec![] }
}

impl Default for RunConfig {
    /// The `m = 4`, `ξ = 1.428` solution at `Ω = 5 MHz`, `Δ_rr = 8 GHz`.
    fn default() -> Self {
        RunConfig {
            physics: Physics {
                omega_mhz: 5.0,
                delta_mhz: None,
                xi: Some(1.428),
                delta_rr_ghz: 8.0,
                m: 4,
                phi: 0.0,
                shape: ShapeKind::Square,
                delta_t_ns: 10.0,
            },
            noise: Noise { sigma_delta_khz: 0.0, sigma_omega_khz: 0.0, sigma_doppler_khz: 0.0, trials: 2000, seed: 1 },
            output: default_output(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        match (p.delta_mhz, p.xi) {
            (Some(_), Some(_)) => return Err(Error::Config("give exactly one of delta_mhz and xi, not both".into())),
            (None, None) => return Err(Error::Config("one of delta_mhz or xi is required".into())),
            (Some(d), None) if !(d != 0.0 && d.is_finite()) => {
                return Err(Error::Config(format!("delta_mhz must be finite and nonzero, got {d}")))
            }
            (None, Some(x)) if !(x > 0.0 && x.is_finite()) => return Err(Error::Config(format!("xi must be > 0, got {x}"))),
            _ => {}
        }
        if !(p.omega_mhz >= 0.0 && p.omega_mhz.is_finite()) {
            return Err(Error::Config(format!("omega_mhz must be >= 0, got {}", p.omega_mhz)));
        }
        if p.xi.is_some() && p.omega_mhz == 0.0 {
            return Err(Error::Config("xi cannot define delta when omega_mhz is 0".into()));
        }
        if !(p.delta_rr_ghz > 0.0 && p.delta_rr_ghz.is_finite()) {
            return Err(Error::Config(format!("delta_rr_ghz must be > 0, got {}", p.delta_rr_ghz)));
        }
        if p.m < 1 {
            return Err(Error::Config("m must be >= 1".into()));
        }
        if !p.phi.is_finite() {
            return Err(Error::Config("phi must be finite".into()));
        }
        if !(p.delta_t_ns > 0.0 && p.delta_t_ns.is_finite()) {
            return Err(Error::Config(format!("delta_t_ns must be > 0, got {}", p.delta_t_ns)));
        }
        self.noise_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Detuning in MHz, derived as `Ω/ξ` when only ξ is given.
    pub fn delta_mhz(&self) -> f64 {
        match (self.physics.delta_mhz, self.physics.xi) {
            (Some(d), _) => d,
            (None, Some(x)) => self.physics.omega_mhz / x,
            (None, None) => f64::NAN,
        }
    }

    pub fn xi(&self) -> f64 {
        self.physics.omega_mhz / self.delta_mhz().abs()
    }

    pub fn omega(&self) -> f64 {
        units::mhz(self.physics.omega_mhz)
    }

    pub fn delta(&self) -> f64 {
        units::mhz(self.delta_mhz())
    }

    pub fn delta_rr(&self) -> f64 {
        units::ghz_angular(self.physics.delta_rr_ghz)
    }

    pub fn shape(&self) -> PulseShape {
        match self.physics.shape {
            ShapeKind::Square => PulseShape::Square,
            ShapeKind::Erf => PulseShape::ErfEdges { delta_t: units::ns(self.physics.delta_t_ns) },
        }
    }

    /// Pulse of length `2(mπ + φ)/|δ|` with the configured shape.
    pub fn pulse(&self) -> Result<PulseParams> {
        let delta = self.delta();
        let t = crate::solutionsearch::gate_time(self.physics.m, self.physics.phi, delta)?;
        Ok(PulseParams::square(self.omega(), delta, self.delta_rr(), t).with_shape(self.shape()))
    }

    pub fn noise_config(&self) -> NoiseConfig {
        NoiseConfig {
            sigma_delta: units::khz_angular(self.noise.sigma_delta_khz),
            sigma_omega: units::khz_angular(self.noise.sigma_omega_khz),
            sigma_doppler: units::khz_angular(self.noise.sigma_doppler_khz),
            trials: self.noise.trials,
            seed: self.noise.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[physics]
omega_mhz = 5.0
xi = 1.428
delta_rr_ghz = 8.0
m = 4

[noise]
sigma_doppler_khz = 100.0
trials = 2000
seed = 7
"#;

    #[test]
    fn parse_and_derive() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(format!("{:.2}", c.delta_mhz()), "3.50");
        assert_eq!(c.physics.shape, ShapeKind::Square);
        assert_eq!(c.noise.seed, 7);
        let p = c.pulse().unwrap();
        assert!((p.duration - 1.1429e-6).abs() < 1e-9);
    }

    #[test]
    fn round_trip_is_idempotent() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        let once = c.to_toml().unwrap();
        let again = RunConfig::from_toml(&once).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml().unwrap(), once);
        let d = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&d.to_toml().unwrap()).unwrap(), d);
    }

    #[test]
    fn exactly_one_of_delta_and_xi() {
        let both = SAMPLE.replace("xi = 1.428", "xi = 1.428\ndelta_mhz = 3.5");
        assert!(matches!(RunConfig::from_toml(&both), Err(Error::Config(_))));
        let neither = SAMPLE.replace("xi = 1.428\n", "");
        assert!(matches!(RunConfig::from_toml(&neither), Err(Error::Config(_))));
        let delta = SAMPLE.replace("xi = 1.428", "delta_mhz = 3.5");
        let c = RunConfig::from_toml(&delta).unwrap();
        assert!((c.xi() - 5.0 / 3.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            SAMPLE.replace("sigma_doppler_khz = 100.0", "sigma_doppler_khz = -1.0"),
            SAMPLE.replace("trials = 2000", "trials = 0"),
            SAMPLE.replace("delta_rr_ghz = 8.0", "delta_rr_ghz = 0.0"),
            SAMPLE.replace("m = 4", "m = 4\nbogus = 1"),
        ] {
            assert!(RunConfig::from_toml(&bad).is_err(), "{bad}");
        }
    }
}
