//! Plain-text scene configuration (TOML syntax).
//!
//! ```toml
//! scenario = "array_with_frame"
//!
//! [material]
//! eps_r = 3.5
//! tan_delta = 0.0041
//!
//! [element]
//! w_s_mm = 7.089
//! f0 = 28e9
//!
//! [array]
//!
//! [ports]
//! impedance_ohm = 50.0
//!
//! [amc]
//! gap_mm = 0.2
//! ```

use super::element::LENGTH_FIELDS;
use super::{build_array_2x2, build_single_element, ElementParams, Scene, SceneError};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    SingleNoFrame,
    SingleWithFrame,
    ArrayNoFrame,
    ArrayWithFrame,
    AmcCell,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [
        ScenarioName::SingleNoFrame,
        ScenarioName::SingleWithFrame,
        ScenarioName::ArrayNoFrame,
        ScenarioName::ArrayWithFrame,
        ScenarioName::AmcCell,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::SingleNoFrame => "single_no_frame",
            ScenarioName::SingleWithFrame => "single_with_frame",
            ScenarioName::ArrayNoFrame => "array_no_frame",
            ScenarioName::ArrayWithFrame => "array_with_frame",
            ScenarioName::AmcCell => "amc_cell",
        }
    }

    pub fn with_frame(&self) -> bool {
        matches!(self, ScenarioName::SingleWithFrame | ScenarioName::ArrayWithFrame)
    }

    pub fn is_array(&self) -> bool {
        matches!(self, ScenarioName::ArrayNoFrame | ScenarioName::ArrayWithFrame)
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown scenario `{0}` (expected one of single_no_frame, single_with_frame, array_no_frame, array_with_frame, amc_cell)")]
    UnknownScenario(String),
    #[error("unknown key `{key}` in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("key `{0}` must be a number")]
    NotANumber(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Parsed configuration: the scenario plus element parameters in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub scenario: Option<ScenarioName>,
    pub params: ElementParams,
    pub port_impedance: f64,
    /// Gap between neighbouring cells of the AMC unit-cell model (m).
    pub amc_gap: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            params: ElementParams::default(),
            port_impedance: 50.0,
            amc_gap: 0.2e-3,
        }
    }
}

fn number(key: &str, v: &toml::Value) -> Result<f64, ConfigError> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(ConfigError::NotANumber(key.to_string())),
    }
}

impl SceneConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let mut cfg = SceneConfig::default();
        for (key, value) in &table {
            match (key.as_str(), value) {
                ("scenario", toml::Value::String(s)) => cfg.scenario = Some(s.parse()?),
                (section @ ("material" | "element" | "array" | "ports" | "amc"), toml::Value::Table(t)) => {
                    for (k, v) in t {
                        cfg.set_in_section(section, k, number(k, v)?)?;
                    }
                }
                _ => {
                    return Err(ConfigError::UnknownKey {
                        section: "<root>".into(),
                        key: key.clone(),
                    })
                }
            }
        }
        Ok(cfg)
    }

    fn set_in_section(&mut self, section: &str, key: &str, value: f64) -> Result<(), ConfigError> {
        let unknown = || ConfigError::UnknownKey {
            section: section.to_string(),
            key: key.to_string(),
        };
        match section {
            "material" => match key {
                "eps_r" => self.params.eps_r = value,
                "tan_delta" => self.params.tan_delta = value,
                _ => return Err(unknown()),
            },
            "element" => {
                if key == "f0" {
                    self.params.f0 = value;
                } else {
                    let field = key.strip_suffix("_mm").ok_or_else(unknown)?;
                    *self.params.length_mut(field).ok_or_else(unknown)? = value * 1e-3;
                }
            }
            "ports" => match key {
                "impedance_ohm" => self.port_impedance = value,
                _ => return Err(unknown()),
            },
            "amc" => match key {
                "gap_mm" => self.amc_gap = value * 1e-3,
                _ => return Err(unknown()),
            },
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// Apply a `key=value` override; the key names its section implicitly.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v: f64 = value.trim().parse().map_err(|_| ConfigError::NotANumber(key.to_string()))?;
        let section = match key {
            "eps_r" | "tan_delta" => "material",
            "impedance_ohm" => "ports",
            "gap_mm" => "amc",
            _ => "element",
        };
        self.set_in_section(section, key, v)
    }

    /// Every key accepted by [`SceneConfig::apply_override`].
    pub fn override_keys() -> Vec<String> {
        let mut keys: Vec<String> = LENGTH_FIELDS.iter().map(|f| format!("{f}_mm")).collect();
        keys.extend(["f0", "eps_r", "tan_delta", "impedance_ohm", "gap_mm"].map(String::from));
        keys
    }

    /// Build the antenna scene for one of the four antenna scenarios.
    pub fn build(&self, scenario: ScenarioName) -> Result<Scene, ConfigError> {
        let mut scene = match scenario {
            ScenarioName::SingleNoFrame | ScenarioName::SingleWithFrame => {
                build_single_element(&self.params, scenario.with_frame())?
            }
            ScenarioName::ArrayNoFrame | ScenarioName::ArrayWithFrame => {
                build_array_2x2(&self.params, scenario.with_frame())?
            }
            ScenarioName::AmcCell => {
                return Err(ConfigError::UnknownScenario("amc_cell has no antenna scene".into()))
            }
        };
        for p in &mut scene.ports {
            p.impedance = self.port_impedance;
        }
        Ok(scene)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_units() {
        let cfg = SceneConfig::parse(
            r#"
scenario = "array_with_frame"
[material]
eps_r = 3.0
tan_delta = 0.001
[element]
w_s_mm = 7.0
f0 = 28e9
[array]
[ports]
impedance_ohm = 50
"#,
        )
        .unwrap();
        assert_eq!(cfg.scenario, Some(ScenarioName::ArrayWithFrame));
        assert!((cfg.params.w_s - 7.0e-3).abs() < 1e-15);
        assert_eq!(cfg.params.eps_r, 3.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            SceneConfig::parse("[element]\nfoo_mm = 1.0\n"),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            SceneConfig::parse("scenario = \"nope\"\n"),
            Err(ConfigError::UnknownScenario(_))
        ));
    }

    #[test]
    fn override_w_ebg_overflows_frame() {
        let mut cfg = SceneConfig::default();
        cfg.apply_override("w_ebg_mm", "3.0").unwrap();
        let err = cfg.build(ScenarioName::SingleWithFrame).unwrap_err();
        assert!(err.to_string().contains("frame overflow"), "{err}");
    }
}
