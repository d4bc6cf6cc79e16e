//! Experiment configuration files.
//!
//! A config is a TOML file; every table except `ces`/`reaction` and
//! `diffusion` has defaults.
//!
//! ```toml
//! name = "exp1"
//! gamma = 1.0
//!
//! [ces]
//! productivity = 1.0
//! capital_share = 0.3
//! labor_share = 0.6
//! returns = 0.5
//! substitution = 0.2
//! wage = 1.0
//! rental = 0.3
//! convention = "published"
//!
//! [diffusion]
//! c1 = 0.01
//! c2 = 0.01
//! a1 = 0.3
//! a2 = 3e-4
//! ```

use std::fmt;
use std::path::Path;

use labcap_core::ces::{CesParams, Convention, FactorPrices};
use labcap_core::model::{ReactionCoeffs, ScaledDiffusion};
use labcap_core::wnl::Normalization;
use labcap_core::SolverConfig;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ces: Option<CesConfig>,
    /// Scaled reaction coefficients used instead of the CES-derived ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reaction: Option<ReactionCoeffs<f64>>,
    pub diffusion: DiffusionConfig,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "default_b_multiplier")]
    pub b_multiplier: f64,
    /// `K_s = saturation_factor * K*`.
    #[serde(default = "default_saturation_factor")]
    pub saturation_factor: f64,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CesConfig {
    pub productivity: f64,
    pub capital_share: f64,
    pub labor_share: f64,
    pub returns: f64,
    pub substitution: f64,
    pub wage: f64,
    pub rental: f64,
    #[serde(default)]
    pub convention: Convention,
}

impl CesConfig {
    pub fn params(&self) -> labcap_core::Result<(CesParams<f64>, FactorPrices<f64>)> {
        Ok((
            CesParams::new(
                self.productivity,
                self.capital_share,
                self.labor_share,
                self.returns,
                self.substitution,
            )?,
            FactorPrices::new(self.wage, self.rental)?,
        ))
    }
}

/// Diffusion coefficients, either already scaled or in the original units
/// (`a11`, `a22`), which are rescaled with the Lotka-Volterra coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiffusionConfig {
    Scaled {
        c1: f64,
        c2: f64,
        a1: f64,
        a2: f64,
    },
    Raw {
        c1: f64,
        c2: f64,
        a11: f64,
        a22: f64,
    },
}

impl DiffusionConfig {
    /// Scaled coefficients given the mutualism coefficients `b12`, `b21`.
    pub fn scaled(&self, b12: f64, b21: f64) -> ScaledDiffusion<f64> {
        match *self {
            DiffusionConfig::Scaled { c1, c2, a1, a2 } => ScaledDiffusion { c1, c2, a1, a2 },
            DiffusionConfig::Raw { c1, c2, a11, a22 } => ScaledDiffusion {
                c1,
                c2,
                a1: a11 / b21,
                a2: a22 * b12,
            },
        }
    }

    pub fn is_raw(&self) -> bool {
        matches!(self, DiffusionConfig::Raw { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nodes: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nodes: 256,
            x_min: 0.0,
            x_max: 2.0 * std::f64::consts::PI,
        }
    }
}

/// Published values a run is compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Reference {
    pub alpha1: Option<Printed>,
    pub alpha2: Option<Printed>,
    pub beta1: Option<Printed>,
    pub beta2: Option<Printed>,
    pub labor: Option<Printed>,
    pub capital: Option<Printed>,
    pub b_c: Option<Printed>,
    pub k_c: Option<Printed>,
    pub steady_time: Option<Printed>,
    pub mse: Option<Printed>,
}

/// A number as it was printed: its value and the unit of its last digit.
///
/// Deserializes from a string such as `"1.56"` or `"4.5e-2"` (precision
/// taken from the digits) or from a bare number (two decimals assumed).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Printed {
    pub value: f64,
    pub unit: f64,
}

impl Printed {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let value: f64 = s.parse().ok()?;
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
            None => (s, 0),
        };
        let decimals = mantissa.find('.').map_or(0, |i| mantissa.len() - i - 1) as i32;
        Some(Self {
            value,
            unit: 10f64.powi(exp - decimals),
        })
    }

    /// True when `x` shows as this value at its printed precision, allowing
    /// for either rounding or truncation.
    pub fn matches(&self, x: f64) -> bool {
        (x - self.value).abs() < self.unit * (1.0 + 1e-9)
    }
}

impl fmt::Display for Printed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for Printed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let decimals = (-self.unit.log10().round()).max(0.0) as usize;
        s.serialize_str(&format!("{:.*}", decimals, self.value))
    }
}

impl<'de> Deserialize<'de> for Printed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Printed;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a numeric string")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Printed, E> {
                Printed::parse(v).ok_or_else(|| E::custom(format!("not a number: {v:?}")))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Printed, E> {
                Ok(Printed {
                    value: v,
                    unit: 0.01,
                })
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Printed, E> {
                Ok(Printed {
                    value: v as f64,
                    unit: 1.0,
                })
            }
        }
        d.deserialize_any(V)
    }
}

fn one() -> f64 {
    1.0
}

fn default_b_multiplier() -> f64 {
    1.01
}

fn default_saturation_factor() -> f64 {
    10.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| HarnessError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Builtin preset name or path to a TOML file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if let Some(cfg) = crate::presets::preset(name_or_path) {
            return Ok(cfg);
        }
        let path = Path::new(name_or_path);
        if path.exists() {
            Self::load(path)
        } else {
            Err(HarnessError::config(format!(
                "`{name_or_path}` is neither a preset ({}) nor a file",
                crate::presets::PRESET_NAMES.join(", ")
            )))
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::config(format!("{}: {m}", self.name)));
        if self.name.trim().is_empty() {
            return Err(HarnessError::config("experiment name must not be empty"));
        }
        if self.name.contains(['/', '\\']) {
            return bad("name must not contain path separators".into());
        }
        if self.ces.is_none() && self.reaction.is_none() {
            return bad("either [ces] or [reaction] is required".into());
        }
        if self.ces.is_none() && self.diffusion.is_raw() {
            return bad("raw diffusion coefficients need [ces] to be rescaled".into());
        }
        if let Some(ces) = &self.ces {
            if let Err(e) = ces.params() {
                return bad(e.to_string());
            }
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("b_multiplier", self.b_multiplier),
            ("saturation_factor", self.saturation_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("`{name}` must be positive, got {v}"));
            }
        }
        if let Normalization::Fixed(b2) = self.normalization {
            if !(b2 > 0.0 && b2.is_finite()) {
                return bad(format!("normalization b2 must be positive, got {b2}"));
            }
        }
        if let Err(e) = self.solver.validate() {
            return bad(e.to_string());
        }
        if self.grid.nodes < 3 {
            return bad("grid needs at least 3 nodes".into());
        }
        if !(self.grid.x_max > self.grid.x_min) {
            return bad("grid x_max must exceed x_min".into());
        }
        Ok(())
    }
}
