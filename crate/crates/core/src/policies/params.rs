use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PARAMS_SCHEMA_VERSION: u32 = 1;

/// Goal attractor gains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractorParams {
    /// Gain `α`.
    pub alpha: f64,
    /// Damping `β`.
    pub beta: f64,
    /// Soft normalization parameter.
    pub c: f64,
}

/// Per-ray repulsor/damper parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleParams {
    pub eta_rep: f64,
    /// Repulsion length scale (m).
    pub nu_rep: f64,
    pub eta_damp: f64,
    /// Damping length scale (m).
    pub nu_damp: f64,
    pub epsilon: f64,
    /// Activation radius (m); the metric vanishes beyond it.
    pub radius: f64,
    pub c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    StaticMap,
    Lidar,
}

impl Preset {
    pub fn params(self) -> PolicyParams {
        match self {
            Preset::StaticMap => PolicyParams {
                attractor: AttractorParams {
                    alpha: 10.0,
                    beta: 15.0,
                    c: 0.2,
                },
                obstacle: ObstacleParams {
                    eta_rep: 88.0,
                    nu_rep: 1.4,
                    eta_damp: 140.0,
                    nu_damp: 1.2,
                    epsilon: 1e-6,
                    radius: 2.4,
                    c: 0.2,
                },
            },
            Preset::Lidar => PolicyParams {
                attractor: AttractorParams { alpha: 0.8, beta: 1.6, c: 1.0 },
                obstacle: ObstacleParams {
                    eta_rep: 1.2,
                    nu_rep: 1.5,
                    eta_damp: 3.0,
                    nu_damp: 1.0,
                    epsilon: 1e-6,
                    radius: 1.3,
                    c: 1.0,
                },
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::StaticMap => "static_map",
            Preset::Lidar => "lidar",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static_map" => Ok(Preset::StaticMap),
            "lidar" => Ok(Preset::Lidar),
            other => Err(Error::InvalidParameter(format!("unknown preset '{other}' (expected static_map or lidar)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub attractor: AttractorParams,
    pub obstacle: ObstacleParams,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Preset::StaticMap.params()
    }
}

/// Optional per-field replacements for [`AttractorParams`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

/// Optional per-field replacements for [`ObstacleParams`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_rep: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_rep: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_damp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_damp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

/// Field overrides applied on top of a preset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default)]
    pub attractor: AttractorOverrides,
    #[serde(default)]
    pub obstacle: ObstacleOverrides,
}

impl ParamOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// `base` with every present override substituted, validated.
    pub fn apply(&self, mut p: PolicyParams) -> Result<PolicyParams> {
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        let (a, o) = (&self.attractor, &self.obstacle);
        set(&mut p.attractor.alpha, a.alpha);
        set(&mut p.attractor.beta, a.beta);
        set(&mut p.attractor.c, a.c);
        set(&mut p.obstacle.eta_rep, o.eta_rep);
        set(&mut p.obstacle.nu_rep, o.nu_rep);
        set(&mut p.obstacle.eta_damp, o.eta_damp);
        set(&mut p.obstacle.nu_damp, o.nu_damp);
        set(&mut p.obstacle.epsilon, o.epsilon);
        set(&mut p.obstacle.radius, o.radius);
        set(&mut p.obstacle.c, o.c);
        p.validate()?;
        Ok(p)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    version: u32,
    preset: Option<Preset>,
    #[serde(default)]
    attractor: AttractorOverrides,
    #[serde(default)]
    obstacle: ObstacleOverrides,
}

#[derive(Serialize)]
struct ParamsFileOut<'a> {
    version: u32,
    #[serde(flatten)]
    params: &'a PolicyParams,
}

impl PolicyParams {
    pub fn validate(&self) -> Result<()> {
        let a = &self.attractor;
        let o = &self.obstacle;
        let positive = [
            ("alpha", a.alpha),
            ("beta", a.beta),
            ("attractor c", a.c),
            ("eta_rep", o.eta_rep),
            ("nu_rep", o.nu_rep),
            ("eta_damp", o.eta_damp),
            ("nu_damp", o.nu_damp),
            ("epsilon", o.epsilon),
            ("radius", o.radius),
            ("obstacle c", o.c),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Parses a parameter file: an optional `preset` base plus per-field
    /// overrides in `[attractor]` and `[obstacle]` tables.
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let file: ParamsFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if file.version != PARAMS_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                kind: "parameter",
                found: file.version,
                expected: PARAMS_SCHEMA_VERSION,
            });
        }
        let overrides = ParamOverrides {
            attractor: file.attractor,
            obstacle: file.obstacle,
        };
        overrides.apply(file.preset.unwrap_or(Preset::StaticMap).params())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(&ParamsFileOut {
            version: PARAMS_SCHEMA_VERSION,
            params: self,
        })?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }
}
