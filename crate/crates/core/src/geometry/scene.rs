use std::path::Path;

use serde::{Deserialize, Serialize};

use super::field::DistanceField;
use super::primitive::{Aabb, BoolOp, Primitive};
use crate::error::{Error, Result};
use crate::rmp::Vec3;

pub const SCENE_SCHEMA_VERSION: u32 = 1;

/// Analytic scene: primitives composed in list order inside `bounds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub bounds: Aabb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Start and goal the scene was generated for, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mission: Option<Mission>,
    #[serde(default)]
    pub primitives: Vec<Primitive>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub start: Vec3,
    pub goal: Vec3,
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    version: u32,
    #[serde(flatten)]
    scene: Scene,
}

impl Scene {
    pub fn new(bounds: Aabb) -> Self {
        Self {
            bounds,
            seed: None,
            mission: None,
            primitives: Vec::new(),
        }
    }

    pub fn with(mut self, p: Primitive) -> Self {
        self.primitives.push(p);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        self.primitives.iter().try_for_each(Primitive::validate)
    }

    pub fn is_static(&self) -> bool {
        !self.primitives.iter().any(Primitive::is_moving)
    }

    /// Distance reported where no primitive is present.
    pub fn empty_distance(&self) -> f64 {
        self.bounds.diagonal()
    }

    /// Signed distance at time `t`; positive in free space.
    ///
    /// Union takes the minimum, subtraction `max(d, −d_b)`. The latter is a
    /// lower bound near subtraction seams rather than an exact distance.
    pub fn distance(&self, x: &Vec3, t: f64) -> f64 {
        self.primitives.iter().fold(self.empty_distance(), |d, p| match p.op {
            BoolOp::Union => d.min(p.distance(x, t)),
            BoolOp::Subtract => d.max(-p.distance(x, t)),
        })
    }

    /// View of the scene frozen at time `t`.
    pub fn at(&self, t: f64) -> SceneAt<'_> {
        SceneAt { scene: self, time: t }
    }

    pub fn to_toml(&self) -> Result<String> {
        let file = SceneFile {
            version: SCENE_SCHEMA_VERSION,
            scene: self.clone(),
        };
        Ok(toml::to_string(&file)?)
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let file: SceneFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if file.version != SCENE_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                kind: "scene",
                found: file.version,
                expected: SCENE_SCHEMA_VERSION,
            });
        }
        file.scene.validate()?;
        Ok(file.scene)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }
}

/// A scene evaluated at a fixed time, usable wherever a [`DistanceField`] is.
#[derive(Clone, Copy, Debug)]
pub struct SceneAt<'a> {
    pub scene: &'a Scene,
    pub time: f64,
}

/// Surface tolerance when sphere tracing analytic scenes.
pub const ANALYTIC_SURFACE_EPSILON: f64 = 1e-4;

impl DistanceField for SceneAt<'_> {
    fn distance(&self, x: &Vec3) -> f64 {
        self.scene.distance(x, self.time)
    }

    fn surface_epsilon(&self) -> f64 {
        ANALYTIC_SURFACE_EPSILON
    }
}

impl DistanceField for Scene {
    fn distance(&self, x: &Vec3) -> f64 {
        Scene::distance(self, x, 0.0)
    }

    fn surface_epsilon(&self) -> f64 {
        ANALYTIC_SURFACE_EPSILON
    }
}
