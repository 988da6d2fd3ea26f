//! JSON pipeline configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fem::{BoundaryConditions, Material};
use crate::frame::FitConfig;
use crate::mesh::io::{tetgen_paths, MeshFormat};
use crate::param::ParamConfig;
use crate::post::{GeometryConfig, SimplifyConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSource {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    /// Guessed from the extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<MeshFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    /// Integer-avoidance offset applied to texture coordinates.
    pub epsilon: f64,
    /// Boundary edges whose face normals meet with a cosine below this are
    /// traced as features.
    pub feature_cos_threshold: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self { epsilon: crate::extract::DEFAULT_EPSILON, feature_cos_threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Treat every member as pin-ended (axial only).
    pub pinned: bool,
    /// Angle (degrees) used for the element/stress alignment statistic.
    pub alignment_angle_deg: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { pinned: false, alignment_angle_deg: 15.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub mesh: MeshSource,
    #[serde(default)]
    pub material: Material,
    #[serde(default)]
    pub boundary_conditions: BoundaryConditions,
    #[serde(default)]
    pub frames: FitConfig,
    #[serde(default)]
    pub param: ParamConfig,
    #[serde(default)]
    pub extract: ExtractConfig,
    #[serde(default)]
    pub simplify: SimplifyConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    /// Relative paths resolve against the config file's directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Directory relative paths are resolved against; set by [`Self::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl PipelineConfig {
    pub fn new(mesh: impl Into<PathBuf>) -> Self {
        Self {
            mesh: MeshSource { path: mesh.into(), format: None },
            material: Material::default(),
            boundary_conditions: BoundaryConditions::default(),
            frames: FitConfig::default(),
            param: ParamConfig::default(),
            extract: ExtractConfig::default(),
            simplify: SimplifyConfig::default(),
            geometry: GeometryConfig::default(),
            verify: VerifyConfig::default(),
            output_dir: default_output_dir(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(config_err)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and validate a config file; relative paths then resolve against
    /// its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn mesh_path(&self) -> PathBuf {
        self.resolve(&self.mesh.path)
    }

    pub fn mesh_format(&self) -> Result<MeshFormat> {
        self.mesh
            .format
            .or_else(|| MeshFormat::from_path(&self.mesh.path))
            .ok_or_else(|| Error::Config(format!("cannot infer mesh format of {}", self.mesh.path.display())))
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(self)?)))
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate().map_err(config_err)?;
        self.mesh_format()?;
        let mesh = self.mesh_path();
        let exists = match self.mesh_format()? {
            MeshFormat::MeditMesh => mesh.is_file(),
            MeshFormat::TetgenPair => {
                let (node, ele) = tetgen_paths(&mesh);
                node.is_file() && ele.is_file()
            }
        };
        if !exists {
            return Err(Error::Config(format!("mesh file {} not found", mesh.display())));
        }
        let f = &self.frames;
        if f.outer_iterations == 0 {
            return Err(Error::Config("frames.outer_iterations must be at least 1".into()));
        }
        if !(f.alpha0_factor > 0.0 && f.alpha0_factor.is_finite()) {
            return Err(Error::Config(format!("frames.alpha0_factor must be positive, got {}", f.alpha0_factor)));
        }
        if !(f.alpha_decay > 0.0 && f.alpha_decay < 1.0) {
            return Err(Error::Config(format!("frames.alpha_decay must be in (0, 1), got {}", f.alpha_decay)));
        }
        if !(self.param.beta > 0.0 && self.param.beta.is_finite()) {
            return Err(Error::Config(format!("param.beta must be positive, got {}", self.param.beta)));
        }
        if !(self.param.rho > 0.0 && self.param.rho.is_finite()) {
            return Err(Error::Config(format!("param.rho must be positive, got {}", self.param.rho)));
        }
        let eps = self.extract.epsilon;
        if !(eps > 2.0 * crate::extract::INTEGER_TOL && eps < 0.5) {
            return Err(Error::Config(format!("extract.epsilon must be in (2e-9, 0.5), got {eps}")));
        }
        let c = self.extract.feature_cos_threshold;
        if !(c > -1.0 && c <= 1.0) {
            return Err(Error::Config(format!("extract.feature_cos_threshold must be in (-1, 1], got {c}")));
        }
        self.simplify.validate().map_err(config_err)?;
        self.geometry.radius.validate().map_err(config_err)?;
        if self.geometry.sides < 3 {
            return Err(Error::Config(format!("geometry.sides must be at least 3, got {}", self.geometry.sides)));
        }
        let a = self.verify.alignment_angle_deg;
        if !(a > 0.0 && a <= 90.0) {
            return Err(Error::Config(format!("verify.alignment_angle_deg must be in (0, 90], got {a}")));
        }
        Ok(())
    }
}
