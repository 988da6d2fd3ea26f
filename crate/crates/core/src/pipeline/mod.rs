//! Staged pipeline: each stage reads its prerequisites from the output
//! directory and writes versioned artifacts and a JSON log next to them.

pub mod artifact;
pub mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use artifact::{Field, FieldHeader};
pub use config::{ExtractConfig, MeshSource, PipelineConfig, VerifyConfig};

use crate::error::{Error, Result};
use crate::extract::{extract_truss, perturb_parametrization, TrussGraph};
use crate::fem::{cauchy_stress, solve_static, stress_spd, StressField};
use crate::frame::fit_frame_field;
use crate::mesh::io::load_tet_mesh;
use crate::mesh::{build_operators, feature_edges, TetMesh, Topology, Vec3};
use crate::param::{normalize_and_scale, objective, solve_parametrization, Parametrization};
use crate::post::{emit_geometry, simplify, stress_alignment, write_line_obj, write_obj, write_ply};
use crate::verify::{map_boundary_conditions, verify, TrussModel};

pub const STRESS_FILE: &str = "stress.bin";
pub const DISPLACEMENT_FILE: &str = "displacement.bin";
pub const FRAMES_FILE: &str = "frames.bin";
pub const PARAM_FILE: &str = "param.bin";
pub const RAW_GRAPH_FILE: &str = "graph_raw.json";
pub const GRAPH_FILE: &str = "graph.json";
pub const OBJ_FILE: &str = "truss.obj";
pub const PLY_FILE: &str = "truss.ply";
pub const LINES_FILE: &str = "graph_lines.obj";
pub const VERIFY_FILE: &str = "verify_report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Fea,
    Frames,
    Param,
    Extract,
    Simplify,
    Geometry,
    Verify,
    Pipeline,
}

impl Stage {
    /// Every concrete stage in execution order.
    pub const ORDER: [Stage; 7] =
        [Stage::Fea, Stage::Frames, Stage::Param, Stage::Extract, Stage::Simplify, Stage::Geometry, Stage::Verify];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Fea => "fea",
            Stage::Frames => "frames",
            Stage::Param => "param",
            Stage::Extract => "extract",
            Stage::Simplify => "simplify",
            Stage::Geometry => "geometry",
            Stage::Verify => "verify",
            Stage::Pipeline => "pipeline",
        }
    }

    /// Artifact format version; bumped whenever a stage's outputs change shape.
    pub fn version(self) -> u32 {
        1
    }

    pub fn log_file(self) -> String {
        format!("{}.log.json", self.name())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ORDER
            .into_iter()
            .chain([Stage::Pipeline])
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageVersion {
    pub stage: Stage,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    /// Stages executed by the run that wrote this manifest.
    pub stages: Vec<StageVersion>,
    /// Files present in the output directory afterwards.
    pub artifacts: Vec<String>,
}

/// Runs stages against one output directory.
#[derive(Debug, Clone)]
pub struct Runner {
    pub config: PipelineConfig,
    pub out: PathBuf,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn vec3s(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn matrices(m: &[Matrix3<f64>]) -> Vec<f64> {
    m.iter().flat_map(|a| a.as_slice().to_vec()).collect()
}

impl Runner {
    /// `out` overrides the configured output directory.
    pub fn new(config: PipelineConfig, out: Option<PathBuf>) -> Result<Self> {
        config.validate()?;
        let out = out.unwrap_or_else(|| config.output_path());
        Ok(Self { config, out })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Run one stage (or all, for [`Stage::Pipeline`]) and refresh the
    /// manifest. Errors carry the name of the failing stage.
    pub fn run(&self, stage: Stage) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        let stages: Vec<Stage> = if stage == Stage::Pipeline { Stage::ORDER.to_vec() } else { vec![stage] };
        for &s in &stages {
            let start = Instant::now();
            log::info!("stage {s}: start");
            self.run_one(s).map_err(|e| Error::Stage { stage: s.name().to_string(), source: Box::new(e) })?;
            log::info!("stage {s}: done in {:.2} s", start.elapsed().as_secs_f64());
        }
        self.write_manifest(&stages)
    }

    fn run_one(&self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Fea => self.fea(),
            Stage::Frames => self.frames(),
            Stage::Param => self.param(),
            Stage::Extract => self.extract(),
            Stage::Simplify => self.simplify(),
            Stage::Geometry => self.geometry(),
            Stage::Verify => self.verify(),
            Stage::Pipeline => unreachable!("expanded by run"),
        }
    }

    fn write_manifest(&self, stages: &[Stage]) -> Result<()> {
        let mut artifacts: Vec<String> = std::fs::read_dir(&self.out)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| n != MANIFEST_FILE)
            .collect();
        artifacts.sort();
        let manifest = Manifest {
            config_sha256: self.config.hash()?,
            stages: stages.iter().map(|&stage| StageVersion { stage, version: stage.version() }).collect(),
            artifacts,
        };
        write_json(&self.path(MANIFEST_FILE), &manifest)
    }

    fn require(&self, file: &str, producer: Stage) -> Result<PathBuf> {
        let p = self.path(file);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact(producer.name().to_string()))
        }
    }

    fn field(&self, file: &str, producer: Stage, kind: &str, count: usize, components: usize) -> Result<Field> {
        let f = Field::read(&self.require(file, producer)?)?;
        if f.header.version != producer.version() {
            return Err(Error::InvalidInput(format!(
                "{file} has version {}, expected {}",
                f.header.version,
                producer.version()
            )));
        }
        f.expect(kind, count, components)
    }

    fn header(stage: Stage, kind: &str, count: usize, components: usize, location: &str, extra: serde_json::Value) -> FieldHeader {
        FieldHeader {
            kind: kind.into(),
            version: stage.version(),
            count,
            components,
            location: location.into(),
            extra,
        }
    }

    pub fn load_mesh(&self) -> Result<TetMesh> {
        load_tet_mesh(&self.config.mesh_path(), self.config.mesh_format()?)
    }

    /// Stress artifact with `σ₊` rebuilt.
    pub fn load_stress(&self, mesh: &TetMesh) -> Result<StressField> {
        let f = self.field(STRESS_FILE, Stage::Fea, "stress", mesh.n_tets(), 9)?;
        let tensors = f.records().map(Matrix3::from_column_slice).collect();
        stress_spd(StressField::from_tensors(tensors))
    }

    pub fn load_frames(&self, mesh: &TetMesh) -> Result<Vec<Matrix3<f64>>> {
        let f = self.field(FRAMES_FILE, Stage::Frames, "frames", mesh.n_tets(), 9)?;
        Ok(f.records().map(Matrix3::from_column_slice).collect())
    }

    pub fn load_param(&self, mesh: &TetMesh) -> Result<Parametrization> {
        let f = self.field(PARAM_FILE, Stage::Param, "param", mesh.n_vertices(), 6)?;
        let x = &f.header.extra;
        let num = |k: &str| -> Result<f64> {
            x.get(k).and_then(|v| v.as_f64()).ok_or_else(|| Error::InvalidInput(format!("param header lacks {k}")))
        };
        let residuals: [f64; 3] = serde_json::from_value(x.get("residuals").cloned().unwrap_or_default())
            .map_err(|e| Error::InvalidInput(format!("param header residuals: {e}")))?;
        Ok(Parametrization {
            phi: f.records().map(|r| Vec3::new(r[0], r[1], r[2])).collect(),
            phi_tilde: Some(f.records().map(|r| Vec3::new(r[3], r[4], r[5])).collect()),
            beta: num("beta")?,
            rho: num("rho")?,
            scale: num("scale")?,
            residuals,
        })
    }

    pub fn load_graph(&self, file: &str, producer: Stage) -> Result<TrussGraph> {
        read_json(&self.require(file, producer)?)
    }

    fn fea(&self) -> Result<()> {
        let mesh = self.load_mesh()?;
        let cfg = &self.config;
        let sol = solve_static(&mesh, &cfg.material, &cfg.boundary_conditions)?;
        let stress = cauchy_stress(&mesh, &cfg.material, &sol.displacement)?;
        let nt = mesh.n_tets();
        let nv = mesh.n_vertices();
        Field::new(Self::header(Stage::Fea, "stress", nt, 9, "tet", json!({ "unit": "Pa" })), matrices(&stress.sigma))?
            .write(&self.path(STRESS_FILE))?;
        Field::new(Self::header(Stage::Fea, "displacement", nv, 3, "vertex", json!({ "unit": "m" })), vec3s(&sol.displacement))?
            .write(&self.path(DISPLACEMENT_FILE))?;
        let total_load: Vec3 = sol.loads.iter().sum();
        let total_reaction: Vec3 = sol.reactions.iter().sum();
        let von_mises = stress.von_mises().into_iter().fold(0.0, f64::max);
        write_json(
            &self.path(&Stage::Fea.log_file()),
            &json!({
                "vertices": nv,
                "tets": nt,
                "volume": mesh.total_volume(),
                "residual": sol.residual,
                "total_load": total_load,
                "total_reaction": total_reaction,
                "max_displacement": sol.displacement.iter().map(|d| d.norm()).fold(0.0, f64::max),
                "max_von_mises": von_mises,
            }),
        )
    }

    fn frames(&self) -> Result<()> {
        let mesh = self.load_mesh()?;
        let stress = self.load_stress(&mesh)?;
        let ops = build_operators(&mesh)?;
        let ff = fit_frame_field(&mesh, &ops, &stress, &self.config.frames)?;
        Field::new(Self::header(Stage::Frames, "frames", mesh.n_tets(), 9, "tet", json!({})), matrices(&ff.frames))?
            .write(&self.path(FRAMES_FILE))?;
        write_json(
            &self.path(&Stage::Frames.log_file()),
            &json!({
                "outer_iterations": ff.alpha_history.len(),
                "final_data_energy": ff.alpha_history.last().map(|r| r.data_energy),
                "orthonormality_error": ff.orthonormality_error(),
                "history": ff.alpha_history,
            }),
        )
    }

    fn param(&self) -> Result<()> {
        let mesh = self.load_mesh()?;
        let frames = self.load_frames(&mesh)?;
        let ops = build_operators(&mesh)?;
        let pc = self.config.param;
        let p = solve_parametrization(&mesh, &ops, &frames, pc.beta)?;
        let energy = objective(&mesh, &ops, &frames, pc.beta, &p.phi);
        let p = normalize_and_scale(p, pc.rho)?;
        let tilde = p.tilde()?;
        let data: Vec<f64> = p.phi.iter().zip(tilde).flat_map(|(a, b)| [a.x, a.y, a.z, b.x, b.y, b.z]).collect();
        let extra = json!({ "beta": p.beta, "rho": p.rho, "scale": p.scale, "residuals": p.residuals });
        Field::new(Self::header(Stage::Param, "param", mesh.n_vertices(), 6, "vertex", extra), data)?
            .write(&self.path(PARAM_FILE))?;
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in tilde {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        write_json(
            &self.path(&Stage::Param.log_file()),
            &json!({
                "objective": energy,
                "residuals": p.residuals,
                "scale": p.scale,
                "tilde_min": lo,
                "tilde_max": hi,
            }),
        )
    }

    /// Alignment statistic when a stress artifact is available.
    fn alignment(&self, mesh: &TetMesh, g: &TrussGraph) -> Result<serde_json::Value> {
        if !self.path(STRESS_FILE).is_file() {
            return Ok(serde_json::Value::Null);
        }
        let stress = self.load_stress(mesh)?;
        Ok(serde_json::to_value(stress_alignment(g, &stress, self.config.verify.alignment_angle_deg)?)?)
    }

    fn extract(&self) -> Result<()> {
        let mesh = self.load_mesh()?;
        let p = self.load_param(&mesh)?;
        let topo = Topology::new(&mesh);
        let p = perturb_parametrization(p, &topo, self.config.extract.epsilon)?;
        let features = feature_edges(&mesh.boundary, self.config.extract.feature_cos_threshold)?;
        let (g, report) = extract_truss(&mesh, &topo, p.tilde()?, &features)?;
        write_json(&self.path(RAW_GRAPH_FILE), &g)?;
        write_json(
            &self.path(&Stage::Extract.log_file()),
            &json!({
                "nodes": g.nodes.len(),
                "elements": g.elements.len(),
                "components": g.component_count(),
                "total_length": g.total_length(),
                "feature_edges": features.len(),
                "volume": report,
                "alignment": self.alignment(&mesh, &g)?,
            }),
        )
    }

    fn simplify(&self) -> Result<()> {
        let raw = self.load_graph(RAW_GRAPH_FILE, Stage::Extract)?;
        let (g, report) = simplify(&raw, &self.config.simplify)?;
        write_json(&self.path(GRAPH_FILE), &g)?;
        let mesh = self.load_mesh()?;
        write_json(
            &self.path(&Stage::Simplify.log_file()),
            &json!({
                "nodes_before": raw.nodes.len(),
                "elements_before": raw.elements.len(),
                "nodes": g.nodes.len(),
                "elements": g.elements.len(),
                "components": g.component_count(),
                "total_length": g.total_length(),
                "report": report,
                "alignment": self.alignment(&mesh, &g)?,
            }),
        )
    }

    fn geometry(&self) -> Result<()> {
        let g = self.load_graph(GRAPH_FILE, Stage::Simplify)?;
        let (tri, report) = emit_geometry(&g, &self.config.geometry)?;
        write_obj(&tri, &self.path(OBJ_FILE))?;
        write_ply(&tri, &self.path(PLY_FILE))?;
        write_line_obj(&g, &self.path(LINES_FILE))?;
        write_json(
            &self.path(&Stage::Geometry.log_file()),
            &json!({
                "vertices": tri.vertices.len(),
                "triangles": tri.triangles.len(),
                "report": report,
            }),
        )
    }

    fn verify(&self) -> Result<()> {
        let g = self.load_graph(GRAPH_FILE, Stage::Simplify)?;
        let mesh = self.load_mesh()?;
        let cfg = &self.config;
        let (supports, loads) = map_boundary_conditions(&g, &mesh, &cfg.boundary_conditions)?;
        let mut model = TrussModel::new(g, &cfg.geometry.radius, cfg.material);
        model.supports = supports;
        model.loads = loads;
        if cfg.verify.pinned {
            model.pinned.iter_mut().for_each(|p| *p = true);
        }
        let (_, report) = verify(&model)?;
        write_json(&self.path(VERIFY_FILE), &report)?;
        write_json(
            &self.path(&Stage::Verify.log_file()),
            &json!({
                "load_factor": report.load_factor,
                "critical_element": report.critical_element,
                "max_stress": report.max_stress,
                "residual": report.residual,
                "ignored_nodes": report.ignored_nodes,
                "welded_elements": report.welded_elements,
            }),
        )
    }
}

/// Load a config file and run `stage`.
pub fn run_stage(stage: Stage, config: &Path, out: Option<PathBuf>) -> Result<Runner> {
    let cfg = PipelineConfig::load(config)?;
    let runner = Runner::new(cfg, out)?;
    runner.run(stage)?;
    Ok(runner)
}
