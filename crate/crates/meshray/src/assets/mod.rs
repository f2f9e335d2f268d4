//! Map and data ingestion: OBJ/PLY/STL mesh loaders, scene assembly with a
//! placement sidecar, pose batches, and synthetic map generators.
//!
//! All file coordinates are interpreted as meters; there is no unit
//! conversion. Face windings from files are ignored because geometric
//! normals are computed from vertex order at query time and oriented toward
//! the ray origin, so inconsistent windings are harmless.

mod obj;
mod ply;
mod stl;
mod synth;

pub use synth::{icosphere_face_count, make_ground_plane, make_icosphere};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::math3d::{Rotation, Transform, Vec3};
use crate::scene::{Mesh, Scene, SceneError};
use crate::sim::PoseBatch;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("{path}:{line}: quaternion norm {norm} outside [0.99, 1.01]")]
    NonUnitQuaternion {
        path: String,
        line: usize,
        norm: f64,
    },
    #[error("placement sidecar names unknown object \"{0}\"")]
    UnknownObjectName(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("{0} contains no meshes")]
    EmptyScene(String),
    #[error("sidecar {path}: {msg}")]
    Sidecar { path: String, msg: String },
}

pub(crate) fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> AssetError {
    AssetError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// What a loader found and what it did with it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub vertices: usize,
    pub faces: usize,
    pub degenerate_dropped: usize,
    pub sub_meshes: usize,
    /// Always meters; recorded so downstream tooling can display it.
    pub units: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
    Stl,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("obj") => Some(MeshFormat::Obj),
            Some("ply") => Some(MeshFormat::Ply),
            Some("stl") => Some(MeshFormat::Stl),
            _ => None,
        }
    }
}

/// Named sub-meshes of one file, in file order.
pub(crate) struct NamedMeshes {
    pub objects: Vec<(String, Mesh)>,
}

fn load_named(path: &Path, format: MeshFormat) -> Result<NamedMeshes, AssetError> {
    match format {
        MeshFormat::Obj => obj::load(path),
        MeshFormat::Ply => ply::load(path),
        MeshFormat::Stl => stl::load(path),
    }
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .to_string()
}

/// Loads a single mesh from a file, merging named objects into one mesh.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<(Mesh, LoadReport), AssetError> {
    let named = load_named(path, format)?;
    let sub_meshes = named.objects.len();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut dropped = 0usize;
    for (_, mesh) in named.objects {
        let base = vertices.len() as u32;
        dropped += mesh.degenerate_dropped();
        vertices.extend_from_slice(mesh.vertices());
        faces.extend(
            mesh.faces()
                .iter()
                .map(|f| [f[0] + base, f[1] + base, f[2] + base]),
        );
    }
    let mesh = Mesh::new(vertices, faces)?;
    let report = LoadReport {
        vertices: mesh.vertex_count(),
        faces: mesh.face_count(),
        degenerate_dropped: dropped + mesh.degenerate_dropped(),
        sub_meshes,
        units: "meters",
    };
    Ok((mesh, report))
}

#[derive(Debug, Deserialize)]
struct SidecarFile {
    #[serde(default)]
    instance: Vec<SidecarInstance>,
}

#[derive(Debug, Deserialize)]
struct SidecarInstance {
    name: String,
    #[serde(default)]
    position: [f64; 3],
    /// Roll, pitch, yaw in degrees.
    #[serde(default)]
    rpy: [f64; 3],
    #[serde(default = "unit_scale")]
    scale: [f64; 3],
}

fn unit_scale() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

impl SidecarInstance {
    fn placement(&self) -> Transform {
        Transform::new(
            Rotation::from_rpy(
                self.rpy[0].to_radians(),
                self.rpy[1].to_radians(),
                self.rpy[2].to_radians(),
            ),
            Vec3::from(self.position),
            Vec3::from(self.scale),
        )
    }
}

/// Loads a committed scene from a mesh file or a directory of mesh files.
///
/// Every named object becomes a geometry. An optional placement sidecar
/// (`<stem>.toml` next to a file, `placements.toml` inside a directory)
/// turns named objects into instanced sub-scenes, one instance per entry;
/// objects the sidecar does not mention stay direct geometries.
pub fn load_scene(path: &Path) -> Result<(Scene, LoadReport), AssetError> {
    let (objects, sidecar_path) = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| MeshFormat::from_path(p).is_some())
            .collect();
        files.sort();
        let mut objects = Vec::new();
        for file in files {
            let format = MeshFormat::from_path(&file).unwrap();
            let named = load_named(&file, format)?;
            if named.objects.len() == 1 {
                // A single unnamed-or-default object takes the file's name.
                let (name, mesh) = named.objects.into_iter().next().unwrap();
                let name = if name == "default" { stem_of(&file) } else { name };
                objects.push((name, mesh));
            } else {
                objects.extend(named.objects);
            }
        }
        (objects, path.join("placements.toml"))
    } else {
        let format = MeshFormat::from_path(path).ok_or_else(|| {
            AssetError::UnsupportedFeature(format!(
                "cannot infer mesh format of {}",
                path.display()
            ))
        })?;
        let named = load_named(path, format)?;
        let mut objects = named.objects;
        if objects.len() == 1 && objects[0].0 == "default" {
            objects[0].0 = stem_of(path);
        }
        (objects, path.with_extension("toml"))
    };

    if objects.is_empty() {
        return Err(AssetError::EmptyScene(path.display().to_string()));
    }

    let mut report = LoadReport {
        sub_meshes: objects.len(),
        units: "meters",
        ..LoadReport::default()
    };
    for (_, mesh) in &objects {
        report.vertices += mesh.vertex_count();
        report.faces += mesh.face_count();
        report.degenerate_dropped += mesh.degenerate_dropped();
    }

    // name -> list of placements from the sidecar, in file order.
    let mut placements: BTreeMap<String, Vec<Transform>> = BTreeMap::new();
    if sidecar_path.is_file() {
        let text = std::fs::read_to_string(&sidecar_path)?;
        let sidecar: SidecarFile =
            toml::from_str(&text).map_err(|e| AssetError::Sidecar {
                path: sidecar_path.display().to_string(),
                msg: e.to_string(),
            })?;
        for entry in &sidecar.instance {
            if !objects.iter().any(|(n, _)| *n == entry.name) {
                return Err(AssetError::UnknownObjectName(entry.name.clone()));
            }
            placements
                .entry(entry.name.clone())
                .or_default()
                .push(entry.placement());
        }
    }

    let mut scene = Scene::new();
    for (name, mesh) in objects {
        match placements.get(&name) {
            Some(poses) => {
                let mut sub = Scene::new();
                sub.add_geometry(mesh)?;
                sub.commit();
                let sub = Arc::new(sub);
                for pose in poses {
                    scene.add_instance(Arc::clone(&sub), *pose)?;
                }
            }
            None => {
                scene.add_geometry(mesh)?;
            }
        }
    }
    scene.commit();
    Ok((scene, report))
}

/// Loads a pose batch from CSV rows `x,y,z,qx,qy,qz,qw` (meters,
/// quaternion). A single header row is accepted and skipped. Quaternions
/// are renormalized when their norm is within [0.99, 1.01] and rejected
/// otherwise.
pub fn load_poses(path: &Path) -> Result<PoseBatch, AssetError> {
    let text = std::fs::read_to_string(path)?;
    let mut poses = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(parse_err(
                path,
                line,
                format!("expected 7 comma-separated values, got {}", fields.len()),
            ));
        }
        let mut vals = [0.0f64; 7];
        let mut numeric = true;
        for (i, f) in fields.iter().enumerate() {
            match f.parse::<f64>() {
                Ok(v) => vals[i] = v,
                Err(_) => {
                    numeric = false;
                    break;
                }
            }
        }
        if !numeric {
            if idx == 0 {
                continue; // header row
            }
            return Err(parse_err(path, line, "non-numeric field"));
        }
        let [x, y, z, qx, qy, qz, qw] = vals;
        let norm = (qw * qw + qx * qx + qy * qy + qz * qz).sqrt();
        if !(0.99..=1.01).contains(&norm) {
            return Err(AssetError::NonUnitQuaternion {
                path: path.display().to_string(),
                line,
                norm,
            });
        }
        let rot = Rotation::from_quat(qw, qx, qy, qz).expect("norm checked above");
        poses.push(Transform::rigid(rot, Vec3::new(x, y, z)));
    }
    PoseBatch::new(poses).map_err(|_| {
        parse_err(path, 1, "pose file contains no poses")
    })
}
