//! The map: triangle-mesh geometries, instances referencing shared
//! sub-scenes, staged runtime modification, and commit semantics.
//!
//! A scene is modified under exclusive access and committed explicitly;
//! queries against a dirty scene fail with [`SceneError::DirtyScene`] rather
//! than observing half-applied state. After commit the scene is immutable
//! and freely shareable across threads.
//!
//! Nesting is two levels: the top-level scene holds geometries and
//! instances, and every instance references a committed sub-scene that holds
//! geometries only. Many instances may reference one sub-scene without
//! duplicating its mesh storage.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::bvh::{bvh_build, Bvh, BvhPrim};
use crate::math3d::{Aabb, Transform, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdKind {
    Geometry,
    Instance,
}

impl std::fmt::Display for IdKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IdKind::Geometry => write!(f, "geometry"),
            IdKind::Instance => write!(f, "instance"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("sub-scene must be committed before it can be instanced")]
    UncommittedSubScene,
    #[error("sub-scenes may hold geometries only; flatten deeper graphs first")]
    NestedInstance,
    #[error("unknown {kind} id {id}")]
    UnknownId { kind: IdKind, id: u32 },
    #[error("face {face} references vertex {index}, but only {vertex_count} vertices exist")]
    FaceIndexOutOfRange {
        face: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("vertex index {index} out of range for geometry {geom_id} ({vertex_count} vertices)")]
    VertexIndexOutOfRange {
        geom_id: u32,
        index: u32,
        vertex_count: usize,
    },
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("scene has staged modifications; commit before simulating")]
    DirtyScene,
}

/// An indexed triangle mesh. Coordinates are meters.
///
/// Construction validates face indices and silently drops degenerate faces
/// (repeated vertex index or exactly zero area), counting them so loaders
/// can report the removals.
#[derive(Debug, Clone, Default)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    degenerate_dropped: usize,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Mesh, SceneError> {
        let n = vertices.len();
        for (face, f) in faces.iter().enumerate() {
            for &index in f {
                if index as usize >= n {
                    return Err(SceneError::FaceIndexOutOfRange {
                        face,
                        index,
                        vertex_count: n,
                    });
                }
            }
        }
        let before = faces.len();
        let faces: Vec<[u32; 3]> = faces
            .into_iter()
            .filter(|f| !Self::is_degenerate(f, &vertices))
            .collect();
        Ok(Mesh {
            degenerate_dropped: before - faces.len(),
            vertices,
            faces,
        })
    }

    fn is_degenerate(f: &[u32; 3], vertices: &[Vec3]) -> bool {
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return true;
        }
        let v0 = vertices[f[0] as usize];
        let v1 = vertices[f[1] as usize];
        let v2 = vertices[f[2] as usize];
        // Exactly collinear faces produce a zero normal and NaNs downstream.
        (v1 - v0).cross(v2 - v0).norm_squared() == 0.0
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Degenerate faces dropped during construction.
    pub fn degenerate_dropped(&self) -> usize {
        self.degenerate_dropped
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    #[inline]
    pub fn triangle(&self, face: u32) -> (Vec3, Vec3, Vec3) {
        let f = self.faces[face as usize];
        (
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        )
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied())
    }

    /// A copy with every vertex mapped through `t` (full affine, including
    /// per-axis scale). Face connectivity is untouched.
    pub fn transformed(&self, t: &Transform) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(|&v| t.apply(v)).collect(),
            faces: self.faces.clone(),
            degenerate_dropped: 0,
        }
    }

    fn face_prims(&self) -> Vec<BvhPrim> {
        self.faces
            .iter()
            .map(|f| {
                BvhPrim::from_triangle(
                    self.vertices[f[0] as usize],
                    self.vertices[f[1] as usize],
                    self.vertices[f[2] as usize],
                )
            })
            .collect()
    }

    fn face_aabbs(&self) -> Vec<Aabb> {
        self.faces
            .iter()
            .map(|f| {
                let mut b = Aabb::EMPTY;
                b.grow(self.vertices[f[0] as usize]);
                b.grow(self.vertices[f[1] as usize]);
                b.grow(self.vertices[f[2] as usize]);
                b
            })
            .collect()
    }
}

/// Precomputed affine placement of an instance: linear part `R * diag(s)`,
/// its inverse, and the inverse-transpose used for normals. This carries the
/// generality that `Transform` composition deliberately refuses.
#[derive(Debug, Clone, Copy)]
pub(crate) struct InstanceXform {
    linear: [[f64; 3]; 3],
    inv_linear: [[f64; 3]; 3],
    normal_linear: [[f64; 3]; 3],
    translation: Vec3,
}

#[inline]
fn mat_apply(m: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

impl InstanceXform {
    fn from_transform(t: &Transform) -> InstanceXform {
        let r = t.rotation.to_matrix();
        let s = t.scale;
        let mut linear = [[0.0; 3]; 3];
        let mut inv_linear = [[0.0; 3]; 3];
        let mut normal_linear = [[0.0; 3]; 3];
        let sv = [s.x, s.y, s.z];
        for i in 0..3 {
            for j in 0..3 {
                linear[i][j] = r[i][j] * sv[j];
                inv_linear[i][j] = r[j][i] / sv[i];
                normal_linear[i][j] = r[i][j] / sv[j];
            }
        }
        InstanceXform {
            linear,
            inv_linear,
            normal_linear,
            translation: t.translation,
        }
    }

    #[inline]
    pub(crate) fn world_to_local_point(&self, p: Vec3) -> Vec3 {
        mat_apply(&self.inv_linear, p - self.translation)
    }

    #[inline]
    pub(crate) fn world_to_local_vec(&self, v: Vec3) -> Vec3 {
        mat_apply(&self.inv_linear, v)
    }

    #[inline]
    pub(crate) fn local_to_world_point(&self, p: Vec3) -> Vec3 {
        mat_apply(&self.linear, p) + self.translation
    }

    #[inline]
    pub(crate) fn normal_to_world(&self, n: Vec3) -> Vec3 {
        mat_apply(&self.normal_linear, n)
    }

    fn world_aabb(&self, local: &Aabb) -> Aabb {
        if local.is_empty() {
            return Aabb::EMPTY;
        }
        let mut b = Aabb::EMPTY;
        for i in 0..8 {
            b.grow(self.local_to_world_point(local.corner(i)));
        }
        b
    }
}

#[derive(Debug)]
pub struct GeomSlot {
    mesh: Mesh,
    bvh: Option<Bvh>,
    built_generation: u64,
    vertex_dirty: bool,
}

impl GeomSlot {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Committed-scene invariant: every geometry has a built BVH.
    pub(crate) fn bvh(&self) -> &Bvh {
        self.bvh.as_ref().expect("geometry BVH built at commit")
    }
}

#[derive(Debug)]
pub struct InstSlot {
    target: Arc<Scene>,
    placement: Transform,
    xform: InstanceXform,
}

impl InstSlot {
    pub fn target(&self) -> &Arc<Scene> {
        &self.target
    }

    pub fn placement(&self) -> &Transform {
        &self.placement
    }

    pub(crate) fn xform(&self) -> &InstanceXform {
        &self.xform
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum TopObjectKind {
    Geometry(u32),
    Instance(u32),
}

#[derive(Debug)]
pub(crate) struct TopObject {
    pub(crate) kind: TopObjectKind,
    aabb: Aabb,
}

#[derive(Debug)]
pub(crate) struct TopLevel {
    pub(crate) objects: Vec<TopObject>,
    pub(crate) bvh: Option<Bvh>,
    bounds: Aabb,
}

/// What a commit did: how many BVH nodes were rebuilt versus refit, and
/// which geometries took which path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommitReport {
    pub nodes_rebuilt: usize,
    pub nodes_refit: usize,
    pub geometries_built: Vec<u32>,
    pub geometries_refit: Vec<u32>,
    pub top_level_rebuilt: bool,
    pub top_level_refit: bool,
    pub generation: u64,
}

/// A committed two-level world of geometries and instances plus their
/// acceleration structures.
#[derive(Debug)]
pub struct Scene {
    geoms: BTreeMap<u32, GeomSlot>,
    insts: BTreeMap<u32, InstSlot>,
    next_geom_id: u32,
    next_inst_id: u32,
    generation: u64,
    dirty: bool,
    structural_change: bool,
    top: Option<TopLevel>,
}

impl Default for Scene {
    fn default() -> Self {
        Scene::new()
    }
}

impl Scene {
    pub fn new() -> Scene {
        Scene {
            geoms: BTreeMap::new(),
            insts: BTreeMap::new(),
            next_geom_id: 0,
            next_inst_id: 0,
            generation: 0,
            dirty: true,
            structural_change: true,
            top: None,
        }
    }

    /// Stages a geometry. Ids are assigned sequentially and never reused,
    /// so a stale id held after removal fails loudly instead of aliasing.
    pub fn add_geometry(&mut self, mesh: Mesh) -> Result<u32, SceneError> {
        if mesh.is_empty() {
            return Err(SceneError::EmptyMesh);
        }
        let id = self.next_geom_id;
        self.next_geom_id += 1;
        self.geoms.insert(
            id,
            GeomSlot {
                mesh,
                bvh: None,
                built_generation: 0,
                vertex_dirty: false,
            },
        );
        self.dirty = true;
        self.structural_change = true;
        Ok(id)
    }

    /// Stages an instance of a committed, geometries-only sub-scene. The
    /// sub-scene's mesh storage is shared, not copied.
    pub fn add_instance(
        &mut self,
        target: Arc<Scene>,
        placement: Transform,
    ) -> Result<u32, SceneError> {
        if target.is_dirty() {
            return Err(SceneError::UncommittedSubScene);
        }
        if !target.insts.is_empty() {
            return Err(SceneError::NestedInstance);
        }
        Self::validate_placement(&placement)?;
        let id = self.next_inst_id;
        self.next_inst_id += 1;
        self.insts.insert(
            id,
            InstSlot {
                xform: InstanceXform::from_transform(&placement),
                target,
                placement,
            },
        );
        self.dirty = true;
        self.structural_change = true;
        Ok(id)
    }

    fn validate_placement(placement: &Transform) -> Result<(), SceneError> {
        let s = placement.scale;
        if !(s.x > 0.0 && s.y > 0.0 && s.z > 0.0) {
            return Err(SceneError::InvalidPlacement(format!(
                "scale components must be positive, got ({}, {}, {})",
                s.x, s.y, s.z
            )));
        }
        Ok(())
    }

    /// Stages a new placement for an instance; takes effect at commit.
    pub fn update_instance(&mut self, inst_id: u32, placement: Transform) -> Result<(), SceneError> {
        Self::validate_placement(&placement)?;
        let slot = self.insts.get_mut(&inst_id).ok_or(SceneError::UnknownId {
            kind: IdKind::Instance,
            id: inst_id,
        })?;
        slot.xform = InstanceXform::from_transform(&placement);
        slot.placement = placement;
        self.dirty = true;
        Ok(())
    }

    pub fn remove_geometry(&mut self, geom_id: u32) -> Result<(), SceneError> {
        self.geoms
            .remove(&geom_id)
            .ok_or(SceneError::UnknownId {
                kind: IdKind::Geometry,
                id: geom_id,
            })?;
        self.dirty = true;
        self.structural_change = true;
        Ok(())
    }

    pub fn remove_instance(&mut self, inst_id: u32) -> Result<(), SceneError> {
        self.insts
            .remove(&inst_id)
            .ok_or(SceneError::UnknownId {
                kind: IdKind::Instance,
                id: inst_id,
            })?;
        self.dirty = true;
        self.structural_change = true;
        Ok(())
    }

    /// Stages vertex moves on a geometry. Topology is unchanged, so the
    /// commit refits the geometry's BVH instead of rebuilding it. All
    /// indices are validated before any vertex is touched.
    pub fn update_vertices(
        &mut self,
        geom_id: u32,
        updates: &[(u32, Vec3)],
    ) -> Result<(), SceneError> {
        let slot = self.geoms.get_mut(&geom_id).ok_or(SceneError::UnknownId {
            kind: IdKind::Geometry,
            id: geom_id,
        })?;
        let n = slot.mesh.vertices.len();
        for &(index, _) in updates {
            if index as usize >= n {
                return Err(SceneError::VertexIndexOutOfRange {
                    geom_id,
                    index,
                    vertex_count: n,
                });
            }
        }
        for &(index, pos) in updates {
            slot.mesh.vertices[index as usize] = pos;
        }
        slot.vertex_dirty = true;
        self.dirty = true;
        Ok(())
    }

    /// Applies all staged modifications to the acceleration structures.
    ///
    /// Vertex-only changes refit the affected geometries bottom-up and refit
    /// the top level; adding or removing objects rebuilds the top level plus
    /// the BVHs of new geometries, leaving existing geometry BVHs untouched.
    /// A commit on a clean scene is a no-op and does not advance the
    /// generation counter.
    pub fn commit(&mut self) -> CommitReport {
        let mut report = CommitReport {
            generation: self.generation,
            ..CommitReport::default()
        };
        if !self.dirty {
            return report;
        }
        self.generation += 1;
        report.generation = self.generation;

        for (&id, slot) in self.geoms.iter_mut() {
            if slot.bvh.is_none() {
                let bvh = bvh_build(&slot.mesh.face_prims())
                    .expect("staged geometries are never empty");
                report.nodes_rebuilt += bvh.node_count();
                report.geometries_built.push(id);
                slot.bvh = Some(bvh);
                slot.built_generation = self.generation;
                slot.vertex_dirty = false;
            } else if slot.vertex_dirty {
                let bvh = slot.bvh.as_mut().unwrap();
                bvh.bvh_refit(&slot.mesh.face_aabbs())
                    .expect("vertex updates preserve the face count");
                report.nodes_refit += bvh.node_count();
                report.geometries_refit.push(id);
                slot.vertex_dirty = false;
            }
        }

        if self.structural_change {
            let mut objects = Vec::with_capacity(self.geoms.len() + self.insts.len());
            for (&id, slot) in &self.geoms {
                objects.push(TopObject {
                    kind: TopObjectKind::Geometry(id),
                    aabb: slot.bvh.as_ref().unwrap().root_bounds(),
                });
            }
            for (&id, slot) in &self.insts {
                objects.push(TopObject {
                    kind: TopObjectKind::Instance(id),
                    aabb: slot.xform.world_aabb(&slot.target.bounds()),
                });
            }
            let bvh = if objects.is_empty() {
                None
            } else {
                let prims: Vec<BvhPrim> = objects
                    .iter()
                    .map(|o| BvhPrim {
                        aabb: o.aabb,
                        centroid: o.aabb.center(),
                    })
                    .collect();
                let b = bvh_build(&prims).unwrap();
                report.nodes_rebuilt += b.node_count();
                Some(b)
            };
            report.top_level_rebuilt = true;
            let bounds = objects
                .iter()
                .fold(Aabb::EMPTY, |acc, o| acc.union(&o.aabb));
            self.top = Some(TopLevel {
                objects,
                bvh,
                bounds,
            });
        } else if let Some(mut top) = self.top.take() {
            // Same membership, possibly moved bounds: refresh and refit.
            for obj in &mut top.objects {
                obj.aabb = match obj.kind {
                    TopObjectKind::Geometry(id) => {
                        self.geoms[&id].bvh.as_ref().unwrap().root_bounds()
                    }
                    TopObjectKind::Instance(id) => {
                        let slot = &self.insts[&id];
                        slot.xform.world_aabb(&slot.target.bounds())
                    }
                };
            }
            if let Some(bvh) = top.bvh.as_mut() {
                let aabbs: Vec<Aabb> = top.objects.iter().map(|o| o.aabb).collect();
                bvh.bvh_refit(&aabbs).expect("membership unchanged");
                report.nodes_refit += bvh.node_count();
                report.top_level_refit = true;
            }
            top.bounds = top
                .objects
                .iter()
                .fold(Aabb::EMPTY, |acc, o| acc.union(&o.aabb));
            self.top = Some(top);
        }

        self.structural_change = false;
        self.dirty = false;
        report
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    /// Commit counter; advances once per effective commit.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// World bounds of the committed scene (empty box before first commit
    /// or for a scene with no content).
    pub fn bounds(&self) -> Aabb {
        self.top.as_ref().map_or(Aabb::EMPTY, |t| t.bounds)
    }

    pub fn geometry_count(&self) -> usize {
        self.geoms.len()
    }

    pub fn instance_count(&self) -> usize {
        self.insts.len()
    }

    pub fn geometry_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.geoms.keys().copied()
    }

    pub fn instance_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.insts.keys().copied()
    }

    pub fn mesh(&self, geom_id: u32) -> Result<&Mesh, SceneError> {
        self.geoms
            .get(&geom_id)
            .map(|s| &s.mesh)
            .ok_or(SceneError::UnknownId {
                kind: IdKind::Geometry,
                id: geom_id,
            })
    }

    /// The geometry's acceleration structure (present once committed).
    pub fn geometry_bvh(&self, geom_id: u32) -> Result<&Bvh, SceneError> {
        let slot = self.geoms.get(&geom_id).ok_or(SceneError::UnknownId {
            kind: IdKind::Geometry,
            id: geom_id,
        })?;
        slot.bvh.as_ref().ok_or(SceneError::DirtyScene)
    }

    /// Generation at which the geometry's BVH was last built from scratch.
    pub fn geometry_build_generation(&self, geom_id: u32) -> Result<u64, SceneError> {
        self.geoms
            .get(&geom_id)
            .map(|s| s.built_generation)
            .ok_or(SceneError::UnknownId {
                kind: IdKind::Geometry,
                id: geom_id,
            })
    }

    pub fn instance_target(&self, inst_id: u32) -> Result<&Arc<Scene>, SceneError> {
        self.insts
            .get(&inst_id)
            .map(|s| &s.target)
            .ok_or(SceneError::UnknownId {
                kind: IdKind::Instance,
                id: inst_id,
            })
    }

    pub fn instance_placement(&self, inst_id: u32) -> Result<&Transform, SceneError> {
        self.insts
            .get(&inst_id)
            .map(|s| &s.placement)
            .ok_or(SceneError::UnknownId {
                kind: IdKind::Instance,
                id: inst_id,
            })
    }

    /// Triangles actually stored: own geometries plus each distinct
    /// sub-scene counted once, independent of how many instances point at it.
    pub fn unique_face_count(&self) -> usize {
        let mut total: usize = self
            .geoms
            .values()
            .map(|s| s.mesh.face_count())
            .sum();
        let mut seen: Vec<*const Scene> = Vec::new();
        for slot in self.insts.values() {
            let ptr = Arc::as_ptr(&slot.target);
            if !seen.contains(&ptr) {
                seen.push(ptr);
                total += slot.target.unique_face_count();
            }
        }
        total
    }

    /// Triangles as seen by rays: every instance contributes its full
    /// sub-scene.
    pub fn instanced_face_count(&self) -> usize {
        let own: usize = self
            .geoms
            .values()
            .map(|s| s.mesh.face_count())
            .sum();
        let inst: usize = self
            .insts
            .values()
            .map(|s| s.target.instanced_face_count())
            .sum();
        own + inst
    }

    pub(crate) fn top_level(&self) -> Option<&TopLevel> {
        self.top.as_ref()
    }

    pub(crate) fn geometry_slot(&self, geom_id: u32) -> &GeomSlot {
        &self.geoms[&geom_id]
    }

    pub(crate) fn instance_slot(&self, inst_id: u32) -> &InstSlot {
        &self.insts[&inst_id]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvh::{closest_hit, NO_ID};
    use crate::math3d::{Ray, Rotation};

    fn tri_mesh() -> Mesh {
        Mesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    fn wall(x: f64, half: f64) -> Mesh {
        Mesh::new(
            vec![
                Vec3::new(x, -half, -half),
                Vec3::new(x, half, -half),
                Vec3::new(x, half, half),
                Vec3::new(x, -half, half),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    fn ray_px() -> Ray {
        Ray::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 0.0, 1e9)
    }

    #[test]
    fn mesh_rejects_bad_index() {
        let err = Mesh::new(
            vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)],
            vec![[0, 1, 9]],
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::FaceIndexOutOfRange { index: 9, .. }));
    }

    #[test]
    fn mesh_drops_degenerate_faces() {
        let m = Mesh::new(
            vec![
                Vec3::ZERO,
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0), // collinear with 0 and 1
            ],
            vec![[0, 1, 2], [0, 1, 1], [0, 1, 3]],
        )
        .unwrap();
        assert_eq!(m.face_count(), 1);
        assert_eq!(m.degenerate_dropped(), 2);
    }

    #[test]
    fn geometry_ids_are_sequential_and_never_reused() {
        let mut s = Scene::new();
        assert_eq!(s.add_geometry(tri_mesh()).unwrap(), 0);
        assert_eq!(s.add_geometry(tri_mesh()).unwrap(), 1);
        s.remove_geometry(1).unwrap();
        assert_eq!(s.add_geometry(tri_mesh()).unwrap(), 2);

        let mut fresh = Scene::new();
        assert_eq!(fresh.add_geometry(tri_mesh()).unwrap(), 0);
        fresh.remove_geometry(0).unwrap();
        assert_eq!(fresh.add_geometry(tri_mesh()).unwrap(), 1);
    }

    #[test]
    fn empty_mesh_rejected() {
        let mut s = Scene::new();
        let empty = Mesh::new(vec![Vec3::ZERO], vec![]).unwrap();
        assert_eq!(s.add_geometry(empty).unwrap_err(), SceneError::EmptyMesh);
    }

    #[test]
    fn instances_share_storage() {
        let mut sub = Scene::new();
        // A sub-scene with a decent number of faces.
        let mesh = crate::assets::make_icosphere(1000, 1.0);
        let faces = mesh.face_count();
        sub.add_geometry(mesh).unwrap();
        sub.commit();
        let sub = Arc::new(sub);

        let mut s = Scene::new();
        for i in 0..100 {
            let t = Transform::from_translation(Vec3::new(i as f64 * 3.0, 0.0, 0.0));
            s.add_instance(Arc::clone(&sub), t).unwrap();
        }
        s.commit();
        assert_eq!(s.unique_face_count(), faces);
        assert_eq!(s.instanced_face_count(), faces * 100);
        assert_eq!(s.instance_count(), 100);
    }

    #[test]
    fn identity_instance_matches_direct_geometry() {
        let mut direct = Scene::new();
        direct.add_geometry(wall(5.0, 2.0)).unwrap();
        direct.commit();

        let mut sub = Scene::new();
        sub.add_geometry(wall(5.0, 2.0)).unwrap();
        sub.commit();
        let mut inst = Scene::new();
        inst.add_instance(Arc::new(sub), Transform::IDENTITY).unwrap();
        inst.commit();

        let hd = closest_hit(&direct, &ray_px()).unwrap().unwrap();
        let hi = closest_hit(&inst, &ray_px()).unwrap().unwrap();
        assert_eq!(hd.t, hi.t);
        assert_eq!(hd.prim_id, hi.prim_id);
        assert_eq!(hd.inst_id, NO_ID);
        assert_eq!(hi.inst_id, 0);
    }

    #[test]
    fn uncommitted_subscene_rejected() {
        let sub = Scene::new();
        let mut s = Scene::new();
        let err = s
            .add_instance(Arc::new(sub), Transform::IDENTITY)
            .unwrap_err();
        assert_eq!(err, SceneError::UncommittedSubScene);
    }

    #[test]
    fn nested_instancing_rejected() {
        let mut leaf = Scene::new();
        leaf.add_geometry(tri_mesh()).unwrap();
        leaf.commit();
        let mut mid = Scene::new();
        mid.add_instance(Arc::new(leaf), Transform::IDENTITY).unwrap();
        mid.commit();
        let mut top = Scene::new();
        let err = top
            .add_instance(Arc::new(mid), Transform::IDENTITY)
            .unwrap_err();
        assert_eq!(err, SceneError::NestedInstance);
    }

    #[test]
    fn move_instance_shifts_ranges() {
        let mut sub = Scene::new();
        sub.add_geometry(wall(0.0, 2.0)).unwrap();
        sub.commit();
        let sub = Arc::new(sub);

        let mut s = Scene::new();
        let id = s
            .add_instance(
                Arc::clone(&sub),
                Transform::from_translation(Vec3::new(5.0, 0.0, 0.0)),
            )
            .unwrap();
        s.commit();
        let baseline = closest_hit(&s, &ray_px()).unwrap().unwrap();
        assert!((baseline.t - 5.0).abs() < 1e-9);

        // Move the wall 1 m toward the sensor along +x? No: moving the
        // instance +1 m in x pushes the wall away; head-on range grows.
        s.update_instance(id, Transform::from_translation(Vec3::new(4.0, 0.0, 0.0)))
            .unwrap();
        s.commit();
        let closer = closest_hit(&s, &ray_px()).unwrap().unwrap();
        assert!((closer.t - 4.0).abs() < 1e-9);

        s.update_instance(id, Transform::from_translation(Vec3::new(5.0, 0.0, 0.0)))
            .unwrap();
        s.commit();
        let back = closest_hit(&s, &ray_px()).unwrap().unwrap();
        assert_eq!(back.t, baseline.t);
    }

    #[test]
    fn update_unknown_instance_fails() {
        let mut s = Scene::new();
        assert_eq!(
            s.update_instance(3, Transform::IDENTITY).unwrap_err(),
            SceneError::UnknownId {
                kind: IdKind::Instance,
                id: 3
            }
        );
    }

    #[test]
    fn remove_sole_geometry_all_rays_miss() {
        let mut s = Scene::new();
        let id = s.add_geometry(wall(5.0, 2.0)).unwrap();
        s.commit();
        assert!(closest_hit(&s, &ray_px()).unwrap().is_some());
        s.remove_geometry(id).unwrap();
        s.commit();
        assert!(closest_hit(&s, &ray_px()).unwrap().is_none());
    }

    #[test]
    fn remove_near_wall_exposes_far_wall() {
        let mut s = Scene::new();
        let near = s.add_geometry(wall(5.0, 2.0)).unwrap();
        s.add_geometry(wall(10.0, 2.0)).unwrap();
        s.commit();
        assert!((closest_hit(&s, &ray_px()).unwrap().unwrap().t - 5.0).abs() < 1e-9);
        s.remove_geometry(near).unwrap();
        s.commit();
        assert!((closest_hit(&s, &ray_px()).unwrap().unwrap().t - 10.0).abs() < 1e-9);
    }

    #[test]
    fn double_remove_fails() {
        let mut s = Scene::new();
        let id = s.add_geometry(tri_mesh()).unwrap();
        s.remove_geometry(id).unwrap();
        assert_eq!(
            s.remove_geometry(id).unwrap_err(),
            SceneError::UnknownId {
                kind: IdKind::Geometry,
                id
            }
        );
    }

    #[test]
    fn vertex_update_of_unhit_triangle_changes_nothing() {
        let mut s = Scene::new();
        s.add_geometry(wall(5.0, 2.0)).unwrap();
        let off = s.add_geometry(wall(50.0, 1.0)).unwrap();
        s.commit();
        let before = closest_hit(&s, &ray_px()).unwrap().unwrap();
        s.update_vertices(off, &[(0, Vec3::new(50.0, -1.5, -1.0))])
            .unwrap();
        s.commit();
        let after = closest_hit(&s, &ray_px()).unwrap().unwrap();
        assert_eq!(before.t, after.t);
        assert_eq!(before.prim_id, after.prim_id);
    }

    #[test]
    fn vertex_pull_shrinks_range() {
        let mut s = Scene::new();
        // Single triangle straddling the ray.
        let id = s
            .add_geometry(
                Mesh::new(
                    vec![
                        Vec3::new(5.0, -1.0, -1.0),
                        Vec3::new(5.0, 2.0, -1.0),
                        Vec3::new(5.0, -1.0, 2.0),
                    ],
                    vec![[0, 1, 2]],
                )
                .unwrap(),
            )
            .unwrap();
        s.commit();
        assert!((closest_hit(&s, &ray_px()).unwrap().unwrap().t - 5.0).abs() < 1e-9);

        // Pull every vertex 1 m toward the sensor: plane moves to x = 4.
        s.update_vertices(
            id,
            &[
                (0, Vec3::new(4.0, -1.0, -1.0)),
                (1, Vec3::new(4.0, 2.0, -1.0)),
                (2, Vec3::new(4.0, -1.0, 2.0)),
            ],
        )
        .unwrap();
        let report = s.commit();
        assert!((closest_hit(&s, &ray_px()).unwrap().unwrap().t - 4.0).abs() < 1e-9);
        assert!(report.geometries_refit.contains(&id));
        assert!(report.geometries_built.is_empty());
    }

    #[test]
    fn vertex_index_out_of_range() {
        let mut s = Scene::new();
        let id = s.add_geometry(tri_mesh()).unwrap();
        let err = s.update_vertices(id, &[(7, Vec3::ZERO)]).unwrap_err();
        assert!(matches!(err, SceneError::VertexIndexOutOfRange { index: 7, .. }));
    }

    #[test]
    fn commit_on_clean_scene_is_noop() {
        let mut s = Scene::new();
        s.add_geometry(tri_mesh()).unwrap();
        s.commit();
        let gen = s.generation();
        let report = s.commit();
        assert_eq!(s.generation(), gen);
        assert_eq!(report.nodes_rebuilt, 0);
        assert_eq!(report.nodes_refit, 0);
    }

    #[test]
    fn vertex_commit_takes_refit_path() {
        let mut s = Scene::new();
        let id = s.add_geometry(wall(5.0, 2.0)).unwrap();
        s.commit();
        s.update_vertices(id, &[(0, Vec3::new(5.0, -2.5, -2.0))])
            .unwrap();
        let report = s.commit();
        assert!(report.nodes_refit > 0);
        assert_eq!(report.nodes_rebuilt, 0);
        assert!(!report.top_level_rebuilt);
        assert!(report.top_level_refit);
    }

    #[test]
    fn add_commit_builds_only_the_new_geometry() {
        let mut s = Scene::new();
        let first = s.add_geometry(wall(5.0, 2.0)).unwrap();
        s.commit();
        let first_gen = s.geometry_build_generation(first).unwrap();

        let second = s.add_geometry(wall(10.0, 2.0)).unwrap();
        let report = s.commit();
        assert_eq!(report.geometries_built, vec![second]);
        assert!(report.top_level_rebuilt);
        assert_eq!(s.geometry_build_generation(first).unwrap(), first_gen);
        assert!(s.geometry_build_generation(second).unwrap() > first_gen);
    }

    #[test]
    fn dirty_scene_refuses_queries() {
        let mut s = Scene::new();
        s.add_geometry(wall(5.0, 2.0)).unwrap();
        s.commit();
        s.update_vertices(0, &[(0, Vec3::new(5.0, -3.0, -2.0))])
            .unwrap();
        assert_eq!(
            closest_hit(&s, &ray_px()).unwrap_err(),
            SceneError::DirtyScene
        );
        s.commit();
        assert!(closest_hit(&s, &ray_px()).is_ok());
    }

    #[test]
    fn scaled_instance_doubles_sphere_range() {
        let mut sub = Scene::new();
        sub.add_geometry(crate::assets::make_icosphere(5000, 1.0))
            .unwrap();
        sub.commit();
        let mut s = Scene::new();
        s.add_instance(
            Arc::new(sub),
            Transform::new(Rotation::IDENTITY, Vec3::ZERO, Vec3::splat(2.0)),
        )
        .unwrap();
        s.commit();
        let hit = closest_hit(&s, &ray_px()).unwrap().unwrap();
        assert!((hit.t - 2.0).abs() < 0.01, "t = {}", hit.t);
    }

    #[test]
    fn refit_equals_rebuild_after_vertex_edit() {
        let mesh = crate::assets::make_icosphere(2000, 5.0);
        let mut scene = Scene::new();
        let id = scene.add_geometry(mesh.clone()).unwrap();
        scene.commit();

        // Nudge a vertex, refit by commit.
        let moved = Vec3::new(4.0, 0.1, 0.2);
        scene.update_vertices(id, &[(17, moved)]).unwrap();
        scene.commit();

        // Oracle: fresh scene built from the already-modified mesh.
        let mut verts = mesh.vertices().to_vec();
        verts[17] = moved;
        let mut rebuilt = Scene::new();
        rebuilt
            .add_geometry(Mesh::new(verts, mesh.faces().to_vec()).unwrap())
            .unwrap();
        rebuilt.commit();

        let mut rng = 0x1234_5678_u64;
        let mut next = || {
            rng = rng.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = rng;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            (z ^ (z >> 31)) as f64 / u64::MAX as f64 * 2.0 - 1.0
        };
        for _ in 0..200 {
            let dir = Vec3::new(next(), next(), next())
                .normalized()
                .unwrap_or(Vec3::new(1.0, 0.0, 0.0));
            let ray = Ray::new(Vec3::ZERO, dir, 0.0, 1e9);
            let a = closest_hit(&scene, &ray).unwrap();
            let b = closest_hit(&rebuilt, &ray).unwrap();
            match (a, b) {
                (Some(ha), Some(hb)) => {
                    assert_eq!(ha.prim_id, hb.prim_id);
                    assert_eq!(ha.t.to_bits(), hb.t.to_bits());
                }
                (None, None) => {}
                other => panic!("refit/rebuild disagree: {:?}", other),
            }
        }
    }
}
