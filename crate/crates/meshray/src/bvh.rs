//! Binary bounding volume hierarchy: binned SAH construction, bottom-up
//! refit after vertex motion, and closest-hit traversal over triangles and
//! instance bounds.
//!
//! Node bounds are stored as f32, widened conservatively from the f64 build
//! boxes, so slab tests against them (done in f64) never reject a box that
//! the exact bounds would accept. All intersection arithmetic is f64.

use thiserror::Error;

use crate::math3d::{slab_overlap, Aabb, Ray, Vec3};
use crate::scene::{Scene, TopObjectKind};

/// Sentinel instance id for hits on geometries placed directly in the
/// top-level scene, and for miss entries in result buffers.
pub const NO_ID: u32 = u32::MAX;

/// Rays handed in with `t_min == 0` start here instead, so a sensor sitting
/// on a mesh surface does not hit its own mounting geometry at t = 0.
pub const SELF_HIT_T_MIN: f64 = 1e-4;

const MAX_LEAF_SIZE: usize = 4;
const NUM_BINS: usize = 16;
const COST_TRAVERSE: f64 = 1.0;
const COST_INTERSECT: f64 = 1.5;
/// Below this depth splits fall back to median, which bounds total depth by
/// `FORCE_MEDIAN_DEPTH + log2(n) <= 64` for any practical primitive count.
const FORCE_MEDIAN_DEPTH: u32 = 40;
pub const MAX_DEPTH: u32 = 64;

const BARY_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BvhError {
    #[error("cannot build a BVH over zero primitives")]
    EmptyInput,
    #[error("refit primitive count {got} does not match build count {expected}")]
    CountMismatch { expected: usize, got: usize },
}

/// Build input: one bounding box and centroid per primitive.
#[derive(Debug, Clone, Copy)]
pub struct BvhPrim {
    pub aabb: Aabb,
    pub centroid: Vec3,
}

impl BvhPrim {
    pub fn from_triangle(v0: Vec3, v1: Vec3, v2: Vec3) -> BvhPrim {
        let mut aabb = Aabb::EMPTY;
        aabb.grow(v0);
        aabb.grow(v1);
        aabb.grow(v2);
        BvhPrim {
            aabb,
            centroid: (v0 + v1 + v2) / 3.0,
        }
    }
}

/// Cumulative build/refit counters plus the SAH cost of the current tree.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BuildStats {
    /// Nodes created from scratch by builds.
    pub nodes_rebuilt: usize,
    /// Node bounds recomputed by refits.
    pub nodes_refit: usize,
    /// Surface-area-heuristic cost of the tree relative to its root area.
    pub sah_cost: f64,
}

#[derive(Debug, Clone, Copy)]
struct BvhNode {
    min: [f32; 3],
    max: [f32; 3],
    /// Internal: index of the left child (right child follows at +1).
    /// Leaf: offset of the first primitive in `prim_order`.
    left_first: u32,
    /// 0 for internal nodes, primitive count for leaves.
    count: u32,
}

impl BvhNode {
    #[inline]
    fn is_leaf(&self) -> bool {
        self.count > 0
    }

    #[inline]
    fn bounds(&self) -> Aabb {
        Aabb::new(
            Vec3::new(self.min[0] as f64, self.min[1] as f64, self.min[2] as f64),
            Vec3::new(self.max[0] as f64, self.max[1] as f64, self.max[2] as f64),
        )
    }

    fn from_bounds_f64(b: &Aabb, left_first: u32, count: u32) -> BvhNode {
        BvhNode {
            min: [widen_down(b.min.x), widen_down(b.min.y), widen_down(b.min.z)],
            max: [widen_up(b.max.x), widen_up(b.max.y), widen_up(b.max.z)],
            left_first,
            count,
        }
    }

    fn union_f32(a: &BvhNode, b: &BvhNode) -> ([f32; 3], [f32; 3]) {
        let mut min = [0f32; 3];
        let mut max = [0f32; 3];
        for i in 0..3 {
            min[i] = a.min[i].min(b.min[i]);
            max[i] = a.max[i].max(b.max[i]);
        }
        (min, max)
    }
}

#[inline]
fn widen_down(x: f64) -> f32 {
    let f = x as f32;
    if (f as f64) > x {
        f.next_down()
    } else {
        f
    }
}

#[inline]
fn widen_up(x: f64) -> f32 {
    let f = x as f32;
    if (f as f64) < x {
        f.next_up()
    } else {
        f
    }
}

/// Binary BVH over an externally owned primitive array. The tree stores a
/// permutation of primitive indices; leaves reference ranges of it.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    prim_order: Vec<u32>,
    stats: BuildStats,
}

/// Builds a BVH with a 16-bin SAH sweep per axis, median fallback when all
/// centroids coincide on the split axis, and leaves of at most 4 primitives.
pub fn bvh_build(prims: &[BvhPrim]) -> Result<Bvh, BvhError> {
    if prims.is_empty() {
        return Err(BvhError::EmptyInput);
    }
    let mut order: Vec<u32> = (0..prims.len() as u32).collect();
    let mut nodes: Vec<BvhNode> = Vec::with_capacity(prims.len() * 2);
    nodes.push(BvhNode {
        min: [0.0; 3],
        max: [0.0; 3],
        left_first: 0,
        count: 0,
    });
    build_range(prims, &mut order, &mut nodes, 0, 0, prims.len(), 0);
    let mut bvh = Bvh {
        nodes,
        prim_order: order,
        stats: BuildStats::default(),
    };
    bvh.stats.nodes_rebuilt = bvh.nodes.len();
    bvh.stats.sah_cost = bvh.compute_sah_cost();
    debug_assert!(bvh.depth() <= MAX_DEPTH);
    Ok(bvh)
}

fn build_range(
    prims: &[BvhPrim],
    order: &mut [u32],
    nodes: &mut Vec<BvhNode>,
    node_idx: usize,
    start: usize,
    end: usize,
    depth: u32,
) {
    let count = end - start;
    let mut bounds = Aabb::EMPTY;
    let mut centroid_bounds = Aabb::EMPTY;
    for &p in &order[start..end] {
        bounds = bounds.union(&prims[p as usize].aabb);
        centroid_bounds.grow(prims[p as usize].centroid);
    }

    let make_leaf = |nodes: &mut Vec<BvhNode>| {
        nodes[node_idx] = BvhNode::from_bounds_f64(&bounds, start as u32, count as u32);
    };

    if count == 1 {
        make_leaf(nodes);
        return;
    }

    let split = if depth >= FORCE_MEDIAN_DEPTH {
        Some(SplitPlan::Median)
    } else {
        match find_sah_split(prims, &order[start..end], &bounds, &centroid_bounds) {
            Some((plan, cost)) => {
                if count <= MAX_LEAF_SIZE && cost >= COST_INTERSECT * count as f64 {
                    None
                } else {
                    Some(plan)
                }
            }
            // All centroids coincide; nothing to gain from SAH.
            None if count <= MAX_LEAF_SIZE => None,
            None => Some(SplitPlan::Median),
        }
    };

    let Some(plan) = split else {
        make_leaf(nodes);
        return;
    };

    let mid = match plan {
        SplitPlan::Median => start + count / 2,
        SplitPlan::Binned { axis, split_bin, k0, k1 } => {
            let mid = partition_by_bin(prims, order, start, end, axis, split_bin, k0, k1);
            // Numerical drift between the sweep and the partition could in
            // principle empty one side; fall back to the median if so.
            if mid == start || mid == end {
                start + count / 2
            } else {
                mid
            }
        }
    };

    let left = nodes.len();
    let filler = BvhNode {
        min: [0.0; 3],
        max: [0.0; 3],
        left_first: 0,
        count: 0,
    };
    nodes.push(filler);
    nodes.push(filler);
    build_range(prims, order, nodes, left, start, mid, depth + 1);
    build_range(prims, order, nodes, left + 1, mid, end, depth + 1);

    let (min, max) = BvhNode::union_f32(&nodes[left], &nodes[left + 1]);
    nodes[node_idx] = BvhNode {
        min,
        max,
        left_first: left as u32,
        count: 0,
    };
}

enum SplitPlan {
    Median,
    Binned { axis: usize, split_bin: usize, k0: f64, k1: f64 },
}

/// Sweeps 16 bins on each axis with positive centroid extent and returns the
/// cheapest split and its SAH cost, or `None` when no axis can separate the
/// centroids.
fn find_sah_split(
    prims: &[BvhPrim],
    order: &[u32],
    bounds: &Aabb,
    centroid_bounds: &Aabb,
) -> Option<(SplitPlan, f64)> {
    let parent_area = bounds.surface_area();
    if parent_area <= 0.0 {
        return None;
    }

    let mut best: Option<(SplitPlan, f64)> = None;
    for axis in 0..3 {
        let cmin = centroid_bounds.min.component(axis);
        let extent = centroid_bounds.max.component(axis) - cmin;
        if !(extent > 0.0) {
            continue;
        }
        let k1 = NUM_BINS as f64 / extent;

        let mut bin_bounds = [Aabb::EMPTY; NUM_BINS];
        let mut bin_counts = [0usize; NUM_BINS];
        for &p in order {
            let prim = &prims[p as usize];
            let b = bin_index(prim.centroid.component(axis), cmin, k1);
            bin_bounds[b] = bin_bounds[b].union(&prim.aabb);
            bin_counts[b] += 1;
        }

        // Suffix pass: area and count of everything right of each plane.
        let mut right_area = [0.0f64; NUM_BINS];
        let mut right_count = [0usize; NUM_BINS];
        let mut acc = Aabb::EMPTY;
        let mut n = 0usize;
        for i in (1..NUM_BINS).rev() {
            acc = acc.union(&bin_bounds[i]);
            n += bin_counts[i];
            right_area[i] = acc.surface_area();
            right_count[i] = n;
        }

        let mut left_box = Aabb::EMPTY;
        let mut left_n = 0usize;
        for split_bin in 0..NUM_BINS - 1 {
            left_box = left_box.union(&bin_bounds[split_bin]);
            left_n += bin_counts[split_bin];
            let right_n = right_count[split_bin + 1];
            if left_n == 0 || right_n == 0 {
                continue;
            }
            let cost = COST_TRAVERSE
                + COST_INTERSECT
                    * (left_box.surface_area() * left_n as f64
                        + right_area[split_bin + 1] * right_n as f64)
                    / parent_area;
            if best.as_ref().map_or(true, |(_, c)| cost < *c) {
                best = Some((
                    SplitPlan::Binned {
                        axis,
                        split_bin,
                        k0: cmin,
                        k1,
                    },
                    cost,
                ));
            }
        }
    }
    best
}

#[inline]
fn bin_index(centroid: f64, cmin: f64, k1: f64) -> usize {
    (((centroid - cmin) * k1) as usize).min(NUM_BINS - 1)
}

/// Stable partition of `order[start..end]`: bins <= `split_bin` first.
/// Returns the index of the first right-side element.
fn partition_by_bin(
    prims: &[BvhPrim],
    order: &mut [u32],
    start: usize,
    end: usize,
    axis: usize,
    split_bin: usize,
    k0: f64,
    k1: f64,
) -> usize {
    let mut left = Vec::with_capacity(end - start);
    let mut right = Vec::with_capacity(end - start);
    for &p in &order[start..end] {
        if bin_index(prims[p as usize].centroid.component(axis), k0, k1) <= split_bin {
            left.push(p);
        } else {
            right.push(p);
        }
    }
    let mid = start + left.len();
    order[start..mid].copy_from_slice(&left);
    order[mid..end].copy_from_slice(&right);
    mid
}

impl Bvh {
    pub fn prim_count(&self) -> usize {
        self.prim_order.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    pub fn root_bounds(&self) -> Aabb {
        self.nodes[0].bounds()
    }

    pub fn depth(&self) -> u32 {
        fn walk(nodes: &[BvhNode], idx: usize) -> u32 {
            let n = &nodes[idx];
            if n.is_leaf() {
                1
            } else {
                let l = walk(nodes, n.left_first as usize);
                let r = walk(nodes, n.left_first as usize + 1);
                1 + l.max(r)
            }
        }
        walk(&self.nodes, 0)
    }

    fn compute_sah_cost(&self) -> f64 {
        let root_area = self.nodes[0].bounds().surface_area();
        if root_area <= 0.0 {
            return 0.0;
        }
        let mut cost = 0.0;
        for n in &self.nodes {
            let area = n.bounds().surface_area();
            if n.is_leaf() {
                cost += COST_INTERSECT * n.count as f64 * area / root_area;
            } else {
                cost += COST_TRAVERSE * area / root_area;
            }
        }
        cost
    }

    /// Recomputes all node bounds bottom-up from updated primitive boxes.
    /// Topology and primitive order stay untouched.
    pub fn bvh_refit(&mut self, prims: &[Aabb]) -> Result<(), BvhError> {
        if prims.len() != self.prim_order.len() {
            return Err(BvhError::CountMismatch {
                expected: self.prim_order.len(),
                got: prims.len(),
            });
        }
        // Children are always allocated after their parent, so a reverse
        // sweep sees every child before its parent.
        for idx in (0..self.nodes.len()).rev() {
            let node = self.nodes[idx];
            if node.is_leaf() {
                let mut b = Aabb::EMPTY;
                let first = node.left_first as usize;
                for &p in &self.prim_order[first..first + node.count as usize] {
                    b = b.union(&prims[p as usize]);
                }
                self.nodes[idx] =
                    BvhNode::from_bounds_f64(&b, node.left_first, node.count);
            } else {
                let left = node.left_first as usize;
                let (min, max) = BvhNode::union_f32(&self.nodes[left], &self.nodes[left + 1]);
                self.nodes[idx].min = min;
                self.nodes[idx].max = max;
            }
        }
        self.stats.nodes_refit += self.nodes.len();
        self.stats.sah_cost = self.compute_sah_cost();
        Ok(())
    }

    /// Ordered closest-hit traversal. Calls `f(prim, best_t)` for each
    /// primitive in every leaf whose bounds overlap `[t_min, *best_t]`; the
    /// callback shrinks `*best_t` as it finds closer hits. The direction may
    /// be non-unit (instance-space rays keep their world parameterization).
    #[inline]
    pub(crate) fn traverse_closest<F: FnMut(u32, &mut f64)>(
        &self,
        origin: Vec3,
        dir: Vec3,
        t_min: f64,
        best_t: &mut f64,
        f: &mut F,
    ) {
        self.traverse_impl(origin, dir, t_min, best_t, f, &mut NoTrace);
    }

    fn traverse_impl<F: FnMut(u32, &mut f64), T: TraceVisits>(
        &self,
        origin: Vec3,
        dir: Vec3,
        t_min: f64,
        best_t: &mut f64,
        f: &mut F,
        trace: &mut T,
    ) {
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let root = &self.nodes[0];
        if slab_overlap(&root.bounds(), origin, inv_dir, t_min, *best_t).is_none() {
            return;
        }
        let mut stack = [0u32; MAX_DEPTH as usize + 2];
        let mut sp = 0usize;
        let mut cur = 0usize;
        loop {
            trace.visit(cur as u32);
            let node = &self.nodes[cur];
            if node.is_leaf() {
                let first = node.left_first as usize;
                for &p in &self.prim_order[first..first + node.count as usize] {
                    f(p, best_t);
                }
            } else {
                let left = node.left_first as usize;
                let hit_l = slab_overlap(
                    &self.nodes[left].bounds(),
                    origin,
                    inv_dir,
                    t_min,
                    *best_t,
                );
                let hit_r = slab_overlap(
                    &self.nodes[left + 1].bounds(),
                    origin,
                    inv_dir,
                    t_min,
                    *best_t,
                );
                match (hit_l, hit_r) {
                    (Some((tl, _)), Some((tr, _))) => {
                        let (near, far) = if tl <= tr { (left, left + 1) } else { (left + 1, left) };
                        stack[sp] = far as u32;
                        sp += 1;
                        cur = near;
                        continue;
                    }
                    (Some(_), None) => {
                        cur = left;
                        continue;
                    }
                    (None, Some(_)) => {
                        cur = left + 1;
                        continue;
                    }
                    (None, None) => {}
                }
            }
            // Pop; re-check against the (possibly shrunken) best t.
            loop {
                if sp == 0 {
                    return;
                }
                sp -= 1;
                let idx = stack[sp] as usize;
                if slab_overlap(&self.nodes[idx].bounds(), origin, inv_dir, t_min, *best_t)
                    .is_some()
                {
                    cur = idx;
                    break;
                }
            }
        }
    }

    #[cfg(test)]
    fn traverse_traced<F: FnMut(u32, &mut f64)>(
        &self,
        origin: Vec3,
        dir: Vec3,
        t_min: f64,
        best_t: &mut f64,
        f: &mut F,
    ) -> Vec<u32> {
        let mut trace = Vec::new();
        self.traverse_impl(origin, dir, t_min, best_t, f, &mut trace);
        trace
    }

    #[cfg(test)]
    fn node_bounds(&self, idx: u32) -> Aabb {
        self.nodes[idx as usize].bounds()
    }

    #[cfg(test)]
    fn audit(&self) -> (Vec<u32>, bool) {
        // Returns per-primitive leaf membership counts and whether every
        // parent box contains its children.
        let mut seen = vec![0u32; self.prim_order.len()];
        let mut contained = true;
        for n in &self.nodes {
            if n.is_leaf() {
                let first = n.left_first as usize;
                for &p in &self.prim_order[first..first + n.count as usize] {
                    seen[p as usize] += 1;
                }
            } else {
                for c in [n.left_first, n.left_first + 1] {
                    let child = &self.nodes[c as usize];
                    for i in 0..3 {
                        contained &= n.min[i] <= child.min[i] && n.max[i] >= child.max[i];
                    }
                }
            }
        }
        (seen, contained)
    }
}

trait TraceVisits {
    fn visit(&mut self, node: u32);
}

struct NoTrace;

impl TraceVisits for NoTrace {
    #[inline]
    fn visit(&mut self, _node: u32) {}
}

impl TraceVisits for Vec<u32> {
    fn visit(&mut self, node: u32) {
        self.push(node);
    }
}

/// Ray/triangle intersection (Moller-Trumbore, two-sided). Returns
/// `(t, u, v)` if the ray crosses the triangle, edges included, with
/// `t` in `[t_min, t_max]`. Both windings hit; a range sensor sees both
/// sides of a surface.
pub fn triangle_intersect(ray: &Ray, v0: Vec3, v1: Vec3, v2: Vec3) -> Option<(f64, f64, f64)> {
    triangle_intersect_raw(ray.origin, ray.dir, ray.t_min, ray.t_max, v0, v1, v2)
}

#[inline]
pub(crate) fn triangle_intersect_raw(
    origin: Vec3,
    dir: Vec3,
    t_min: f64,
    t_max: f64,
    v0: Vec3,
    v1: Vec3,
    v2: Vec3,
) -> Option<(f64, f64, f64)> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = dir.cross(e2);
    let det = e1.dot(p);
    // No determinant cutoff: a zero determinant propagates NaN/inf, which the
    // inverted comparisons below reject.
    let inv_det = 1.0 / det;
    let s = origin - v0;
    let u = s.dot(p) * inv_det;
    if !(u >= -BARY_EPS) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv_det;
    if !(v >= -BARY_EPS && u + v <= 1.0 + BARY_EPS) {
        return None;
    }
    let t = e2.dot(q) * inv_det;
    if !(t >= t_min && t <= t_max) {
        return None;
    }
    Some((t, u, v))
}

/// One map intersection. `t` is in the query ray's (world) parameter, the
/// normal is unit length in the world frame and faces the ray origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub prim_id: u32,
    pub geom_id: u32,
    pub inst_id: u32,
    pub u: f64,
    pub v: f64,
    pub normal: Vec3,
}

/// Identity key used for deterministic tie-breaking of equal-range hits.
#[inline]
fn hit_key(inst_id: u32, geom_id: u32, prim_id: u32) -> (u32, u32, u32) {
    (inst_id, geom_id, prim_id)
}

struct Candidate {
    t: f64,
    prim_id: u32,
    geom_id: u32,
    inst_id: u32,
    u: f64,
    v: f64,
}

/// Closest hit of a world ray against a committed scene.
///
/// Instance hits transform the ray into the instance frame through the
/// inverse placement while keeping the world parameterization, so `t` stays
/// comparable across instances. Ties in `t` resolve to the smallest
/// `(inst_id, geom_id, prim_id)`; direct geometries carry the instance
/// sentinel and therefore lose ties against instanced hits.
pub fn closest_hit(scene: &Scene, ray: &Ray) -> Result<Option<Hit>, crate::scene::SceneError> {
    if scene.is_dirty() {
        return Err(crate::scene::SceneError::DirtyScene);
    }
    Ok(cast_committed(scene, ray))
}

/// Traversal core shared by `closest_hit` and the simulation engine, which
/// validates commit state once per batch instead of once per ray.
pub(crate) fn cast_committed(scene: &Scene, ray: &Ray) -> Option<Hit> {
    debug_assert!((ray.dir.norm() - 1.0).abs() <= 1e-6);
    let t_min = if ray.t_min == 0.0 { SELF_HIT_T_MIN } else { ray.t_min };
    let top = scene.top_level()?;
    let top_bvh = top.bvh.as_ref()?;

    let mut best_t = ray.t_max;
    let mut best: Option<Candidate> = None;

    top_bvh.traverse_closest(ray.origin, ray.dir, t_min, &mut best_t, &mut |obj, best_t| {
        match top.objects[obj as usize].kind {
            TopObjectKind::Geometry(geom_id) => {
                let geom = scene.geometry_slot(geom_id);
                intersect_geometry(
                    geom.mesh(),
                    geom.bvh(),
                    ray.origin,
                    ray.dir,
                    t_min,
                    geom_id,
                    NO_ID,
                    best_t,
                    &mut best,
                );
            }
            TopObjectKind::Instance(inst_id) => {
                let inst = scene.instance_slot(inst_id);
                let local_origin = inst.xform().world_to_local_point(ray.origin);
                let local_dir = inst.xform().world_to_local_vec(ray.dir);
                let sub = inst.target();
                if let Some(sub_top) = sub.top_level() {
                    if let Some(sub_bvh) = sub_top.bvh.as_ref() {
                        sub_bvh.traverse_closest(
                            local_origin,
                            local_dir,
                            t_min,
                            best_t,
                            &mut |sub_obj, best_t| {
                                let TopObjectKind::Geometry(geom_id) =
                                    sub_top.objects[sub_obj as usize].kind
                                else {
                                    unreachable!("sub-scenes hold geometries only");
                                };
                                let geom = sub.geometry_slot(geom_id);
                                intersect_geometry(
                                    geom.mesh(),
                                    geom.bvh(),
                                    local_origin,
                                    local_dir,
                                    t_min,
                                    geom_id,
                                    inst_id,
                                    best_t,
                                    &mut best,
                                );
                            },
                        );
                    }
                }
            }
        }
    });

    best.map(|c| finalize_hit(scene, ray, c))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn intersect_geometry(
    mesh: &crate::scene::Mesh,
    bvh: &Bvh,
    origin: Vec3,
    dir: Vec3,
    t_min: f64,
    geom_id: u32,
    inst_id: u32,
    best_t: &mut f64,
    best: &mut Option<Candidate>,
) {
    bvh.traverse_closest(origin, dir, t_min, best_t, &mut |prim, best_t| {
        let (v0, v1, v2) = mesh.triangle(prim);
        if let Some((t, u, v)) = triangle_intersect_raw(origin, dir, t_min, *best_t, v0, v1, v2) {
            let better = match best {
                Some(b) if t == b.t => {
                    hit_key(inst_id, geom_id, prim) < hit_key(b.inst_id, b.geom_id, b.prim_id)
                }
                Some(b) => t < b.t,
                None => true,
            };
            if better {
                *best_t = t;
                *best = Some(Candidate {
                    t,
                    prim_id: prim,
                    geom_id,
                    inst_id,
                    u,
                    v,
                });
            }
        }
    });
}

/// Resolves the winning candidate into a full hit: fetches the triangle
/// once more, computes the geometric normal, maps it to world space through
/// the inverse-transpose of the instance's linear part, and orients it
/// toward the ray origin.
fn finalize_hit(scene: &Scene, ray: &Ray, c: Candidate) -> Hit {
    let (v0, v1, v2, to_world_normal) = if c.inst_id == NO_ID {
        let geom = scene.geometry_slot(c.geom_id);
        let (v0, v1, v2) = geom.mesh().triangle(c.prim_id);
        (v0, v1, v2, None)
    } else {
        let inst = scene.instance_slot(c.inst_id);
        let geom = inst.target().geometry_slot(c.geom_id);
        let (v0, v1, v2) = geom.mesh().triangle(c.prim_id);
        (v0, v1, v2, Some(inst.xform()))
    };
    let local_normal = (v1 - v0).cross(v2 - v0);
    let world_normal = match to_world_normal {
        Some(x) => x.normal_to_world(local_normal),
        None => local_normal,
    };
    let mut normal = world_normal
        .normalized()
        .unwrap_or(Vec3::new(0.0, 0.0, 1.0));
    if normal.dot(ray.dir) > 0.0 {
        normal = -normal;
    }
    Hit {
        t: c.t,
        prim_id: c.prim_id,
        geom_id: c.geom_id,
        inst_id: c.inst_id,
        u: c.u,
        v: c.v,
        normal,
    }
}
