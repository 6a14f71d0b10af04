//! Scenes, objects, the discretized workspace and the deterministic
//! pick-and-place transition.

use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::error::{Error, Result};

const GEOM_EPS: f64 = 1e-12;
const BOUNDS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvironmentTag {
    Coffee,
    Dining,
    Office,
    Bathroom,
    Mixed,
}

impl EnvironmentTag {
    /// The four environments that own templates; `Mixed` borrows from all of them.
    pub const BASE: [EnvironmentTag; 4] = [
        EnvironmentTag::Coffee,
        EnvironmentTag::Dining,
        EnvironmentTag::Office,
        EnvironmentTag::Bathroom,
    ];

    pub const ALL: [EnvironmentTag; 5] = [
        EnvironmentTag::Coffee,
        EnvironmentTag::Dining,
        EnvironmentTag::Office,
        EnvironmentTag::Bathroom,
        EnvironmentTag::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvironmentTag::Coffee => "coffee",
            EnvironmentTag::Dining => "dining",
            EnvironmentTag::Office => "office",
            EnvironmentTag::Bathroom => "bathroom",
            EnvironmentTag::Mixed => "mixed",
        }
    }
}

impl std::fmt::Display for EnvironmentTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EnvironmentTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvironmentTag::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown environment {s:?}")))
    }
}

/// Bounded rectangular table top with its placement grid.
///
/// The table spans `[0, width_m] x [0, depth_m]`; `+x` points right and `+y`
/// points away from the viewer ("behind"). Grid column `x_idx` runs along the
/// width (`grid_w` columns), row `y_idx` along the depth (`grid_h` rows).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub width_m: f64,
    pub depth_m: f64,
    pub grid_h: usize,
    pub grid_w: usize,
    pub rotation_bins: usize,
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace {
            width_m: 1.0,
            depth_m: 0.7,
            grid_h: 16,
            grid_w: 16,
            rotation_bins: 4,
        }
    }
}

impl Workspace {
    pub fn new(width_m: f64, depth_m: f64, grid_h: usize, grid_w: usize, rotation_bins: usize) -> Result<Self> {
        let ws = Workspace {
            width_m,
            depth_m,
            grid_h,
            grid_w,
            rotation_bins,
        };
        ws.validate()?;
        Ok(ws)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_m.is_finite() && self.width_m > 0.0 && self.depth_m.is_finite() && self.depth_m > 0.0) {
            return Err(Error::InvalidWorkspace("extent must be positive".into()));
        }
        if self.grid_h < 2 || self.grid_w < 2 {
            return Err(Error::InvalidWorkspace("grid must be at least 2x2".into()));
        }
        if self.rotation_bins < 1 {
            return Err(Error::InvalidWorkspace("need at least one rotation bin".into()));
        }
        Ok(())
    }

    pub fn cell_width(&self) -> f64 {
        self.width_m / self.grid_w as f64
    }

    pub fn cell_depth(&self) -> f64 {
        self.depth_m / self.grid_h as f64
    }

    pub fn cell_center(&self, x_idx: usize, y_idx: usize) -> (f64, f64) {
        (
            (x_idx as f64 + 0.5) * self.cell_width(),
            (y_idx as f64 + 0.5) * self.cell_depth(),
        )
    }

    /// Angle assigned to a rotation bin: bin `k` starts the arc
    /// `[k * 360 / R, (k + 1) * 360 / R)` and places objects at its start.
    pub fn bin_angle(&self, bin: usize) -> f64 {
        bin as f64 * 360.0 / self.rotation_bins as f64
    }

    /// Bin whose placement angle is closest to `theta`.
    pub fn nearest_bin(&self, theta: f64) -> usize {
        let step = 360.0 / self.rotation_bins as f64;
        let k = (normalize_angle(theta) / step).round() as usize;
        k % self.rotation_bins
    }

    /// Grid cell containing a point; points outside the table clamp to the border cells.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let cx = (x / self.cell_width()).floor();
        let cy = (y / self.cell_depth()).floor();
        let clamp = |v: f64, n: usize| -> usize {
            if v.is_nan() || v < 0.0 {
                0
            } else {
                (v as usize).min(n - 1)
            }
        };
        (clamp(cx, self.grid_w), clamp(cy, self.grid_h))
    }

    pub fn diagonal(&self) -> f64 {
        self.width_m.hypot(self.depth_m)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.width_m * 0.5, self.depth_m * 0.5)
    }

    /// Number of (cell, rotation) placements per object: `H * W * R`.
    pub fn placements(&self) -> usize {
        self.grid_h * self.grid_w * self.rotation_bins
    }
}

/// Maps any finite angle in degrees into `[0, 360)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(360.0);
    if t >= 360.0 {
        0.0
    } else {
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Degrees in `[0, 360)`.
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: u32,
    pub category: Category,
    pub half_extents: (f64, f64),
    pub pose: Pose,
    pub is_support: bool,
}

impl ObjectInstance {
    /// Object with the catalog footprint of its category.
    pub fn from_category(id: u32, category: Category, pose: Pose) -> Self {
        let spec = category.spec();
        ObjectInstance {
            id,
            category,
            half_extents: spec.half_extents,
            pose,
            is_support: spec.is_support,
        }
    }

    pub fn footprint(&self) -> OrientedRect {
        OrientedRect::new(self.pose.x, self.pose.y, self.half_extents.0, self.half_extents.1, self.pose.theta)
    }

    pub fn footprint_at(&self, pose: Pose) -> OrientedRect {
        OrientedRect::new(pose.x, pose.y, self.half_extents.0, self.half_extents.1, pose.theta)
    }

    fn validate(&self) -> Result<()> {
        let (hx, hy) = self.half_extents;
        if !(hx.is_finite() && hy.is_finite() && hx > 0.0 && hy > 0.0) {
            return Err(Error::InvalidScene(format!("object {} has non-positive extents", self.id)));
        }
        if !(self.pose.x.is_finite() && self.pose.y.is_finite() && self.pose.theta.is_finite()) {
            return Err(Error::InvalidScene(format!("object {} has a non-finite pose", self.id)));
        }
        Ok(())
    }
}

/// Oriented rectangle footprint on the table plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub cx: f64,
    pub cy: f64,
    pub hx: f64,
    pub hy: f64,
    cos: f64,
    sin: f64,
}

impl OrientedRect {
    pub fn new(cx: f64, cy: f64, hx: f64, hy: f64, theta_deg: f64) -> Self {
        let (sin, cos) = theta_deg.to_radians().sin_cos();
        OrientedRect {
            cx,
            cy,
            hx,
            hy,
            cos,
            sin,
        }
    }

    pub fn axes(&self) -> [(f64, f64); 2] {
        [(self.cos, self.sin), (-self.sin, self.cos)]
    }

    /// Corners in counter-clockwise order starting from local `(-hx, -hy)`.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let local = [(-self.hx, -self.hy), (self.hx, -self.hy), (self.hx, self.hy), (-self.hx, self.hy)];
        local.map(|(lx, ly)| self.to_world(lx, ly))
    }

    pub fn to_world(&self, lx: f64, ly: f64) -> (f64, f64) {
        (
            self.cx + lx * self.cos - ly * self.sin,
            self.cy + lx * self.sin + ly * self.cos,
        )
    }

    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.cx;
        let dy = y - self.cy;
        (dx * self.cos + dy * self.sin, -dx * self.sin + dy * self.cos)
    }

    /// Closed containment test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (lx, ly) = self.to_local(x, y);
        lx.abs() <= self.hx + GEOM_EPS && ly.abs() <= self.hy + GEOM_EPS
    }

    fn radius_along(&self, ux: f64, uy: f64) -> f64 {
        self.hx * (ux * self.cos + uy * self.sin).abs() + self.hy * (-ux * self.sin + uy * self.cos).abs()
    }

    /// Axis-aligned half extents of the bounding box.
    pub fn aabb_half(&self) -> (f64, f64) {
        (
            self.hx * self.cos.abs() + self.hy * self.sin.abs(),
            self.hx * self.sin.abs() + self.hy * self.cos.abs(),
        )
    }

    /// True iff the interiors intersect (positive-area overlap). Edge contact
    /// does not count.
    pub fn overlaps(&self, other: &OrientedRect) -> bool {
        let dx = other.cx - self.cx;
        let dy = other.cy - self.cy;
        let (ax, ay) = self.aabb_half();
        let (bx, by) = other.aabb_half();
        if dx.abs() >= ax + bx - GEOM_EPS || dy.abs() >= ay + by - GEOM_EPS {
            return false;
        }
        for (ux, uy) in self.axes().into_iter().chain(other.axes()) {
            let dist = (dx * ux + dy * uy).abs();
            if dist >= self.radius_along(ux, uy) + other.radius_along(ux, uy) - GEOM_EPS {
                return false;
            }
        }
        true
    }
}

/// A table top arrangement: the planner's state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub workspace: Workspace,
    pub environment_tag: EnvironmentTag,
    pub objects: Vec<ObjectInstance>,
}

impl Scene {
    pub fn new(workspace: Workspace, environment_tag: EnvironmentTag, objects: Vec<ObjectInstance>) -> Result<Self> {
        let scene = Scene {
            workspace,
            environment_tag,
            objects,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Structural checks: workspace, ids, extents. Geometric validity is
    /// [`Scene::is_valid`].
    pub fn validate(&self) -> Result<()> {
        self.workspace.validate()?;
        if self.objects.is_empty() {
            return Err(Error::NoObjects);
        }
        for (i, o) in self.objects.iter().enumerate() {
            o.validate()?;
            if self.objects[..i].iter().any(|p| p.id == o.id) {
                return Err(Error::InvalidScene(format!("duplicate object id {}", o.id)));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let scene: Scene = serde_json::from_str(s)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scene serializes")
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn object(&self, id: u32) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Scene with no illegal overlap and every footprint on the table.
    pub fn is_valid(&self) -> bool {
        check_overlap(self).is_empty() && in_bounds(self).is_empty()
    }

    /// Copy of the scene without one object.
    pub fn without(&self, id: u32) -> Scene {
        Scene {
            workspace: self.workspace,
            environment_tag: self.environment_tag,
            objects: self.objects.iter().filter(|o| o.id != id).cloned().collect(),
        }
    }
}

/// Discrete pick-and-place: move `object_id` to the center of `cell` with the
/// angle of `rotation_bin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionSpec {
    pub object_id: u32,
    pub cell: (usize, usize),
    pub rotation_bin: usize,
}

impl ActionSpec {
    pub fn new(object_id: u32, x_idx: usize, y_idx: usize, rotation_bin: usize) -> Self {
        ActionSpec {
            object_id,
            cell: (x_idx, y_idx),
            rotation_bin,
        }
    }

    pub fn in_range(&self, ws: &Workspace) -> bool {
        self.cell.0 < ws.grid_w && self.cell.1 < ws.grid_h && self.rotation_bin < ws.rotation_bins
    }

    pub fn target_pose(&self, ws: &Workspace) -> Pose {
        let (x, y) = ws.cell_center(self.cell.0, self.cell.1);
        Pose::new(x, y, ws.bin_angle(self.rotation_bin))
    }
}

/// Deterministic transition: re-poses the target object, leaving the input untouched.
pub fn apply_action(scene: &Scene, action: &ActionSpec) -> Result<Scene> {
    let idx = scene.index_of(action.object_id).ok_or(Error::NoSuchObject(action.object_id))?;
    if !action.in_range(&scene.workspace) {
        return Err(Error::ActionOutOfBounds);
    }
    let mut next = scene.clone();
    next.objects[idx].pose = action.target_pose(&scene.workspace);
    Ok(next)
}

/// Whether two objects overlap in a way that is not a legal "on" placement.
pub fn illegal_overlap(a: &ObjectInstance, b: &ObjectInstance) -> bool {
    illegal_overlap_rects(a, &a.footprint(), b, &b.footprint())
}

fn illegal_overlap_rects(a: &ObjectInstance, ra: &OrientedRect, b: &ObjectInstance, rb: &OrientedRect) -> bool {
    if !ra.overlaps(rb) {
        return false;
    }
    let a_on_b = b.is_support && rb.contains(ra.cx, ra.cy);
    let b_on_a = a.is_support && ra.contains(rb.cx, rb.cy);
    !(a_on_b || b_on_a)
}

/// Every unordered pair `(low id, high id)` with an illegal overlap, sorted.
pub fn check_overlap(scene: &Scene) -> Vec<(u32, u32)> {
    let rects: Vec<OrientedRect> = scene.objects.iter().map(ObjectInstance::footprint).collect();
    let mut pairs = Vec::new();
    for i in 0..scene.objects.len() {
        for j in (i + 1)..scene.objects.len() {
            let (a, b) = (&scene.objects[i], &scene.objects[j]);
            if illegal_overlap_rects(a, &rects[i], b, &rects[j]) {
                pairs.push((a.id.min(b.id), a.id.max(b.id)));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

pub fn rect_in_bounds(rect: &OrientedRect, ws: &Workspace) -> bool {
    rect.corners().iter().all(|&(x, y)| {
        x >= -BOUNDS_EPS && x <= ws.width_m + BOUNDS_EPS && y >= -BOUNDS_EPS && y <= ws.depth_m + BOUNDS_EPS
    })
}

/// Ids of objects with a footprint corner off the table, in scene order.
pub fn in_bounds(scene: &Scene) -> Vec<u32> {
    scene
        .objects
        .iter()
        .filter(|o| !rect_in_bounds(&o.footprint(), &scene.workspace))
        .map(|o| o.id)
        .collect()
}

/// Whether moving object `idx` to `pose` keeps it on the table and free of
/// illegal overlap with the other objects at their current poses.
pub fn placement_feasible(scene: &Scene, idx: usize, pose: Pose) -> bool {
    let obj = &scene.objects[idx];
    let rect = obj.footprint_at(pose);
    if !rect_in_bounds(&rect, &scene.workspace) {
        return false;
    }
    let moved = ObjectInstance { pose, ..obj.clone() };
    scene
        .objects
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != idx)
        .all(|(_, other)| !illegal_overlap_rects(&moved, &rect, other, &other.footprint()))
}

/// Feasibility of every action in the scene, indexed
/// `((n * grid_w + x) * grid_h + y) * rotation_bins + r` for the object at
/// position `n`. Entry-for-entry equal to [`placement_feasible`] at the
/// action's target pose.
pub fn feasibility_mask(scene: &Scene) -> Vec<bool> {
    let ws = &scene.workspace;
    let (gw, gh, rb) = (ws.grid_w, ws.grid_h, ws.rotation_bins);
    let rects: Vec<OrientedRect> = scene.objects.iter().map(ObjectInstance::footprint).collect();
    let centers: Vec<(f64, f64)> = (0..gw * gh).map(|k| ws.cell_center(k / gh, k % gh)).collect();
    let mut mask = vec![false; scene.objects.len() * gw * gh * rb];
    for (n, obj) in scene.objects.iter().enumerate() {
        for r in 0..rb {
            let base = obj.footprint_at(Pose::new(0.0, 0.0, ws.bin_angle(r)));
            for (k, &(cx, cy)) in centers.iter().enumerate() {
                let rect = OrientedRect { cx, cy, ..base };
                if !rect_in_bounds(&rect, ws) {
                    continue;
                }
                let clear = scene
                    .objects
                    .iter()
                    .zip(&rects)
                    .enumerate()
                    .all(|(j, (other, orect))| j == n || !illegal_overlap_rects(obj, &rect, other, orect));
                mask[(n * gw * gh + k) * rb + r] = clear;
            }
        }
    }
    mask
}
