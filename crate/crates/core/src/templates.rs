//! Spatial-relation templates: relation classification, template
//! satisfaction and tidied-scene synthesis.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::error::{Error, Result};
use crate::world::{EnvironmentTag, ObjectInstance, Pose, Scene, Workspace};

/// The ten relation labels. Planar kinds are listed counter-clockwise from
/// `Right` in 45 degree steps (`+x` = right, `+y` = behind).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    On,
    Under,
    Right,
    RightBehind,
    Behind,
    LeftBehind,
    Left,
    LeftFront,
    Front,
    RightFront,
}

impl RelationKind {
    pub const ALL: [RelationKind; 10] = [
        RelationKind::On,
        RelationKind::Under,
        RelationKind::Right,
        RelationKind::RightBehind,
        RelationKind::Behind,
        RelationKind::LeftBehind,
        RelationKind::Left,
        RelationKind::LeftFront,
        RelationKind::Front,
        RelationKind::RightFront,
    ];

    const PLANAR: [RelationKind; 8] = [
        RelationKind::Right,
        RelationKind::RightBehind,
        RelationKind::Behind,
        RelationKind::LeftBehind,
        RelationKind::Left,
        RelationKind::LeftFront,
        RelationKind::Front,
        RelationKind::RightFront,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Sector number `0..8` for planar kinds.
    pub fn sector(self) -> Option<usize> {
        Self::PLANAR.iter().position(|&k| k == self)
    }

    /// Direction of the sector center in degrees for planar kinds.
    pub fn direction_deg(self) -> Option<f64> {
        self.sector().map(|s| s as f64 * 45.0)
    }

    /// The kind seen from the other object.
    pub fn inverse(self) -> RelationKind {
        match self {
            RelationKind::On => RelationKind::Under,
            RelationKind::Under => RelationKind::On,
            planar => Self::PLANAR[(planar.sector().unwrap() + 4) % 8],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RelationKind::On => "on",
            RelationKind::Under => "under",
            RelationKind::Right => "right",
            RelationKind::RightBehind => "right-behind",
            RelationKind::Behind => "behind",
            RelationKind::LeftBehind => "left-behind",
            RelationKind::Left => "left",
            RelationKind::LeftFront => "left-front",
            RelationKind::Front => "front",
            RelationKind::RightFront => "right-front",
        }
    }
}

/// Kind of the relation "subject is <kind> reference".
///
/// Containment of one center in a support footprint gives `on`/`under`;
/// otherwise the offset angle picks one of eight 45 degree sectors. An angle
/// exactly on a sector boundary belongs to the counter-clockwise sector.
pub fn classify_relation(reference: &ObjectInstance, subject: &ObjectInstance) -> Result<RelationKind> {
    if reference.is_support && reference.footprint().contains(subject.pose.x, subject.pose.y) {
        return Ok(RelationKind::On);
    }
    if subject.is_support && subject.footprint().contains(reference.pose.x, reference.pose.y) {
        return Ok(RelationKind::Under);
    }
    let dx = subject.pose.x - reference.pose.x;
    let dy = subject.pose.y - reference.pose.y;
    if dx.hypot(dy) < 1e-12 {
        return Err(Error::DegenerateOffset);
    }
    Ok(sector_kind(dy.atan2(dx).to_degrees()))
}

/// Planar kind for an offset angle in degrees.
pub fn sector_kind(angle_deg: f64) -> RelationKind {
    let a = angle_deg.rem_euclid(360.0);
    let sector = (((a + 22.5) / 45.0).floor() as usize) % 8;
    RelationKind::PLANAR[sector]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub kind: RelationKind,
    #[serde(rename = "subject")]
    pub subject_slot: usize,
    #[serde(rename = "reference")]
    pub reference_slot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub slot: usize,
    pub category: Category,
    #[serde(default)]
    pub alternates: Vec<Category>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    pub environment_tag: EnvironmentTag,
    pub slots: Vec<Slot>,
    pub relations: Vec<Relation>,
}

/// Slot index to object id.
pub type Binding = BTreeMap<usize, u32>;

impl Template {
    pub fn new(id: impl Into<String>, environment_tag: EnvironmentTag, slots: Vec<Slot>, relations: Vec<Relation>) -> Result<Self> {
        let t = Template {
            id: id.into(),
            environment_tag,
            slots,
            relations,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Template = serde_json::from_str(s)?;
        t.validate()?;
        Ok(t)
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidTemplate {
            id: self.id.clone(),
            reason: reason.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.slots.len();
        if !(2..=9).contains(&n) {
            return Err(self.invalid(format!("{n} slots, need 2 to 9")));
        }
        for (i, s) in self.slots.iter().enumerate() {
            if self.slots[..i].iter().any(|p| p.slot == s.slot) {
                return Err(self.invalid(format!("duplicate slot {}", s.slot)));
            }
        }
        if self.relations.is_empty() {
            return Err(self.invalid("no relations"));
        }
        for r in &self.relations {
            if r.subject_slot == r.reference_slot {
                return Err(self.invalid(format!("slot {} related to itself", r.subject_slot)));
            }
            let subject = self.slot(r.subject_slot).ok_or_else(|| self.invalid(format!("unknown slot {}", r.subject_slot)))?;
            let reference = self.slot(r.reference_slot).ok_or_else(|| self.invalid(format!("unknown slot {}", r.reference_slot)))?;
            let all_support = |s: &Slot| s.category.is_support() && s.alternates.iter().all(|c| c.is_support());
            match r.kind {
                RelationKind::On if !all_support(reference) => {
                    return Err(self.invalid(format!("slot {} is not a support", r.reference_slot)))
                }
                RelationKind::Under if !all_support(subject) => {
                    return Err(self.invalid(format!("slot {} is not a support", r.subject_slot)))
                }
                _ => {}
            }
        }
        // connectivity over the undirected relation graph
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            let slot = self.slots[i].slot;
            for r in &self.relations {
                let other = if r.subject_slot == slot {
                    r.reference_slot
                } else if r.reference_slot == slot {
                    r.subject_slot
                } else {
                    continue;
                };
                let j = self.slot_position(other).unwrap();
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(self.invalid("relation graph is not connected"));
        }
        Ok(())
    }

    pub fn slot(&self, slot: usize) -> Option<&Slot> {
        self.slots.iter().find(|s| s.slot == slot)
    }

    fn slot_position(&self, slot: usize) -> Option<usize> {
        self.slots.iter().position(|s| s.slot == slot)
    }

    /// Binding used by [`sample_tidied_scene`]: slot `k` is object id `k`.
    pub fn identity_binding(&self) -> Binding {
        self.slots.iter().map(|s| (s.slot, s.slot as u32)).collect()
    }
}

/// Checks every relation of `template` against `scene`. Returns whether all
/// hold, and the violated relations in template order.
pub fn satisfies_template(scene: &Scene, template: &Template, binding: &Binding) -> Result<(bool, Vec<Relation>)> {
    for s in &template.slots {
        let id = binding.get(&s.slot).ok_or(Error::IncompleteBinding(s.slot))?;
        if scene.object(*id).is_none() {
            return Err(Error::NoSuchObject(*id));
        }
    }
    let mut violated = Vec::new();
    for r in &template.relations {
        let subject = scene.object(binding[&r.subject_slot]).unwrap();
        let reference = scene.object(binding[&r.reference_slot]).unwrap();
        match classify_relation(reference, subject) {
            Ok(kind) if kind == r.kind => {}
            _ => violated.push(*r),
        }
    }
    Ok((violated.is_empty(), violated))
}

/// Randomization applied when turning a template into a concrete scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub workspace: Workspace,
    /// Nominal clearance between related objects, meters.
    pub gap_nominal: f64,
    /// Relative jitter of the clearance: gaps fall in `nominal * [1 - j, 1 + j]`.
    pub gap_jitter: f64,
    /// Probability of replacing a slot's category with one of its alternates.
    pub p_swap: f64,
    /// Fraction of the workspace (centered) the arrangement centroid is drawn from.
    pub centroid_region: f64,
    pub max_retries: usize,
    /// Register every object on a cell center at rotation bin 0, so that
    /// each tidy pose is reachable by one discrete pick-and-place action.
    #[serde(default)]
    pub snap_to_grid: bool,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        AugmentSpec {
            workspace: Workspace::default(),
            gap_nominal: 0.03,
            gap_jitter: 0.3,
            p_swap: 0.3,
            centroid_region: 0.6,
            max_retries: 100,
            snap_to_grid: true,
        }
    }
}

impl AugmentSpec {
    pub fn gap_range(&self) -> (f64, f64) {
        (self.gap_nominal * (1.0 - self.gap_jitter), self.gap_nominal * (1.0 + self.gap_jitter))
    }
}

/// Center distance along `dir` at which two axis-aligned footprints stop overlapping.
fn separation(a: (f64, f64), b: (f64, f64), dir: (f64, f64)) -> f64 {
    let mut t = f64::INFINITY;
    if dir.0.abs() > 1e-9 {
        t = t.min((a.0 + b.0) / dir.0.abs());
    }
    if dir.1.abs() > 1e-9 {
        t = t.min((a.1 + b.1) / dir.1.abs());
    }
    t
}

/// Samples a valid scene realizing `template`. Object ids equal slot indices
/// (see [`Template::identity_binding`]). Deterministic per seed.
pub fn sample_tidied_scene(template: &Template, rng_seed: u64, augment: &AugmentSpec) -> Result<Scene> {
    template.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let binding = template.identity_binding();
    for _ in 0..augment.max_retries {
        if let Some(scene) = try_sample(template, &mut rng, augment) {
            if scene.is_valid() && satisfies_template(&scene, template, &binding)?.0 {
                return Ok(scene);
            }
        }
    }
    Err(Error::TemplateInfeasible(template.id.clone()))
}

fn try_sample(template: &Template, rng: &mut ChaCha8Rng, augment: &AugmentSpec) -> Option<Scene> {
    let ws = augment.workspace;
    let n = template.slots.len();
    let categories: Vec<Category> = template
        .slots
        .iter()
        .map(|s| {
            if !s.alternates.is_empty() && rng.random::<f64>() < augment.p_swap {
                s.alternates[rng.random_range(0..s.alternates.len())]
            } else {
                s.category
            }
        })
        .collect();
    let extents: Vec<(f64, f64)> = categories.iter().map(|c| c.spec().half_extents).collect();
    let (gap_lo, gap_hi) = augment.gap_range();

    let mut pos: Vec<Option<(f64, f64)>> = vec![None; n];
    pos[0] = Some((0.0, 0.0));
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let slot = template.slots[i].slot;
        for r in &template.relations {
            // express every relation as "child is <kind> of placed parent"
            let (child_slot, kind) = if r.reference_slot == slot {
                (r.subject_slot, r.kind)
            } else if r.subject_slot == slot {
                (r.reference_slot, r.kind.inverse())
            } else {
                continue;
            };
            let j = template.slot_position(child_slot)?;
            if pos[j].is_some() {
                continue;
            }
            let parent = pos[i]?;
            let placed = match kind {
                RelationKind::On => {
                    // child rests on the parent support
                    let (hx, hy) = extents[i];
                    (
                        parent.0 + rng.random_range(-0.3..=0.3) * hx,
                        parent.1 + rng.random_range(-0.3..=0.3) * hy,
                    )
                }
                RelationKind::Under => {
                    // parent rests on the child support
                    let (hx, hy) = extents[j];
                    (
                        parent.0 - rng.random_range(-0.3..=0.3) * hx,
                        parent.1 - rng.random_range(-0.3..=0.3) * hy,
                    )
                }
                planar => {
                    let (s, c) = planar.direction_deg()?.to_radians().sin_cos();
                    let dir = (c, s);
                    let gap = rng.random_range(gap_lo..=gap_hi);
                    let d = separation(extents[i], extents[j], dir) + gap;
                    (parent.0 + dir.0 * d, parent.1 + dir.1 * d)
                }
            };
            pos[j] = Some(placed);
            queue.push_back(j);
        }
    }
    let pos: Vec<(f64, f64)> = pos.into_iter().collect::<Option<_>>()?;

    let cx = pos.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let cy = pos.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let margin = (1.0 - augment.centroid_region) * 0.5;
    let tx = rng.random_range(margin..=1.0 - margin) * ws.width_m;
    let ty = rng.random_range(margin..=1.0 - margin) * ws.depth_m;

    let objects = template
        .slots
        .iter()
        .zip(&categories)
        .zip(&pos)
        .map(|((s, &c), &(x, y))| {
            let (mut x, mut y) = (x - cx + tx, y - cy + ty);
            if augment.snap_to_grid {
                let (i, j) = ws.cell_of(x, y);
                (x, y) = ws.cell_center(i, j);
            }
            ObjectInstance::from_category(s.slot as u32, c, Pose::new(x, y, 0.0))
        })
        .collect();
    Scene::new(ws, template.environment_tag, objects).ok()
}

const BUILTIN: [&str; 4] = [
    include_str!("../templates/coffee.json"),
    include_str!("../templates/dining.json"),
    include_str!("../templates/office.json"),
    include_str!("../templates/bathroom.json"),
];

/// Parses a template file holding either one template or an array of them.
pub fn parse_template_file(text: &str) -> Result<Vec<Template>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let templates: Vec<Template> = match value {
        serde_json::Value::Array(_) => serde_json::from_value(value)?,
        _ => vec![serde_json::from_value(value)?],
    };
    for t in &templates {
        t.validate()?;
    }
    Ok(templates)
}

/// The shipped template library, ordered by id.
pub fn builtin_library() -> Vec<Template> {
    let mut all: Vec<Template> = BUILTIN
        .iter()
        .flat_map(|text| parse_template_file(text).expect("builtin templates are valid"))
        .collect();
    all.sort_by(|a, b| a.id.cmp(&b.id));
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obj(id: u32, category: Category, x: f64, y: f64) -> ObjectInstance {
        ObjectInstance::from_category(id, category, Pose::new(x, y, 0.0))
    }

    fn point(id: u32, x: f64, y: f64) -> ObjectInstance {
        ObjectInstance {
            id,
            category: Category::Cup,
            half_extents: (0.01, 0.01),
            pose: Pose::new(x, y, 0.0),
            is_support: false,
        }
    }

    #[test]
    fn classify_examples() {
        let r = point(0, 0.0, 0.0);
        assert_eq!(classify_relation(&r, &point(1, 0.2, 0.0)).unwrap(), RelationKind::Right);
        assert_eq!(classify_relation(&r, &point(1, 0.15, 0.15)).unwrap(), RelationKind::RightBehind);
        let plate = ObjectInstance {
            half_extents: (0.12, 0.12),
            ..obj(0, Category::Plate, 0.0, 0.0)
        };
        let fork = obj(1, Category::Fork, 0.03, 0.01);
        assert_eq!(classify_relation(&plate, &fork).unwrap(), RelationKind::On);
        assert_eq!(classify_relation(&fork, &plate).unwrap(), RelationKind::Under);
        assert_eq!(classify_relation(&r, &point(1, 0.0, 0.0)), Err(Error::DegenerateOffset));
    }

    #[test]
    fn boundary_ties_go_counter_clockwise() {
        assert_eq!(sector_kind(22.5), RelationKind::RightBehind);
        assert_eq!(sector_kind(-22.5), RelationKind::Right);
        assert_eq!(sector_kind(337.5), RelationKind::Right);
        assert_eq!(sector_kind(202.5), RelationKind::LeftFront);
    }

    fn fork_plate_knife() -> Template {
        Template::new(
            "a",
            EnvironmentTag::Dining,
            vec![
                Slot { slot: 0, category: Category::Plate, alternates: vec![] },
                Slot { slot: 1, category: Category::Fork, alternates: vec![] },
                Slot { slot: 2, category: Category::Knife, alternates: vec![] },
            ],
            vec![
                Relation { kind: RelationKind::Left, subject_slot: 1, reference_slot: 0 },
                Relation { kind: RelationKind::Right, subject_slot: 2, reference_slot: 0 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn satisfies_fork_left_knife_right() {
        let t = fork_plate_knife();
        let ws = Workspace::default();
        let scene = Scene::new(
            ws,
            EnvironmentTag::Dining,
            vec![obj(10, Category::Fork, -0.2, 0.0), obj(11, Category::Plate, 0.0, 0.0), obj(12, Category::Knife, 0.2, 0.0)],
        )
        .unwrap();
        let binding: Binding = [(0, 11), (1, 10), (2, 12)].into_iter().collect();
        assert_eq!(satisfies_template(&scene, &t, &binding).unwrap(), (true, vec![]));

        let swapped: Binding = [(0, 11), (1, 12), (2, 10)].into_iter().collect();
        let (ok, violated) = satisfies_template(&scene, &t, &swapped).unwrap();
        assert!(!ok);
        assert_eq!(violated, t.relations);

        let partial: Binding = [(0, 11), (1, 12)].into_iter().collect();
        assert_eq!(satisfies_template(&scene, &t, &partial), Err(Error::IncompleteBinding(2)));
    }

    #[test]
    fn template_invariants_rejected() {
        let slots = vec![
            Slot { slot: 0, category: Category::Plate, alternates: vec![] },
            Slot { slot: 1, category: Category::Fork, alternates: vec![] },
        ];
        assert!(Template::new("empty", EnvironmentTag::Dining, slots.clone(), vec![]).is_err());
        let self_rel = vec![Relation { kind: RelationKind::Left, subject_slot: 1, reference_slot: 1 }];
        assert!(Template::new("self", EnvironmentTag::Dining, slots.clone(), self_rel).is_err());
        let on_fork = vec![Relation { kind: RelationKind::On, subject_slot: 0, reference_slot: 1 }];
        assert!(Template::new("on", EnvironmentTag::Dining, slots.clone(), on_fork).is_err());
        let mut three = slots.clone();
        three.push(Slot { slot: 2, category: Category::Cup, alternates: vec![] });
        let rel = vec![Relation { kind: RelationKind::Left, subject_slot: 1, reference_slot: 0 }];
        assert!(Template::new("disconnected", EnvironmentTag::Dining, three, rel).is_err());
        let one = vec![slots[0].clone()];
        assert!(Template::new("single", EnvironmentTag::Dining, one, vec![]).is_err());
    }

    #[test]
    fn loader_rejects_unknown_kind() {
        let text = r#"{"id":"x","environment_tag":"dining","slots":[{"slot":0,"category":"plate","alternates":[]},{"slot":1,"category":"cup","alternates":[]}],"relations":[{"kind":"above","subject":1,"reference":0}]}"#;
        assert!(parse_template_file(text).is_err());
        let ok = text.replace("above", "right-behind");
        assert_eq!(parse_template_file(&ok).unwrap().len(), 1);
    }

    #[test]
    fn cup_right_of_plate() {
        let t = Template::new(
            "cup-right",
            EnvironmentTag::Dining,
            vec![
                Slot { slot: 0, category: Category::Plate, alternates: vec![] },
                Slot { slot: 1, category: Category::Cup, alternates: vec![] },
            ],
            vec![Relation { kind: RelationKind::Right, subject_slot: 1, reference_slot: 0 }],
        )
        .unwrap();
        let a = sample_tidied_scene(&t, 7, &AugmentSpec::default()).unwrap();
        assert!(a.is_valid());
        let kind = classify_relation(a.object(0).unwrap(), a.object(1).unwrap()).unwrap();
        assert_eq!(kind, RelationKind::Right);
        let b = sample_tidied_scene(&t, 7, &AugmentSpec::default()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn nine_slots_in_tiny_workspace_is_infeasible() {
        let slots: Vec<Slot> = (0..9).map(|i| Slot { slot: i, category: Category::Cup, alternates: vec![] }).collect();
        let relations = (1..9).map(|i| Relation { kind: RelationKind::Right, subject_slot: i, reference_slot: i - 1 }).collect();
        let t = Template::new("nine", EnvironmentTag::Coffee, slots, relations).unwrap();
        let augment = AugmentSpec {
            workspace: Workspace::new(0.1, 0.1, 4, 4, 4).unwrap(),
            ..AugmentSpec::default()
        };
        assert!(matches!(sample_tidied_scene(&t, 0, &augment), Err(Error::TemplateInfeasible(_))));
    }

    #[test]
    fn builtin_library_shape() {
        let lib = builtin_library();
        for env in EnvironmentTag::BASE {
            let count = lib.iter().filter(|t| t.environment_tag == env).count();
            assert!(count >= 6, "{env}: {count}");
        }
        let mut ids: Vec<&str> = lib.iter().map(|t| t.id.as_str()).collect();
        ids.dedup();
        assert_eq!(ids.len(), lib.len());
    }

    #[test]
    fn library_samples_satisfy_templates() {
        let augment = AugmentSpec::default();
        for t in builtin_library() {
            let binding = t.identity_binding();
            for seed in 0..1000 {
                let scene = sample_tidied_scene(&t, seed, &augment).unwrap_or_else(|e| panic!("{}: {e}", t.id));
                assert!(scene.is_valid(), "{} seed {seed}", t.id);
                assert!(satisfies_template(&scene, &t, &binding).unwrap().0);
            }
        }
    }

    fn arb_object(id: u32) -> impl Strategy<Value = ObjectInstance> {
        (0.0..1.0f64, 0.0..0.7f64, 0.0..360.0f64, any::<bool>(), 0.01..0.1f64, 0.01..0.1f64).prop_map(move |(x, y, t, s, hx, hy)| ObjectInstance {
            id,
            category: Category::Cup,
            half_extents: (hx, hy),
            pose: Pose::new(x, y, t),
            is_support: s,
        })
    }

    proptest! {
        #[test]
        fn classification_is_antisymmetric(a in arb_object(0), b in arb_object(1)) {
            if let (Ok(ab), Ok(ba)) = (classify_relation(&a, &b), classify_relation(&b, &a)) {
                let dx = b.pose.x - a.pose.x;
                let dy = b.pose.y - a.pose.y;
                let angle = dy.atan2(dx).to_degrees().rem_euclid(360.0);
                let off_boundary = ((angle - 22.5).rem_euclid(45.0)).min(45.0 - (angle - 22.5).rem_euclid(45.0)) > 1e-6;
                let both_support = a.is_support && b.is_support;
                if off_boundary && !both_support {
                    prop_assert_eq!(ab.inverse(), ba);
                }
            }
        }

        #[test]
        fn classification_is_scale_invariant(dx in -1.0..1.0f64, dy in -1.0..1.0f64, k in 0.01..100.0f64) {
            prop_assume!(dx.hypot(dy) > 1e-6);
            let angle = dy.atan2(dx).to_degrees().rem_euclid(360.0);
            let r = (angle - 22.5).rem_euclid(45.0);
            prop_assume!(r.min(45.0 - r) > 1e-6);
            let origin = point(0, 0.0, 0.0);
            let near = classify_relation(&origin, &point(1, dx, dy)).unwrap();
            let far = classify_relation(&origin, &point(1, dx * k, dy * k)).unwrap();
            prop_assert_eq!(near, far);
        }
    }
}
