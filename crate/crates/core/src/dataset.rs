//! Tidying trajectories built by untidying template scenes, their labels,
//! and the discriminator / offline-RL training sets.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::placement_bin;
use crate::seed;
use crate::templates::{sample_tidied_scene, AugmentSpec, Template};
use crate::world::{placement_feasible, ActionSpec, EnvironmentTag, Pose, Scene};

pub const DEFAULT_TRAJECTORY_LEN: usize = 5;
pub const SCATTER_TRIES: usize = 100;
/// Fraction of each environment's templates assigned to training.
pub const TRAIN_FRACTION: f64 = 0.72;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub scene: Scene,
    pub label: f64,
}

/// Messy-to-tidy sequence; `steps[0]` has label 0 and the last step is the
/// tidied template scene with label 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub template_id: String,
    pub seed: u64,
}

/// Tidiness label of step `t` (1-based) in a trajectory of length `len`.
pub fn tidiness_label(t: usize, len: usize) -> f64 {
    (t - 1) as f64 / (len - 1) as f64
}

pub fn generate_trajectory(template: &Template, len: usize, rng_seed: u64) -> Result<Trajectory> {
    generate_trajectory_with(template, len, rng_seed, &AugmentSpec::default())
}

/// Samples a tidied scene, scatters one uniformly chosen object at a time to
/// uniformly random valid poses, and returns the reversed sequence.
pub fn generate_trajectory_with(template: &Template, len: usize, rng_seed: u64, augment: &AugmentSpec) -> Result<Trajectory> {
    if len < 2 {
        return Err(Error::InvalidConfig("trajectory length must be at least 2".into()));
    }
    let tidy = sample_tidied_scene(template, seed::derive(rng_seed, &[0]), augment)?;
    // Crowded layouts occasionally leave a large object nowhere to go; restart
    // the scatter from the tidy scene with a fresh stream.
    let mut scenes = Vec::new();
    for attempt in 0..augment.max_retries.max(1) {
        let mut rng = seed::rng(seed::derive(rng_seed, &[1, attempt as u64]));
        scenes = vec![tidy.clone()];
        for _ in 1..len {
            match scatter_one(scenes.last().unwrap(), &mut rng) {
                Ok(next) => scenes.push(next),
                Err(_) => break,
            }
        }
        if scenes.len() == len {
            break;
        }
    }
    if scenes.len() < len {
        return Err(Error::ScatterFailed);
    }
    scenes.reverse();
    let steps = scenes
        .into_iter()
        .enumerate()
        .map(|(i, scene)| TrajectoryStep {
            scene,
            label: tidiness_label(i + 1, len),
        })
        .collect();
    Ok(Trajectory {
        steps,
        template_id: template.id.clone(),
        seed: rng_seed,
    })
}

/// Moves one random object to a random collision-free on-table pose.
pub fn scatter_one<R: Rng>(scene: &Scene, rng: &mut R) -> Result<Scene> {
    let ws = scene.workspace;
    let idx = rng.random_range(0..scene.objects.len());
    for _ in 0..SCATTER_TRIES {
        let pose = Pose::new(
            rng.random_range(0.0..ws.width_m),
            rng.random_range(0.0..ws.depth_m),
            rng.random_range(0.0..360.0),
        );
        if placement_feasible(scene, idx, pose) {
            let mut next = scene.clone();
            next.objects[idx].pose = pose;
            return Ok(next);
        }
    }
    Err(Error::ScatterFailed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlTransition {
    pub state: Scene,
    pub action: ActionSpec,
    pub next_state: Scene,
    pub reward: u8,
    pub terminal: bool,
}

/// Ids of objects whose pose differs between two scenes with the same objects.
fn moved_objects(a: &Scene, b: &Scene) -> Result<Vec<u32>> {
    if a.objects.len() != b.objects.len() {
        return Err(Error::MalformedTrajectory("object sets differ".into()));
    }
    a.objects
        .iter()
        .zip(&b.objects)
        .filter_map(|(x, y)| {
            if x.id != y.id {
                Some(Err(Error::MalformedTrajectory("object order differs".into())))
            } else if x.pose != y.pose {
                Some(Ok(x.id))
            } else {
                None
            }
        })
        .collect()
}

/// One transition per adjacent step pair; the action grid-snaps the moved
/// object's destination. Only the final transition is rewarded.
pub fn to_rl_transitions(traj: &Trajectory) -> Result<Vec<RlTransition>> {
    if traj.steps.len() < 2 {
        return Err(Error::MalformedTrajectory("fewer than two steps".into()));
    }
    let last = traj.steps.len() - 2;
    traj.steps
        .windows(2)
        .enumerate()
        .map(|(t, pair)| {
            let (state, next) = (&pair[0].scene, &pair[1].scene);
            let moved = moved_objects(state, next)?;
            let [id] = moved[..] else {
                return Err(Error::MalformedTrajectory(format!("step {t} moves {} objects", moved.len())));
            };
            let dest = next.object(id).unwrap();
            let ws = next.workspace;
            let (cx, cy) = ws.cell_of(dest.pose.x, dest.pose.y);
            let action = ActionSpec::new(id, cx, cy, placement_bin(dest, &ws));
            let terminal = t == last;
            Ok(RlTransition {
                state: state.clone(),
                action,
                next_state: next.clone(),
                reward: u8::from(terminal),
                terminal,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
}

/// Discriminator record: one labeled scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscRecord {
    pub scene: Scene,
    pub label: f64,
    pub split: Split,
    pub template_id: String,
    pub trajectory: usize,
    /// 1-based index within the trajectory.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlRecord {
    pub state: Scene,
    pub action: ActionSpec,
    pub next_state: Scene,
    pub reward: u8,
    pub terminal: bool,
    pub split: Split,
    pub template_id: String,
}

/// Per-environment counts in the layout objects / templates / trajectories / data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentCounts {
    pub environment: EnvironmentTag,
    /// Distinct categories appearing in the environment's scenes.
    pub objects: usize,
    pub templates: usize,
    pub train_templates: usize,
    pub validation_templates: usize,
    pub trajectories: usize,
    pub data: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub seed: u64,
    pub trajectory_len: usize,
    pub train_templates: Vec<String>,
    pub validation_templates: Vec<String>,
    pub environments: Vec<EnvironmentCounts>,
    pub total_objects: usize,
    pub total_trajectories: usize,
    pub total_data: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub disc: Vec<DiscRecord>,
    pub rl: Vec<RlRecord>,
    pub report: SplitReport,
}

/// Holds out whole templates: per environment, about [`TRAIN_FRACTION`] of
/// the templates (at least one, never all) go to training.
pub fn split_templates(library: &[Template], seed: u64) -> Result<BTreeMap<String, Split>> {
    if library.is_empty() {
        return Err(Error::CannotSplit("empty library".into()));
    }
    let mut rng = seed::rng(seed::derive(seed, &[0x5911]));
    let mut out = BTreeMap::new();
    let envs: BTreeSet<EnvironmentTag> = library.iter().map(|t| t.environment_tag).collect();
    for env in envs {
        let mut ids: Vec<&str> = library.iter().filter(|t| t.environment_tag == env).map(|t| t.id.as_str()).collect();
        if ids.len() < 2 {
            return Err(Error::CannotSplit(format!("environment {env} has {} template(s)", ids.len())));
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        let n_train = ((ids.len() as f64 * TRAIN_FRACTION).round() as usize).clamp(1, ids.len() - 1);
        for (i, id) in ids.into_iter().enumerate() {
            let split = if i < n_train { Split::Train } else { Split::Validation };
            if out.insert(id.to_string(), split).is_some() {
                return Err(Error::CannotSplit(format!("duplicate template id {id}")));
            }
        }
    }
    Ok(out)
}

/// Seed of trajectory `j` of the template at position `template_idx` (id order).
pub fn trajectory_seed(seed: u64, template_idx: usize, j: usize) -> u64 {
    seed::derive(seed, &[template_idx as u64, j as u64])
}

pub fn build_dataset(library: &[Template], trajectories_per_template: usize, len: usize, seed: u64) -> Result<Dataset> {
    let splits = split_templates(library, seed)?;
    let mut ordered: Vec<&Template> = library.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));

    let mut disc = Vec::new();
    let mut rl = Vec::new();
    let mut categories: BTreeMap<EnvironmentTag, BTreeSet<crate::Category>> = BTreeMap::new();
    let mut counts: BTreeMap<EnvironmentTag, (usize, usize)> = BTreeMap::new();
    let mut trajectory_index = 0;
    for (ti, template) in ordered.iter().enumerate() {
        let split = splits[&template.id];
        let env = template.environment_tag;
        for j in 0..trajectories_per_template {
            let traj = generate_trajectory(template, len, trajectory_seed(seed, ti, j))?;
            for t in to_rl_transitions(&traj)? {
                rl.push(RlRecord {
                    state: t.state,
                    action: t.action,
                    next_state: t.next_state,
                    reward: t.reward,
                    terminal: t.terminal,
                    split,
                    template_id: template.id.clone(),
                });
            }
            let cats = categories.entry(env).or_default();
            for (k, step) in traj.steps.into_iter().enumerate() {
                cats.extend(step.scene.objects.iter().map(|o| o.category));
                disc.push(DiscRecord {
                    scene: step.scene,
                    label: step.label,
                    split,
                    template_id: template.id.clone(),
                    trajectory: trajectory_index,
                    step: k + 1,
                });
            }
            let c = counts.entry(env).or_default();
            c.0 += 1;
            c.1 += len;
            trajectory_index += 1;
        }
    }

    let environments = counts
        .iter()
        .map(|(&env, &(trajectories, data))| {
            let in_env = |s: Split| library.iter().filter(|t| t.environment_tag == env && splits[&t.id] == s).count();
            EnvironmentCounts {
                environment: env,
                objects: categories.get(&env).map_or(0, BTreeSet::len),
                templates: library.iter().filter(|t| t.environment_tag == env).count(),
                train_templates: in_env(Split::Train),
                validation_templates: in_env(Split::Validation),
                trajectories,
                data,
            }
        })
        .collect();
    let pick = |s: Split| splits.iter().filter(|(_, &v)| v == s).map(|(k, _)| k.clone()).collect();
    let report = SplitReport {
        seed,
        trajectory_len: len,
        train_templates: pick(Split::Train),
        validation_templates: pick(Split::Validation),
        environments,
        total_objects: categories.values().flatten().collect::<BTreeSet<_>>().len(),
        total_trajectories: trajectory_index,
        total_data: disc.len(),
    };
    Ok(Dataset { disc, rl, report })
}
