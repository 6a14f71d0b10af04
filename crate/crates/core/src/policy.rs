//! Tidying policy over pick-and-place actions, its value functions, and
//! offline training with implicit Q-learning.

use ndarray::{Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::dataset::RlTransition;
use crate::discriminator::{featurize, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::nn::{Activation, AwrGroup, Loss, LossBatch, Mlp, Normalizer, POLYAK_RATE};
use crate::seed;
use crate::world::{feasibility_mask, ActionSpec, Scene, Workspace};

/// Category one-hot, half extents, and raw pose (x, y, degrees).
pub const OBJECT_DESCRIPTOR_DIM: usize = Category::COUNT + 2 + 3;
pub const POLICY_FEATURE_DIM: usize = FEATURE_DIM + OBJECT_DESCRIPTOR_DIM;
pub const Q_INPUT_DIM: usize = POLICY_FEATURE_DIM + 3;

/// Features of the scene without the object, followed by the object's own
/// descriptor. A lone object sees an all-zero scene part.
pub fn policy_features(scene: &Scene, object_id: u32) -> Result<Vec<f64>> {
    let obj = scene.object(object_id).ok_or(Error::NoSuchObject(object_id))?;
    let rest = scene.without(object_id);
    let mut f = if rest.objects.is_empty() {
        vec![0.0; FEATURE_DIM]
    } else {
        featurize(&rest)?
    };
    let mut onehot = [0.0; Category::COUNT];
    onehot[obj.category.index()] = 1.0;
    f.extend(onehot);
    f.extend([obj.half_extents.0, obj.half_extents.1]);
    f.extend([obj.pose.x, obj.pose.y, obj.pose.theta]);
    Ok(f)
}

/// Placement target scaled to [0, 1] per axis.
pub fn placement_encoding(action: &ActionSpec, ws: &Workspace) -> [f64; 3] {
    [
        (action.cell.0 as f64 + 0.5) / ws.grid_w as f64,
        (action.cell.1 as f64 + 0.5) / ws.grid_h as f64,
        action.rotation_bin as f64 / ws.rotation_bins as f64,
    ]
}

pub fn q_input(scene: &Scene, action: &ActionSpec) -> Result<Vec<f64>> {
    let mut f = policy_features(scene, action.object_id)?;
    f.extend(placement_encoding(action, &scene.workspace));
    Ok(f)
}

pub fn actions_per_object(ws: &Workspace) -> usize {
    ws.grid_w * ws.grid_h * ws.rotation_bins
}

/// Position of `action` in the joint (object, x, y, rotation) layout.
pub fn action_index(scene: &Scene, action: &ActionSpec) -> Option<usize> {
    let ws = &scene.workspace;
    if !action.in_range(ws) {
        return None;
    }
    let n = scene.index_of(action.object_id)?;
    Some(((n * ws.grid_w + action.cell.0) * ws.grid_h + action.cell.1) * ws.rotation_bins + action.rotation_bin)
}

/// Probabilities over every (object, x, y, rotation) of a scene; infeasible
/// entries hold exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    pub object_ids: Vec<u32>,
    pub workspace: Workspace,
    pub probs: Vec<f64>,
    pub mask: Vec<bool>,
}

impl PolicyDistribution {
    /// Softmax of `logits` over the unmasked entries, jointly across objects.
    pub fn from_logits(scene: &Scene, logits: &[f64], mask: Vec<bool>) -> Result<PolicyDistribution> {
        let len = scene.objects.len() * actions_per_object(&scene.workspace);
        if logits.len() != len || mask.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: logits.len().min(mask.len()),
            });
        }
        let max = logits
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(&l, _)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::NoFeasibleAction);
        }
        let mut probs: Vec<f64> = logits.iter().zip(&mask).map(|(&l, &m)| if m { (l - max).exp() } else { 0.0 }).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(PolicyDistribution {
            object_ids: scene.objects.iter().map(|o| o.id).collect(),
            workspace: scene.workspace,
            probs,
            mask,
        })
    }

    pub fn action_at(&self, index: usize) -> ActionSpec {
        let ws = &self.workspace;
        let r = index % ws.rotation_bins;
        let rest = index / ws.rotation_bins;
        let y = rest % ws.grid_h;
        let rest = rest / ws.grid_h;
        let x = rest % ws.grid_w;
        let n = rest / ws.grid_w;
        ActionSpec::new(self.object_ids[n], x, y, r)
    }

    fn index_of(&self, action: &ActionSpec) -> Option<usize> {
        let ws = &self.workspace;
        if !action.in_range(ws) {
            return None;
        }
        let n = self.object_ids.iter().position(|&id| id == action.object_id)?;
        Some(((n * ws.grid_w + action.cell.0) * ws.grid_h + action.cell.1) * ws.rotation_bins + action.rotation_bin)
    }

    pub fn prob(&self, action: &ActionSpec) -> f64 {
        self.index_of(action).map_or(0.0, |i| self.probs[i])
    }

    pub fn is_feasible(&self, action: &ActionSpec) -> bool {
        self.index_of(action).is_some_and(|i| self.mask[i])
    }

    pub fn feasible_actions(&self) -> Vec<ActionSpec> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).map(|i| self.action_at(i)).collect()
    }

    /// Inverse-CDF draw; never returns a masked entry.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> ActionSpec {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = None;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = Some(i);
                if u < acc {
                    return self.action_at(i);
                }
            }
        }
        // rounding left u above the accumulated mass
        self.action_at(last.expect("distribution has support"))
    }
}

pub fn sample_action(dist: &PolicyDistribution, rng_seed: u64) -> ActionSpec {
    dist.sample(&mut seed::rng(rng_seed))
}

/// Source of action distributions for search and rollouts.
pub trait ActionPolicy {
    fn distribution(&self, scene: &Scene) -> Result<PolicyDistribution>;
}

/// Equal probability on every feasible action.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl ActionPolicy for UniformPolicy {
    fn distribution(&self, scene: &Scene) -> Result<PolicyDistribution> {
        let mask = feasibility_mask(scene);
        PolicyDistribution::from_logits(scene, &vec![0.0; mask.len()], mask)
    }
}

/// Per-object MLP head emitting one logit per (x, y, rotation).
#[derive(Debug, Clone, PartialEq)]
pub struct TidyingPolicy {
    pub net: Mlp,
}

impl TidyingPolicy {
    pub fn new(ws: &Workspace, seed: u64) -> TidyingPolicy {
        let net = Mlp::new(
            &[POLICY_FEATURE_DIM, 128, 64, actions_per_object(ws)],
            &[Activation::Relu, Activation::Relu, Activation::Identity],
            seed,
        )
        .expect("static layout");
        TidyingPolicy { net }
    }

    pub fn from_net(net: Mlp) -> Result<TidyingPolicy> {
        if net.input_dim() != POLICY_FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: POLICY_FEATURE_DIM,
                got: net.input_dim(),
            });
        }
        Ok(TidyingPolicy { net })
    }

    pub fn to_json(&self) -> String {
        self.net.to_json()
    }

    pub fn from_json(s: &str) -> Result<TidyingPolicy> {
        TidyingPolicy::from_net(Mlp::from_json(s)?)
    }

    pub fn feature_rows(scene: &Scene) -> Result<Array2<f64>> {
        let rows: Vec<f64> = scene
            .objects
            .iter()
            .map(|o| policy_features(scene, o.id))
            .collect::<Result<Vec<_>>>()?
            .concat();
        Ok(Array2::from_shape_vec((scene.objects.len(), POLICY_FEATURE_DIM), rows).expect("fixed width"))
    }

    /// Logits, one row per object in scene order.
    pub fn logits(&self, scene: &Scene) -> Result<Array2<f64>> {
        if scene.objects.is_empty() {
            return Err(Error::NoObjects);
        }
        let per = actions_per_object(&scene.workspace);
        if self.net.output_dim() != per {
            return Err(Error::DimensionMismatch {
                expected: per,
                got: self.net.output_dim(),
            });
        }
        self.net.forward(Self::feature_rows(scene)?.view())
    }
}

impl ActionPolicy for TidyingPolicy {
    fn distribution(&self, scene: &Scene) -> Result<PolicyDistribution> {
        let logits = self.logits(scene)?;
        let mask = feasibility_mask(scene);
        PolicyDistribution::from_logits(scene, logits.as_slice().expect("standard layout"), mask)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqlConfig {
    pub tau: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lr: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub polyak: f64,
    pub seed: u64,
}

impl Default for IqlConfig {
    fn default() -> Self {
        IqlConfig {
            tau: crate::nn::DEFAULT_EXPECTILE,
            beta: crate::nn::DEFAULT_TEMPERATURE,
            gamma: crate::nn::DEFAULT_DISCOUNT,
            lr: 3e-4,
            steps: 2000,
            batch_size: 64,
            polyak: POLYAK_RATE,
            seed: 0,
        }
    }
}

impl IqlConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.tau > 0.0
            && self.tau < 1.0
            && self.beta >= 0.0
            && (0.0..=1.0).contains(&self.gamma)
            && self.lr > 0.0
            && self.batch_size > 0
            && (0.0..=1.0).contains(&self.polyak);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqlModels {
    pub q: Mlp,
    pub q_target: Mlp,
    pub v: Mlp,
    pub policy: TidyingPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqlLosses {
    pub step: usize,
    pub value: f64,
    pub q: f64,
    /// `None` when the minibatch held no action the mask allows.
    pub policy: Option<f64>,
}

fn value_net(input: usize, seed: u64) -> Mlp {
    Mlp::new(&[input, 128, 64, 1], &[Activation::Relu, Activation::Relu, Activation::Identity], seed).expect("static layout")
}

struct Prepared {
    rows: Array2<f64>,
    mask: Vec<bool>,
    /// (object row, column) of the demonstrated action when the mask allows it.
    action: Option<(usize, usize)>,
    q_in: Vec<f64>,
    v_in: Vec<f64>,
    v_next: Vec<f64>,
    reward: f64,
    terminal: bool,
}

fn prepare(t: &RlTransition) -> Result<Prepared> {
    let scene = &t.state;
    let idx = action_index(scene, &t.action).ok_or(Error::InvalidConfig(format!("transition action {:?} is not valid in its state", t.action)))?;
    let per = actions_per_object(&scene.workspace);
    let mask = feasibility_mask(scene);
    Ok(Prepared {
        rows: TidyingPolicy::feature_rows(scene)?,
        action: mask[idx].then_some((idx / per, idx % per)),
        mask,
        q_in: q_input(scene, &t.action)?,
        v_in: featurize(scene)?,
        v_next: featurize(&t.next_state)?,
        reward: t.reward as f64,
        terminal: t.terminal,
    })
}

fn stack(rows: &[&[f64]], width: usize) -> Array2<f64> {
    Array2::from_shape_vec((rows.len(), width), rows.concat()).expect("fixed width")
}

/// Implicit Q-learning: per minibatch an expectile step on V toward the
/// target Q, a TD step on Q, an advantage-weighted likelihood step on the
/// policy, then Polyak averaging of the target Q.
pub fn train_iql(transitions: &[RlTransition], config: &IqlConfig) -> Result<(IqlModels, Vec<IqlLosses>)> {
    config.validate()?;
    let first = transitions.first().ok_or(Error::EmptyBatch)?;
    let ws = first.state.workspace;
    if transitions.iter().any(|t| t.state.workspace != ws) {
        return Err(Error::InvalidConfig("transitions mix workspaces".into()));
    }
    let data: Vec<Prepared> = transitions.iter().map(prepare).collect::<Result<_>>()?;
    let per = actions_per_object(&ws);

    let mut q = value_net(Q_INPUT_DIM, seed::derive(config.seed, &[1]));
    let mut v = value_net(FEATURE_DIM, seed::derive(config.seed, &[2]));
    let mut policy = TidyingPolicy::new(&ws, seed::derive(config.seed, &[3]));
    let all_rows: Vec<&[f64]> = data.iter().flat_map(|d| d.rows.rows().into_iter().map(|r| r.to_slice().unwrap())).collect();
    policy.net.normalizer = Some(Normalizer::fit(stack(&all_rows, POLICY_FEATURE_DIM).view()));
    q.normalizer = Some(Normalizer::fit(stack(&data.iter().map(|d| d.q_in.as_slice()).collect::<Vec<_>>(), Q_INPUT_DIM).view()));
    v.normalizer = Some(Normalizer::fit(stack(&data.iter().map(|d| d.v_in.as_slice()).collect::<Vec<_>>(), FEATURE_DIM).view()));
    let mut q_target = q.clone();

    let mut rng = seed::rng(seed::derive(config.seed, &[4]));
    let mut history = Vec::with_capacity(config.steps);
    for step in 1..=config.steps {
        let batch: Vec<&Prepared> = (0..config.batch_size).map(|_| &data[rng.random_range(0..data.len())]).collect();
        let q_in = stack(&batch.iter().map(|d| d.q_in.as_slice()).collect::<Vec<_>>(), Q_INPUT_DIM);
        let v_in = stack(&batch.iter().map(|d| d.v_in.as_slice()).collect::<Vec<_>>(), FEATURE_DIM);
        let v_next = stack(&batch.iter().map(|d| d.v_next.as_slice()).collect::<Vec<_>>(), FEATURE_DIM);

        let q_hat = q_target.forward(q_in.view())?.column(0).to_vec();
        let value_loss = v.train_step(v_in.view(), &Loss::Expectile { tau: config.tau }, &LossBatch::Targets(q_hat.clone()), config.lr)?;

        let td = LossBatch::Td {
            reward: batch.iter().map(|d| d.reward).collect(),
            terminal: batch.iter().map(|d| d.terminal).collect(),
            next_value: v.forward(v_next.view())?.column(0).to_vec(),
        };
        let q_loss = q.train_step(q_in.view(), &Loss::TdError { gamma: config.gamma }, &td, config.lr)?;

        let v_now = v.forward(v_in.view())?.column(0).to_vec();
        let mut rows: Vec<&[f64]> = Vec::new();
        let mut groups = Vec::new();
        for (k, d) in batch.iter().enumerate() {
            let Some(action) = d.action else { continue };
            groups.push(AwrGroup {
                first_row: rows.len(),
                rows: d.rows.nrows(),
                mask: d.mask.clone(),
                action,
                advantage: q_hat[k] - v_now[k],
            });
            rows.extend(d.rows.rows().into_iter().map(|r| r.to_slice().unwrap()));
        }
        let policy_loss = if groups.is_empty() {
            None
        } else {
            let x = stack(&rows, POLICY_FEATURE_DIM);
            Some(policy.net.train_step(x.view(), &Loss::AdvantageWeightedNll { beta: config.beta }, &LossBatch::Awr(groups), config.lr)?)
        };
        debug_assert_eq!(policy.net.output_dim(), per);

        q_target.polyak_update(&q, config.polyak);
        history.push(IqlLosses {
            step,
            value: value_loss,
            q: q_loss,
            policy: policy_loss,
        });
    }
    Ok((IqlModels { q, q_target, v, policy }, history))
}

/// Q and V evaluated on single inputs, for inspection and tests.
pub fn q_value(q: &Mlp, scene: &Scene, action: &ActionSpec) -> Result<f64> {
    let x = Array2::from_shape_vec((1, Q_INPUT_DIM), q_input(scene, action)?).unwrap();
    Ok(q.forward(x.view())?[[0, 0]])
}

pub fn state_value(v: &Mlp, scene: &Scene) -> Result<f64> {
    let x = Array2::from_shape_vec((1, FEATURE_DIM), featurize(scene)?).unwrap();
    Ok(v.forward(x.view())?.index_axis(Axis(0), 0)[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_trajectory, to_rl_transitions};
    use crate::templates::builtin_library;
    use crate::world::{apply_action, check_overlap, in_bounds, EnvironmentTag, ObjectInstance, Pose};

    fn scene(ws: Workspace, objs: &[(Category, f64, f64, f64)]) -> Scene {
        let objects = objs
            .iter()
            .enumerate()
            .map(|(i, &(c, x, y, t))| ObjectInstance::from_category(i as u32, c, Pose::new(x, y, t)))
            .collect();
        Scene {
            workspace: ws,
            environment_tag: EnvironmentTag::Dining,
            objects,
        }
    }

    #[test]
    fn descriptor_layout() {
        let mut s = scene(Workspace::default(), &[(Category::Plate, 0.2, 0.3, 90.0), (Category::Cup, 0.6, 0.3, 0.0)]);
        s.objects[0].half_extents = (0.05, 0.025);
        let f = policy_features(&s, 0).unwrap();
        assert_eq!(f.len(), POLICY_FEATURE_DIM);
        let d = &f[FEATURE_DIM..];
        assert_eq!(d[Category::Plate.index()], 1.0);
        assert_eq!(d[..Category::COUNT].iter().sum::<f64>(), 1.0);
        assert_eq!(&d[Category::COUNT..], &[0.05, 0.025, 0.2, 0.3, 90.0]);
        // only the removed object's pose changes the scene part
        let mut moved = s.clone();
        moved.objects[0].pose = Pose::new(0.8, 0.5, 10.0);
        assert_eq!(policy_features(&moved, 0).unwrap()[..FEATURE_DIM], f[..FEATURE_DIM]);
        let lone = scene(Workspace::default(), &[(Category::Plate, 0.2, 0.3, 0.0)]);
        assert!(policy_features(&lone, 0).unwrap()[..FEATURE_DIM].iter().all(|&v| v == 0.0));
        assert_eq!(policy_features(&lone, 7), Err(Error::NoSuchObject(7)));
    }

    #[test]
    fn distribution_normalizes_and_masks() {
        let s = scene(
            Workspace::default(),
            &[(Category::Plate, 0.5, 0.35, 0.0), (Category::Fork, 0.2, 0.35, 0.0), (Category::Book, 0.8, 0.2, 30.0)],
        );
        let policy = TidyingPolicy::new(&s.workspace, 1);
        let d = policy.distribution(&s).unwrap();
        assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (p, m) in d.probs.iter().zip(&d.mask) {
            if !m {
                assert_eq!(*p, 0.0);
            }
        }
        // the book may rest on the plate but never on the fork
        let (cx, cy) = s.workspace.cell_of(0.2, 0.35);
        for r in 0..4 {
            assert_eq!(d.prob(&ActionSpec::new(2, cx, cy, r)), 0.0);
        }
        let (px, py) = s.workspace.cell_of(0.5, 0.35);
        assert!(d.is_feasible(&ActionSpec::new(2, px, py, 0)));
        let u = UniformPolicy.distribution(&s).unwrap();
        let feasible = u.mask.iter().filter(|&&m| m).count() as f64;
        for (p, m) in u.probs.iter().zip(&u.mask) {
            if *m {
                assert!((p - 1.0 / feasible).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn index_roundtrip() {
        let s = scene(Workspace::default(), &[(Category::Cup, 0.5, 0.35, 0.0), (Category::Mug, 0.2, 0.2, 0.0)]);
        let d = UniformPolicy.distribution(&s).unwrap();
        for i in [0, 5, 1023, 1024, 2047] {
            let a = d.action_at(i);
            assert_eq!(action_index(&s, &a), Some(i));
        }
        assert_eq!(d.action_at(1024 + 4 * 16 + 4 + 1), ActionSpec::new(1, 1, 1, 1));
    }

    #[test]
    fn sampling_respects_support_and_frequency() {
        let ws = Workspace::new(1.0, 1.0, 2, 2, 1).unwrap();
        let s = scene(ws, &[(Category::Cup, 0.25, 0.25, 0.0)]);
        let two = PolicyDistribution::from_logits(&s, &[0.0; 4], vec![true, false, false, true]).unwrap();
        let hits = (0..1000).filter(|&k| sample_action(&two, k).cell == (0, 0)).count();
        assert!((hits as f64 / 1000.0 - 0.5).abs() < 0.05, "{hits}");
        assert!((0..1000).all(|k| sample_action(&two, k).cell != (0, 1)));

        let point = PolicyDistribution::from_logits(&s, &[0.0; 4], vec![false, false, true, false]).unwrap();
        assert!((0..100).all(|k| sample_action(&point, k) == ActionSpec::new(0, 1, 0, 0)));
        assert_eq!(PolicyDistribution::from_logits(&s, &[0.0; 4], vec![false; 4]), Err(Error::NoFeasibleAction));
    }

    #[test]
    fn sampled_actions_keep_scenes_valid() {
        let t = &builtin_library()[5];
        let traj = generate_trajectory(t, 5, 0).unwrap();
        let policy = TidyingPolicy::new(&Workspace::default(), 0);
        let mut rng = seed::rng(1);
        let mut s = traj.steps[0].scene.clone();
        for _ in 0..30 {
            let a = policy.distribution(&s).unwrap().sample(&mut rng);
            s = apply_action(&s, &a).unwrap();
            assert!(check_overlap(&s).is_empty() && in_bounds(&s).is_empty());
        }
    }

    #[test]
    fn advantage_weight_example() {
        let g = AwrGroup {
            first_row: 0,
            rows: 1,
            mask: vec![true],
            action: (0, 0),
            advantage: 0.2,
        };
        assert!((g.weight(3.0) - 1.8221).abs() < 1e-4);
    }

    #[test]
    fn repeated_terminal_transition_has_unit_q() {
        let traj = generate_trajectory(&builtin_library()[0], 2, 3).unwrap();
        let t = to_rl_transitions(&traj).unwrap().remove(0);
        assert!(t.terminal);
        let cfg = IqlConfig {
            steps: 1000,
            batch_size: 8,
            lr: 3e-3,
            ..IqlConfig::default()
        };
        let (m, hist) = train_iql(&vec![t.clone(); 4], &cfg).unwrap();
        assert!((q_value(&m.q, &t.state, &t.action).unwrap() - 1.0).abs() < 0.05);
        assert_eq!(hist.len(), 1000);
    }

    #[test]
    fn symmetric_expectile_value_is_mean_q() {
        // two terminal transitions from one state with rewards 0 and 1
        let traj = generate_trajectory(&builtin_library()[0], 2, 3).unwrap();
        let t1 = to_rl_transitions(&traj).unwrap().remove(0);
        let mut t0 = t1.clone();
        t0.reward = 0;
        let (x, y) = t1.action.cell;
        t0.action.cell = ((x + 8) % 16, y);
        let cfg = IqlConfig {
            tau: 0.5,
            steps: 3000,
            batch_size: 16,
            lr: 1e-3,
            ..IqlConfig::default()
        };
        let (m, _) = train_iql(&[t0.clone(), t1.clone()], &cfg).unwrap();
        let q0 = q_value(&m.q_target, &t0.state, &t0.action).unwrap();
        let q1 = q_value(&m.q_target, &t1.state, &t1.action).unwrap();
        let v = state_value(&m.v, &t1.state).unwrap();
        assert!((v - (q0 + q1) / 2.0).abs() < 0.05, "v {v} q {q0} {q1}");
    }

    #[test]
    fn training_is_deterministic() {
        let traj = generate_trajectory(&builtin_library()[3], 5, 1).unwrap();
        let ts = to_rl_transitions(&traj).unwrap();
        let cfg = IqlConfig {
            steps: 20,
            batch_size: 4,
            ..IqlConfig::default()
        };
        let (a, ha) = train_iql(&ts, &cfg).unwrap();
        let (b, hb) = train_iql(&ts, &cfg).unwrap();
        assert_eq!(a.policy.to_json(), b.policy.to_json());
        assert_eq!(a.q.to_json(), b.q.to_json());
        assert_eq!(ha, hb);
        assert!(train_iql(&[], &cfg).is_err());
    }
}
