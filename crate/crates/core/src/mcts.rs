//! Tidiness-guided Monte Carlo tree search and the episode loop around it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discriminator::TidinessModel;
use crate::error::{Error, Result};
use crate::policy::{ActionPolicy, PolicyDistribution};
use crate::seed;
use crate::world::{apply_action, check_overlap, in_bounds, ActionSpec, Scene};

/// Duplicate draws tolerated before a node counts as fully expanded.
pub const EXPANSION_TRIES: usize = 50;
pub const DEFAULT_MAX_STEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub iterations: usize,
    pub exploration: f64,
    /// Weight of the rollout outcome against the score in backups.
    pub mixing: f64,
    pub rollout_horizon: usize,
    pub threshold: f64,
    /// Children per node.
    pub width: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iterations: 200,
            exploration: 1.0,
            mixing: 0.3,
            rollout_horizon: 5,
            threshold: crate::discriminator::DEFAULT_THRESHOLD,
            width: 8,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return Err(Error::InvalidConfig("mixing must lie in [0, 1]".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig("threshold must lie in (0, 1)".into()));
        }
        if self.width == 0 || !self.exploration.is_finite() || self.exploration < 0.0 {
            return Err(Error::InvalidConfig("width must be positive and exploration finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub action: ActionSpec,
    pub child: usize,
    pub visits: u64,
    /// Sum of backed-up returns.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub scene: Scene,
    pub visits: u64,
    pub edges: Vec<Edge>,
    pub fully_expanded: bool,
    score: Option<f64>,
    dist: Option<PolicyDistribution>,
}

impl Node {
    /// A node without edges.
    pub fn new(scene: Scene, visits: u64) -> Node {
        Node {
            scene,
            visits,
            edges: Vec::new(),
            fully_expanded: false,
            score: None,
            dist: None,
        }
    }
}

/// UCT value of an edge; unvisited edges are infinitely attractive.
pub fn uct_value(parent_visits: u64, edge: &Edge, c: f64) -> f64 {
    if edge.visits == 0 {
        return f64::INFINITY;
    }
    let n = edge.visits as f64;
    edge.value / n + c * (2.0 * (parent_visits as f64).ln() / n).sqrt()
}

/// Index of the edge with the highest UCT value; ties go to the smallest action.
pub fn uct_select(node: &Node, c: f64) -> Result<usize> {
    node.edges
        .iter()
        .enumerate()
        .map(|(i, e)| (i, uct_value(node.visits, e, c)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| node.edges[b.0].action.cmp(&node.edges[a.0].action)))
        .map(|(i, _)| i)
        .ok_or(Error::LeafNode)
}

/// Return credited to every edge on a path.
pub fn backup_increment(value: f64, outcome: f64, mixing: f64) -> f64 {
    (1.0 - mixing) * value + mixing * outcome
}

/// Arena search tree; node 0 is the root.
#[derive(Debug, Clone)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub iterations: usize,
    pub nodes: usize,
    pub root_visits: u64,
    pub chosen_visits: u64,
    pub chosen_mean_value: f64,
    pub max_depth: usize,
}

impl Tree {
    pub fn new(root: Scene) -> Tree {
        Tree {
            nodes: vec![Node::new(root, 1)],
        }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Whether every node satisfies N(s) = 1 + sum of its edge visits.
    pub fn is_consistent(&self) -> bool {
        self.nodes.iter().all(|n| n.visits == 1 + n.edges.iter().map(|e| e.visits).sum::<u64>() && n.edges.iter().all(|e| e.value.is_finite()))
    }

    fn score<M: TidinessModel>(&mut self, idx: usize, model: &M) -> Result<f64> {
        if let Some(s) = self.nodes[idx].score {
            return Ok(s);
        }
        let s = model.score(&self.nodes[idx].scene)?;
        self.nodes[idx].score = Some(s);
        Ok(s)
    }

    /// Adds one child sampled from the policy, or marks the node fully
    /// expanded when the width is reached or no new action turns up.
    pub fn expand<P: ActionPolicy, R: Rng>(&mut self, idx: usize, policy: &P, width: usize, rng: &mut R) -> Result<Option<usize>> {
        let node = &mut self.nodes[idx];
        if node.fully_expanded {
            return Ok(None);
        }
        if node.edges.len() >= width {
            node.fully_expanded = true;
            return Ok(None);
        }
        if node.dist.is_none() {
            match policy.distribution(&node.scene) {
                Ok(d) => node.dist = Some(d),
                Err(Error::NoFeasibleAction) => {
                    node.fully_expanded = true;
                    return Ok(None);
                }
                Err(e) => return Err(e),
            }
        }
        let dist = node.dist.as_ref().unwrap();
        let mut picked = None;
        for _ in 0..EXPANSION_TRIES {
            let a = dist.sample(rng);
            if node.edges.iter().all(|e| e.action != a) {
                picked = Some(a);
                break;
            }
        }
        if picked.is_none() {
            // sampling keeps hitting known actions: take the likeliest unused one
            picked = dist
                .feasible_actions()
                .into_iter()
                .filter(|a| node.edges.iter().all(|e| e.action != *a))
                .fold(None, |best: Option<(ActionSpec, f64)>, a| {
                    let p = dist.prob(&a);
                    match best {
                        Some((_, bp)) if bp >= p => best,
                        _ => Some((a, p)),
                    }
                })
                .map(|(a, _)| a);
        }
        let Some(action) = picked else {
            node.fully_expanded = true;
            return Ok(None);
        };
        let scene = apply_action(&node.scene, &action)?;
        let child = self.nodes.len();
        self.nodes[idx].edges.push(Edge {
            action,
            child,
            visits: 0,
            value: 0.0,
        });
        // the creation visit is counted by the backup that follows
        self.nodes.push(Node::new(scene, 0));
        Ok(Some(child))
    }

    /// One select, expand, simulate, backup pass.
    pub fn iterate<M: TidinessModel, P: ActionPolicy, R: Rng>(&mut self, model: &M, policy: &P, config: &SearchConfig, rng: &mut R) -> Result<usize> {
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut cur = 0;
        let mut expanded = None;
        loop {
            // the episode would stop at a tidy state, so it is a leaf
            if cur != 0 && self.score(cur, model)? >= config.threshold {
                break;
            }
            if let Some(child) = self.expand(cur, policy, config.width, rng)? {
                path.push((cur, self.nodes[cur].edges.len() - 1));
                expanded = Some(child);
                break;
            }
            if self.nodes[cur].edges.is_empty() {
                break;
            }
            let e = uct_select(&self.nodes[cur], config.exploration)?;
            path.push((cur, e));
            cur = self.nodes[cur].edges[e].child;
        }
        let leaf = expanded.unwrap_or(cur);
        let value = self.score(leaf, model)?;
        let outcome = if value >= config.threshold {
            1.0
        } else {
            let (_, z) = rollout_from(&self.nodes[leaf].scene, value, model, policy, config.rollout_horizon, config.threshold, rng)?;
            z
        };
        let inc = backup_increment(value, outcome, config.mixing);
        for &(n, e) in &path {
            let node = &mut self.nodes[n];
            node.visits += 1;
            node.edges[e].visits += 1;
            node.edges[e].value += inc;
        }
        if let Some(child) = expanded {
            self.nodes[child].visits += 1;
        }
        Ok(path.len())
    }

    /// Most visited root action; ties go to the higher mean value, then the
    /// smallest action.
    pub fn best_action(&self) -> Option<&Edge> {
        let mean = |e: &Edge| if e.visits == 0 { 0.0 } else { e.value / e.visits as f64 };
        self.root().edges.iter().max_by(|a, b| {
            a.visits
                .cmp(&b.visits)
                .then_with(|| mean(a).total_cmp(&mean(b)))
                .then_with(|| b.action.cmp(&a.action))
        })
    }
}

fn rollout_from<M: TidinessModel, P: ActionPolicy, R: Rng>(
    start: &Scene,
    start_score: f64,
    model: &M,
    policy: &P,
    horizon: usize,
    threshold: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if start_score >= threshold {
        return Ok((start_score, 1.0));
    }
    let mut scene = start.clone();
    for _ in 0..horizon {
        let a = match policy.distribution(&scene) {
            Ok(d) => d.sample(rng),
            Err(Error::NoFeasibleAction) => break,
            Err(e) => return Err(e),
        };
        scene = apply_action(&scene, &a)?;
        if model.score(&scene)? >= threshold {
            return Ok((start_score, 1.0));
        }
    }
    Ok((start_score, 0.0))
}

/// Score of `scene` and whether it or any state of a policy rollout of
/// `horizon` steps reaches `threshold`.
pub fn simulate<M: TidinessModel, P: ActionPolicy>(scene: &Scene, model: &M, policy: &P, horizon: usize, threshold: f64, rng_seed: u64) -> Result<(f64, u8)> {
    let v = model.score(scene)?;
    let (v, z) = rollout_from(scene, v, model, policy, horizon, threshold, &mut seed::rng(rng_seed))?;
    Ok((v, z as u8))
}

/// Runs `config.iterations` passes from `root` and returns the most visited
/// root action together with the tree.
pub fn search<M: TidinessModel, P: ActionPolicy>(root: &Scene, model: &M, policy: &P, config: &SearchConfig, rng_seed: u64) -> Result<(ActionSpec, SearchStats, Tree)> {
    config.validate()?;
    let mut rng: ChaCha8Rng = seed::rng(rng_seed);
    let mut tree = Tree::new(root.clone());
    match policy.distribution(root) {
        Ok(d) => tree.nodes[0].dist = Some(d),
        Err(Error::NoFeasibleAction) => return Err(Error::Stuck),
        Err(e) => return Err(e),
    }
    let mut max_depth = 0;
    for _ in 0..config.iterations {
        max_depth = max_depth.max(tree.iterate(model, policy, config, &mut rng)?);
    }
    let best = tree.best_action().ok_or(Error::Stuck)?.clone();
    let stats = SearchStats {
        iterations: config.iterations,
        nodes: tree.nodes.len(),
        root_visits: tree.root().visits,
        chosen_visits: best.visits,
        chosen_mean_value: if best.visits == 0 { 0.0 } else { best.value / best.visits as f64 },
        max_depth,
    };
    Ok((best.action, stats, tree))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EpisodeStatus {
    #[serde(rename = "success")]
    Success,
    #[serde(rename = "failure:collision")]
    Collision,
    #[serde(rename = "failure:out-of-bounds")]
    OutOfBounds,
    #[serde(rename = "failure:stuck")]
    Stuck,
    #[serde(rename = "failure:timeout")]
    Timeout,
}

impl EpisodeStatus {
    pub const ALL: [EpisodeStatus; 5] = [
        EpisodeStatus::Success,
        EpisodeStatus::Collision,
        EpisodeStatus::OutOfBounds,
        EpisodeStatus::Stuck,
        EpisodeStatus::Timeout,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EpisodeStatus::Success => "success",
            EpisodeStatus::Collision => "failure:collision",
            EpisodeStatus::OutOfBounds => "failure:out-of-bounds",
            EpisodeStatus::Stuck => "failure:stuck",
            EpisodeStatus::Timeout => "failure:timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStep {
    pub action: ActionSpec,
    pub scene: Scene,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub status: EpisodeStatus,
    pub initial: Scene,
    pub initial_score: f64,
    pub steps: Vec<EpisodeStep>,
    pub final_score: f64,
    pub length: usize,
}

impl EpisodeResult {
    /// Scores from the initial scene through every step.
    pub fn scores(&self) -> Vec<f64> {
        std::iter::once(self.initial_score).chain(self.steps.iter().map(|s| s.score)).collect()
    }

    pub fn final_scene(&self) -> &Scene {
        self.steps.last().map_or(&self.initial, |s| &s.scene)
    }
}

/// Episode loop shared by every planner: `choose` picks the action for the
/// current scene and step, returning [`Error::Stuck`] when nothing is feasible.
pub fn run_episode<M: TidinessModel>(
    initial: &Scene,
    model: &M,
    threshold: f64,
    max_steps: usize,
    mut choose: impl FnMut(&Scene, usize) -> Result<ActionSpec>,
) -> Result<EpisodeResult> {
    let initial_score = model.score(initial)?;
    let mut result = EpisodeResult {
        status: EpisodeStatus::Timeout,
        initial: initial.clone(),
        initial_score,
        steps: Vec::new(),
        final_score: initial_score,
        length: 0,
    };
    if initial_score >= threshold {
        result.status = EpisodeStatus::Success;
        return Ok(result);
    }
    let mut scene = initial.clone();
    for step in 0..max_steps {
        let action = match choose(&scene, step) {
            Ok(a) => a,
            Err(Error::Stuck) | Err(Error::NoFeasibleAction) => {
                result.status = EpisodeStatus::Stuck;
                return Ok(result);
            }
            Err(e) => return Err(e),
        };
        scene = apply_action(&scene, &action)?;
        let score = model.score(&scene)?;
        result.steps.push(EpisodeStep {
            action,
            scene: scene.clone(),
            score,
        });
        result.length += 1;
        result.final_score = score;
        if !check_overlap(&scene).is_empty() {
            result.status = EpisodeStatus::Collision;
            return Ok(result);
        }
        if !in_bounds(&scene).is_empty() {
            result.status = EpisodeStatus::OutOfBounds;
            return Ok(result);
        }
        if score >= threshold {
            result.status = EpisodeStatus::Success;
            return Ok(result);
        }
    }
    Ok(result)
}

/// Search, act, repeat until tidy or out of steps. The tree is rebuilt from
/// scratch at every step.
pub fn plan_episode<M: TidinessModel, P: ActionPolicy>(
    initial: &Scene,
    model: &M,
    policy: &P,
    config: &SearchConfig,
    max_steps: usize,
    rng_seed: u64,
) -> Result<EpisodeResult> {
    config.validate()?;
    if initial.objects.is_empty() {
        return Err(Error::NoObjects);
    }
    run_episode(initial, model, config.threshold, max_steps, |scene, step| {
        search(scene, model, policy, config, seed::derive(rng_seed, &[step as u64])).map(|r| r.0)
    })
}
