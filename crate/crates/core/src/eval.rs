//! Benchmark harness: held-out messy scenes, planners, and aggregate reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::dataset::{generate_trajectory, split_templates, Split, DEFAULT_TRAJECTORY_LEN};
use crate::discriminator::TidinessModel;
use crate::error::{Error, Result};
use crate::mcts::{plan_episode, run_episode, EpisodeResult, EpisodeStatus, SearchConfig, DEFAULT_MAX_STEPS};
use crate::policy::{ActionPolicy, UniformPolicy};
use crate::seed;
use crate::templates::{sample_tidied_scene, AugmentSpec, Template};
use crate::world::{apply_action, ActionSpec, EnvironmentTag, Scene};

/// Attempts at drawing a realizable mixed template before giving up.
const MIXED_ATTEMPTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planner {
    Tsmcts,
    Random,
    Greedy,
}

impl Planner {
    pub const ALL: [Planner; 3] = [Planner::Tsmcts, Planner::Random, Planner::Greedy];

    pub fn name(self) -> &'static str {
        match self {
            Planner::Tsmcts => "tsmcts",
            Planner::Random => "random",
            Planner::Greedy => "greedy",
        }
    }
}

impl std::str::FromStr for Planner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Planner> {
        Planner::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown planner {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub search: SearchConfig,
    pub max_steps: usize,
    /// Scatter moves applied to a tidy scene to make the initial scene.
    pub scatter_steps: usize,
    /// Seed of the template split the models were trained with.
    pub split_seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            search: SearchConfig::default(),
            max_steps: DEFAULT_MAX_STEPS,
            scatter_steps: DEFAULT_TRAJECTORY_LEN - 1,
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRow {
    pub environment: String,
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_tidiness: f64,
    pub mean_length: f64,
    /// Episode count per status name, successes included.
    pub outcomes: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub environment: String,
    pub template_id: String,
    pub seed: u64,
    pub status: EpisodeStatus,
    pub initial_score: f64,
    pub final_score: f64,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub planner: Planner,
    pub seed: u64,
    pub episodes_per_environment: usize,
    pub config: BenchmarkConfig,
    /// One row per requested environment, then "Average".
    pub rows: Vec<EnvironmentRow>,
    pub episodes: Vec<EpisodeSummary>,
}

impl BenchmarkReport {
    pub fn row(&self, environment: &str) -> Option<&EnvironmentRow> {
        self.rows.iter().find(|r| r.environment == environment)
    }

    pub fn average(&self) -> &EnvironmentRow {
        self.rows.last().expect("report always has an average row")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Environment, success rate, tidiness, length, then one column per status.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("environment,success_rate,mean_tidiness,mean_length");
        for s in EpisodeStatus::ALL {
            out.push(',');
            out.push_str(s.name());
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{:.4},{:.4},{:.4}", r.environment, r.success_rate, r.mean_tidiness, r.mean_length);
            for s in EpisodeStatus::ALL {
                let _ = write!(out, ",{}", r.outcomes.get(s.name()).copied().unwrap_or(0));
            }
            out.push('\n');
        }
        out
    }
}

/// Held-out templates of each environment under the split for `split_seed`.
pub fn held_out_templates(library: &[Template], split_seed: u64) -> Result<BTreeMap<EnvironmentTag, Vec<Template>>> {
    let split = split_templates(library, split_seed)?;
    let mut out: BTreeMap<EnvironmentTag, Vec<Template>> = BTreeMap::new();
    for t in library {
        if split.get(&t.id) == Some(&Split::Validation) {
            out.entry(t.environment_tag).or_default().push(t.clone());
        }
    }
    Ok(out)
}

/// Rewrites a template so each slot's category comes from a uniformly drawn
/// base environment, keeping the support role of the slot.
pub fn mix_template<R: Rng>(base: &Template, rng: &mut R) -> Template {
    let mut t = base.clone();
    t.id = format!("mixed:{}", base.id);
    t.environment_tag = EnvironmentTag::Mixed;
    for slot in &mut t.slots {
        let tag = *EnvironmentTag::BASE.choose(rng).expect("base tags");
        if slot.category.environments().contains(&tag) {
            continue;
        }
        let support = slot.category.is_support();
        let pool: Vec<Category> = Category::ALL
            .into_iter()
            .filter(|c| c.environments().contains(&tag) && c.is_support() == support)
            .collect();
        if let Some(c) = pool.choose(rng) {
            slot.category = *c;
            slot.alternates.clear();
        }
    }
    t
}

/// A messy initial scene for one episode and the template it came from.
pub fn episode_scene(
    held_out: &BTreeMap<EnvironmentTag, Vec<Template>>,
    env: EnvironmentTag,
    scatter_steps: usize,
    episode_seed: u64,
) -> Result<(Scene, String)> {
    let mut rng = seed::rng(seed::derive(episode_seed, &[0]));
    let scatter_seed = seed::derive(episode_seed, &[1]);
    if env == EnvironmentTag::Mixed {
        let pool: Vec<&Template> = held_out.values().flatten().collect();
        if pool.is_empty() {
            return Err(Error::MissingEnvironment(env.name().into()));
        }
        for _ in 0..MIXED_ATTEMPTS {
            let t = mix_template(pool.choose(&mut rng).expect("non-empty"), &mut rng);
            if t.validate().is_err() || sample_tidied_scene(&t, seed::derive(scatter_seed, &[0]), &AugmentSpec::default()).is_err() {
                continue;
            }
            let traj = generate_trajectory(&t, scatter_steps + 1, scatter_seed)?;
            return Ok((traj.steps[0].scene.clone(), t.id));
        }
        return Err(Error::TemplateInfeasible("no realizable mixed template".into()));
    }
    let pool = held_out.get(&env).filter(|p| !p.is_empty()).ok_or_else(|| Error::MissingEnvironment(env.name().into()))?;
    let t = pool.choose(&mut rng).expect("non-empty");
    let traj = generate_trajectory(t, scatter_steps + 1, scatter_seed)?;
    Ok((traj.steps[0].scene.clone(), t.id.clone()))
}

/// Uniform draw among feasible actions.
pub fn random_action(scene: &Scene, rng_seed: u64) -> Result<ActionSpec> {
    let dist = UniformPolicy.distribution(scene)?;
    Ok(dist.sample(&mut seed::rng(rng_seed)))
}

/// Feasible action whose successor scores highest; ties go to the smallest action.
pub fn greedy_action<M: TidinessModel>(scene: &Scene, model: &M) -> Result<ActionSpec> {
    let actions = UniformPolicy.distribution(scene)?.feasible_actions();
    let next: Vec<Scene> = actions.iter().map(|a| apply_action(scene, a)).collect::<Result<_>>()?;
    let scores = model.score_many(&next)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(actions[best])
}

pub fn run_planner<M: TidinessModel, P: ActionPolicy>(
    planner: Planner,
    initial: &Scene,
    model: &M,
    policy: &P,
    config: &BenchmarkConfig,
    rng_seed: u64,
) -> Result<EpisodeResult> {
    let threshold = config.search.threshold;
    match planner {
        Planner::Tsmcts => plan_episode(initial, model, policy, &config.search, config.max_steps, rng_seed),
        Planner::Random => run_episode(initial, model, threshold, config.max_steps, |s, step| {
            random_action(s, seed::derive(rng_seed, &[step as u64]))
        }),
        Planner::Greedy => run_episode(initial, model, threshold, config.max_steps, |s, _| greedy_action(s, model)),
    }
}

fn summarize(environment: &str, eps: &[&EpisodeSummary]) -> EnvironmentRow {
    let n = eps.len() as f64;
    let mut outcomes: BTreeMap<String, usize> = EpisodeStatus::ALL.iter().map(|s| (s.name().to_string(), 0)).collect();
    for e in eps {
        *outcomes.get_mut(e.status.name()).expect("all statuses present") += 1;
    }
    EnvironmentRow {
        environment: environment.to_string(),
        episodes: eps.len(),
        success_rate: outcomes[EpisodeStatus::Success.name()] as f64 / n,
        mean_tidiness: eps.iter().map(|e| e.final_score).sum::<f64>() / n,
        mean_length: eps.iter().map(|e| e.length as f64).sum::<f64>() / n,
        outcomes,
    }
}

/// Runs `episodes` seeded episodes per environment. Scenes depend only on the
/// seed, so planners compared under one seed see identical initial scenes.
#[allow(clippy::too_many_arguments)]
pub fn run_benchmark<M: TidinessModel, P: ActionPolicy>(
    planner: Planner,
    model: &M,
    policy: &P,
    library: &[Template],
    environments: &[EnvironmentTag],
    episodes: usize,
    config: &BenchmarkConfig,
    seed: u64,
) -> Result<BenchmarkReport> {
    if episodes == 0 || environments.is_empty() {
        return Err(Error::EmptyBenchmark);
    }
    config.search.validate()?;
    let held_out = held_out_templates(library, config.split_seed)?;
    for env in environments {
        if *env != EnvironmentTag::Mixed && !held_out.contains_key(env) {
            return Err(Error::MissingEnvironment(env.name().into()));
        }
    }
    let mut summaries = Vec::with_capacity(episodes * environments.len());
    for env in environments {
        let env_idx = EnvironmentTag::ALL.iter().position(|e| e == env).expect("known tag") as u64;
        for j in 0..episodes {
            let episode_seed = seed::derive(seed, &[env_idx, j as u64]);
            let (scene, template_id) = episode_scene(&held_out, *env, config.scatter_steps, episode_seed)?;
            let r = run_planner(planner, &scene, model, policy, config, seed::derive(episode_seed, &[2]))?;
            summaries.push(EpisodeSummary {
                environment: env.name().to_string(),
                template_id,
                seed: episode_seed,
                status: r.status,
                initial_score: r.initial_score,
                final_score: r.final_score,
                length: r.length,
            });
        }
    }
    let mut rows: Vec<EnvironmentRow> = environments
        .iter()
        .map(|env| {
            let eps: Vec<&EpisodeSummary> = summaries.iter().filter(|e| e.environment == env.name()).collect();
            summarize(env.name(), &eps)
        })
        .collect();
    let all: Vec<&EpisodeSummary> = summaries.iter().collect();
    rows.push(summarize("Average", &all));
    Ok(BenchmarkReport {
        planner,
        seed,
        episodes_per_environment: episodes,
        config: *config,
        rows,
        episodes: summaries,
    })
}
