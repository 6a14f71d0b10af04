//! Subcommand definitions and their implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};

use tidyplan::dataset::{build_dataset, DiscRecord, RlRecord, RlTransition, Split, SplitReport};
use tidyplan::discriminator::{default_thresholds, mean_score_by_step, threshold_sweep, train_discriminator, DiscConfig, Discriminator, TidinessModel, DEFAULT_THRESHOLD};
use tidyplan::eval::{run_benchmark, BenchmarkConfig, Planner};
use tidyplan::mcts::{plan_episode, SearchConfig, DEFAULT_MAX_STEPS};
use tidyplan::policy::{train_iql, IqlConfig, TidyingPolicy, UniformPolicy};
use tidyplan::templates::{builtin_library, parse_template_file, Template};
use tidyplan::{EnvironmentTag, Scene};

use crate::io::{read_json, read_jsonl, read_text, write_jsonl, write_text};

pub const DISC_RECORDS: &str = "disc.jsonl";
pub const RL_RECORDS: &str = "rl.jsonl";
pub const REPORT: &str = "report.json";

#[derive(Debug, Parser)]
#[command(name = "tidyplan", version, about = "Tidiness-guided tabletop rearrangement planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate labeled tidying trajectories and offline RL transitions.
    GenData(GenDataArgs),
    /// Print per-environment dataset counts.
    Stats(StatsArgs),
    /// Train the tidiness discriminator.
    TrainDisc(TrainDiscArgs),
    /// Train Q, value and policy networks with implicit Q-learning.
    TrainPolicy(TrainPolicyArgs),
    /// Plan a tidying episode for one scene.
    Plan(PlanArgs),
    /// Run the benchmark over held-out templates.
    Eval(EvalArgs),
    /// Serve scenes and record manual editing sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trajectories per template.
    #[arg(long, default_value_t = 120)]
    pub trajectories: usize,
    /// Scenes per trajectory.
    #[arg(long, default_value_t = 5)]
    pub len: usize,
    /// Template file replacing the built-in library.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Directory written by gen-data.
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainDiscArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainPolicyArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    pub tau: f64,
    #[arg(long, default_value_t = 3.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 3e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct SearchArgs {
    /// Search iterations per step.
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    /// Exploration constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Weight of the rollout outcome in backups.
    #[arg(long, default_value_t = 0.3)]
    pub lambda: f64,
    /// Tidiness threshold.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub xi: f64,
    /// Children per node.
    #[arg(long, default_value_t = 8)]
    pub width: usize,
    #[arg(long, default_value_t = 5)]
    pub horizon: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
}

impl SearchArgs {
    pub fn config(&self) -> SearchConfig {
        SearchConfig {
            iterations: self.k,
            exploration: self.c,
            mixing: self.lambda,
            rollout_horizon: self.horizon,
            threshold: self.xi,
            width: self.width,
        }
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub disc: PathBuf,
    #[arg(long)]
    pub policy: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub disc: PathBuf,
    /// Required by the tsmcts planner.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Comma-separated environments, or "all".
    #[arg(long, default_value = "all")]
    pub envs: String,
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    #[arg(long, default_value = "tsmcts", value_parser = ["tsmcts", "random", "greedy"])]
    pub planner: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed gen-data used, which fixes the held-out templates.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Output directory for `<planner>.json` and `<planner>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory of scene JSON files; scene ids are file stems. Defaults to
    /// one generated scene per environment.
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    /// Session store; the TIDYPLAN_STORE environment variable takes precedence.
    #[arg(long, default_value = "sessions.ndjson")]
    pub store: PathBuf,
}

/// Cross-flag checks clap cannot express, reported as usage errors.
pub fn check_usage(cli: &Cli) -> std::result::Result<(), clap::Error> {
    if let Command::Eval(a) = &cli.command {
        if a.planner == "tsmcts" && a.policy.is_none() {
            return Err(Cli::command().error(clap::error::ErrorKind::MissingRequiredArgument, "the tsmcts planner requires --policy <POLICY>"));
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(&a),
        Command::Stats(a) => stats(&a).map(|t| print!("{t}")),
        Command::TrainDisc(a) => train_disc(&a),
        Command::TrainPolicy(a) => train_policy(&a),
        Command::Plan(a) => plan(&a),
        Command::Eval(a) => eval(&a),
        Command::Serve(a) => crate::service::serve(&a),
    }
}

fn load_library(path: Option<&Path>) -> Result<Vec<Template>> {
    match path {
        Some(p) => {
            let mut lib = parse_template_file(&read_text(p)?)?;
            lib.sort_by(|a, b| a.id.cmp(&b.id));
            Ok(lib)
        }
        None => Ok(builtin_library()),
    }
}

pub fn gen_data(a: &GenDataArgs) -> Result<()> {
    let lib = load_library(a.templates.as_deref())?;
    let ds = build_dataset(&lib, a.trajectories, a.len, a.seed)?;
    fs::create_dir_all(&a.out)?;
    write_jsonl(&a.out.join(DISC_RECORDS), &ds.disc)?;
    write_jsonl(&a.out.join(RL_RECORDS), &ds.rl)?;
    write_text(&a.out.join(REPORT), &(serde_json::to_string_pretty(&ds.report)? + "\n"))?;
    print!("{}", stats_table(&ds.report));
    Ok(())
}

pub fn stats_table(r: &SplitReport) -> String {
    let mut out = format!("{:<10} {:>8} {:>10} {:>13} {:>8}\n", "env", "objects", "templates", "trajectories", "data");
    for e in &r.environments {
        let _ = writeln!(out, "{:<10} {:>8} {:>10} {:>13} {:>8}", e.environment.name(), e.objects, e.templates, e.trajectories, e.data);
    }
    let templates: usize = r.environments.iter().map(|e| e.templates).sum();
    let _ = writeln!(out, "{:<10} {:>8} {:>10} {:>13} {:>8}", "total", r.total_objects, templates, r.total_trajectories, r.total_data);
    let _ = writeln!(out, "split: {} train / {} validation templates", r.train_templates.len(), r.validation_templates.len());
    out
}

pub fn stats(a: &StatsArgs) -> Result<String> {
    let report: SplitReport = read_json(&a.data.join(REPORT))?;
    Ok(stats_table(&report))
}

pub fn train_disc(a: &TrainDiscArgs) -> Result<()> {
    let records: Vec<DiscRecord> = read_jsonl(&a.data.join(DISC_RECORDS))?;
    let pick = |s: Split| -> Vec<(&Scene, f64)> { records.iter().filter(|r| r.split == s).map(|r| (&r.scene, r.label)).collect() };
    let (train, val) = (pick(Split::Train), pick(Split::Validation));
    if train.is_empty() {
        bail!("no training records in {}", a.data.display());
    }
    let cfg = DiscConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        lr: a.lr,
        seed: a.seed,
    };
    let (disc, history) = train_discriminator(&train, &val, &cfg)?;
    fs::create_dir_all(&a.out)?;
    write_text(&a.out.join("disc.json"), &disc.to_json())?;

    let mut loss = String::from("epoch,train_mse,validation_mse\n");
    for h in &history {
        let _ = writeln!(loss, "{},{},{}", h.epoch, h.train_mse, h.validation_mse.map(|v| v.to_string()).unwrap_or_default());
    }
    write_text(&a.out.join("disc_loss.csv"), &loss)?;

    if val.is_empty() {
        return Ok(());
    }
    let val_records: Vec<&DiscRecord> = records.iter().filter(|r| r.split == Split::Validation).collect();
    let scenes: Vec<Scene> = val_records.iter().map(|r| r.scene.clone()).collect();
    let scores = disc.score_many(&scenes)?;
    let labels: Vec<f64> = val_records.iter().map(|r| r.label).collect();
    let steps: Vec<usize> = val_records.iter().map(|r| r.step).collect();
    let sweep = threshold_sweep(&scores, &labels, &default_thresholds())?;
    let mut csv = String::from("threshold,precision,recall,tp,fp,fn\n");
    for r in &sweep {
        let _ = writeln!(csv, "{:.2},{},{},{},{},{}", r.threshold, r.precision.map(|p| p.to_string()).unwrap_or_default(), r.recall, r.true_positives, r.false_positives, r.false_negatives);
    }
    write_text(&a.out.join("disc_sweep.csv"), &csv)?;
    let by_step = mean_score_by_step(&scores, &steps);
    let mut summary = String::from("step,mean_score\n");
    for (i, m) in by_step.iter().enumerate() {
        let _ = writeln!(summary, "{},{}", i + 1, m);
    }
    write_text(&a.out.join("disc_steps.csv"), &summary)?;
    if let Some(row) = sweep.iter().find(|r| (r.threshold - DEFAULT_THRESHOLD).abs() < 1e-9) {
        println!("validation at {DEFAULT_THRESHOLD}: precision {:?} recall {}", row.precision, row.recall);
    }
    println!("validation mean score by step: {by_step:?}");
    Ok(())
}

pub fn train_policy(a: &TrainPolicyArgs) -> Result<()> {
    let records: Vec<RlRecord> = read_jsonl(&a.data.join(RL_RECORDS))?;
    let transitions: Vec<RlTransition> = records
        .into_iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| RlTransition {
            state: r.state,
            action: r.action,
            next_state: r.next_state,
            reward: r.reward,
            terminal: r.terminal,
        })
        .collect();
    let cfg = IqlConfig {
        tau: a.tau,
        beta: a.beta,
        gamma: a.gamma,
        lr: a.lr,
        steps: a.steps,
        batch_size: a.batch_size,
        seed: a.seed,
        ..IqlConfig::default()
    };
    let (models, history) = train_iql(&transitions, &cfg)?;
    fs::create_dir_all(&a.out)?;
    write_text(&a.out.join("q.json"), &models.q.to_json())?;
    write_text(&a.out.join("v.json"), &models.v.to_json())?;
    write_text(&a.out.join("policy.json"), &models.policy.to_json())?;
    let mut csv = String::from("step,value_loss,q_loss,policy_loss\n");
    for h in &history {
        let _ = writeln!(csv, "{},{},{},{}", h.step, h.value, h.q, h.policy.map(|p| p.to_string()).unwrap_or_default());
    }
    write_text(&a.out.join("policy_loss.csv"), &csv)?;
    Ok(())
}

pub fn load_disc(path: &Path) -> Result<Discriminator> {
    Discriminator::from_json(&read_text(path)?).with_context(|| format!("loading discriminator {}", path.display()))
}

pub fn load_policy(path: &Path) -> Result<TidyingPolicy> {
    TidyingPolicy::from_json(&read_text(path)?).with_context(|| format!("loading policy {}", path.display()))
}

pub fn plan(a: &PlanArgs) -> Result<()> {
    let scene = Scene::from_json(&read_text(&a.scene)?)?;
    let disc = load_disc(&a.disc)?;
    let policy = load_policy(&a.policy)?;
    let result = plan_episode(&scene, &disc, &policy, &a.search.config(), a.search.max_steps, a.seed)?;
    let text = serde_json::to_string_pretty(&result)? + "\n";
    match &a.out {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn parse_envs(s: &str) -> Result<Vec<EnvironmentTag>> {
    if s == "all" {
        return Ok(EnvironmentTag::ALL.to_vec());
    }
    s.split(',').map(|e| e.trim().parse::<EnvironmentTag>().map_err(Into::into)).collect()
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let planner: Planner = a.planner.parse()?;
    let envs = parse_envs(&a.envs)?;
    let disc = load_disc(&a.disc)?;
    let cfg = BenchmarkConfig {
        search: a.search.config(),
        max_steps: a.search.max_steps,
        split_seed: a.split_seed,
        ..BenchmarkConfig::default()
    };
    let lib = builtin_library();
    let report = match (&a.policy, planner) {
        (Some(p), Planner::Tsmcts) => {
            let policy = load_policy(p)?;
            run_benchmark(planner, &disc, &policy, &lib, &envs, a.episodes, &cfg, a.seed)?
        }
        (None, Planner::Tsmcts) => bail!("the tsmcts planner requires --policy"),
        // the baselines never consult a policy
        _ => run_benchmark(planner, &disc, &UniformPolicy, &lib, &envs, a.episodes, &cfg, a.seed)?,
    };
    fs::create_dir_all(&a.out)?;
    write_text(&a.out.join(format!("{}.json", planner.name())), &(report.to_json() + "\n"))?;
    let csv = report.to_csv();
    write_text(&a.out.join(format!("{}.csv", planner.name())), &csv)?;
    print!("{csv}");
    Ok(())
}
