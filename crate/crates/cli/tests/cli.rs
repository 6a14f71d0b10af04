use std::path::Path;
use std::process::{Command, Output};

fn tidyplan(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tidyplan")).args(args).current_dir(cwd).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let help = tidyplan(&["--help"], d);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for sub in ["gen-data", "train-disc", "train-policy", "plan", "eval", "stats", "serve"] {
        assert!(text.contains(sub), "usage lists {sub}");
    }
    assert_eq!(tidyplan(&["bogus"], d).status.code(), Some(2));
    assert_eq!(tidyplan(&["gen-data", "--out", "x", "--bogus"], d).status.code(), Some(2));
    assert_eq!(tidyplan(&[], d).status.code(), Some(2));

    let o = tidyplan(&["gen-data"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--out"));
    let o = tidyplan(&["plan", "--scene", "s.json", "--disc", "d.json"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--policy"));
    let o = tidyplan(&["eval", "--disc", "d.json", "--out", "r"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--policy"));
    let o = tidyplan(&["eval", "--disc", "d.json", "--out", "r", "--planner", "mcts"], d);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = tidyplan(&["stats", "--data", "missing"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing"));
}

#[test]
fn pipeline_routes_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let o = tidyplan(args, d);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        String::from_utf8_lossy(&o.stdout).into_owned()
    };
    let table = ok(&["gen-data", "--out", "data", "--trajectories", "4", "--seed", "3"]);
    assert!(table.contains("coffee") && table.contains("total"));
    assert_eq!(ok(&["stats", "--data", "data"]), table);
    ok(&["train-disc", "--data", "data", "--out", "m", "--epochs", "2"]);
    ok(&["train-policy", "--data", "data", "--out", "m", "--steps", "3"]);
    for f in ["disc.json", "disc_loss.csv", "disc_sweep.csv", "q.json", "v.json", "policy.json", "policy_loss.csv"] {
        assert!(d.join("m").join(f).exists(), "{f}");
    }
    let sweep = std::fs::read_to_string(d.join("m/disc_sweep.csv")).unwrap();
    assert!(sweep.starts_with("threshold,precision,recall"));

    let first = std::fs::read_to_string(d.join("data/disc.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    for key in ["scene", "label", "split"] {
        assert!(rec.get(key).is_some());
    }
    std::fs::write(d.join("s.json"), rec["scene"].to_string()).unwrap();
    let ep = ok(&["plan", "--scene", "s.json", "--disc", "m/disc.json", "--policy", "m/policy.json", "--seed", "0", "--k", "10"]);
    let ep: serde_json::Value = serde_json::from_str(&ep).unwrap();
    assert!(ep["status"].is_string());
    assert!(ep["steps"].as_array().unwrap().iter().all(|s| s.get("scene").is_some() && s.get("score").is_some()));

    let csv = ok(&["eval", "--disc", "m/disc.json", "--planner", "random", "--episodes", "1", "--envs", "office,mixed", "--out", "r"]);
    assert_eq!(csv.lines().count(), 4);
    assert!(d.join("r/random.json").exists() && d.join("r/random.csv").exists());
    let o = tidyplan(&["eval", "--disc", "m/disc.json", "--planner", "random", "--episodes", "0", "--out", "r"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty benchmark"));
}
