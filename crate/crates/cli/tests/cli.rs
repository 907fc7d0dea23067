use std::path::Path;
use std::process::{Command, Output};

fn hdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdm")).args(args).output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TINY: &str = "\
agent = \"hrl\"
seeds = [3]
epochs = 2
dialogues_per_epoch = 8
probe_dialogues = 6
eval_dialogues = 6
warm_start_dialogues = 4
corpus_size = 20
n_flights = 60
n_hotels = 30
";

#[test]
fn generate_train_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let goals = dir.path().join("goals.json");
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();

    ok(hdm(&["gen-kb", "--seed", "4", "--flights", "60", "--hotels", "30", "--out", p(&kb)]));
    let stdout = ok(hdm(&["gen-goals", "--kb", p(&kb), "--n", "12", "--mix", "0,1,0", "--out", p(&goals)]));
    assert!(stdout.contains("12 goals"));
    let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&goals).unwrap()).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 12);

    let runs: Vec<_> = (0..2).map(|i| dir.path().join(format!("run{i}"))).collect();
    for run in &runs {
        ok(hdm(&["train", "--config", p(&cfg), "--kb", p(&kb), "--out-dir", p(run)]));
    }
    let csv = |run: &Path| std::fs::read(run.join("metrics_seed3.csv")).unwrap();
    assert_eq!(csv(&runs[0]), csv(&runs[1]));
    let text = String::from_utf8(csv(&runs[0])).unwrap();
    assert!(text.starts_with("epoch,success,turns,reward\n"));
    assert_eq!(text.lines().count(), 3);
    let episodes = std::fs::read_to_string(runs[0].join("episodes_seed3.jsonl")).unwrap();
    assert_eq!(episodes.lines().count(), 6);
    for line in episodes.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["turns"].as_array().unwrap().len() >= 2);
    }

    let ck = runs[0].join("checkpoint_seed3.json");
    let out = ok(hdm(&["eval", "--config", p(&cfg), "--kb", p(&kb), "--checkpoint", p(&ck), "--n", "5"]));
    let metrics: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    let rate = metrics["success_rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));

    let out = ok(hdm(&["eval", "--config", p(&cfg), "--agent", "rule", "--n", "4"]));
    assert!(out.contains("avg_turns"));
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "epochs = 0\n").unwrap();
    let out = hdm(&["train", "--config", p(&bad), "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epochs"));

    std::fs::write(&bad, "learning_rate = 0.1\n").unwrap();
    let out = hdm(&["eval", "--config", p(&bad), "--agent", "rule"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));

    let out = hdm(&["eval", "--agent", "rule", "--error-prob", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = hdm(&["eval", "--agent", "wizard"]);
    assert_eq!(out.status.code(), Some(2));
    let out = hdm(&["eval", "--agent", "hrl"]);
    assert_eq!(out.status.code(), Some(2), "learning agent without a checkpoint");
}
