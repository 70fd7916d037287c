//! The binary end to end on a tiny configuration.

use std::path::Path;
use std::process::{Command, Output};

use tslam::formats::{read_checkpoint, POLICY_MAGIC};
use tslam::pipeline::read_eval_csv;

const TINY: &str = r#"
seed = 3
corpus.count = 10
env.horizon = 20
train.total_steps = 40
ppo.n_envs = 2
ppo.minibatch = 16
recon.epochs = 1
recon.points = 128
recon.channels = [4, 4, 4, 4]
recon.hidden = 16
recon.hidden_layers = 1
eval.seeds = 1
eval.metric_samples = 300
eval.workers = 2
"#;

fn tslam(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tslam"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn full_workflow_and_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    std::fs::write(dir.join("tiny.toml"), TINY).unwrap();
    let c = ["--config", "tiny.toml", "--out", "run"];
    let with = |extra: &[&str]| -> Vec<String> { c.iter().chain(extra).map(|s| s.to_string()).collect() };
    let run = |extra: &[&str]| {
        let a = with(extra);
        tslam(dir, &a.iter().map(String::as_str).collect::<Vec<_>>())
    };

    // nothing trained yet
    assert_eq!(run(&["eval", "--policy", "random"]).status.code(), Some(3));

    assert!(ok(&run(&["make-corpus"])).contains("10 shapes"));
    ok(&run(&["train-explore"]));
    ok(&run(&["train-explore", "--policy", "-coverage"]));
    ok(&run(&["train-recon"]));
    let ck = read_checkpoint(&dir.join("run/policy-tslam.tpol"), POLICY_MAGIC).unwrap();
    assert_eq!(ck.digest.len(), 16);
    assert!(ck.meta.contains_key("corpus_digest"));

    let out = ok(&run(&["eval", "--policy", "random", "--policy", "heuristic", "--policy", "tslam", "--policy", "-coverage"]));
    assert!(out.contains("heuristic"), "{out}");
    let rows = read_eval_csv(&dir.join("run/eval-tslam-4p.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].config_digest, ck.digest);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.iou_grid) && r.poses == 4));
    assert_eq!(read_eval_csv(&dir.join("run/eval-no-coverage-4p.csv")).unwrap()[0].policy_tag, "-coverage");

    // determinism: a second evaluation writes the same CSV
    let first = std::fs::read(dir.join("run/eval-tslam-4p.csv")).unwrap();
    ok(&run(&["eval", "--policy", "tslam"]));
    assert_eq!(std::fs::read(dir.join("run/eval-tslam-4p.csv")).unwrap(), first);

    ok(&run(&["eval", "--policy", "tslam", "--poses", "8", "--grid-only"]));
    let rows8 = read_eval_csv(&dir.join("run/eval-tslam-8p.csv")).unwrap();
    assert!(rows8.iter().all(|r| r.poses == 8 && r.iou_grid == r.iou_recon));

    let shape = &rows[0].shape_id;
    let exported = ok(&run(&["export-mesh", "--shape", shape, "--policy", "heuristic"]));
    assert_eq!(exported.lines().count(), 2);
    assert!(exported.contains(&ck.digest));

    let report = ok(&run(&["report"]));
    assert!(report.contains("tslam") && report.contains("random"));

    // a changed training key no longer matches the checkpoints
    let changed = run(&["--set", "ppo.lr=0.01", "eval", "--policy", "tslam"]);
    assert_eq!(changed.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&changed.stderr).contains("digest"));
    ok(&run(&["--set", "ppo.lr=0.01", "--force-digest", "eval", "--policy", "tslam"]));
    // evaluation keys are outside the digest
    ok(&run(&["--set", "eval.metric_samples=200", "eval", "--policy", "tslam", "--grid-only"]));

    assert_eq!(run(&["--set", "no.such.key=1", "report"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--poses", "5"]).status.code(), Some(1));
    assert_eq!(run(&["eval", "--policy", "sideways"]).status.code(), Some(1));
    assert_eq!(run(&["export-mesh", "--shape", "nope", "--policy", "random"]).status.code(), Some(1));
    assert_eq!(tslam(dir, &["--config", "absent.toml", "report"]).status.code(), Some(2));
}
