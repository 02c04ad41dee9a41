use std::path::Path;
use std::process::{Command, Output};

fn kilnopt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kilnopt"))
        .current_dir(dir)
        .env_remove("KILNOPT_CONFIG")
        .env_remove("KILNOPT_SEED")
        .env_remove("KILNOPT_OUT")
        .env_remove("KILNOPT_INPUT")
        .env("KILNOPT_THREADS", "1")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", o.status.code(), String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

const SMALL: &str = r#"
seed = 5
out = "out"

[generate]
minutes = 4000

[train]
cv_folds = 3
spec = { family = "gbt", n_rounds = 60, max_depth = 4 }

[controller]
trials = 8
iterations = 25
population = 20
spec = { family = "gbt", n_rounds = 60, max_depth = 4 }
"#;

#[test]
fn pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.toml"), SMALL).unwrap();
    ok(&kilnopt(d, &["--config", "run.toml", "generate"]));
    ok(&kilnopt(d, &["--config", "run.toml", "--input", "out/plant.csv", "preprocess"]));
    ok(&kilnopt(d, &["--config", "run.toml", "--input", "out/clean.csv", "train"]));
    ok(&kilnopt(d, &["--config", "run.toml", "--input", "out/plant.csv", "optimize", "--scenario", "normal"]));
    ok(&kilnopt(d, &["--config", "run.toml", "--input", "out/plant.csv", "econ"]));
    let report = kilnopt(d, &["--config", "run.toml", "report"]);
    ok(&report);

    let out = d.join("out");
    for f in ["plant.csv", "clean.csv", "model.txt", "train_metrics.txt", "trials_normal.csv", "controller_summary.txt", "econ.csv", "report.md"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let econ = std::fs::read_to_string(out.join("econ.csv")).unwrap();
    assert!(econ.starts_with("quantity,unit,value"));
    let trials = std::fs::read_to_string(out.join("trials_normal.csv")).unwrap();
    assert_eq!(trials.lines().count(), 9);
    let md = std::fs::read_to_string(out.join("report.md")).unwrap();
    assert!(!md.contains("| changed |") && !md.contains("| missing |"));

    // tampering is caught
    std::fs::write(out.join("econ.txt"), "edited").unwrap();
    let again = kilnopt(d, &["--config", "run.toml", "report"]);
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a", "b"] {
        ok(&kilnopt(d, &["--seed", "1", "--out", out, "generate", "--minutes", "2000"]));
    }
    let a = std::fs::read(d.join("a/plant.csv")).unwrap();
    let b = std::fs::read(d.join("b/plant.csv")).unwrap();
    assert_eq!(a, b);
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("a/manifest-generate.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 1);
    assert_eq!(m["outputs"][0]["path"], "plant.csv");

    ok(&kilnopt(d, &["--seed", "2", "--out", "c", "generate", "--minutes", "2000"]));
    assert_ne!(a, std::fs::read(d.join("c/plant.csv")).unwrap());
}

#[test]
fn seed_from_environment_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.toml"), "seed = 9\n").unwrap();
    let run = |args: &[&str], env_seed: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_kilnopt"));
        c.current_dir(d).env_remove("KILNOPT_SEED").env_remove("KILNOPT_CONFIG");
        if let Some(s) = env_seed {
            c.env("KILNOPT_SEED", s);
        }
        ok(&c.args(args).output().unwrap());
    };
    run(&["--config", "c.toml", "--out", "cfg", "generate", "--minutes", "500"], None);
    run(&["--config", "c.toml", "--out", "env", "generate", "--minutes", "500"], Some("4"));
    run(&["--config", "c.toml", "--seed", "7", "--out", "flag", "generate", "--minutes", "500"], Some("4"));
    let seed = |o: &str| {
        let m: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join(o).join("manifest-generate.json")).unwrap()).unwrap();
        m["seed"].as_u64().unwrap()
    };
    assert_eq!((seed("cfg"), seed("env"), seed("flag")), (9, 4, 7));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&kilnopt(d, &["--out", "out", "generate", "--minutes", "500"]));

    std::fs::write(d.join("empty.toml"), "[benchmark]\nspecs = []\n").unwrap();
    let o = kilnopt(d, &["--config", "empty.toml", "--input", "out/plant.csv", "benchmark"]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(d.join("typo.toml"), "[controller]\ndelta_pct = 3\n").unwrap();
    assert_eq!(kilnopt(d, &["--config", "typo.toml", "econ"]).status.code(), Some(2));

    assert_eq!(kilnopt(d, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(kilnopt(d, &["econ"]).status.code(), Some(1), "missing --input");
    assert_eq!(kilnopt(d, &["--help"]).status.code(), Some(0));

    std::fs::write(d.join("neg.toml"), "[econ]\nnsr = -1.0\n").unwrap();
    assert_eq!(kilnopt(d, &["--config", "neg.toml", "--input", "out/plant.csv", "econ"]).status.code(), Some(2));
}
