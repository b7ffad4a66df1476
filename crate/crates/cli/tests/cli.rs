use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ppds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppds")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const GSR: &str = r#"
task = "gsr"
seed = 7
max_iters = 300
oracle_iters = 600

[gsr]
vertices = 60
k = 5

[[designs]]
kind = "ovdp"
beta = [2.0]

[[designs]]
kind = "sp"
gamma1 = [0.1]
"#;

#[test]
fn malformed_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("task.toml", GSR.replace("task = \"gsr\"", "task = \"denoise\"")),
        ("field.toml", GSR.replace("k = 5", "k = 5\nkk = 1")),
        ("syntax.toml", "task = ".to_string()),
        ("beta.toml", GSR.replace("beta = [2.0]", "beta = [-1.0]")),
    ] {
        let path = write(dir.path(), name, &text);
        let out = ppds(&["run", &path, "-q"]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(ppds(&["run", "/nonexistent/config.toml"]).status.code(), Some(2));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = ppds(&["gen", "gsr", "--n", "200", "--k", "6", "--seed", "7", "--out", d.to_str().unwrap(), "-q"]);
        assert!(out.status.success());
    }
    for name in ["graph.edges", "truth.f64", "mask.f64", "observed.f64"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let c = dir.path().join("c");
    ppds(&["gen", "gsr", "--n", "200", "--seed", "8", "--out", c.to_str().unwrap(), "-q"]);
    assert_ne!(fs::read(a.join("observed.f64")).unwrap(), fs::read(c.join("observed.f64")).unwrap());
}

#[test]
fn verify_reports_condition_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "gsr.toml", GSR);
    let out = ppds(&["verify", &path]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("OVDP")).unwrap();
    let c: f64 = line.split("cond_value=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(c <= 1.0 + 1e-6, "{line}");
    assert!(!text.contains("VIOLATION"));
}

#[test]
fn run_writes_csvs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "gsr.toml", GSR);
    let out_dir = dir.path().join("out");
    let out = ppds(&["run", &path, "--out", out_dir.to_str().unwrap(), "-q"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("design,iters_to_stop,seconds_to_stop,final_metric,cond_value"));
    assert_eq!(lines.count(), 2);

    for stem in ["ovdp_beta_2", "sp_g1_0_1"] {
        let text = fs::read_to_string(out_dir.join(format!("{stem}.csv"))).unwrap();
        let mut rows = text.lines();
        assert_eq!(rows.next(), Some("t,normalized_step,rmse,residual,metric,elapsed_s"));
        let last: Vec<&str> = rows.last().unwrap().split(',').collect();
        assert_eq!(last.len(), 6);
        assert!(last[0].parse::<usize>().unwrap() <= 300);
    }
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["mnr_desk.toml", "gsr_desk.toml", "unmix_desk.toml"] {
        let cfg = ppds_cli::ExperimentConfig::load(&root.join(name)).unwrap();
        cfg.validate().unwrap();
        assert!(cfg.task_config().is_ok(), "{name}");
    }
}
