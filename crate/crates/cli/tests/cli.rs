use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fqlab(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fqlab"));
    cmd.args(args).env_remove("FQLAB_OUTPUT_DIR");
    if let Some(dir) = out_dir {
        cmd.env("FQLAB_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_games_shows_all_seven() {
    let o = fqlab(&["list-games"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("generalized_firefighting"));
    assert!(text
        .lines()
        .any(|l| l.starts_with("climb") && l.contains("729")));
}

#[test]
fn dump_q_platonia() {
    let o = fqlab(&["dump-q", "platonia"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 64);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",6")).count(), 6);
}

#[test]
fn dump_q_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    let spec =
        r#"{"game_id":"dispersion","n":4,"actions_per_agent":2,"params":{"kind":"count_based"}}"#;
    fs::write(&path, spec).unwrap();
    let o = fqlab(&["dump-q", "--spec", path.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 17);
}

#[test]
fn dump_q_single_type() {
    let o = fqlab(&["dump-q", "gff", "--type", "NFNFNFN"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 65);
    let best = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(f64::MIN, f64::max);
    assert_eq!(best, 9.0);
}

#[test]
fn unknown_game_fails() {
    let o = fqlab(&["dump-q", "chess"], None);
    assert!(!o.status.success());
}

#[test]
fn run_then_rebuild_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let o = fqlab(
        &[
            "run",
            "--games",
            "dispersion,gff",
            "--methods",
            "F1,M2C",
            "--repetitions",
            "2",
            "--samples",
            "500",
            "--seed",
            "3",
        ],
        Some(&out),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "manifest.json",
        "summary.csv",
        "summary.json",
        "curves_all.csv",
        "curves_all_mean.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let summary = fs::read(out.join("summary.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&summary).lines().count(), 5);

    let rebuilt = dir.path().join("rebuilt");
    let t = fqlab(
        &[
            "table",
            out.to_str().unwrap(),
            "--out",
            rebuilt.to_str().unwrap(),
        ],
        None,
    );
    assert!(t.status.success());
    assert_eq!(fs::read(rebuilt.join("summary.csv")).unwrap(), summary);

    let c = fqlab(
        &[
            "curves",
            out.to_str().unwrap(),
            "--out",
            rebuilt.to_str().unwrap(),
        ],
        None,
    );
    assert!(c.status.success());
    assert_eq!(
        fs::read(rebuilt.join("curves_all_mean.csv")).unwrap(),
        fs::read(out.join("curves_all_mean.csv")).unwrap()
    );

    let p = fqlab(&["plot", out.to_str().unwrap(), "--type", "FFFFFFF"], None);
    assert!(p.status.success());
    let plots = stdout(&p);
    assert!(plots.contains("barplot_FFFFFFF.svg"));
    assert!(plots.contains("barplot.svg"));
}

#[test]
fn run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            r#"{{"games":["climb"],"methods":["F2C"],"repetitions":1,"train":{{"samples":300,"eval_every":100}},"output_dir":{:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = fqlab(&["run", cfg.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("climb/F2C/curves_mean.csv").is_file());
}

#[test]
fn bad_method_label_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = fqlab(
        &["run", "--methods", "F9Z", "--samples", "10"],
        Some(dir.path()),
    );
    assert!(!o.status.success());
}
