use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dinistat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dinistat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn eval_reports_value_and_gauge() {
    let o = dinistat(&["eval", "--zoo", "quad", "--at", "0.3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let line = |key: &str| -> f64 {
        let l = text
            .lines()
            .find(|l| l.starts_with(key))
            .unwrap_or_else(|| panic!("no {key} in {text}"));
        l.split('=')
            .nth(1)
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((line("f =") - 0.09).abs() < 1e-12);
    assert!((line("G_f =") + 0.6).abs() < 1e-12);
}

#[test]
fn eval_at_the_counterexample_kink() {
    let o = dinistat(&["eval", "--zoo", "diff_cx", "--at", "0", "--delta", "0.01"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("f = 0"), "{text}");
    assert!(text.contains("f'+ = 1"), "{text}");
    assert!(text.contains("f'- = -1"), "{text}");
    assert!(text.contains("stationary(delta=0.01) = yes"), "{text}");
}

#[test]
fn dsl_function_at_its_kink_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("fn.sx");
    fs::write(&src, "(max (pow x0 2) (abs x1))").unwrap();
    let o = dinistat(&["eval", "--dsl", src.to_str().unwrap(), "--at", "0,0"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("f = 0\n"), "{text}");
    assert!(text.contains("G_f = 0 "), "{text}");
    assert!(text.contains("verdict = stationary"), "{text}");
    let text = stdout(&dinistat(&[
        "eval",
        "--dsl",
        src.to_str().unwrap(),
        "--at",
        "0.5,0",
    ]));
    assert!(text.contains("verdict = not stationary"), "{text}");
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.s");
    fs::write(&bad, "(+ x0").unwrap();
    let o = dinistat(&["eval", "--dsl", bad.to_str().unwrap(), "--at", "0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));

    assert_eq!(code(&dinistat(&["eval", "--zoo", "nope", "--at", "0"])), 2);
    assert_eq!(code(&dinistat(&["eval", "--zoo", "quad"])), 2);
    assert_eq!(
        code(&dinistat(&[
            "scan", "--zoo", "quad", "--delta", "0.1", "--domain", "1-2"
        ])),
        2
    );
}

#[test]
fn points_outside_the_domain_exit_three() {
    let o = dinistat(&["eval", "--zoo", "quad", "--at", "3"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside the domain"));
    // widening the domain makes the same point valid
    assert_eq!(
        code(&dinistat(&[
            "eval", "--zoo", "quad", "--at", "3", "--domain", "-4:4"
        ])),
        0
    );
}

#[test]
fn verify_all_passes() {
    let o = dinistat(&["verify", "--all"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.starts_with("entry,fact,provenance,computed,reference,residual,tol,verdict"));
    assert!(!csv.contains(",FAIL"));
}

#[test]
fn zoo_list_names_every_entry() {
    let text = stdout(&dinistat(&["zoo", "list"]));
    for name in [
        "quad",
        "abs1d",
        "double_abs",
        "two_pits",
        "cross_abs2d",
        "diff_cx",
        "smooth_cx",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{name},"))),
            "{name} missing"
        );
    }
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn rerunning_with_the_same_settings_reproduces_every_file() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = dinistat(&[
            "run",
            "--zoo",
            "cross_abs2d",
            "--algo",
            "gradient-sampling",
            "--start",
            "0.4,-0.1",
            "--seed",
            "7",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["trajectory.csv", "contract.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    assert!(read(a.path(), "config.toml").contains("seed = 7"));
}

#[test]
fn echoed_config_replays_the_run() {
    let a = tempfile::tempdir().unwrap();
    let o = dinistat(&[
        "scan",
        "--zoo",
        "abs1d",
        "--delta",
        "0.05",
        "--grid",
        "101",
        "--out",
        a.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let b = tempfile::tempdir().unwrap();
    let cfg = b.path().join("replay.toml");
    let echoed = read(a.path(), "config.toml")
        .lines()
        .filter(|l| !l.starts_with("out"))
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(&cfg, echoed).unwrap();
    let o = dinistat(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(a.path(), "scan.csv"), read(b.path(), "scan.csv"));
}

#[test]
fn flags_take_precedence_over_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "zoo = \"quad\"\nat = [0.5]\ndelta = 0.01\n").unwrap();
    let text = stdout(&dinistat(&["eval", "--config", cfg.to_str().unwrap()]));
    assert!(text.contains("f = 0.25"), "{text}");
    let text = stdout(&dinistat(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--at",
        "0.1",
    ]));
    assert!(text.contains("f = 0.010000000000000002"), "{text}");
    assert!(text.contains("stationary(delta=0.01) = no"), "{text}");

    fs::write(&cfg, "zoo = \"quad\"\nsede = 1\n").unwrap();
    assert_eq!(
        code(&dinistat(&[
            "eval",
            "--config",
            cfg.to_str().unwrap(),
            "--at",
            "0"
        ])),
        2
    );
}

#[test]
fn certify_issues_and_refuses() {
    let o = dinistat(&["certify", "--zoo", "quad"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("refused=false"), "{text}");
    assert!(text.contains("lambda0=0.32"), "{text}");

    let o = dinistat(&["certify", "--zoo", "double_abs"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("refused=true"));
    assert_eq!(
        code(&dinistat(&[
            "certify",
            "--zoo",
            "double_abs",
            "--expect",
            "fail"
        ])),
        0
    );
}

#[test]
fn counterexample_profile_fails_to_shrink() {
    let o = dinistat(&[
        "profile",
        "--zoo",
        "diff_cx",
        "--r1",
        "0.05",
        "--deltas",
        "1e-1..1e-4",
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL-to-shrink"));

    let o = dinistat(&[
        "profile",
        "--zoo",
        "quad",
        "--r1",
        "0.5",
        "--deltas",
        "1e-1..1e-4",
    ]);
    assert_eq!(code(&o), 0);
    let rows: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn experiment_mode_reports_pass_for_the_parabola() {
    let dir = tempfile::tempdir().unwrap();
    let o = dinistat(&[
        "run",
        "--zoo",
        "quad",
        "--experiment",
        "--eps",
        "0.05",
        "--starts",
        "4",
        "--seeds",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS"));
    let csv = read(dir.path(), "experiment.csv");
    assert_eq!(csv.lines().count(), 1 + 4 * 2 * 2);
    assert!(read(dir.path(), "certificate.txt").contains("refused=false"));
}

#[test]
fn census_finds_both_pits_at_one_value() {
    let o = dinistat(&["census", "--zoo", "two_pits", "--grid", "6001"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1, "{text}");
    assert!(rows[0].ends_with(",2"), "{text}");
}

#[test]
fn pool_size_does_not_change_experiment_output() {
    let run = |jobs: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = dinistat(&[
            "run",
            "--zoo",
            "cross_abs2d",
            "--experiment",
            "--eps",
            "0.1",
            "--starts",
            "6",
            "--seeds",
            "3",
            "--jobs",
            jobs,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        read(dir.path(), "experiment.csv")
    };
    assert_eq!(run("1"), run("4"));
}
