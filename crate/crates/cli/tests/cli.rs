use std::fs;
use std::process::{Command, Output};

fn afista(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afista"))
        .args(args)
        .env_remove("AFISTA_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn fw_on_a_single_point_is_solved_immediately() {
    let out = afista(&["solve", "--algo", "fw", "--n", "1", "--outer-iters", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("h           0.000000e0"), "{text}");
    assert!(text.contains("reach 1e-6  t=1"), "{text}");
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["solve", "--bogus"],
        vec!["solve", "--n", "0"],
        vec!["solve", "--beta", "-1"],
        vec!["solve", "--delta", "nan"],
        vec!["solve", "--algo", "newton"],
        vec!["solve", "--n", "5", "--r", "9"],
        vec!["sweep", "--defaults", "--n", "10"],
        vec!["sweep", "--seeds", "3..3"],
        vec!["sweep", "--n", "10", "--r", "10", "--out-dir", "unused"],
        vec![],
    ] {
        let out = afista(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty(), "{args:?} printed nothing on stderr");
    }
}

#[test]
fn generated_instance_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_afista"))
        .args(["gen-instance", "--n", "20", "--r", "3", "--delta", "0.5", "--beta", "10", "--seed", "4"])
        .env("AFISTA_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("instance_n20_r3_delta0.5_seed4.json");
    assert!(path.exists());

    let csv = dir.path().join("trace.csv");
    let from_file = afista(&[
        "solve",
        "--instance-file",
        path.to_str().unwrap(),
        "--algo",
        "sp-afw",
        "--outer-iters",
        "100",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let generated = afista(&[
        "solve", "--n", "20", "--r", "3", "--delta", "0.5", "--beta", "10", "--seed", "4", "--algo", "sp-afw",
        "--outer-iters", "100",
    ]);
    assert_eq!(from_file.status.code(), Some(0));
    let strip = |o: &Output| stdout(o).lines().filter(|l| !l.starts_with("trace")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&from_file), strip(&generated));
    let rows = fs::read_to_string(&csv).unwrap().lines().count();
    assert_eq!(rows, 101);
    assert!(dir.path().join("trace.timing.csv").exists());
}

#[test]
fn sweep_writes_identical_cells_twice() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let out = afista(&[
            "sweep",
            "--n",
            "30",
            "--r",
            "3,5",
            "--delta",
            "0,1",
            "--beta",
            "10",
            "--outer-iters",
            "60",
            "--seeds",
            "0..2",
            "--workers",
            "2",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 4 * 2 * 5);
    }
    let mut names: Vec<_> = fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "cell_r3_delta0.csv",
            "cell_r3_delta0.timing.csv",
            "cell_r3_delta1.csv",
            "cell_r3_delta1.timing.csv",
            "cell_r5_delta0.csv",
            "cell_r5_delta0.timing.csv",
            "cell_r5_delta1.csv",
            "cell_r5_delta1.timing.csv",
            "manifest.json",
        ]
    );
    for name in names.iter().filter(|n| !n.ends_with(".timing.csv")) {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
    let manifest = fs::read_to_string(dirs[0].path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seeds\": [\n    0,\n    1\n  ]"), "{manifest}");
    assert!(manifest.contains("\"version\""));
}

#[test]
fn validate_is_deterministic_and_passes() {
    let first = afista(&["validate"]);
    let second = afista(&["validate"]);
    assert_eq!(first.status.code(), Some(0), "{}", stdout(&first));
    assert_eq!(stdout(&first), stdout(&second));
    assert!(stdout(&first).lines().all(|l| l.starts_with("[PASS]") || l.ends_with("checks passed")));
}
