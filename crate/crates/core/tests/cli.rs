use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqe-maxcut"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&cli(&[])), 1);
    assert_eq!(code(&cli(&["frobnicate"])), 1);
    assert_eq!(code(&cli(&["gen-graphs", "--count", "2"])), 1);
    let out = cli(&[
        "solve",
        "--graph",
        "g.txt",
        "--circuit",
        "hxx",
        "--layers",
        "1",
        "--out",
        "o",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("hxx"));
    assert_eq!(code(&cli(&["--help"])), 0);
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    let out = cli(&[
        "solve",
        "--graph",
        path(&missing),
        "--circuit",
        "ry",
        "--layers",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "3 2\n0 1\n1 7\n").unwrap();
    let out = cli(&[
        "solve",
        "--graph",
        path(&bad),
        "--circuit",
        "ry",
        "--layers",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("line 3"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = cli(&[
        "report",
        "boxplot",
        "--runs",
        path(dir.path()),
        "--out",
        path(&dir.path().join("b.svg")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn generate_solve_sweep_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let graphs = d.join("graphs");
    let out = cli(&[
        "gen-graphs",
        "--count",
        "2",
        "--n",
        "6",
        "--p",
        "0.5",
        "--seed-base",
        "4",
        "--out",
        path(&graphs),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(graphs.join("instances.csv").exists());

    let solo = d.join("solo");
    let out = cli(&[
        "solve",
        "--graph",
        path(&graphs.join("graph_0.txt")),
        "--circuit",
        "hryrx",
        "--layers",
        "2",
        "--optimizer",
        "nelder-mead",
        "--max-evals",
        "300",
        "--rho-beg",
        "0.4",
        "--rho-end",
        "1e-3",
        "--seed",
        "7",
        "--init",
        "random",
        "--out",
        path(&solo),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let runs = fs::read_to_string(solo.join("runs.csv")).unwrap();
    assert!(
        runs.contains("optimizer=nelder-mead max_evals=300 initial_step=0.4 final_tolerance=0.001")
    );
    assert!(solo.join("traces/trace_i0000_hryrx_l02_s7.csv").exists());

    let config = d.join("sweep.json");
    fs::write(
        &config,
        r#"{
  "instances": { "count": 1, "n": 5, "p": 0.5, "seed_base": 2, "max_attempts": 100 },
  "families": ["ry", "ryrxcnot"],
  "hadamard": [true],
  "layers": [1, 2],
  "seeds": { "first": 30, "last": 30 },
  "optimizer": { "method": "cobyla", "max_evals": 150, "initial_step": 0.5, "final_tolerance": 0.0001 },
  "init_mode": "zero",
  "output_dir": "unused",
  "jobs": 1,
  "record_wall_time": false
}"#,
    )
    .unwrap();
    let sweep = d.join("sweep");
    let out = cli(&[
        "sweep",
        "--config",
        path(&config),
        "--jobs",
        "2",
        "--out",
        path(&sweep),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("4 runs"));

    for figure in ["convergence", "boxplot"] {
        let svg = d.join(format!("{figure}.svg"));
        let out = cli(&[
            "report",
            figure,
            "--runs",
            path(&sweep),
            "--out",
            path(&svg),
            "--layers",
            "1,2",
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
        assert!(svg.with_extension("csv").exists());
    }

    let out = cli(&[
        "report",
        "boxplot",
        "--runs",
        path(&sweep),
        "--out",
        path(&d.join("x.svg")),
        "--circuit",
        "qq",
    ]);
    assert_eq!(code(&out), 1);
    let out = cli(&[
        "report",
        "boxplot",
        "--runs",
        path(&sweep),
        "--out",
        path(&d.join("x.svg")),
        "--circuit",
        "rycnot",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rycnot"));
}
