use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bsz(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bsz"));
    cmd.args(args).env_remove("BSZ_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("bsz runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let d = dir.to_str().unwrap();
    all.extend(["--out", d]);
    bsz(&all, &[])
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    for fmt in ["csv", "json"] {
        let a = tmp.path().join(format!("a_{fmt}"));
        let b = tmp.path().join(format!("b_{fmt}"));
        for d in [&a, &b] {
            let out = run_in(
                d,
                &["simulate", "coalescent", "--n", "100", "--seed", "7", "--format", fmt],
            );
            assert!(out.status.success());
        }
        assert_eq!(read_dir_sorted(&a), read_dir_sorted(&b));
    }
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let mut dirs = Vec::new();
    for threads in ["1", "4"] {
        let d = tmp.path().join(threads);
        let args = [
            "simulate",
            "population",
            "--n",
            "40",
            "--replicates",
            "8",
            "--seed",
            "3",
            "--out",
            d.to_str().unwrap(),
        ];
        assert!(bsz(&args, &[("RAYON_NUM_THREADS", threads)]).status.success());
        dirs.push(read_dir_sorted(&d));
    }
    assert_eq!(dirs[0], dirs[1]);
}

#[test]
fn stable_jump_count_matches_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let reps = 400;
    let out = run_in(
        tmp.path(),
        &[
            "simulate",
            "stable",
            "--eps",
            "0.01",
            "--horizon",
            "1",
            "--replicates",
            &reps.to_string(),
            "--seed",
            "11",
        ],
    );
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("stable_summary.csv")).unwrap();
    let counts: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(counts.len(), reps);
    let mean = counts.iter().sum::<f64>() / reps as f64;
    // Poisson(100) count, standard error 10 / sqrt(reps)
    let se = 10.0 / (reps as f64).sqrt();
    assert!((mean - 100.0).abs() < 3.0 * se, "mean jump count {mean}");
}

#[test]
fn r_path_has_unit_downward_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["simulate", "R", "--stationary", "--horizon", "10"]);
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("r_0000_path.csv")).unwrap();
    let rows: Vec<(f64, f64, bool)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2] == "1")
        })
        .collect();
    assert!(rows.len() >= 2);
    assert_eq!(rows.last().unwrap().0, 10.0);
    for w in rows.windows(2) {
        if !w[1].2 && w[1].0 > w[0].0 {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            assert!((slope + 1.0).abs() < 1e-9, "slope {slope}");
        }
    }
}

#[test]
fn every_kind_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in ["coalescent", "rrt", "population", "R", "A", "stable", "limit-length"] {
        for fmt in ["csv", "json"] {
            let d = tmp.path().join(format!("{kind}_{fmt}"));
            let out = run_in(
                &d,
                &[
                    "simulate",
                    kind,
                    "--n",
                    "30",
                    "--horizon",
                    "0.5",
                    "--eps",
                    "0.01",
                    "--format",
                    fmt,
                ],
            );
            assert!(out.status.success(), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
            assert!(!read_dir_sorted(&d).is_empty());
        }
    }
}

#[test]
fn env_var_sets_default_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("from_env");
    let out = bsz(
        &["simulate", "A", "--horizon", "1"],
        &[("BSZ_OUT_DIR", d.to_str().unwrap())],
    );
    assert!(out.status.success());
    assert!(d.join("a_summary.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["simulate", "coalescent", "--n", "1"],
        vec!["simulate", "rrt", "--n", "2"],
        vec!["simulate", "stable", "--eps", "0"],
        vec!["simulate", "R", "--replicates", "0"],
        vec!["simulate", "R", "--stationary", "--x0", "1"],
        vec!["simulate", "bogus"],
        vec!["coupling", "--n-grid="],
        vec!["coupling", "--n-grid", "1000,500"],
        vec!["coupling", "--n-grid", "10"],
    ] {
        let out = run_in(tmp.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn verify_named_tests_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["verify", "--suite", "c01,c07", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    let csv = fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    assert!(csv.starts_with("name,statistic,threshold,pass,replicates,seed\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn verify_unknown_test_exits_2_with_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["verify", "--suite", "no_such_test"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown test") && err.contains("--help"), "{err}");
}

#[test]
fn verify_bad_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[rates]\nb_max = \"many\"\n").unwrap();
    let out = run_in(
        tmp.path(),
        &["verify", "--suite", "c01", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coupling_single_replicate_writes_paired_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["coupling", "--n-grid", "1000", "--replicates", "1", "--seed", "5"],
    );
    assert!(out.status.success());
    assert!(tmp.path().join("coupling_n1000_0_x.csv").exists());
    assert!(tmp.path().join("coupling_n1000_0_y.csv").exists());
    let summary = fs::read_to_string(tmp.path().join("coupling_summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1000");
    assert_eq!(row[3], "1", "explicit-event jump sets must coincide");
}
