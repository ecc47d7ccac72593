use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ofc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ofc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_four_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let o = ofc(&["simulate", "--poses", "5", "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["a.csv", "b.csv", "a_true.csv", "b_true.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("N,4\n"), "{name}");
        assert_eq!(text.lines().count(), 1 + 5 + 1 + 5);
    }
}

#[test]
fn predict_from_files_matches_simulated_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ofc(&["simulate", "--poses", "6", "--seed", "4", "--out", path(dir.path())])
        .status
        .success());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let from_files = ofc(&[
        "predict", "--pair", "3,4", "--no-timing", "--traj-a", path(&a), "--traj-b", path(&b),
    ]);
    let simulated = ofc(&["predict", "--pair", "3,4", "--no-timing", "--poses", "6", "--seed", "4"]);
    assert!(from_files.status.success(), "{}", stderr(&from_files));
    assert_eq!(stdout(&from_files), stdout(&simulated));
    let lines: Vec<String> = stdout(&simulated).lines().map(String::from).collect();
    assert_eq!(lines[0], "l,r,delta_f,f_real,rel_error,t_predict,t_solve,converged,error");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..2], &["3", "4"]);
    assert!(fields[2].parse::<f64>().unwrap() > 0.0);
    assert!(fields[3..].iter().all(|f| f.is_empty()));
}

#[test]
fn solve_reports_convergence() {
    let o = ofc(&["solve", "--pair", "2,2", "--poses", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert!(row[3].parse::<f64>().unwrap() > 0.0);
    assert!(row[6].parse::<f64>().unwrap() >= 0.0);
    assert_eq!(row[7], "true");
}

#[test]
fn untimed_sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| {
        let out = dir.path().join(name);
        let o = ofc(&[
            "sweep", "--poses", "4", "--seed", "2", "--no-timing", "--jobs", jobs, "--out", path(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (fs::read(out).unwrap(), stdout(&o))
    };
    let (g1, s1) = run("g1.csv", "1");
    let (g2, s2) = run("g2.csv", "2");
    assert_eq!(g1, g2);
    assert_eq!(s1, s2);
    assert_eq!(String::from_utf8(g1).unwrap().lines().count(), 17);
    assert!(s1.starts_with("pairs,failures,not_converged,max_rel_error"));
    assert!(s1.lines().nth(1).unwrap().starts_with("16,0,"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"n_poses": 5, "seed": 9, "mode": "predict"}"#).unwrap();
    let o = ofc(&["sweep", "--config", path(&cfg), "--poses", "3", "--no-timing"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let grid = stdout(&o);
    assert_eq!(grid.lines().count(), 10);
    // mode from the file: no solve column values
    assert!(grid.lines().skip(1).all(|l| l.split(',').nth(3) == Some("")));
    let o = ofc(&["sweep", "--config", path(&cfg), "--mode", "both", "--no-timing"]);
    assert_eq!(stdout(&o).lines().count(), 26);
}

#[test]
fn bench_table_has_one_row_per_length() {
    let o = ofc(&["bench", "--lengths", "3,4", "--jobs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("n_poses,pairs,"));
    assert!(lines[1].starts_with("3,9,0,"));
    assert!(lines[2].starts_with("4,16,0,"));
}

#[test]
fn errors_are_reported_as_csv_with_nonzero_exit() {
    let o = ofc(&["predict", "--pair", "9,1", "--poses", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error,index_out_of_range,"));

    let o = ofc(&["sweep", "--poses", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error,invalid_argument,"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "N,1\n1,2,3\n").unwrap();
    let o = ofc(&["predict", "--pair", "1,1", "--traj-a", path(&bad), "--traj-b", path(&bad)]);
    assert!(stderr(&o).starts_with("error,parse,"), "{}", stderr(&o));

    let o = ofc(&["predict", "--pair", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error,invalid_argument,"));

    let o = ofc(&["bench", "--lengths", ""]);
    assert_ne!(o.status.code(), Some(0));

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"n_poses": 5, "colour": 1}"#).unwrap();
    let o = ofc(&["sweep", "--config", path(&cfg)]);
    assert!(stderr(&o).starts_with("error,parse,"), "{}", stderr(&o));
}
