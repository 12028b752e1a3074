use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qdioph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdioph")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const COUNT_FIXTURE: &str = r#"{
    "field": {"D": 1},
    "problem": {"m": 1, "n": 2, "psi": {"family": "constant", "params": [1]},
                "v": [[0,0],[0,0],[0,0]], "ideal": {"generators": [[1,0]]}, "T": 16}
}"#;

fn plan_config(dir: &Path, grid: &str) -> String {
    format!(
        r#"{{
        "field": {{"D": 1}},
        "problem": {{"m": 1, "n": 2, "psi": {{"family": "constant", "params": [1]}},
                    "v": [[0,0],[0,0],[0,0]], "ideal": {{"generators": [[1,0]]}}}},
        "plan": {{"T_grid": {grid}, "theta_count": 3, "theta_box": 1, "seed": 7}},
        "outputs": {{"csv_path": "{}", "svg_path": "{}"}}
    }}"#,
        dir.join("table.csv").display(),
        dir.join("plot.svg").display()
    )
}

#[test]
fn count_fixture_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", COUNT_FIXTURE);
    let o = qdioph(&["count", "--config", cfg.to_str().unwrap(), "--theta", "zero"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T,count,predicted,ratio,q_enumerated,theorem_backed"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1], "400");
    assert_eq!(row[4], "80");
}

#[test]
fn explicit_zero_theta_matches_keyword() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", COUNT_FIXTURE);
    let c = cfg.to_str().unwrap();
    let a = qdioph(&["count", "--config", c, "--theta", "zero"]);
    let b = qdioph(&["count", "--config", c, "--theta", "0x0p+0,0x0p+0,0x0p+0,0x0p+0"]);
    assert_eq!(a.stdout, b.stdout);
    let bad = qdioph(&["count", "--config", c, "--theta", "0x1p0"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn missing_config_exits_two() {
    let o = qdioph(&["count", "--config", "/nonexistent/qdioph.json", "--theta", "zero"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn overflow_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &COUNT_FIXTURE.replace("\"T\": 16", "\"T\": 1e300"));
    let o = qdioph(&["count", "--config", cfg.to_str().unwrap(), "--theta", "zero"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn asymptotics_outputs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.json", &plan_config(dir.path(), "[10, 100]"));
    let run = || {
        let o = qdioph(&["asymptotics", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.path().join("table.csv")).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 3 * 2);
    let svg = std::fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
}

#[test]
fn non_increasing_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.json", &plan_config(dir.path(), "[100, 10]"));
    assert_eq!(qdioph(&["asymptotics", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn volume_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", &COUNT_FIXTURE.replace("\"T\": 16", "\"T\": 10"));
    let o = qdioph(&["volume", "--config", cfg.to_str().unwrap(), "--region", "E_T", "--mc", "20000"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let vol: f64 = row[5].parse().unwrap();
    assert!((vol - 9.0 * std::f64::consts::PI.powi(3)).abs() < 1e-9);
    let (est, se): (f64, f64) = (row[8].parse().unwrap(), row[9].parse().unwrap());
    assert!((est - vol).abs() < 3.0 * se);

    let cfg1 = write_config(dir.path(), "v1.json", &COUNT_FIXTURE.replace("\"T\": 16", "\"T\": 1"));
    let o = qdioph(&["volume", "--config", cfg1.to_str().unwrap()]);
    let row: Vec<String> = stdout(&o).lines().nth(1).unwrap().split(',').map(String::from).collect();
    assert_eq!(row[5].parse::<f64>().unwrap(), 0.0);

    let o = qdioph(&["volume", "--config", cfg.to_str().unwrap(), "--region", "E_sideways"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn echelon_square_is_single_form() {
    let o = qdioph(&["echelon", "--m", "2", "--k", "2", "--bound", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);
    let o = qdioph(&["echelon", "--m", "3", "--k", "2", "--bound", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn heights_tables() {
    let o = qdioph(&["heights", "--k", "2", "--xmax", "1"]);
    assert_eq!(stdout(&o), "x,count,count_over_x_k\n1.0,0,0.0\n");
    let o = qdioph(&["heights", "--k", "2", "--d", "3", "--xmax", "64", "--table", "blocks"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("j,lines,S_j,bound,partial_sum,complete\n0,4,"));
    let o = qdioph(&["heights", "--k", "2", "--xmax", "5000"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn siegel_rows_and_threads_flag() {
    let args = ["siegel", "--radius", "0.7978845608028654", "--radius", "0.1", "--samples", "4000", "--seed", "5"];
    let a = qdioph(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a).lines().count(), 3);
    let mut threaded = vec!["--threads", "2"];
    threaded.extend(args);
    let b = qdioph(&threaded);
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_qdioph")).args(args).env("COUNT_THREADS", "0").output().unwrap();
    assert_eq!(c.status.code(), Some(2));
}

#[test]
fn decomposition_grid_is_clean() {
    let o = qdioph(&["decomposition", "--d", "3", "--k", "2", "--grid-bound", "2"]);
    assert_eq!(stdout(&o), "d,k,grid_bound,checked,failures\n3,2,2,15376,0\n");
}
