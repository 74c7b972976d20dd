use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semimarkov"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// Header plus numeric rows of a CSV written by the binary.
fn parse(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"waiting_time\": {\"type\": \"erlang\", \"n\": 0, \"rate\": 1.0}}").unwrap();
    assert_eq!(run(&["curves", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n \"waiting_time\": \n").unwrap();
    let out = run(&["curves", "--config", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    // no Kraus operators for a command that needs them
    let no_kraus = dir.path().join("nokraus.json");
    std::fs::write(&no_kraus, "{\"waiting_time\": {\"type\": \"exponential\", \"rate\": 1.0}}").unwrap();
    assert_eq!(run(&["solve", "--config", no_kraus.to_str().unwrap(), "--route", "tcl"]).status.code(), Some(2));

    // the TCL generator of the dephasing model is singular at 3π/4
    let deph = config("deph_erlang2.json");
    let out = run(&["solve", "--config", deph.to_str().unwrap(), "--route", "tcl", "--t-end", "3"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["solve", "--config", deph.to_str().unwrap(), "--route", "series", "--t-end", "3"]);
    assert_eq!(out.status.code(), Some(0));

    assert_eq!(run(&["validate", "--config", deph.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["figure1", "--n-list", "0"]).status.code(), Some(2));
}

#[test]
fn monte_carlo_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let deph = config("deph_erlang2.json");
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("mc{i}.csv"));
            let status = bin()
                .args(["solve", "--route", "mc", "--trials", "5000", "--seed", "11", "--t-end", "4", "--points", "41"])
                .arg("--config")
                .arg(&deph)
                .arg("--out")
                .arg(&path)
                .status()
                .unwrap();
            assert!(status.success());
            std::fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    let other = run(&[
        "solve", "--route", "mc", "--trials", "5000", "--seed", "12", "--t-end", "4", "--points", "41", "--config",
        deph.to_str().unwrap(),
    ]);
    assert_ne!(other.stdout, outs[0]);
}

#[test]
fn solve_columns_and_trace() {
    let out = run(&["solve", "--config", config("flip_erlang2.json").to_str().unwrap(), "--route", "nz", "--t-end", "2", "--points", "201"]);
    assert!(out.status.success());
    let (header, rows) = parse(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(header.len(), 1 + 8 + 2);
    assert_eq!(rows.len(), 201);
    let tr = column(&header, "trace");
    assert!(rows.iter().all(|r| (r[tr] - 1.0).abs() < 1e-7));
}

#[test]
fn figure1_ordering() {
    let out = run(&["figure1", "--t-end", "4", "--points", "401"]);
    assert!(out.status.success());
    let (header, rows) = parse(&String::from_utf8(out.stdout).unwrap());
    let row = rows.iter().find(|r| (r[0] - 2.0).abs() < 1e-12).unwrap();
    let s: Vec<f64> = (1..=4).map(|n| row[column(&header, &format!("S_{n}"))]).collect();
    assert!(s.windows(2).all(|w| w[0] >= w[1]), "{s:?}");
    // Erlang-1 is memoryless: h = S = 1 everywhere
    let (h1, s1) = (column(&header, "h_1"), column(&header, "S_1"));
    assert!(rows.iter().all(|r| (r[h1] - 1.0).abs() < 1e-12 && (r[s1] - 1.0).abs() < 1e-12));
}

#[test]
fn figure2_dephasing_factor_changes_sign() {
    let out = run(&["figure2", "--n-list", "2", "--t-end", "4", "--points", "401"]);
    assert!(out.status.success());
    let (header, rows) = parse(&String::from_utf8(out.stdout).unwrap());
    let (t, diag, deph) = (0, column(&header, "c_diag_2"), column(&header, "c_deph_2"));
    let crossing = rows.windows(2).find(|w| w[0][deph] > 0.0 && w[1][deph] <= 0.0).map(|w| w[1][t]).unwrap();
    assert!((crossing - 0.75 * std::f64::consts::PI).abs() < 0.011);
    for r in &rows {
        assert!((r[diag] - (1.0 + r[t]) * (-r[t]).exp()).abs() < 1e-10);
    }
}

#[test]
fn curves_for_exponential_waiting_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(&cfg, r#"{"waiting_time": {"type": "erlang", "n": 1, "rate": 1.0}, "grid": {"t_end": 5.0, "n_points": 51}}"#)
        .unwrap();
    let out = run(&["curves", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# mu poles: none"));
    let (header, rows) = parse(&text);
    for name in ["h", "S", "mu"] {
        let c = column(&header, name);
        assert!(rows.iter().all(|r| (r[c] - 1.0).abs() < 1e-10), "{name}");
    }
}

#[test]
fn divisibility_verdicts() {
    let out = run(&["divisibility", "--config", config("diag_erlang2.json").to_str().unwrap(), "--t-end", "6", "--points", "601"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("# cp_divisible: true"));
    let out = run(&["divisibility", "--config", config("deph_erlang2.json").to_str().unwrap(), "--route", "series", "--t-end", "6", "--points", "601"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# cp_divisible: false"));
    let (_, rows) = parse(&text);
    assert!(rows.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min) < -1e-4);
}
