use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sfcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfcsim")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn run_builtin_case_writes_trace_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let o = sfcsim(&["run", "--case", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["case1_trace.csv", "case1_voltage.svg", "case1_current.svg"] {
        let p = dir.path().join(f);
        assert!(p.metadata().unwrap().len() > 1000, "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("case1_trace.csv")).unwrap();
    assert!(csv.starts_with("time_s,u_pu,"));
    assert_eq!(csv.lines().count(), 3062);
    let svg = std::fs::read_to_string(dir.path().join("case1_current.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains("current limit"));
}

#[test]
fn run_scenario_file_with_measured_reference() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // a simulated trace serves as the recording
    assert!(sfcsim(&["run", "--case", "2", "--out", d.to_str().unwrap()]).status.success());
    let text = "base_case = 2\nname = \"mine\"\n[reference]\nmeasured = \"case2_trace.csv\"\n";
    std::fs::write(d.join("mine.toml"), text).unwrap();
    let o = sfcsim(&["run", "--scenario", d.join("mine.toml").to_str().unwrap(), "--out", d.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("alignment offset"));
    let report = std::fs::read_to_string(d.join("mine_report.toml")).unwrap();
    assert!(report.contains("rmse_u = 0.0"), "{report}");
}

#[test]
fn compare_against_itself_and_offset() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(sfcsim(&["run", "--case", "1", "--out", d.to_str().unwrap()]).status.success());
    let trace = d.join("case1_trace.csv");
    let o = sfcsim(&["compare", "--trace", trace.to_str().unwrap(), "--measured", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("offset_s = 0.0") && out.contains("\nrmse_u = 0.0") && out.contains("max_err_i = 0.0"));

    // recording 10 V higher everywhere
    let shift = 0.010 / 16.5;
    let mut rec = String::from("time_s,u_pu,i_pu\n");
    for line in std::fs::read_to_string(&trace).unwrap().lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        rec += &format!("{},{},{}\n", f[0], f[1] + shift, f[3]);
    }
    let meas = d.join("measured.csv");
    std::fs::write(&meas, rec).unwrap();
    let report = d.join("report.toml");
    let o = sfcsim(&[
        "compare",
        "--trace",
        trace.to_str().unwrap(),
        "--measured",
        meas.to_str().unwrap(),
        "--max-offset",
        "0 s",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = std::fs::read_to_string(report).unwrap();
    let rmse: f64 = doc
        .lines()
        .find_map(|l| l.strip_prefix("rmse_u = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((rmse - shift).abs() < 1e-12, "{rmse}");
}

#[test]
fn cases_lists_all_four() {
    let o = sfcsim(&["cases"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for s in ["60 ms", "80 ms", "120 ms", "270 ms", "4.25 MW", "0+0.13j"] {
        assert!(out.contains(s), "{s} missing from\n{out}");
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_sfcsim"))
            .args(["sweep", "--case", "3", "--param", "load.p", "--values", "2 MW,3 MW,4.25 MW"])
            .env("RAIL_SIM_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    assert_eq!(one.lines().count(), 4);
    assert!(one.lines().skip(1).all(|l| l.contains(",ok,")));
}

#[test]
fn exit_codes() {
    assert_eq!(sfcsim(&[]).status.code(), Some(1));
    assert_eq!(sfcsim(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(sfcsim(&["run", "--case", "1", "--scenario", "x.toml"]).status.code(), Some(1));
    assert_eq!(sfcsim(&["--help"]).status.code(), Some(0));

    let o = sfcsim(&["run", "--case", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown builtin case 7"));

    let o = sfcsim(&["run", "--scenario", "/nonexistent/file.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/file.toml"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[load]\np = \"2.4\"\n").unwrap();
    let o = sfcsim(&["run", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("load.p (line 2)"), "{}", stderr(&o));

    // a load the feeder cannot carry
    let heavy = dir.path().join("heavy.toml");
    std::fs::write(&heavy, "base_case = 1\n[load]\np = \"400 MW\"\n").unwrap();
    let o = sfcsim(&["run", "--scenario", heavy.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn shipped_scenarios_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = sfcsim(&[
        "run",
        "--scenario",
        scenario("case4.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("case4_voltage.svg").exists());
}
