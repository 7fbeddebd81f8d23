use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rfwater(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfwater"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SOLID_LIQUID: &str = r#"
duration_s = 200.0
seed = 3

[[events]]
kind = "solid"
time_s = 10.0

[[events]]
kind = "liquid"
start_time_s = 30.0
concentration_mol_per_l = 0.125
total_volume_ml = 220.0
"#;

fn reports(dir: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(dir.join("reports.ndjson"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn design_text_and_json() {
    let o = rfwater(&[
        "design", "--w", "2.4e-3", "--h", "0.79e-3", "--eps-r", "2.2", "--f", "7e8",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("eps_eff") && text.contains("Z0") && text.contains("lambda_g"));

    let o = rfwater(&[
        "design", "--w", "2.4e-3", "--h", "0.79e-3", "--eps-r", "2.2", "--f", "7e8", "--stub-c",
        "1e-12", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["stub_length_m"].as_f64().unwrap() > 0.0);
    assert!(v["z0_ohm"].as_f64().unwrap() > 0.0);
}

#[test]
fn design_narrow_trace_exits_2() {
    let o = rfwater(&[
        "design", "--w", "0.5e-3", "--h", "0.79e-3", "--eps-r", "2.2", "--f", "7e8",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("w/h >= 1"));
}

#[test]
fn unknown_flag_exits_2() {
    assert_eq!(rfwater(&["design", "--bogus"]).status.code(), Some(2));
}

#[test]
fn empty_scenario_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(&cfg, "noise_sigma_hz = 0.0\nduration_s = 5.0\n").unwrap();
    let out = dir.path().join("out");
    let o = rfwater(&["simulate", "--config", p(&cfg), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time_s,frequency_hz"));
    let values: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(values.len() > 40);
    assert!(values.iter().all(|v| *v == values[0]));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn bad_scenarios_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(
        &cfg,
        "[[events]]\nkind = \"solid\"\ntime_s = 20.0\n[[events]]\nkind = \"solid\"\ntime_s = 10.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = rfwater(&["simulate", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));

    fs::write(&cfg, "duration = 5.0\nnoise = 1.0\n").unwrap();
    let o = rfwater(&["simulate", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("duration") && err.contains("noise"), "{err}");
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(&cfg, SOLID_LIQUID).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = rfwater(&[
            "simulate",
            "--config",
            p(&cfg),
            "--seed",
            "11",
            "--out",
            p(out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(
        fs::read(a.join("trace.csv")).unwrap(),
        fs::read(b.join("trace.csv")).unwrap()
    );
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 11);
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(&cfg, SOLID_LIQUID).unwrap();
    let sim = dir.path().join("sim");
    let o = rfwater(&["simulate", "--config", p(&cfg), "--out", p(&sim)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let cal = dir.path().join("cal.csv");
    let o = rfwater(&["calibrate", "--out", p(&cal)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = rfwater(&[
            "analyze",
            "--in",
            p(&sim.join("trace.csv")),
            "--calibration",
            p(&cal),
            "--out",
            p(out),
            "--dump-stages",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("1 FLUSH, 1 ANALYZE"));
    }
    assert_eq!(
        fs::read(a.join("reports.ndjson")).unwrap(),
        fs::read(b.join("reports.ndjson")).unwrap()
    );
    let r = reports(&a);
    assert_eq!(r.len(), 2);
    assert_eq!(r[0]["action"], "FLUSH");
    assert_eq!(r[0]["class"], "SOLID");
    assert_eq!(r[1]["action"], "ANALYZE");
    let c = r[1]["est_concentration_mol_per_l"].as_f64().unwrap();
    // 220 mL of 0.125 M into 4 L
    let truth = 0.125 * 220.0 / 4220.0;
    assert!((c - truth).abs() < 0.1 * truth, "{c}");
    let keys: Vec<&str> = r[1]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    assert_eq!(keys.len(), 5);
    for f in [
        "shift.csv",
        "derivative.csv",
        "filtered.csv",
        "band_magnitude.csv",
    ] {
        assert!(a.join("stages").join(f).exists(), "{f}");
    }
}

#[test]
fn analyze_sweep_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(
        &cfg,
        "duration_s = 40.0\n[sweep]\nn_points = 201\n[[events]]\nkind = \"solid\"\ntime_s = 15.0\n",
    )
    .unwrap();
    let sim = dir.path().join("sim");
    let o = rfwater(&[
        "simulate",
        "--config",
        p(&cfg),
        "--out",
        p(&sim),
        "--emit-sweeps",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let o = rfwater(&["analyze", "--in", p(&sim.join("sweeps")), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = reports(&out);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0]["action"], "FLUSH");
}

#[test]
fn flat_file_is_idle() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let mut s = String::from("time_s,frequency_hz\n");
    for k in 0..600 {
        s.push_str(&format!("{},700000000\n", k as f64 * 0.110));
    }
    fs::write(&trace, s).unwrap();
    let out = dir.path().join("out");
    let o = rfwater(&["analyze", "--in", p(&trace), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = reports(&out);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0]["action"], "IDLE");
    assert_eq!(r[0]["class"], "NONE");
}

#[test]
fn jittered_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "time_s,frequency_hz\n0,7e8\n0.11,7e8\n0.25,7e8\n").unwrap();
    let o = rfwater(&[
        "analyze",
        "--in",
        p(&trace),
        "--out",
        p(&dir.path().join("out")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibrate_grids() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal.csv");
    let o = rfwater(&["calibrate", "--grid", "0,0.01,0.1", "--out", p(&cal)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&cal).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "concentration_mol_per_l,shift_hz");
    assert_eq!(rows[1], "0,0");

    let o = rfwater(&["calibrate", "--out", p(&cal)]);
    assert!(o.status.success());
    let shifts: Vec<f64> = fs::read_to_string(&cal)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let rising = shifts[1] > shifts[0];
    assert!(shifts
        .windows(2)
        .all(|w| (w[1] > w[0]) == rising && w[1] != w[0]));

    for bad in ["0.01", "geom:1:0.1:3", "abc", "2.0"] {
        let o = rfwater(&["calibrate", "--grid", bad, "--out", p(&cal)]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
    }
}
