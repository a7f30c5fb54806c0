use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tartar::cones::{mu_schedule, BootstrapParams};
use tartar::{Grid, Phase, PhaseField};

fn tartar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tartar"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn build_summary_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = tartar(dir.path(), &["build", "--set", "build.m=2", "--set", "build.n=256", "--set", "build.eps=0.01"]);
    ok(&out);
    let s = json(&dir.path().join("summary.json"));
    let e = &s["energy"];
    let (el, surf, total) = (e["elastic"].as_f64().unwrap(), e["surface"].as_f64().unwrap(), e["total"].as_f64().unwrap());
    assert_eq!(total, el + 0.01 * surf);
    assert_eq!(s["interface_edges"], s["geometric_interface_edges"]);
    for name in ["phasefield.txt", "rectangles.csv", "config.toml"] {
        assert!(dir.path().join(name).exists());
    }
}

#[test]
fn unresolved_grid_fails_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let out = tartar(dir.path(), &["build", "--set", "build.m=3", "--set", "build.n=64"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "resolution");
}

#[test]
fn segment_datum_layers_recorded() {
    let dir = tempfile::tempdir().unwrap();
    ok(&tartar(dir.path(), &["build", "--set", "build.f=[-1.0, -2.0]", "--set", "build.m=1", "--set", "build.n=64"]));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["first_order"]["first_label"], "A1");
    assert_eq!(s["first_order"]["second_label"], "P1");
    assert_eq!(s["first_order"]["lambda"].as_f64(), Some(0.5));
}

#[test]
fn dump_round_trip_reproduces_energies() {
    let dir = tempfile::tempdir().unwrap();
    ok(&tartar(dir.path(), &["build", "--set", "build.m=3", "--set", "build.n=256", "--set", "build.eps=0.003"]));
    ok(&tartar(dir.path(), &["energy", "--set", "energy.f=[0.0, 0.0]", "--set", "energy.eps=0.003"]));
    let built = json(&dir.path().join("summary.json"));
    let again = json(&dir.path().join("energy.json"));
    assert_eq!(built["energy"], again["energy"]);
}

#[test]
fn unknown_keys_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = tartar(dir.path(), &["build", "--set", "build.size=3"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "config");
}

#[test]
fn config_file_and_normalized_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 9\n[build]\nn = 128\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tartar"))
        .args(["config", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    ok(&out);
    let echoed = String::from_utf8(out.stdout).unwrap();
    let parsed = tartar_cli::RunConfig::from_toml(&echoed).unwrap();
    assert_eq!((parsed.seed, parsed.build.n, parsed.build.m), (9, 128, 2));
    assert_eq!(parsed.normalized().trim_end(), echoed.trim_end());
}

#[test]
fn sweep_needs_eight_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = tartar(dir.path(), &["sweep", "--set", "sweep.eps=[0.1, 0.01]"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "insufficient-data");
}

#[test]
fn synthetic_rate_recovered_exactly() {
    let dir = tempfile::tempdir().unwrap();
    ok(&tartar(dir.path(), &["sweep", "--set", "sweep.synthetic_c=2.0"]));
    let fit = json(&dir.path().join("fit.json"));
    assert_eq!(fit["slope"].as_f64(), Some(-2.0));
    assert_eq!(fit["r2"].as_f64(), Some(1.0));
}

#[test]
fn sweep_artifacts_and_refit() {
    let dir = tempfile::tempdir().unwrap();
    ok(&tartar(dir.path(), &["sweep", "--set", "sweep.n_cap=0"]));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("eps,m_opt,r_opt,E_surrogate,E_grid,n_grid\n"));
    assert_eq!(csv.lines().count(), 54);
    let svg = fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("m=6"));
    let first = fs::read(dir.path().join("fit.json")).unwrap();
    ok(&tartar(dir.path(), &["fit"]));
    assert_eq!(fs::read(dir.path().join("fit.json")).unwrap(), first);
    assert!(json(&dir.path().join("fit.json"))["r2"].as_f64().unwrap() >= 0.98);
}

#[test]
fn bootstrap_termination_and_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let lam = "bootstrap.laminate={n = 256, m = 2, r = 0.25}";
    ok(&tartar(dir.path(), &["bootstrap", "--set", lam, "--set", "bootstrap.alpha=0.1"]));
    assert_eq!(json(&dir.path().join("bootstrap.json"))["termination_m"], 10);
    let lines = fs::read_to_string(dir.path().join("bootstrap.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 10);

    ok(&tartar(dir.path(), &["bootstrap", "--set", lam, "--set", "bootstrap.alpha=0.25"]));
    let p = BootstrapParams::new(0.25, 1e-3).unwrap();
    let schedule = mu_schedule(&p, 8).unwrap();
    for line in fs::read_to_string(dir.path().join("bootstrap.jsonl")).unwrap().lines() {
        let step: Value = serde_json::from_str(line).unwrap();
        for (key, idx) in [("mu_me", "m_e"), ("mu_mo", "m_o")] {
            let m = step[idx].as_u64().unwrap() as usize;
            let oracle = schedule.iter().find(|(k, _)| *k == m).unwrap().1;
            assert_eq!(step[key].as_f64().unwrap(), oracle);
        }
    }
}

#[test]
fn bootstrap_constant_field_is_silent() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("const.txt");
    fs::write(&dump, PhaseField::constant(Grid::new(16).unwrap(), Phase::A2).to_text()).unwrap();
    let set = format!("bootstrap.field={}", toml_string(&dump));
    ok(&tartar(dir.path(), &["bootstrap", "--set", &set]));
    for line in fs::read_to_string(dir.path().join("bootstrap.jsonl")).unwrap().lines() {
        let step: Value = serde_json::from_str(line).unwrap();
        assert_eq!(step["residual_f1"].as_f64(), Some(0.0));
        assert_eq!(step["residual_f2"].as_f64(), Some(0.0));
    }
}

#[test]
fn bootstrap_without_field_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = tartar(dir.path(), &["bootstrap"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "missing-input");
}

#[test]
fn thread_count_does_not_change_output() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    let run = |dir: &Path, threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_tartar"))
            .env("TARTAR_THREADS", threads)
            .arg("--out")
            .arg(dir)
            .args(["sweep", "--set", "sweep.k_max=24"])
            .output()
            .unwrap();
        ok(&out);
    };
    run(one.path(), "1");
    run(many.path(), "4");
    for name in ["sweep.csv", "fit.json", "sweep.json", "sweep.svg"] {
        assert_eq!(fs::read(one.path().join(name)).unwrap(), fs::read(many.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn verify_small_sizes_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = tartar(
        dir.path(),
        &["verify", "--set", "verify.oracle_fields=10", "--set", "verify.parseval_fields=10", "--set", "verify.rigidity_samples=500"],
    );
    ok(&out);
    let report = json(&dir.path().join("verify.json"));
    assert_eq!(report["all_pass"], true);
    assert!(report["properties"].as_array().unwrap().len() >= 10);
}

#[test]
fn verify_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = tartar(
        dir.path(),
        &["verify", "--set", "verify.oracle_fields=2", "--set", "verify.parseval_fields=2", "--set", "verify.concentration_bound=1e-6"],
    );
    assert_eq!(out.status.code(), Some(1));
    let report = json(&dir.path().join("verify.json"));
    assert_eq!(report["all_pass"], false);
}

fn toml_string(p: &Path) -> String {
    toml::Value::String(p.display().to_string()).to_string()
}
