use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use conelab::cli::manifest::{list_files, read_table, ERROR_FILE};
use conelab::cli::{emit_plots, ExperimentConfig, RunManifest};
use conelab::microlocal::scan::RegularityReport;
use conelab::Error;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_conelab"));
    c.env_remove("CONELAB_OUT");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run_config(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> =
        list_files(dir).unwrap().into_iter().map(|p| (p.clone(), fs::read(dir.join(&p)).unwrap())).collect();
    files.sort();
    files
}

const SMALL_FUNDAMENTAL: &str = "\
kind = fundamental
metric.circumference = 4pi
metric.x_max = 3.6
source.x = 1
source.sigma = 0.08
solver.t_final = 1.5
output.times = 0.5, 1.5
grid.nx = 24
grid.ntheta = 48
";

const SMALL_REGULARITY: &str = "\
kind = regularity
metric.circumference = 4pi
metric.x_max = 4
source.x = 1
source.sigma = 0.03
probes.points = 0.5:2pi, 0.5:0
scan.t_start = 0
scan.t_end = 2.6
scan.half_width = 1.2
scan.stride = 0.35
check.max_anomalies = 0
";

#[test]
fn flow_config_passes_and_lists_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("flow");
    let o = run_config("flow", &configs().join("flow_model.cfg"), &out, &["--plots"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[PASS]"));
    let m = RunManifest::load(&out).unwrap();
    assert!(m.passed && !m.criteria.is_empty());
    let listed: Vec<String> = {
        let mut v: Vec<String> = m.files.iter().map(|f| f.path.clone()).collect();
        v.sort();
        v
    };
    assert_eq!(listed, list_files(&out).unwrap());
    assert!(listed.iter().any(|p| p.starts_with("plots/")));
    m.verify(&out).unwrap();
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "f.cfg", SMALL_FUNDAMENTAL);
    let out = tmp.path().join("run");
    assert!(run_config("fundamental", &cfg, &out, &[]).status.success());
    let first = snapshot(&out);
    assert!(run_config("fundamental", &cfg, &out, &[]).status.success());
    // everything except the manifest, whose wall-clock entry varies
    assert_eq!(first, snapshot(&out));
}

#[test]
fn fundamental_run_records_both_fronts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "f.cfg", SMALL_FUNDAMENTAL);
    let out = tmp.path().join("run");
    let o = run_config("fundamental", &cfg, &out, &["--plots"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = RunManifest::load(&out).unwrap();
    assert!(!m.certificates.is_empty());
    // at t = 1.5 the diffracted circle x = 0.5 exists beside the direct front
    let loci = read_table(&out, "loci_1.csv").unwrap();
    let front = loci.column("front").unwrap();
    let names: Vec<String> = loci
        .rows
        .iter()
        .map(|r| match &r[front] {
            conelab::cli::manifest::Cell::Text(s) => s.clone(),
            other => panic!("front cell {other:?}"),
        })
        .collect();
    assert!(names.iter().any(|n| n == "direct"));
    assert!(names.iter().any(|n| n == "diffracted"));
    let x = loci.column("x").unwrap();
    for (r, n) in loci.rows.iter().zip(&names) {
        if n == "diffracted" {
            assert!((r[x].as_f64().unwrap() - 0.5).abs() < 1e-12);
        }
    }
    assert!(out.join("plots/loci_1.dat").exists());
    assert_eq!(list_files(&out).unwrap().len(), m.files.len());
}

#[test]
fn causal_margin_violation_exits_3_with_an_error_record() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    let o = run_config("fundamental", &configs().join("causal_violation.cfg"), &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let err: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(ERROR_FILE)).unwrap()).unwrap();
    assert_eq!(err["exit_code"], 3);
    assert!(err["message"].as_str().unwrap().contains("X_max"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn schema_violations_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown key", "kind = flow\nflow.rays = 4\nflow.colour = red\n"),
        ("duplicate key", "kind = flow\nflow.rays = 4\nflow.rays = 5\n"),
        ("bad number", "kind = flow\nflow.tol = small\n"),
        ("negative size", "kind = flow\nflow.rays = -3\n"),
        ("unknown kind", "kind = sideways\nflow.rays = 4\n"),
    ];
    for (what, text) in cases {
        let cfg = write_config(tmp.path(), "bad.cfg", text);
        let o = run_config("flow", &cfg, &tmp.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(2), "{what}: {}", String::from_utf8_lossy(&o.stderr));
    }
    // subcommand and config disagree
    let o = run_config("relation", &configs().join("flow_model.cfg"), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn impossible_tolerance_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("flow_model.cfg")).unwrap().replace("check.max_error = 1e-8", "check.max_error = 1e-30");
    let cfg = write_config(tmp.path(), "strict.cfg", &text);
    let out = tmp.path().join("out");
    let o = run_config("flow", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL]"));
    let m = RunManifest::load(&out).unwrap();
    assert!(!m.passed && m.criteria.iter().any(|c| !c.passed));
}

#[test]
fn tampering_is_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rel");
    assert!(run_config("relation", &configs().join("relation_4pi.cfg"), &out, &[]).status.success());
    let m = RunManifest::load(&out).unwrap();
    m.verify(&out).unwrap();
    let victim = out.join(&m.files[0].path);
    let mut bytes = fs::read(&victim).unwrap();
    bytes[0] ^= 1;
    fs::write(&victim, bytes).unwrap();
    let err = m.verify(&out).unwrap_err();
    assert!(matches!(err, Error::Integrity(_)), "{err}");
    assert_eq!(err.exit_code(), 5);
    assert!(matches!(emit_plots(&out), Err(Error::Integrity(_))));
}

#[test]
fn output_directory_comes_from_the_environment_when_no_flag_is_given() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("from-env");
    let o = bin()
        .current_dir(tmp.path())
        .args(["relation", "--config"])
        .arg(configs().join("relation_4pi.cfg"))
        .env("CONELAB_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.json").exists());
    assert!(!tmp.path().join("conelab-out").exists());
    // an explicit flag wins
    let flag = tmp.path().join("from-flag");
    let o = bin()
        .args(["relation", "--config"])
        .arg(configs().join("relation_4pi.cfg"))
        .arg("--out")
        .arg(&flag)
        .env("CONELAB_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag.join("manifest.json").exists());
}

#[test]
fn foreign_output_directory_is_left_alone() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mine");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("notes.txt"), "keep me").unwrap();
    let o = run_config("relation", &configs().join("relation_4pi.cfg"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_to_string(out.join("notes.txt")).unwrap(), "keep me");
}

#[test]
fn regularity_plot_rows_match_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "r.cfg", SMALL_REGULARITY);
    let out = tmp.path().join("reg");
    let o = run_config("regularity", &cfg, &out, &["--plots"]);
    assert!(o.status.success(), "{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    let report: RegularityReport = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let dat = fs::read_to_string(out.join("plots/regularity.dat")).unwrap();
    let rows: Vec<Vec<f64>> = dat
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), report.entries.len());
    for (r, e) in rows.iter().zip(&report.entries) {
        assert_eq!(r[1], e.estimate.location.t);
        assert_eq!(r[2], e.estimate.location.x);
        assert_eq!(r[4], e.estimate.s);
    }
    let table = read_table(&out, "regularity.csv").unwrap();
    assert_eq!(table.rows.len(), report.entries.len());
}

#[test]
fn empty_probe_set_gives_empty_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL_REGULARITY.replace("probes.points = 0.5:2pi, 0.5:0", "probes.points = none");
    let cfg = write_config(tmp.path(), "r.cfg", &text);
    let out = tmp.path().join("reg");
    let o = run_config("regularity", &cfg, &out, &["--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: RegularityReport = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.entries.is_empty());
    assert!(read_table(&out, "regularity.json").unwrap().rows.is_empty());
}

#[test]
fn bundled_configs_parse_validate_and_round_trip() {
    let mut seen = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("cfg") {
            continue;
        }
        let c = ExperimentConfig::load(&path).unwrap();
        let kind = c.validate().unwrap();
        let back = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back.to_text(), c.to_text(), "{}", path.display());
        assert_eq!(back.hash(), c.hash());
        assert_eq!(back.validate().unwrap(), kind);
        seen += 1;
    }
    assert!(seen >= 10);
}
