use std::path::{Path, PathBuf};
use std::process::Command;

use cloakbound::report::strip_timing;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn out_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cloakbound-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(args: &[&str], config: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_cloakbound"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--jobs", "2"])
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn vacuum_run_passes_with_zero_f_columns() {
    let out = out_dir("vacuum");
    assert_eq!(run(&["run"], &configs().join("vacuum.toml"), &out), 0);
    let mut rdr = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    for row in rdr.records() {
        let row = row.unwrap();
        for (h, v) in headers.iter().zip(row.iter()) {
            if h.starts_with("re_F") || h.starts_with("im_F") {
                assert!(v.parse::<f64>().unwrap().abs() <= 1e-12, "{h} = {v}");
            }
        }
    }
    let r = report(&out);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["status"] != "fail"));
}

#[test]
fn reversed_interval_exits_with_config_code() {
    assert_eq!(run(&["run"], &configs().join("bad_interval.toml"), &out_dir("bad")), 2);
}

#[test]
fn nonpositive_delta_exits_with_config_code() {
    let text = std::fs::read_to_string(configs().join("bench_affine_h.toml")).unwrap().replace("delta = 0.5", "delta = 0.0");
    let dir = out_dir("delta");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad_delta.toml");
    std::fs::write(&path, text).unwrap();
    assert_eq!(run(&["sumrule"], &path, &dir), 2);
}

#[test]
fn missing_config_exits_with_config_code() {
    assert_eq!(run(&["run"], Path::new("/nonexistent/cloakbound.toml"), &out_dir("missing")), 2);
}

#[test]
fn benchmarks_pass_with_documented_margins() {
    let out = out_dir("affine");
    assert_eq!(run(&["sumrule"], &configs().join("bench_affine_h.toml"), &out), 0);
    let r = report(&out);
    let ratio = r["checks"][0]["details"]["ratio"].as_f64().unwrap();
    assert!((ratio - 0.5).abs() <= 1e-6, "ratio {ratio}");

    let out = out_dir("drude");
    assert_eq!(run(&["sumrule"], &configs().join("bench_drude.toml"), &out), 0);
    let lossy = &report(&out)["checks"][1]["details"];
    assert!((lossy["lhs"].as_f64().unwrap() - 0.75).abs() <= 1e-12);
    assert!((lossy["max_w2f"].as_f64().unwrap() - 2.0).abs() <= 1e-12);

    assert_eq!(run(&["sumrule"], &configs().join("bench_lorentz.toml"), &out_dir("lorentz")), 0);
}

#[test]
fn vacuum_sumrule_is_skipped() {
    let out = out_dir("vacuum-sumrule");
    assert_eq!(run(&["sumrule"], &configs().join("vacuum.toml"), &out), 0);
    assert_eq!(report(&out)["checks"][0]["status"], "skipped-premise");
}

#[test]
fn identity_ledger_is_deterministic_and_seed_sensitive() {
    let cfg = configs().join("identities.toml");
    let (a, b) = (out_dir("det-a"), out_dir("det-b"));
    assert_eq!(run(&["verify-identities", "--seed", "5"], &cfg, &a), 0);
    assert_eq!(run(&["verify-identities", "--seed", "5"], &cfg, &b), 0);
    assert_eq!(strip_timing(report(&a)), strip_timing(report(&b)));
    let c = out_dir("det-c");
    assert_eq!(run(&["verify-identities", "--seed", "6"], &cfg, &c), 0);
    assert_ne!(strip_timing(report(&a)), strip_timing(report(&c)));
}

#[test]
fn help_documents_csv_columns() {
    let out = Command::new(env!("CARGO_BIN_EXE_cloakbound")).arg("--help").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("sweep.csv columns: omega"));
    assert!(text.contains("envelope[<label>]"));
}
