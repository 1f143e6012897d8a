use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use instanton_core::certify::classify_and_certify;
use instanton_core::record::RecordDocument;
use instanton_core::search::InstantonRecord;
use instanton_core::{ChannelModel, ParityCheckCode};
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_instanton")).args(args).output().expect("binary runs")
}

fn status(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn tanner_id() -> String {
    hex::encode(Sha256::digest(ParityCheckCode::tanner_155().to_alist().as_bytes()))
}

fn laplacian_record(entries: &[(usize, f64)]) -> InstantonRecord {
    let mut xi = vec![0.0; 155];
    for &(b, v) in entries {
        xi[b] = v;
    }
    let channel = ChannelModel::laplacian(1.0);
    InstantonRecord {
        length: channel.noise_length(&xi),
        xi,
        target_bit: 0,
        n_it: 4,
        channel,
    }
}

/// Writes a record with the certificate computed by the library.
fn write_certified(dir: &TempDir, name: &str, rec: &InstantonRecord) -> PathBuf {
    let cert = classify_and_certify(&ParityCheckCode::tanner_155(), rec).unwrap();
    let doc = RecordDocument::new(rec, &tanner_id(), Some(&cert));
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path
}

#[test]
fn exit_codes_for_bad_invocations() {
    assert_eq!(status(&["--help"]), 0);
    assert_eq!(status(&[]), 1);
    assert_eq!(status(&["frobnicate"]), 1);
    assert_eq!(status(&["gen-code"]), 1);
    assert_eq!(status(&["mc", "--snr", "abc"]), 1);
    assert_eq!(status(&["mc", "--snr", "3:1:2"]), 1);
    assert_eq!(status(&["mc", "--snr", "2", "--iters", "0"]), 1);
    assert_eq!(status(&["curves", "--l-inst", "0", "--snr", "2"]), 1);
    assert_eq!(status(&["curves", "--l-inst", "7.6", "--snr", "-1"]), 1);
    assert_eq!(status(&["instanton", "--anneal", "hot"]), 1);
    assert_eq!(status(&["certify", "--record", "/nonexistent/record.json"]), 2);
}

#[test]
fn gen_code_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.alist");
    let b = dir.path().join("b.alist");
    assert_eq!(status(&["gen-code", "--tanner155", "-o", path_str(&a)]), 0);
    assert_eq!(status(&["gen-code", "--tanner155", "-o", path_str(&b)]), 0);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let code = ParityCheckCode::from_alist(&text).unwrap();
    assert_eq!((code.n_bits(), code.n_checks()), (155, 93));
    let manifest = read_json(&dir.path().join("a.alist.manifest.json"));
    assert_eq!(manifest["code_id"], Value::String(tanner_id()));
    assert_eq!(manifest["command"], "gen-code");
}

#[test]
fn instanton_output_is_sorted_and_worker_independent() {
    let dir = TempDir::new().unwrap();
    let one = dir.path().join("one.json");
    let two = dir.path().join("two.json");
    let common = ["instanton", "--target", "0", "--restarts", "6", "--seed", "4"];
    let mut args = common.to_vec();
    args.extend(["--workers", "1", "-o", path_str(&one)]);
    assert_eq!(status(&args), 0);
    let mut args = common.to_vec();
    args.extend(["--workers", "2", "-o", path_str(&two)]);
    assert_eq!(status(&args), 0);
    let (a, b) = (read_json(&one), read_json(&two));
    assert_eq!(a["records"], b["records"]);
    assert_eq!(a["summary"], b["summary"]);
    assert_eq!(a["manifest"]["seed"], 4);

    let records = a["records"].as_array().unwrap();
    assert!(!records.is_empty());
    let lengths: Vec<f64> = records.iter().map(|r| r["length"].as_f64().unwrap()).collect();
    assert!(lengths.windows(2).all(|w| w[0] <= w[1]));
    for r in records {
        let doc: RecordDocument = serde_json::from_value(r.clone()).unwrap();
        assert_eq!(serde_json::to_value(&doc).unwrap(), *r);
        assert_eq!(doc.code_id, tanner_id());
        // exactly one of certificate and warning
        assert_ne!(doc.certificate.is_some(), doc.warning.is_some());
    }
}

#[test]
fn certify_round_trip() {
    let dir = TempDir::new().unwrap();
    let a = write_certified(&dir, "a.json", &laplacian_record(&[(11, 2.0), (47, 2.0), (100, 1.8), (104, 1.8)]));
    let out = dir.path().join("a.out.json");
    assert_eq!(status(&["certify", "--record", path_str(&a), "-o", path_str(&out)]), 0);
    let entries = read_json(&out);
    assert_eq!(entries[0]["certificate"]["length_exact"], "38/5");
    assert_eq!(entries[0]["certificate"]["degeneracy"]["h_sum"], "-8/5");

    let c = write_certified(&dir, "c.json", &laplacian_record(&[(0, 2.0), (4, 2.0), (20, 2.0), (82, 2.0)]));
    let out = dir.path().join("c.out.json");
    assert_eq!(status(&["certify", "--record", path_str(&c), "-o", path_str(&out)]), 0);
    let cert = &read_json(&out)[0]["certificate"];
    assert_eq!(cert["length_exact"], "8");
    assert_eq!(cert["m_2"], 4);
    assert!(cert.get("degeneracy").is_none());
}

#[test]
fn tampered_records_fail() {
    let dir = TempDir::new().unwrap();
    let path = write_certified(&dir, "a.json", &laplacian_record(&[(11, 2.0), (47, 2.0), (100, 1.8), (104, 1.8)]));
    let mut doc: Value = read_json(&path);
    for x in doc["xi"].as_array_mut().unwrap() {
        *x = Value::from(x.as_f64().unwrap() * 1.1);
    }
    std::fs::write(&path, doc.to_string()).unwrap();
    assert_eq!(status(&["certify", "--record", path_str(&path)]), 2);

    let wrong_code = write_certified(&dir, "b.json", &laplacian_record(&[(0, 2.0), (4, 2.0), (20, 2.0), (82, 2.0)]));
    let mut doc = read_json(&wrong_code);
    doc["code_id"] = Value::from("00");
    std::fs::write(&wrong_code, doc.to_string()).unwrap();
    assert_eq!(status(&["certify", "--record", path_str(&wrong_code)]), 2);
    assert_eq!(status(&["certify", "--record", path_str(&wrong_code), "--index", "3"]), 1);
}

#[test]
fn mc_then_curves() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("mc.csv");
    let args = ["mc", "--snr", "1.8:0.2:2.0", "--min-errors", "5", "--max-trials", "20000", "-o", path_str(&csv)];
    assert_eq!(status(&args), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], instanton_core::montecarlo::CSV_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1.8,"));
    let manifest = read_json(&dir.path().join("mc.csv.manifest.json"));
    assert_eq!(manifest["config"]["mc"]["min_errors"], 5);

    let curves = dir.path().join("curves.csv");
    let args = [
        "curves", "--l-inst", "7.6", "--l-ml", "20", "--snr", "2:0.5:3", "--fit", path_str(&csv), "-o", path_str(&curves),
    ];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("decades"));
    let text = std::fs::read_to_string(&curves).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["snr", "slope_inst", "slope_ml", "semianalytic"]);
    assert_eq!(rows.len(), 4);
    let semi: Vec<f64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert!((semi[0] - (-15.2f64).exp()).abs() < 1e-3 * semi[0]);
    // both slope lines fall at their own rate
    let col = |k: usize| rows[1..].iter().map(|r| r[k].parse::<f64>().unwrap().ln()).collect::<Vec<_>>();
    let (inst, ml) = (col(1), col(2));
    assert!((inst[1] - inst[0] + 3.8).abs() < 1e-9);
    assert!((ml[1] - ml[0] + 10.0).abs() < 1e-9);
}

#[test]
fn curves_without_ml_leaves_the_column_empty() {
    let out = run(&["curves", "--l-inst", "10.076", "--channel", "gaussian", "--snr", "2,3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let second: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(second[2], "");
}
