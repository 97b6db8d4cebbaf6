use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use odin_core::aer::InputEvent;
use odin_core::engine::TimedEvent;
use odin_core::trace::write_input_trace;

fn odin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odin")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stats(path: &Path) -> Vec<(String, String)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn stat(s: &[(String, String)], key: &str) -> String {
    s.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone()).unwrap()
}

#[test]
fn energy_at_the_accelerated_point() {
    let o = odin(&["energy", "--fclk", "75M", "--rsop", "37.5M"]);
    assert!(o.status.success());
    let first = stdout(&o).lines().next().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    let p = v["total_power_w"].as_f64().unwrap();
    assert!((p - 476.925e-6).abs() < 1e-12, "{p}");
    let e = v["energy_per_sop_j"].as_f64().unwrap();
    assert!((e - 476.925e-6 / 37.5e6).abs() < 1e-18);
}

#[test]
fn energy_rejects_sop_rate_above_half_clock() {
    let o = odin(&["energy", "--fclk", "1M", "--rsop", "1M"]);
    assert_eq!(o.status.code(), Some(7));
}

#[test]
fn empty_trace_does_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("in.jsonl");
    let st = dir.path().join("stats.txt");
    fs::write(&trace, "").unwrap();
    let o = odin(&["run", "--trace", trace.to_str().unwrap(), "--stats", st.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "");
    let s = stats(&st);
    assert_eq!(stat(&s, "cycle_count"), "0");
    assert_eq!(stat(&s, "sop_count"), "0");
}

fn spike_trace(dir: &Path) -> String {
    let trace = dir.join("in.jsonl");
    let mut buf = Vec::new();
    write_input_trace(&mut buf, &[TimedEvent::new(0, InputEvent::NeuronSpike { source: 3 })]).unwrap();
    fs::write(&trace, buf).unwrap();
    trace.to_str().unwrap().to_string()
}

#[test]
fn one_neuron_spike_costs_a_full_row() {
    let dir = tempfile::tempdir().unwrap();
    let trace = spike_trace(dir.path());
    let cfg = dir.path().join("config.toml");
    let st = dir.path().join("stats.txt");
    fs::write(&cfg, "open_loop = true\n").unwrap();
    let o = odin(&["run", "--trace", &trace, "--config", cfg.to_str().unwrap(), "--stats", st.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stats(&st);
    assert_eq!(stat(&s, "sop_count"), "256");
    assert_eq!(stat(&s, "synapse_word_reads"), "32");
    assert_eq!(stat(&s, "truncated"), "false");
}

#[test]
fn runaway_closed_loop_is_truncated() {
    // Zeroed neurons have threshold 0, so every spike re-enters the core.
    let dir = tempfile::tempdir().unwrap();
    let trace = spike_trace(dir.path());
    let st = dir.path().join("stats.txt");
    let o = odin(&["run", "--trace", &trace, "--max-cycles", "20k", "--stats", st.to_str().unwrap(), "--out", dir.path().join("out.jsonl").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stats(&st);
    assert_eq!(stat(&s, "truncated"), "true");
    assert!(stat(&s, "cycle_count").parse::<u64>().unwrap() <= 20_000 + 512);
}

#[test]
fn trace_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = dir.path().join("a.jsonl");
    let reserved = dir.path().join("b.jsonl");
    fs::write(&bad_json, "{\"t_cycle\":0}\n").unwrap();
    fs::write(&reserved, "{\"t_cycle\":0,\"dir\":\"in\",\"raw\":\"0x1FFFF\"}\n").unwrap();
    assert_eq!(odin(&["run", "--trace", bad_json.to_str().unwrap()]).status.code(), Some(4));
    assert_eq!(odin(&["run", "--trace", reserved.to_str().unwrap()]).status.code(), Some(5));
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(odin(&["run", "--trace", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn ltp_requires_a_seed() {
    assert_eq!(odin(&["ltp"]).status.code(), Some(2));
}

#[test]
fn ltp_is_reproducible() {
    let a = odin(&["ltp", "--seed", "5", "--trials", "40"]);
    let b = odin(&["ltp", "--seed", "5", "--trials", "40", "--jobs", "2"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let v: serde_json::Value = serde_json::from_str(stdout(&a).trim()).unwrap();
    assert_eq!(v["trials"], 40);
    let k = v["potentiated"].as_u64().unwrap();
    assert!((v["probability"].as_f64().unwrap() - k as f64 / 40.0).abs() < 1e-12);
}

#[test]
fn behaviors_writes_a_trace_per_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = odin(&["behaviors", "--id", "tonic_spiking", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("id,name,packets,spikes,predicate"));
    assert!(lines.next().unwrap().ends_with(",pass"));
    assert!(dir.path().join("01_tonic_spiking.csv").exists());
    assert_eq!(odin(&["behaviors", "--id", "no_such_behavior"]).status.code(), Some(2));
}

#[test]
fn missing_mnist_is_a_dataset_error() {
    let dir = tempfile::tempdir().unwrap();
    let w = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/offline_weights.txt");
    let o = odin(&["infer-mnist", "--seed", "1", "--external", "--weights", w, "--mnist-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(8));
}
