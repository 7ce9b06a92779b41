use std::path::Path;
use std::process::{Command, Output, Stdio};

use pon_qkd::io::read_report;
use pon_qkd::postproc::{cascade_reconcile, CascadePreset, ParityResponder, StreamOracle};
use pon_qkd::scenario::PRESETS;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pon-qkd"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn preset_text(name: &str) -> String {
    PRESETS.iter().find(|(n, _)| *n == name).unwrap().1.to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_demo_passes_and_notes_the_forced_period() {
    let o = run(&["validate", "paper-demo"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("T_r(min)"));
    assert!(text.contains("period forced to 8192.000 ns"));
    assert!(text.contains("rate factors"));
    assert!(text.trim_end().ends_with("PASS"));
}

#[test]
fn validate_short_storage_names_the_violation() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_text("paper-demo").replace("storage_length = \"200 m\"", "storage_length = \"10 m\"");
    let path = write(dir.path(), "short.toml", &text);
    let o = run(&["validate", &path]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{out}");
    assert!(out.contains("silence violation"));
    assert!(out.trim_end().ends_with("FAIL"));
}

#[test]
fn validate_twin_units_fail_on_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = preset_text("paper-demo");
    text.push_str("\n[[bob]]\nleaf = 1\nstorage_length = \"200 m\"\nmu_target = 0.1\nbits = { kind = \"random\" }\n");
    let path = write(dir.path(), "twins.toml", &text);
    let o = run(&["validate", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL: return windows of users"));
}

#[test]
fn unknown_keys_are_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_text("paper-demo").replace("[mzi]", "[mzi]\nvisibilty = 0.9");
    let path = write(dir.path(), "typo.toml", &text);
    let o = run(&["validate", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("visibilty"));
}

#[test]
fn keyrate_reports_the_rate_chain() {
    let o = run(&["keyrate", "--mu", "0.1", "-t", "0.2", "-e", "0.027", "-f", "1.05", "--raw-rate", "10000"]);
    let text = stdout(&o);
    assert!(o.status.success());
    assert!(text.contains("h(e)            0.17912"), "{text}");
    assert!(text.contains("secure fraction 0.3374"));
    assert!(text.contains("final rate      3374.3 bits/s"));
    let o = run(&["keyrate", "-t", "1e-7"]);
    assert!(stdout(&o).contains("secure fraction 0.3124"));
    let o = run(&["keyrate", "--mu=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["keyrate", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn keyrate_sweep_is_csv_on_a_log_grid() {
    let o = run(&["keyrate", "--sweep-t", "1e-6:1e-2:5"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "transmissivity,secure_fraction,final_rate");
    assert_eq!(lines.len(), 6);
    let t: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(t[0], 1e-6);
    assert_eq!(t[4], 1e-2);
    for w in t.windows(2) {
        assert!((w[1] / w[0] - 10.0).abs() < 1e-9);
    }
    assert_eq!(run(&["keyrate", "--sweep-t", "1:0.1:3"]).status.code(), Some(1));
}

#[test]
fn run_writes_a_bundle_that_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let out_s = out.to_str().unwrap();
    let o = run(&["run", "paper-demo", "--packets", "8192", "--seed", "5", "--out", out_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["records.csv", "histogram.csv", "stray_profile.csv", "schedule.csv", "key_report.json", "meta.json"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        let digest_line = if f.ends_with(".json") { text.contains("\"config_digest\"") } else { text.starts_with("# config_digest=") };
        assert!(digest_line, "{f}");
    }
    let report = read_report(&out).unwrap();
    assert_eq!(report.meta.seed, 5);
    assert_eq!(report.meta.packets, 8192);

    // refuses to overwrite, then replaces on request with identical bytes
    let first = std::fs::read(out.join("records.csv")).unwrap();
    let again = run(&["run", "paper-demo", "--packets", "8192", "--seed", "5", "--out", out_s]);
    assert_eq!(again.status.code(), Some(2));
    let again = run(&["run", "paper-demo", "--packets", "8192", "--seed", "5", "--out", out_s, "--overwrite", "--sequential"]);
    assert!(again.status.success());
    assert_eq!(std::fs::read(out.join("records.csv")).unwrap(), first);
}

#[test]
fn run_refuses_a_silence_failure_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_text("paper-demo").replace("storage_length = \"200 m\"", "storage_length = \"10 m\"");
    let path = write(dir.path(), "short.toml", &text);
    let out = dir.path().join("o");
    let o = run(&["run", &path, "--packets", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["run", &path, "--packets", "100", "--force", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_writes_one_bundle_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "sweep",
        "two-bob-interleave",
        "--packets",
        "4096",
        "--seed",
        "10",
        "--seeds",
        "3",
        "--jobs",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let text = stdout(&o);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(text.lines().count(), 1 + 3 * 2);
    for seed in 10..13 {
        let r = read_report(&dir.path().join(format!("seed-{seed}"))).unwrap();
        assert_eq!(r.meta.seed, seed);
    }
}

#[test]
fn parity_server_speaks_the_wire_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let n = 2000;
    let bob: Vec<bool> = (0..n).map(|i| (i * 7919) % 13 < 6).collect();
    let mut alice = bob.clone();
    for i in (0..n).step_by(41) {
        alice[i] ^= true;
    }
    let text: String = bob.iter().map(|&b| if b { '1' } else { '0' }).collect();
    let key = write(dir.path(), "bob.key", &text);
    let mut child = bin()
        .args(["parity-server", &key, "--seed", "77"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let params = CascadePreset::Optimized.params(77);
    let reader = std::io::BufReader::new(child.stdout.take().unwrap());
    let mut oracle = StreamOracle::new(reader, child.stdin.take().unwrap());
    let remote = cascade_reconcile(&alice, &mut oracle, 0.025, &params).unwrap();
    oracle.finish().unwrap();
    assert!(child.wait().unwrap().success());

    let mut local_peer = ParityResponder::new(bob.clone(), 77);
    let local = cascade_reconcile(&alice, &mut local_peer, 0.025, &params).unwrap();
    assert_eq!(remote, local);
    assert_eq!(remote.key, bob);
}
