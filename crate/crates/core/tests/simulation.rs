use pon_qkd::io::{read_report, write_bundle};
use pon_qkd::par::Execution;
use pon_qkd::postproc::{distill, sift, AmplificationStatus};
use pon_qkd::scenario::{Scenario, ScenarioConfig};
use pon_qkd::simcore::{expected_raw_rate, run_scenario_with, BitSource, Detector, RunOptions, SimRun};
use pon_qkd::units::Time;

fn run(s: &Scenario, seed: u64, packets: u64, execution: Execution) -> SimRun {
    run_scenario_with(s, seed, &RunOptions { execution, force: false, packets: Some(packets) }).unwrap()
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let s = Scenario::preset("two-bob-interleave").unwrap();
    let a = run(&s, 42, 10_000, Execution::Sequential);
    let b = run(&s, 42, 10_000, Execution::Parallel);
    assert_eq!(a.report, b.report);
    assert_eq!(a.ledgers, b.ledgers);
    let c = run(&s, 43, 10_000, Execution::Parallel);
    assert_ne!(a.report.records, c.report.records);
}

#[test]
fn records_respect_windows_and_dead_time() {
    let s = Scenario::preset("paper-demo").unwrap();
    let r = run(&s, 3, 20_000, Execution::Parallel).report;
    let dead_ps = (s.detector.dead_time * 1e12).round() as u64;
    let mut last = [None::<u64>; 2];
    for rec in &r.records {
        assert!(rec.user.is_some());
        let w = &s.schedule.users[0].signal;
        let phase = (rec.time_ps % r.meta.period_ps) as f64 * 1e-12;
        assert!(phase >= w.start - 1e-12 && phase < w.end, "{rec:?}");
        if let Some(prev) = last[rec.detector.index()] {
            assert!(rec.time_ps - prev >= dead_ps);
        }
        last[rec.detector.index()] = Some(rec.time_ps);
    }
    assert_eq!(r.histogram.total(), r.records.len() as u64);
}

#[test]
fn interleaved_units_return_in_disjoint_clusters() {
    let s = Scenario::preset("two-bob-interleave").unwrap();
    let r = run(&s, 1, 20_000, Execution::Parallel).report;
    let mut spans = Vec::new();
    for leaf in [0usize, 3] {
        let phases: Vec<u64> =
            r.records.iter().filter(|x| x.user == Some(leaf)).map(|x| x.time_ps % r.meta.period_ps).collect();
        assert!(phases.len() > 1000);
        spans.push((*phases.iter().min().unwrap(), *phases.iter().max().unwrap()));
    }
    spans.sort();
    assert!(spans[0].1 < spans[1].0, "{spans:?}");
}

#[test]
fn bundle_round_trips_a_real_run() {
    let s = Scenario::preset("two-bob-interleave").unwrap();
    let sim = run(&s, 9, 8_192, Execution::Parallel);
    let keys = distill(&s, &sim, Execution::Parallel).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_bundle(dir.path(), &s, &sim.report, &keys, false).unwrap();
    assert_eq!(read_report(dir.path()).unwrap(), sim.report);
    assert!(write_bundle(dir.path(), &s, &sim.report, &keys, false).is_err());
    let first = std::fs::read(dir.path().join("records.csv")).unwrap();
    write_bundle(dir.path(), &s, &sim.report, &keys, true).unwrap();
    assert_eq!(std::fs::read(dir.path().join("records.csv")).unwrap(), first);
}

#[test]
fn sifted_error_rate_follows_visibility() {
    for v in [0.9, 0.98] {
        let mut c = ScenarioConfig::preset("pattern-prbs").unwrap();
        c.mzi.visibility = v;
        c.bobs[0].bits = BitSource::Random;
        let s = Scenario::from_config(c).unwrap();
        let sim = run(&s, 11, 1_000_000, Execution::Parallel);
        let key = sift(&sim.report.records, sim.ledger(0).unwrap()).unwrap().key;
        let n = key.len() as f64;
        let e = key.errors() as f64 / n;
        let expected = (1.0 - v) / 2.0;
        assert!(n >= 1e5);
        assert!((e - expected).abs() < 4.0 * (expected * (1.0 - expected) / n).sqrt(), "V={v}: {e} vs {expected}");
    }
}

#[test]
fn simulated_rate_matches_the_closed_form() {
    let mut c = ScenarioConfig::preset("paper-demo").unwrap();
    c.detector.dead_time = Time(0.0);
    let s = Scenario::from_config(c).unwrap();
    let sim = run(&s, 5, 200_000, Execution::Parallel);
    let model = expected_raw_rate(&s);
    let counts = sim.report.records.len() as f64;
    let expected = model.window_rate * sim.report.meta.duration_s;
    // Poisson error on the count
    assert!((counts - expected).abs() < 4.0 * expected.sqrt(), "{counts} vs {expected}");
}

#[test]
fn dead_time_lowers_the_count_rate() {
    let s = Scenario::preset("paper-demo").unwrap();
    let sim = run(&s, 5, 100_000, Execution::Parallel);
    let model = expected_raw_rate(&s);
    assert!(sim.report.raw_count_rate < model.window_rate * 0.97);
}

#[test]
fn pattern_histograms_follow_the_key_bits() {
    let s = Scenario::preset("pattern-alternating").unwrap();
    let sim = run(&s, 2, 50_000, Execution::Parallel);
    let h = &sim.report.histogram;
    // key bits 1,0,1,0,...: odd key slots light B, even ones light A
    for slot in 1..20 {
        let (a, b) = (h.count(0, slot, Detector::A), h.count(0, slot, Detector::B));
        if slot % 2 == 1 {
            assert!(b > 10 * a, "slot {slot}: A {a} B {b}");
        } else {
            assert!(a > 10 * b, "slot {slot}: A {a} B {b}");
        }
    }
}

#[test]
fn paper_rate_scenario_reaches_the_expected_key_rate() {
    let s = Scenario::preset("paper-rates").unwrap();
    let model = expected_raw_rate(&s);
    let linear = model.users[0].factors.linear_signal_rate;
    assert!((linear - 31_006.0).abs() < 5.0, "{linear}");
    let sim = run(&s, 1, 2_000_000, Execution::Parallel);
    let keys = distill(&s, &sim, Execution::Parallel).unwrap();
    let k = &keys[0];
    assert!((k.transmissivity - 0.2).abs() < 1e-4);
    assert!((k.qber - 0.027).abs() < 0.002, "{}", k.qber);
    assert!((k.secure_fraction - 0.337).abs() <= 0.01, "{}", k.secure_fraction);
    assert!(k.raw_rate_pinned);
    assert!((3300.0..=3450.0).contains(&k.final_rate), "{}", k.final_rate);
    assert_eq!(k.residual_errors, 0);
    assert_eq!(k.amplification, Some(AmplificationStatus::Complete));
    assert_eq!(k.final_key_length, (k.reconciled_length as f64 * k.secure_fraction).floor() as usize);
    let eff = k.reconciliation_efficiency.unwrap();
    assert!(eff < 1.10, "{eff}");
}

#[test]
fn noiseless_run_distills_without_leakage() {
    let mut c = ScenarioConfig::preset("pattern-prbs").unwrap();
    c.mzi.visibility = 1.0;
    c.source.extinction_static = pon_qkd::units::Decibel(300.0);
    let s = Scenario::from_config(c).unwrap();
    let sim = run(&s, 4, 100_000, Execution::Parallel);
    let k = &distill(&s, &sim, Execution::Parallel).unwrap()[0];
    assert_eq!(k.qber_sample.unwrap().errors, 0);
    assert_eq!(k.leaked_bits, 0);
    assert_eq!(k.qber, 0.0);
    assert!(k.final_key_length > 0);
}
