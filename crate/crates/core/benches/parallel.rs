use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pon_qkd::par::Execution;
use pon_qkd::postproc::privacy_amplification_with;
use pon_qkd::scenario::Scenario;
use pon_qkd::simcore::{run_scenario_with, RunOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn simulation(c: &mut Criterion) {
    let scenario = Scenario::preset("two-bob-interleave").unwrap();
    let mut group = c.benchmark_group("simulate-32k-packets");
    group.sample_size(10);
    for (name, execution) in MODES {
        let options = RunOptions { execution, force: false, packets: Some(32_768) };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_scenario_with(&scenario, 1, &options).unwrap())
        });
    }
    group.finish();
}

fn amplification(c: &mut Criterion) {
    let key: Vec<bool> = (0..50_000u32).map(|i| i.wrapping_mul(2_654_435_761) >> 31 == 1).collect();
    let mut group = c.benchmark_group("toeplitz-50k-bits");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| privacy_amplification_with(&key, 0.337, 7, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simulation, amplification);
criterion_main!(benches);
