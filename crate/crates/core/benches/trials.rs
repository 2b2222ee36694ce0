use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pdmatch::harness::{execute, Algorithm, ExperimentConfig, InstanceSource};
use pdmatch::par::Execution;

fn trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("fd_upper_triangular");
    group.sample_size(10);
    for n in [6, 10] {
        for exec in [Execution::Parallel, Execution::Sequential] {
            let mut cfg =
                ExperimentConfig::new(Algorithm::Fd, InstanceSource::UpperTriangular { n });
            cfg.trials = 500;
            cfg.audit = false;
            cfg.execution = exec;
            group.bench_with_input(
                BenchmarkId::new(format!("{exec:?}").to_lowercase(), n),
                &cfg,
                |b, cfg| b.iter(|| execute(cfg).unwrap()),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
