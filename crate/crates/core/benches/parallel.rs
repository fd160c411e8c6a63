use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use overdamped_lab::coupling::{run_coupling, CouplingConfig};
use overdamped_lab::model::ModelSpec;
use overdamped_lab::sampling::{sample_mu_gamma, SamplerConfig};
use overdamped_lab::Execution;

fn strategies() -> Vec<(&'static str, Execution)> {
    vec![
        ("sequential", Execution::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Execution::Parallel),
    ]
}

fn coupling(c: &mut Criterion) {
    let m = ModelSpec::tilted_cosine_1d(1.0, 1.0, 8.0).unwrap();
    let cc = CouplingConfig::new(0.25, 8.0, 64);
    let mut g = c.benchmark_group("coupling_64_replicas");
    g.sample_size(10);
    for (name, exec) in strategies() {
        g.bench_function(name, |b| b.iter(|| black_box(run_coupling(&m, &cc, 1, exec).unwrap().1)));
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let m = ModelSpec::tilted_cosine_1d(1.0, 1.0, 4.0).unwrap();
    let cfg = SamplerConfig::default();
    let mut g = c.benchmark_group("sample_mu_gamma_1024");
    g.sample_size(10);
    for (name, exec) in strategies() {
        g.bench_function(name, |b| b.iter(|| black_box(sample_mu_gamma(&m, 1024, &cfg, 1, exec).unwrap().ess)));
    }
    g.finish();
}

criterion_group!(benches, coupling, sampling);
criterion_main!(benches);
