//! Throughput of the window step: a trial of T steps should cost Theta(T)
//! regardless of n and M.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use expcoll_core::sim::WindowState;
use expcoll_core::ModelParams;

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("window_step");
    let steps = 100_000u64;
    for (n, window) in [(12u64, 12u64), (100, 500), (1_000, 8_000)] {
        let params = ModelParams::new(n, window).unwrap();
        group.throughput(Throughput::Elements(steps));
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("n{n}_M{window}")),
            &params,
            |b, &params| {
                b.iter(|| {
                    let mut rng = ChaCha8Rng::seed_from_u64(7);
                    let dist = Uniform::new_inclusive(1u32, n as u32).unwrap();
                    let mut state = WindowState::new(params);
                    let mut entries = 0u64;
                    for _ in 0..steps {
                        entries += state.step(dist.sample(&mut rng)).entered as u64;
                    }
                    entries
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_step);
criterion_main!(benches);
