//! Decomposition throughput, parallel against single-threaded.
//!
//! With the `rayon` feature (default) the same workload runs once on the
//! default thread pool and once pinned to a single thread, so the two lines
//! measure the parallel speedup directly. Without the feature only the
//! sequential path exists.

use criterion::{criterion_group, criterion_main, Criterion};
use quasilocal::decompose::{
    decompose_ns_channel, Algorithm, DecomposeOptions, FactorMode, Objective,
};
use quasilocal::theories::{build_theory, random_ns_channel, TheoryId};

fn run(c: &mut Criterion, label: &str, options: &DecomposeOptions) {
    let gbit = build_theory(&TheoryId::Gbit).unwrap();
    let parties = [
        (TheoryId::Gbit, TheoryId::Gbit),
        (TheoryId::Gbit, TheoryId::Gbit),
    ];
    let map = random_ns_channel(&parties, 7, 0.5).unwrap();
    let frames = [&gbit, &gbit];
    let mut group = c.benchmark_group(label);
    group.sample_size(10);

    #[cfg(feature = "rayon")]
    {
        group.bench_function("parallel", |b| {
            b.iter(|| decompose_ns_channel(&map, &frames, &frames, options).unwrap())
        });
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function("single_thread", |b| {
            b.iter(|| {
                pool.install(|| decompose_ns_channel(&map, &frames, &frames, options).unwrap())
            })
        });
    }
    #[cfg(not(feature = "rayon"))]
    group.bench_function("sequential", |b| {
        b.iter(|| decompose_ns_channel(&map, &frames, &frames, options).unwrap())
    });
    group.finish();
}

fn bench_pipeline_feasible(c: &mut Criterion) {
    run(
        c,
        "gbit2_pipeline_feasible",
        &DecomposeOptions {
            mode: FactorMode::ChannelFactors,
            algorithm: Algorithm::Pipeline,
            objective: Objective::Feasible,
            tol: 1e-7,
        },
    );
}

fn bench_direct_min_negativity(c: &mut Criterion) {
    run(
        c,
        "gbit2_direct_min_negativity",
        &DecomposeOptions {
            mode: FactorMode::DpFactors,
            algorithm: Algorithm::Direct,
            objective: Objective::MinNegativity,
            tol: 1e-7,
        },
    );
}

criterion_group!(benches, bench_pipeline_feasible, bench_direct_min_negativity);
criterion_main!(benches);
