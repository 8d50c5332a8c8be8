use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use snap_core::{evaluate, gen_planted, generate_distinct, kmeans, ncd, run, solve, DeltaPool, RunConfig};

fn bench_evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for vars in [200, 2000] {
        let p = gen_planted(vars, 3.0, 3, 1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(vars), &p, |b, p| {
            b.iter(|| evaluate(black_box(&p.formula), black_box(&p.solution)).unwrap())
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    for vars in [200, 1000] {
        let f = gen_planted(vars, 3.0, 3, 1).unwrap().formula;
        group.bench_with_input(BenchmarkId::new("single", vars), &f, |b, f| {
            let mut seed = 0;
            b.iter(|| {
                seed += 1;
                solve(f, None, seed).unwrap()
            })
        });
    }
    let f = gen_planted(200, 3.0, 3, 1).unwrap().formula;
    group.bench_function("distinct_100/200", |b| b.iter(|| generate_distinct(&f, 100, 1).unwrap()));
    group.finish();
}

fn bench_pool(c: &mut Criterion) {
    let f = gen_planted(500, 3.0, 3, 2).unwrap().formula;
    let samples = generate_distinct(&f, 100, 2).unwrap();
    let pool = DeltaPool::build(&samples).unwrap();
    c.bench_function("pool/build_100x500", |b| b.iter(|| DeltaPool::build(black_box(&samples)).unwrap()));
    c.bench_function("pool/sample", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        b.iter(|| pool.sample(&mut rng).unwrap().count_ones())
    });
    c.bench_function("kmeans/100x500_k5", |b| b.iter(|| kmeans(black_box(&samples), 5, 3).unwrap()));
    c.bench_function("ncd/100x500", |b| b.iter(|| ncd(black_box(&samples)).unwrap()));
}

fn bench_run(c: &mut Criterion) {
    let f = gen_planted(200, 3.0, 3, 1).unwrap().formula;
    let cfg = RunConfig {
        seed: 1,
        ..RunConfig::default()
    };
    let mut group = c.benchmark_group("run");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    group.bench_function("snap/200", |b| b.iter(|| run(&f, &cfg).unwrap().0.len()));
    group.finish();
}

criterion_group!(benches, bench_evaluate, bench_solve, bench_pool, bench_run);
criterion_main!(benches);
