use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qbm_core::sampler::{annealer_boltzmann_run, gibbs_sample};
use qbm_core::{exact_moments, AnnealConfig, AnnealerSettings, BoltzmannMachine, GibbsConfig};

fn model(n: usize) -> BoltzmannMachine {
    // Deterministic and mildly frustrated.
    let mut bm = BoltzmannMachine::zeros(n);
    for i in 0..n {
        bm.set_bias(i, ((i * 7 % 5) as f64 - 2.0) * 0.3);
        for j in (i + 1)..n {
            bm.set_weight(i, j, (((i + 2 * j) % 7) as f64 - 3.0) * 0.2);
        }
    }
    bm
}

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_moments");
    for n in [8, 12, 16] {
        let bm = model(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &bm, |b, bm| {
            b.iter(|| exact_moments(black_box(bm)).unwrap())
        });
    }
    g.finish();
}

fn gibbs(c: &mut Criterion) {
    let mut g = c.benchmark_group("gibbs_1000_samples");
    for n in [8, 16, 32] {
        let bm = model(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &bm, |b, bm| {
            b.iter(|| gibbs_sample(black_box(bm), &GibbsConfig::default(), 1000).unwrap())
        });
    }
    g.finish();
}

fn anneal(c: &mut Criterion) {
    let mut g = c.benchmark_group("annealer_100_reads");
    g.sample_size(10);
    for mult in [1, 2] {
        let bm = model(5);
        let settings = AnnealerSettings::new(
            AnnealConfig {
                reads: 100,
                ..Default::default()
            },
            mult,
        );
        g.bench_with_input(BenchmarkId::new("chain_multiplier", mult), &settings, |b, s| {
            b.iter(|| annealer_boltzmann_run(black_box(&bm), s).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, exact, gibbs, anneal);
criterion_main!(benches);
