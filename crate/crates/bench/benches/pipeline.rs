use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ega_core::baselines::{fit_efa_sequence, map_select, parallel_analysis};
use ega_core::correlation::tetrachoric_matrix;
use ega_core::datagen::{build_implied_sigma, dichotomize, sample_dataset, FactorSpec};
use ega_core::ega::{ega, EgaOptions};
use ega_core::ggm::{ebic_glasso, glasso, EbicGlassoOptions, GlassoOptions};
use ega_core::walktrap::walktrap_communities;
use ega_core::{BinaryDataset, Dataset, WeightedGraph};

fn binary(n_factors: usize, items: usize, rho: f64, n: usize) -> BinaryDataset {
    let sigma = build_implied_sigma(&FactorSpec::new(n_factors, items, rho).unwrap()).unwrap();
    dichotomize(&sample_dataset(&sigma, n, 42).unwrap())
}

fn bench_correlation(c: &mut Criterion) {
    let mut g = c.benchmark_group("tetrachoric_matrix");
    for (m, k) in [(2, 5), (4, 10)] {
        let data = binary(m, k, 0.5, 1000);
        g.bench_with_input(BenchmarkId::from_parameter(m * k), &data, |b, d| {
            b.iter(|| tetrachoric_matrix(d).unwrap())
        });
    }
    g.finish();
}

fn bench_glasso(c: &mut Criterion) {
    let r = tetrachoric_matrix(&binary(4, 10, 0.5, 1000)).unwrap();
    c.bench_function("glasso/p40_single_lambda", |b| {
        b.iter(|| glasso(&r, 0.1, GlassoOptions::default()).unwrap())
    });
    c.bench_function("glasso/p40_ebic_path", |b| {
        b.iter(|| ebic_glasso(&r, 1000, &EbicGlassoOptions::default()).unwrap())
    });
}

fn bench_walktrap(c: &mut Criterion) {
    let r = tetrachoric_matrix(&binary(4, 10, 0.5, 1000)).unwrap();
    let net = ebic_glasso(&r, 1000, &EbicGlassoOptions::default()).unwrap();
    let graph = WeightedGraph::from_signed(&net.weights).unwrap();
    c.bench_function("walktrap/p40", |b| b.iter(|| walktrap_communities(&graph, 4).unwrap()));
}

fn bench_baselines(c: &mut Criterion) {
    let data = binary(4, 5, 0.7, 1000);
    let r = tetrachoric_matrix(&data).unwrap();
    c.bench_function("efa/p20_k1_to_10", |b| b.iter(|| fit_efa_sequence(&r, 10, 1000)));
    c.bench_function("map/p20", |b| b.iter(|| map_select(&r, 10).unwrap()));
    let data = Dataset::Binary(data);
    let mut g = c.benchmark_group("parallel_analysis");
    g.sample_size(10);
    g.bench_function("p20_20_iterations", |b| {
        b.iter(|| parallel_analysis(&data, 20, 1).unwrap())
    });
    g.finish();
}

fn bench_ega(c: &mut Criterion) {
    let mut g = c.benchmark_group("ega");
    g.sample_size(10);
    for (m, k, n) in [(2, 5, 1000), (4, 5, 5000), (4, 10, 500)] {
        let data = Dataset::Binary(binary(m, k, 0.7, n));
        g.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{k}_n{n}")), &data, |b, d| {
            b.iter(|| ega(d, &EgaOptions::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_correlation,
    bench_glasso,
    bench_walktrap,
    bench_baselines,
    bench_ega
);
criterion_main!(benches);
