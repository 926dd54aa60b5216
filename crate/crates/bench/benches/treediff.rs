use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rrs_bench::edited_pair;
use rrs_core::treediff::{isolate_change_regions, lts_similarity, ted, EditCostModel};

fn bench_ted(c: &mut Criterion) {
    let cost = EditCostModel::default();
    let mut g = c.benchmark_group("ted");
    for n in [50, 150, 350] {
        let (a, b) = edited_pair(n as u64, n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &(a, b), |bench, (a, b)| {
            bench.iter(|| ted(black_box(a), black_box(b), &cost).unwrap())
        });
    }
    g.finish();
}

fn bench_lts(c: &mut Criterion) {
    let cost = EditCostModel::default();
    let mut g = c.benchmark_group("lts");
    for n in [50, 150, 350] {
        let (a, b) = edited_pair(n as u64, n);
        g.bench_with_input(BenchmarkId::new("similarity", n), &(a.clone(), b.clone()), |bench, (a, b)| {
            bench.iter(|| lts_similarity(black_box(a), black_box(b), &cost).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("regions", n), &(a, b), |bench, (a, b)| {
            bench.iter(|| isolate_change_regions(black_box(a), black_box(b)))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_ted, bench_lts);
criterion_main!(benches);
