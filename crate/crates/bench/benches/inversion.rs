use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use strainlim_bench::{prototype, strains};

fn inversion(c: &mut Criterion) {
    let mut group = c.benchmark_group("invert");
    for n in [16u32, 256] {
        let model = prototype(n);
        let es = strains(&model, 2, 1024);
        group.throughput(Throughput::Elements(es.len() as u64));
        group.bench_with_input(BenchmarkId::new("cold", n), &es, |b, es| {
            b.iter(|| es.iter().map(|e| model.invert(black_box(e)).unwrap().norm()).sum::<f64>())
        });
    }
    group.finish();
}

fn jacobian(c: &mut Criterion) {
    let model = prototype(64);
    let ts: Vec<_> = strains(&model, 3, 1024).iter().map(|e| model.invert(e).unwrap()).collect();
    c.bench_function("jacobian_inverse_3d", |b| {
        b.iter(|| ts.iter().map(|t| model.g_jacobian_inverse(black_box(t)).entry(0, 0)).sum::<f64>())
    });
}

criterion_group!(benches, inversion, jacobian);
criterion_main!(benches);
