use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use strainlim::{MeshSpec, Scheme, SolverConfig};
use strainlim_bench::pluck;

fn one_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(20);
    let meshes = [
        ("1d_256", MeshSpec::Interval { a: 0.0, b: 1.0, cells: 256 }),
        ("2d_16x16", MeshSpec::Rectangle { a: 0.0, b: 1.0, c: 0.0, d: 1.0, nx: 16, ny: 16 }),
        ("2d_48x48", MeshSpec::Rectangle { a: 0.0, b: 1.0, c: 0.0, d: 1.0, nx: 48, ny: 48 }),
    ];
    let cfg = SolverConfig::new(1e-3, 1.0, Scheme::ImplicitMidpoint).unwrap();
    for (label, mesh) in meshes {
        let sim = pluck(mesh, 64);
        let s0 = sim.initial_state().unwrap();
        group.bench_function(BenchmarkId::new("midpoint", label), |b| {
            b.iter_batched(|| s0.clone(), |s| sim.step_midpoint(&s, 1e-3, cfg.midpoint_tol, cfg.midpoint_max_iter).unwrap(), BatchSize::SmallInput)
        });
        group.bench_function(BenchmarkId::new("rk4", label), |b| {
            b.iter_batched(|| s0.clone(), |s| sim.step_rk4(&s, 1e-5).unwrap(), BatchSize::SmallInput)
        });
    }
    group.finish();
}

criterion_group!(benches, one_step);
criterion_main!(benches);
