use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use vortlab_bench::{bump, grid, scalar_bump};
use vortlab_core::convolution::{conv_spacetime, conv_spatial, leray_project, LerayOperator};
use vortlab_core::field::discrete_norm;
use vortlab_core::iteration::burgers_term;
use vortlab_core::{ConvPath, MultiIndex, NormKind, NormOptions, TimeSlab};

fn spatial(c: &mut Criterion) {
    let mut g = c.benchmark_group("conv_spatial");
    for n in [17, 33, 65] {
        let f = scalar_bump(grid(n));
        g.bench_with_input(BenchmarkId::new("separable", n), &f, |b, f| {
            b.iter(|| conv_spatial(f, 0.1, 0.5, MultiIndex::unit(0), ConvPath::FastSeparable).unwrap())
        });
    }
    let f = scalar_bump(grid(17));
    g.sample_size(10);
    g.bench_function("direct/17", |b| {
        b.iter(|| conv_spatial(&f, 0.1, 0.5, MultiIndex::unit(0), ConvPath::DirectQuadrature).unwrap())
    });
    g.finish();
}

fn spacetime(c: &mut Criterion) {
    let mut g = c.benchmark_group("conv_spacetime");
    g.sample_size(10);
    for n in [17, 33] {
        let slab = TimeSlab::constant(&bump(grid(n)), 0.0, 0.5, 9).unwrap();
        g.bench_with_input(BenchmarkId::new("duhamel", n), &slab, |b, s| {
            b.iter(|| conv_spacetime(s, 0.1, 0.5, MultiIndex::unit(1), ConvPath::FastSeparable).unwrap())
        });
    }
    g.finish();
}

fn leray(c: &mut Criterion) {
    let mut g = c.benchmark_group("leray");
    g.sample_size(10);
    for n in [17, 33] {
        let v = bump(grid(n));
        let op = LerayOperator::new(&grid(n));
        g.bench_with_input(BenchmarkId::new("term", n), &v, |b, v| b.iter(|| op.leray_term(v)));
        g.bench_with_input(BenchmarkId::new("project", n), &v, |b, v| b.iter(|| leray_project(v)));
        g.bench_with_input(BenchmarkId::new("burgers", n), &v, |b, v| b.iter(|| burgers_term(v)));
    }
    g.finish();
}

fn norms(c: &mut Criterion) {
    let mut g = c.benchmark_group("norms");
    let v = bump(grid(33));
    for kind in [NormKind::Cm(2), NormKind::Hm(2), NormKind::HmCm(2), NormKind::DecayEnvelope(8.0)] {
        g.bench_function(kind.label(), |b| b.iter(|| discrete_norm(&v, kind, &NormOptions::interior()).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, spatial, spacetime, leray, norms);
criterion_main!(benches);
