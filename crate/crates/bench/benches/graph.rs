use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use opinet::KatzParams;
use opinet_bench::fixture;

fn katz(c: &mut Criterion) {
    let params = KatzParams::default();
    for (name, steps) in [("sparse", 0), ("dense", 200)] {
        let g = fixture(10.0, 0.0, steps).graph;
        c.bench_function(&format!("katz_self_weights/{name}"), |b| {
            b.iter(|| g.katz_self_weights(black_box(&params)).unwrap())
        });
        c.bench_function(&format!("spectral_radius/{name}"), |b| b.iter(|| g.spectral_radius().unwrap()));
    }
}

fn trust(c: &mut Criterion) {
    let g = fixture(10.0, 0.0, 0).graph;
    let pairs: Vec<(usize, usize)> = (0..g.n())
        .flat_map(|j| (0..g.n()).map(move |i| (j, i)))
        .filter(|&(j, i)| j != i && !g.has_edge(j, i))
        .take(200)
        .collect();
    c.bench_function("nondirect_trust_score/200_pairs", |b| {
        b.iter(|| {
            pairs
                .iter()
                .filter_map(|&(j, i)| g.nondirect_trust_score(j, i).ok())
                .sum::<f64>()
        })
    });
}

fn components(c: &mut Criterion) {
    let g = fixture(25.0, 1.0, 200).graph;
    c.bench_function("weakly_connected_components", |b| b.iter(|| g.weakly_connected_components().len()));
}

criterion_group!(benches, katz, trust, components);
criterion_main!(benches);
