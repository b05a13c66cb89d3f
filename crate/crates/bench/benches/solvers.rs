use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ctclab_core::circuits::{brun_circuit, four_state_alphabet};
use ctclab_core::dctc::{iterate_fixed_point, solve_fixed_points, superoperator, DeutschInstance};
use ctclab_core::experiments::{signaling_suite, SignalingOptions};
use ctclab_core::qmat::eig_hermitian;
use ctclab_core::random::{random_density, random_hermitian, random_unitary};
use ctclab_core::states::Provenance;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn eigen(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(1);
    let mut group = c.benchmark_group("eig_hermitian");
    for d in [4, 8, 16] {
        let h = random_hermitian(d, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(d), &h, |b, h| b.iter(|| eig_hermitian(black_box(h))));
    }
    group.finish();
}

fn fixed_points(c: &mut Criterion) {
    let (alphabet, flags) = four_state_alphabet();
    let v = brun_circuit(&alphabet, &flags).unwrap();
    let inst = DeutschInstance::new(v, alphabet.states()[2].to_density(Provenance::Proper), 4).unwrap();
    c.bench_function("superoperator/brun4", |b| b.iter(|| superoperator(black_box(&inst))));
    c.bench_function("solve_fixed_points/brun4", |b| b.iter(|| solve_fixed_points(black_box(&inst))));

    let mut rng = StdRng::seed_from_u64(2);
    let inst = DeutschInstance::new(random_unitary(4, &mut rng), random_density(2, 2, &mut rng), 2).unwrap();
    let seed = random_density(2, 2, &mut rng);
    c.bench_function("solve_fixed_points/random_qubit", |b| b.iter(|| solve_fixed_points(black_box(&inst))));
    c.bench_function("iterate_fixed_point/random_qubit", |b| {
        b.iter(|| iterate_fixed_point(black_box(&inst), &seed, 1e-12, 200_000))
    });
}

fn signaling(c: &mut Criterion) {
    let opts = SignalingOptions::default();
    let mut group = c.benchmark_group("signaling_suite");
    group.sample_size(20);
    group.bench_function("exact", |b| b.iter(|| signaling_suite(black_box(3), &opts)));
    let sampled = SignalingOptions {
        monte_carlo: Some(10_000),
        ..SignalingOptions::default()
    };
    group.bench_function("monte_carlo_10k", |b| b.iter(|| signaling_suite(black_box(3), &sampled)));
    group.finish();
}

criterion_group!(benches, eigen, fixed_points, signaling);
criterion_main!(benches);
