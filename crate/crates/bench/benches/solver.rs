//! Solver timings on small standard instances.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use jewel_core::compat::{joint_feasibility, robustness, zhu_check};
use jewel_core::linalg::pauli;
use jewel_core::povm::{apply_noise, mub_povms, random_set, NoiseKind, NoiseModel};
use jewel_core::spectra::jewel_membership;
use jewel_core::witness::{sdp_margin, WitnessCandidate};
use jewel_core::SdpOptions;

fn compatibility(c: &mut Criterion) {
    let opts = SdpOptions::default();
    let mub2 = mub_povms(2, 2).unwrap();
    let mub3 = mub_povms(3, 3).unwrap();
    let noisy = apply_noise(&random_set(3, &[3, 3], 7).unwrap(), &NoiseModel::balanced(vec![0.5, 0.5]).unwrap()).unwrap();

    c.bench_function("robustness mub d=2 g=2", |b| {
        b.iter(|| robustness(black_box(&mub2), NoiseKind::Balanced, &[1.0, 1.0], &opts).unwrap())
    });
    c.bench_function("robustness mub d=3 g=3", |b| {
        b.iter(|| robustness(black_box(&mub3), NoiseKind::Balanced, &[1.0, 1.0, 1.0], &opts).unwrap())
    });
    c.bench_function("joint feasibility random d=3 k=3,3", |b| {
        b.iter(|| joint_feasibility(black_box(&noisy), 1e-7, &opts).unwrap())
    });
    c.bench_function("zhu mub d=3 g=3", |b| b.iter(|| zhu_check(black_box(&mub3), 1e-6, &opts).unwrap()));
}

fn witnesses(c: &mut Criterion) {
    let opts = SdpOptions::default();
    let x = WitnessCandidate::binary(vec![pauli::x().scale(0.7), pauli::y().scale(0.7)]).unwrap();
    c.bench_function("witness sdp margin xy", |b| b.iter(|| sdp_margin(black_box(&x), &opts).unwrap()));
    let blocks = [pauli::x().scale(0.3), pauli::z().scale(0.3), pauli::y().scale(0.2)];
    c.bench_function("jewel membership k=2,2,2", |b| {
        b.iter(|| jewel_membership(&[2, 2, 2], black_box(&blocks), 1e-10).unwrap())
    });
}

criterion_group!(benches, compatibility, witnesses);
criterion_main!(benches);
