use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lqn_core::classifier::classify;
use lqn_core::generate::{generate, GeneratorForm};
use lqn_core::nilpotency::{sample_witness, Budget};
use lqn_core::{char_poly, verify_certificate};

fn bench_classify(c: &mut Criterion) {
    let budget = Budget::default();
    let mut group = c.benchmark_group("classify");
    for (form, d) in [
        (GeneratorForm::I, 4),
        (GeneratorForm::II, 3),
        (GeneratorForm::III, 4),
        (GeneratorForm::RankTwoGram, 4),
        (GeneratorForm::Random, 3),
    ] {
        let phi = generate(form, 3, d, 1).unwrap();
        group.bench_with_input(BenchmarkId::new(form.name(), d), &phi, |b, phi| {
            b.iter(|| classify(black_box(phi), &budget, 1).unwrap())
        });
    }
    group.finish();
}

fn bench_verify(c: &mut Criterion) {
    let phi = generate(GeneratorForm::III, 3, 5, 2).unwrap();
    let verdict = classify(&phi, &Budget::default(), 2).unwrap();
    c.bench_function("verify/iii-5", |b| b.iter(|| verify_certificate(black_box(&phi), black_box(&verdict))));
}

fn bench_oracle(c: &mut Criterion) {
    let phi = generate(GeneratorForm::I, 3, 5, 3).unwrap();
    c.bench_function("oracle/i-5-1000", |b| b.iter(|| sample_witness(black_box(&phi), 1000, 3, 100).unwrap()));
}

fn bench_char_poly(c: &mut Criterion) {
    let phi = generate(GeneratorForm::Random, 2, 6, 4).unwrap();
    let m = phi.apply(&phi.pairs()[0].a).unwrap();
    c.bench_function("char_poly/6x6", |b| b.iter(|| char_poly(black_box(&m)).unwrap()));
}

criterion_group!(benches, bench_classify, bench_verify, bench_oracle, bench_char_poly);
criterion_main!(benches);
