use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use liesys::group::{oscillator_algebra_curve, pinney_action, reduce_pinney_from_pinney, sl2_exp, solve_group_equation};
use liesys::superposition::pinney_rule_from_solutions;
use liesys::systems::{milne_pinney, pinney_triple};
use liesys::vectorfield::{bracket, minimal_m, DEFAULT_RANK_TOL};
use liesys::{FrequencyProfile, Sl2Vector};
use liesys_bench::{options, oscillator_pair, TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn integration(c: &mut Criterion) {
    let triple = pinney_triple(FrequencyProfile::two_plus_sine(), 1.0);
    let start = [1.2, 0.5, -0.7, 0.1, 0.9, 0.4];
    c.bench_function("integrate pinney triple [0, 20]", |b| {
        b.iter(|| triple.integrate(black_box(&start), (0.0, 20.0), &options()).unwrap())
    });
}

fn brackets(c: &mut Criterion) {
    let triple = pinney_triple(FrequencyProfile::two_plus_sine(), 1.0);
    let g = triple.generators();
    let p = [1.1, 0.4, -0.3, 0.2, 0.7, -0.5];
    c.bench_function("bracket of triple generators", |b| {
        b.iter(|| bracket(&g[0], &g[1], black_box(&p)).unwrap())
    });
    let fields = liesys::systems::oscillator_generators();
    c.bench_function("minimal m for the oscillator", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            minimal_m(&fields, 4, 25, DEFAULT_RANK_TOL, &mut rng).unwrap()
        })
    });
}

fn superposition(c: &mut Criterion) {
    let (y, z) = oscillator_pair(10.0);
    c.bench_function("pinney rule from two oscillator solutions", |b| {
        b.iter(|| pinney_rule_from_solutions(&y, &z, black_box(1.3), -0.4, 1.0).unwrap())
    });
}

fn group(c: &mut Criterion) {
    let omega = FrequencyProfile::two_plus_sine();
    c.bench_function("group equation on [0, 10]", |b| {
        b.iter(|| solve_group_equation(oscillator_algebra_curve(&omega), (0.0, 10.0), TOL).unwrap())
    });
    let g = sl2_exp(Sl2Vector::new(0.3, -1.1, 0.4), 0.7);
    c.bench_function("pinney action", |b| b.iter(|| pinney_action(&g, black_box((1.2, 0.3)), 1.0).unwrap()));
    let mp = milne_pinney(FrequencyProfile::constant(1.0), 2.0);
    let x1 = mp.integrate(&[1.1, 0.4], (0.0, 5.0), &options()).unwrap();
    c.bench_function("pinney self-reduction", |b| {
        b.iter(|| reduce_pinney_from_pinney(&x1, black_box(0.8), -0.3, 2.0).unwrap())
    });
}

criterion_group!(benches, integration, brackets, superposition, group);
criterion_main!(benches);
