use criterion::{black_box, criterion_group, criterion_main, Criterion};
use subrep_core::operators::{frac_derivative, potential_tw, riesz_potential, rough_maximal, TruncationGrid};
use subrep_core::verify::check_beta_identity;
use subrep_core::{QuadratureScheme, SphereSymbol, TestFunction, Weight};

fn operators(c: &mut Criterion) {
    let f = TestFunction::smooth_bump(&[0.0, 0.0], 1.0);
    let x = [0.3, -0.2];
    let s = QuadratureScheme::default();
    let w = Weight::power_plus_one(&[0.0, 0.0], 0.5).unwrap();
    let omega = SphereSymbol::cosine(1);
    let grid = TruncationGrid::for_support(&f, &x);

    let mut g = c.benchmark_group("operators");
    g.sample_size(10);
    g.bench_function("riesz_potential", |b| {
        b.iter(|| riesz_potential(&f, black_box(0.5), &x, &s).unwrap())
    });
    g.bench_function("frac_derivative", |b| {
        b.iter(|| frac_derivative(&f, black_box(0.5), &x, &s).unwrap())
    });
    g.bench_function("potential_tw", |b| {
        b.iter(|| potential_tw(&f, &w, black_box(1.0), &x, &s).unwrap())
    });
    g.bench_function("rough_maximal", |b| {
        b.iter(|| rough_maximal(&f, &omega, black_box(&x), &grid, &s).unwrap())
    });
    g.finish();
}

fn checks(c: &mut Criterion) {
    let s = QuadratureScheme::default();
    c.bench_function("check_beta_identity_n2", |b| {
        b.iter(|| check_beta_identity(2, black_box(1.5), 1.5, &[0.0, 0.0], &[1.0, 0.0], &s).unwrap())
    });
}

criterion_group!(benches, operators, checks);
criterion_main!(benches);
