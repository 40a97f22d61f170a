use criterion::{criterion_group, criterion_main, Criterion};
use tracegap_core::pipoly::bundled_table;
use tracegap_core::volfun::{phi_s, v_pop_type, v_simple, PopForm};
use tracegap_core::FillingSignature;

fn volumes(c: &mut Criterion) {
    let t = bundled_table();
    c.bench_function("v_simple/g6", |b| b.iter(|| v_simple(t, 6, 5.0).unwrap()));
    let phi = phi_s(t, FillingSignature::new(0, 3), 3).unwrap();
    c.bench_function("v_pop_type/g3", |b| {
        b.iter(|| v_pop_type(&phi, 5.0, 1, PopForm::Primary, 1e-8).unwrap())
    });
}

criterion_group!(benches, volumes);
criterion_main!(benches);
