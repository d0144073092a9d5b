use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use streamcore::ast::Ident;
use streamcore::exec::corpus;
use streamcore::frontend::load_source;
use streamcore::logic::infer_domain;
use streamcore::normalize::{normalize_program, NormalizeOptions};
use streamcore::relsem::{enumerate_relation, FiniteDomain};
use streamcore_bench::impulse;

fn front_end(c: &mut Criterion) {
    c.bench_function("load adsr", |b| b.iter(|| load_source(black_box(corpus::ADSR.text)).unwrap()));
    let db = load_source(corpus::ADSR.text).unwrap();
    c.bench_function("normalize adsr", |b| {
        b.iter(|| normalize_program(black_box(&db), NormalizeOptions::default()).unwrap())
    });
}

fn execution(c: &mut Criterion) {
    let m = corpus::ARMA.machine().unwrap();
    let xs = impulse(1000);
    c.bench_function("run arma 1000", |b| b.iter(|| m.run(black_box(&xs)).unwrap()));
    for n in [4, 16] {
        c.bench_function(&format!("run arma 1000 unrolled {n}"), |b| {
            b.iter(|| m.run_unrolled(n, black_box(&xs)).unwrap())
        });
    }
}

fn enumeration(c: &mut Criterion) {
    let prog = corpus::SAH.compile().unwrap();
    let sah = Ident::new("sah");
    let dom = infer_domain(prog.get(&sah).unwrap(), &prog.sig, &FiniteDomain::numeric(&[0.0, 1.0, 2.0]));
    c.bench_function("enumerate sah", |b| b.iter(|| enumerate_relation(&prog, &sah, black_box(&dom)).unwrap()));
}

criterion_group!(benches, front_end, execution, enumeration);
criterion_main!(benches);
