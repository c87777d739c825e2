use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pgsos_bench::{copying_pair, spread};
use pgsos_core::data;
use pgsos_core::denotation::{Denotations, FixpointConfig};
use pgsos_core::metric::{distance, kantorovich_by, LfpMode};
use pgsos_core::rational::ratio;
use pgsos_core::term::StateTerm;
use std::hint::black_box;

fn kantorovich(c: &mut Criterion) {
    let mut group = c.benchmark_group("kantorovich");
    for n in [2, 4, 6, 8] {
        let (states, left, right) = spread(n);
        let pos = |t: &StateTerm| states.iter().position(|s| s == t).unwrap() as i64;
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| kantorovich_by(|s, t| Ok::<_, ()>(ratio((pos(s) - pos(t)).abs(), n as i64)), &left, &right))
        });
    }
    group.finish();
}

fn copying_distance(c: &mut Criterion) {
    let (frag, s, t) = copying_pair();
    c.bench_function("lfp distance par(x, x)", |b| b.iter(|| distance(black_box(&frag), &s, &t, LfpMode::default())));
}

fn denotations(c: &mut Criterion) {
    let pa = data::pa();
    let ex = data::examples();
    c.bench_function("denotations pa", |b| b.iter(|| Denotations::compute(black_box(&pa), FixpointConfig::default())));
    c.bench_function("denotations examples", |b| {
        b.iter(|| Denotations::compute(black_box(&ex), FixpointConfig::default()))
    });
}

criterion_group!(benches, kantorovich, copying_distance, denotations);
criterion_main!(benches);
