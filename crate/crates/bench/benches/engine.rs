use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use colcast::fit::{self, ModelFamily};
use colcast::join::edit_distance;
use colcast::lang::{self, EvalLimits, ProgramOrigin};
use colcast::table::{serialize_examples, CellValue, ExamplePair};

fn bench_edit_distance(c: &mut Criterion) {
    let mut group = c.benchmark_group("edit_distance");
    for len in [8usize, 32, 128] {
        let a: String = (0..len).map(|i| char::from(b'a' + (i % 7) as u8)).collect();
        let b: String = (0..len).map(|i| char::from(b'a' + (i % 5) as u8)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |bencher, _| {
            bencher.iter(|| edit_distance(black_box(&a), black_box(&b)));
        });
    }
    group.finish();
}

fn bench_curve_fitting(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_family");
    let linear: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
    let rational: Vec<(f64, f64)> =
        (0..8).map(|i| (i as f64 + 0.5, (3.0 * (i as f64 + 0.5) + 2.0) / (i as f64 + 2.5))).collect();
    group.bench_function("linear_exact", |bencher| {
        bencher.iter(|| fit::fit_family(black_box(&linear), ModelFamily::Linear).unwrap());
    });
    group.bench_function("rational_exact", |bencher| {
        bencher.iter(|| fit::fit_family(black_box(&rational), ModelFamily::Rational).unwrap());
    });
    group.finish();
}

fn bench_interpreter(c: &mut Criterion) {
    let program = lang::parse(
        r#"transform(x) {
            let parts = split(trim(x), " ")
            let n = length(parts)
            let acc = ""
            for p in slice(parts, 0, n - 1) {
                acc = acc + lower(char_at(p, 0)) + "."
            }
            return acc + lower(parts[n - 1])
        }"#,
        ProgramOrigin::StringGen,
    )
    .unwrap();
    let input = CellValue::new("Dena Christopher Griffith");
    let limits = EvalLimits::default();
    c.bench_function("evaluate_username_program", |bencher| {
        bencher.iter(|| lang::evaluate(black_box(&program), black_box(&input), &limits).unwrap());
    });
}

fn bench_serialization(c: &mut Criterion) {
    let examples: Vec<ExamplePair> = (0..100)
        .map(|i| ExamplePair::new(format!("source value {i}"), format!("target value {i}")))
        .collect();
    c.bench_function("serialize_100_pairs_sampled_to_1k", |bencher| {
        bencher.iter(|| serialize_examples(black_box(&examples), 1_000, 7).unwrap());
    });
}

criterion_group!(
    benches,
    bench_edit_distance,
    bench_curve_fitting,
    bench_interpreter,
    bench_serialization
);
criterion_main!(benches);
