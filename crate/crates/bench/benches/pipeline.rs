use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gsbv_bench::{pieces, pipeline, runaway_sequence, staircase_sequence};
use gsbv_core::{
    compactness_report, concentration_profile, extract_bubbles, ExtractionParams, SequenceParams,
};
use std::hint::black_box;

fn profiles(c: &mut Criterion) {
    let mut group = c.benchmark_group("concentration_profile");
    for side in [32, 64, 128] {
        let u = pieces(side, 6, 1);
        group.bench_with_input(BenchmarkId::from_parameter(side), &u, |b, u| {
            b.iter(|| concentration_profile(black_box(u), None, 1.0).unwrap())
        });
    }
    group.finish();
}

fn extraction(c: &mut Criterion) {
    let u = pieces(128, 12, 2);
    let f = concentration_profile(&u, None, 1.0).unwrap();
    let params = ExtractionParams::new(0.05, 2.0, 1.0);
    c.bench_function("extract_bubbles/128x128", |b| {
        b.iter(|| extract_bubbles(black_box(&f), &params).unwrap())
    });
}

fn single_pipeline(c: &mut Criterion) {
    let u = pieces(96, 6, 3);
    c.bench_function("pipeline/96x96", |b| {
        b.iter(|| pipeline(black_box(&u), 0.1))
    });
}

fn sequence_reports(c: &mut Criterion) {
    let stairs = staircase_sequence(&[4, 16, 64], 64);
    let params = SequenceParams {
        eps: vec![0.2],
        ..SequenceParams::default()
    };
    c.bench_function("compactness_report/staircase", |b| {
        b.iter(|| compactness_report(black_box(&stairs), None, None, None, &params).unwrap())
    });
    let runs = runaway_sequence(&[10.0, 100.0, 1000.0], 64);
    c.bench_function("compactness_report/runaway", |b| {
        b.iter(|| {
            compactness_report(
                black_box(&runs),
                None,
                None,
                None,
                &SequenceParams::default(),
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    profiles,
    extraction,
    single_pipeline,
    sequence_reports
);
criterion_main!(benches);
