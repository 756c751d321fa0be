use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use gsplit_bench::{appendix_problem, phantom_problem};
use gsplit_core::consistency_lab::compute_angle;
use gsplit_core::solver::{run_path, RecordSchedule};
use gsplit_core::sparsity_ops::project_onto_support;
use gsplit_core::{DifferenceOperator, GlmFamily, GlmModel, LossScale, SolverConfig, SupportSet};

fn path_iterations(c: &mut Criterion) {
    let (data, op) = phantom_problem();
    let model = GlmModel::new(GlmFamily::Logistic, LossScale::Sum);
    let config = SolverConfig {
        nu: 0.2,
        max_iters: 200,
        record: RecordSchedule::Every(200),
        ..SolverConfig::default()
    };
    c.bench_function("phantom logistic path, 200 iterations", |b| {
        b.iter(|| run_path(black_box(&data), model, &op, &config).unwrap())
    });
    let linear = appendix_problem(GlmFamily::Linear);
    let id = DifferenceOperator::identity(linear.p());
    let config = SolverConfig {
        max_iters: 1000,
        record: RecordSchedule::Every(1000),
        ..SolverConfig::default()
    };
    c.bench_function("appendix linear path, 1000 iterations", |b| {
        b.iter(|| run_path(black_box(&linear), GlmModel::new(GlmFamily::Linear, LossScale::Sum), &id, &config).unwrap())
    });
}

fn projection(c: &mut Criterion) {
    let (data, op) = phantom_problem();
    let beta = data.x.row(0).transpose();
    // Half the vertices and every third edge on the support.
    let mut rows: Vec<usize> = (0..op.p()).filter(|v| v % 2 == 0).collect();
    rows.extend((0..op.m()).filter(|e| e % 3 == 0).map(|e| op.p() + e));
    let s = SupportSet::new(rows, op.p(), op.rows()).unwrap();
    c.bench_function("projection onto a phantom support", |b| {
        b.iter_batched(|| beta.clone(), |v| project_onto_support(&v, &op, &s).unwrap(), BatchSize::SmallInput)
    });
}

fn angle(c: &mut Criterion) {
    for family in [GlmFamily::Linear, GlmFamily::Logistic] {
        let data = appendix_problem(family);
        let op = DifferenceOperator::identity(data.p());
        let s = SupportSet::new((0..8).collect(), data.p(), data.p()).unwrap();
        let zero = data.beta_star.clone().unwrap() * 0.0;
        let model = GlmModel::new(family, LossScale::Sum);
        c.bench_function(&format!("angle on the 100 x 80 design ({family})"), |b| {
            b.iter(|| compute_angle(0.0, &zero, black_box(&data), model, &op, 10.0, &s).unwrap())
        });
    }
}

criterion_group!(benches, path_iterations, projection, angle);
criterion_main!(benches);
