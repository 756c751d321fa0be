//! Path behaviour on the default desk phantom.

use gsplit_core::grid_graph::build_grid_graph;
use gsplit_core::solver::{self, Estimator, RecordSchedule};
use gsplit_core::sparsity_ops::project_onto_support;
use gsplit_core::{
    synth_data, Connectivity, Dataset, DifferenceOperator, GlmFamily, GlmModel, LossScale, PhantomSpec, SolverConfig,
};

fn phantom() -> (Dataset, DifferenceOperator) {
    let (data, grid, _) = synth_data::generate_phantom(&PhantomSpec::default()).unwrap();
    let (_, edges) = build_grid_graph(grid.dims(), grid.mask().to_vec(), Connectivity::Six).unwrap();
    let op = DifferenceOperator::from_edges(grid.p(), &edges, 1.0).unwrap();
    (data, op)
}

fn prediction_config() -> SolverConfig {
    SolverConfig {
        nu: 0.2,
        max_iters: 1_000_000,
        t_max: Some(5.0),
        record: RecordSchedule::LogSpaced(100),
        ..SolverConfig::default()
    }
}

fn best_accuracy(path: &solver::RegularizationPath, data: &Dataset, which: Estimator) -> f64 {
    path.points
        .iter()
        .map(|p| solver::point_accuracy(p, data, which).unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn dense_estimate_predicts_better_than_sparse_one() {
    let (data, op) = phantom();
    let model = GlmModel::new(GlmFamily::Logistic, LossScale::Sum);
    let path = solver::run_path(&data, model, &op, &prediction_config()).unwrap();
    let pre = best_accuracy(&path, &data, Estimator::Pre);
    let les = best_accuracy(&path, &data, Estimator::Les);
    assert!(pre > les, "in-sample: pre {pre} vs les {les}");

    let train = data.select_rows(&(0..150).collect::<Vec<_>>());
    let test = data.select_rows(&(150..200).collect::<Vec<_>>());
    let path = solver::run_path(&train, model, &op, &prediction_config()).unwrap();
    let pre = best_accuracy(&path, &test, Estimator::Pre);
    let les = best_accuracy(&path, &test, Estimator::Les);
    assert!(pre > les, "held out: pre {pre} vs les {les}");
}

#[test]
fn every_recorded_point_is_a_consistent_projection() {
    let (data, op) = phantom();
    let model = GlmModel::new(GlmFamily::Logistic, LossScale::Sum);
    let config = SolverConfig {
        max_iters: 1_000_000,
        t_max: Some(5.0),
        record: RecordSchedule::SupportChanges,
        ..prediction_config()
    };
    let dense = op.to_dense();
    let mut checked = 0;
    solver::run_path_with(&data, model, &op, &config, |point| {
        let again = project_onto_support(&point.beta_les, &op, &point.support)?;
        assert!((&again - &point.beta_les).amax() <= 1e-10 * point.beta_les.amax().max(1.0));
        let off = dense.select_rows(&point.support.complement());
        let residual = (off * &point.beta_les).amax();
        assert!(residual <= 1e-10 * point.beta_pre.amax().max(1.0), "k={} residual {residual}", point.k);
        checked += 1;
        Ok(())
    })
    .unwrap();
    assert!(checked > 10);
}
