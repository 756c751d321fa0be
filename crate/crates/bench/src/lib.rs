//! Fixtures shared by the benchmarks.

use gsplit_core::grid_graph::build_grid_graph;
use gsplit_core::synth_data::{self, generate_phantom};
use gsplit_core::{Connectivity, Dataset, DifferenceOperator, GlmFamily, PhantomSpec};

/// The default phantom with its 6-connected operator at `rho = 1`.
pub fn phantom_problem() -> (Dataset, DifferenceOperator) {
    let (data, grid, _) = generate_phantom(&PhantomSpec::default()).expect("default phantom is valid");
    let (_, edges) = build_grid_graph(grid.dims(), grid.mask().to_vec(), Connectivity::Six).expect("full grid");
    let op = DifferenceOperator::from_edges(grid.p(), &edges, 1.0).expect("edges fit the grid");
    (data, op)
}

/// One dataset of the 100 x 80 simulation design.
pub fn appendix_problem(family: GlmFamily) -> Dataset {
    synth_data::generate_appendix_dataset(11, family)
}
