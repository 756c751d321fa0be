//! Loading a dataset together with its voxel graph.

use std::path::{Path, PathBuf};

use gsplit_core::grid_graph::build_grid_graph;
use gsplit_core::{io, Dataset, DifferenceOperator, EdgeList, GlmFamily};

use crate::config;
use crate::error::{CliError, Result};

pub struct Problem {
    pub data: Dataset,
    /// Empty when no mask was given, so that `D = I`.
    pub edges: EdgeList,
}

impl Problem {
    pub fn load(data: &Option<PathBuf>, mask: &Option<PathBuf>, connectivity: u32, family: GlmFamily) -> Result<Self> {
        let path: &Path = data.as_deref().ok_or_else(|| CliError::config("a dataset is required (--data)"))?;
        let data = io::read_dataset(path)?;
        data.validate(family)?;
        let edges = match mask {
            None => EdgeList::from_pairs(data.p(), [])?,
            Some(mask_path) => {
                let grid = io::read_mask(mask_path)?;
                if grid.p() != data.p() {
                    return Err(CliError::config(format!(
                        "mask {} selects {} voxels but the dataset has {} features",
                        mask_path.display(),
                        grid.p(),
                        data.p()
                    )));
                }
                let (_, edges) = build_grid_graph(grid.dims(), grid.mask().to_vec(), config::connectivity(connectivity)?)?;
                edges
            }
        };
        Ok(Problem { data, edges })
    }

    pub fn operator(&self, rho: f64) -> Result<DifferenceOperator> {
        Ok(DifferenceOperator::from_edges(self.data.p(), &self.edges, rho)?)
    }
}
