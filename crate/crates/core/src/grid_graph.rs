//! Voxel-neighbourhood graphs and the stacked difference operator.
//!
//! Vertex and edge indices are 0-based in the API. Text formats written by
//! [`crate::io`] use 1-based indices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Neighbourhood stencil used to connect voxels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Connectivity {
    /// Face neighbours (Manhattan distance 1).
    Six,
    /// Face, edge and corner neighbours (Chebyshev distance 1).
    #[default]
    TwentySix,
}

impl Connectivity {
    pub fn from_count(count: u32) -> Result<Self> {
        match count {
            6 => Ok(Connectivity::Six),
            26 => Ok(Connectivity::TwentySix),
            other => Err(Error::InvalidParameter(format!(
                "connectivity must be 6 or 26, got {other}"
            ))),
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Connectivity::Six => 6,
            Connectivity::TwentySix => 26,
        }
    }

    /// Offsets strictly after the origin in x-fastest linear order, so each
    /// unordered pair is generated once.
    fn forward_offsets(self) -> Vec<(i64, i64, i64)> {
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let forward = dz > 0 || (dz == 0 && dy > 0) || (dz == 0 && dy == 0 && dx > 0);
                    if !forward {
                        continue;
                    }
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    if self == Connectivity::Six && manhattan != 1 {
                        continue;
                    }
                    out.push((dx, dy, dz));
                }
            }
        }
        out
    }
}

/// A 3-D box of voxels with a selection mask, reindexed densely over the
/// selected voxels in x-fastest order.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: (usize, usize, usize),
    mask: Vec<bool>,
    voxel_index: Vec<Option<usize>>,
    positions: Vec<usize>,
}

impl VoxelGrid {
    pub fn new(dims: (usize, usize, usize), mask: Vec<bool>) -> Result<Self> {
        let (nx, ny, nz) = dims;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dimensions must be positive, got {nx}x{ny}x{nz}"
            )));
        }
        check_len("mask", nx * ny * nz, mask.len())?;
        let mut voxel_index = vec![None; mask.len()];
        let mut positions = Vec::new();
        for (linear, &selected) in mask.iter().enumerate() {
            if selected {
                voxel_index[linear] = Some(positions.len());
                positions.push(linear);
            }
        }
        if positions.is_empty() {
            return Err(Error::EmptyMask);
        }
        Ok(VoxelGrid {
            dims,
            mask,
            voxel_index,
            positions,
        })
    }

    pub fn full(dims: (usize, usize, usize)) -> Result<Self> {
        Self::new(dims, vec![true; dims.0 * dims.1 * dims.2])
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Number of selected voxels.
    pub fn p(&self) -> usize {
        self.positions.len()
    }

    pub fn linear(&self, x: usize, y: usize, z: usize) -> usize {
        let (nx, ny, _) = self.dims;
        x + nx * (y + ny * z)
    }

    pub fn coords(&self, linear: usize) -> (usize, usize, usize) {
        let (nx, ny, _) = self.dims;
        (linear % nx, (linear / nx) % ny, linear / (nx * ny))
    }

    /// Dense vertex index of the voxel at `(x, y, z)`, if it is selected.
    pub fn vertex_at(&self, x: usize, y: usize, z: usize) -> Option<usize> {
        let (nx, ny, nz) = self.dims;
        if x >= nx || y >= ny || z >= nz {
            return None;
        }
        self.voxel_index[self.linear(x, y, z)]
    }

    /// Grid coordinates of a dense vertex index.
    pub fn vertex_coords(&self, vertex: usize) -> (usize, usize, usize) {
        self.coords(self.positions[vertex])
    }

    fn neighbour(&self, vertex: usize, offset: (i64, i64, i64)) -> Option<usize> {
        let (x, y, z) = self.vertex_coords(vertex);
        let nx = x as i64 + offset.0;
        let ny = y as i64 + offset.1;
        let nz = z as i64 + offset.2;
        if nx < 0 || ny < 0 || nz < 0 {
            return None;
        }
        self.vertex_at(nx as usize, ny as usize, nz as usize)
    }

    /// Selected neighbours of `vertex` under `connectivity`, in ascending order.
    pub fn neighbours(&self, vertex: usize, connectivity: Connectivity) -> Vec<usize> {
        let mut out: Vec<usize> = connectivity
            .forward_offsets()
            .into_iter()
            .flat_map(|(dx, dy, dz)| [(dx, dy, dz), (-dx, -dy, -dz)])
            .filter_map(|offset| self.neighbour(vertex, offset))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Unordered vertex pairs `(i, j)` with `i < j`, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeList {
    edges: Vec<(usize, usize)>,
}

impl EdgeList {
    /// Builds an edge list from arbitrary pairs, orienting each as `(min, max)`.
    /// Self-loops and duplicates are rejected.
    pub fn from_pairs(p: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {a}")));
            }
            if a >= p || b >= p {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for {p} vertices"
                )));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        if edges.len() != before {
            return Err(Error::InvalidParameter("duplicate edge".into()));
        }
        Ok(EdgeList { edges })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn as_slice(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn max_degree(&self, p: usize) -> usize {
        let mut degree = vec![0usize; p];
        for &(i, j) in &self.edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        degree.into_iter().max().unwrap_or(0)
    }
}

/// Builds the grid and every selected voxel pair within the neighbourhood.
pub fn build_grid_graph(
    dims: (usize, usize, usize),
    mask: Vec<bool>,
    connectivity: Connectivity,
) -> Result<(VoxelGrid, EdgeList)> {
    let grid = VoxelGrid::new(dims, mask)?;
    let offsets = connectivity.forward_offsets();
    let mut edges = Vec::new();
    for vertex in 0..grid.p() {
        for &offset in &offsets {
            if let Some(other) = grid.neighbour(vertex, offset) {
                edges.push((vertex, other));
            }
        }
    }
    // Dense reindexing preserves linear order, so forward neighbours have larger indices.
    debug_assert!(edges.iter().all(|&(i, j)| i < j));
    edges.sort_unstable();
    Ok((grid, EdgeList { edges }))
}

/// The stacked operator `D = [I_p; rho * D_G]` of shape `(p + m) x p`.
///
/// Row `p + e` for edge `e = (i, j)` holds `+rho` at column `i` and `-rho` at
/// column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceOperator {
    p: usize,
    rho: f64,
    edges: Vec<(usize, usize)>,
}

impl DifferenceOperator {
    /// Operator with no edge block, `D = I_p`.
    pub fn identity(p: usize) -> Self {
        DifferenceOperator {
            p,
            rho: 0.0,
            edges: Vec::new(),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Total number of rows, `p + m`.
    pub fn rows(&self) -> usize {
        self.p + self.edges.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Nonzeros of row `r` as `(column, value)` pairs. Edge rows with `rho = 0`
    /// are structurally empty.
    pub fn row(&self, r: usize) -> Vec<(usize, f64)> {
        if r < self.p {
            vec![(r, 1.0)]
        } else if self.rho == 0.0 {
            Vec::new()
        } else {
            let (i, j) = self.edges[r - self.p];
            vec![(i, self.rho), (j, -self.rho)]
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("difference operator input", self.p, v.len())?;
        let mut out = DVector::zeros(self.rows());
        self.apply_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, v: &DVector<f64>, out: &mut DVector<f64>) {
        out.rows_mut(0, self.p).copy_from(v);
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            out[self.p + e] = self.rho * (v[i] - v[j]);
        }
    }

    pub fn apply_transpose(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("difference operator transpose input", self.rows(), w.len())?;
        let mut out = DVector::zeros(self.p);
        self.apply_transpose_into(w, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_transpose_into(&self, w: &DVector<f64>, out: &mut DVector<f64>) {
        out.copy_from(&w.rows(0, self.p));
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            let value = self.rho * w[self.p + e];
            out[i] += value;
            out[j] -= value;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.rows(), self.p);
        for r in 0..self.rows() {
            for (c, value) in self.row(r) {
                d[(r, c)] = value;
            }
        }
        d
    }

    /// `1 + rho^2 * 2 * max_degree`, an upper bound on the squared spectral norm.
    pub fn squared_norm_bound(&self) -> f64 {
        let mut degree = vec![0usize; self.p];
        for &(i, j) in &self.edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        let max_degree = degree.into_iter().max().unwrap_or(0);
        1.0 + self.rho * self.rho * 2.0 * max_degree as f64
    }
}

/// Assembles `D = [I; rho * D_G]` with the vertex block first.
pub fn assemble_difference_operator(
    grid: &VoxelGrid,
    edges: &EdgeList,
    rho: f64,
) -> Result<DifferenceOperator> {
    DifferenceOperator::from_edges(grid.p(), edges, rho)
}

impl DifferenceOperator {
    pub fn from_edges(p: usize, edges: &EdgeList, rho: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rho must be a finite nonnegative number, got {rho}"
            )));
        }
        if let Some(&(_, j)) = edges.as_slice().iter().max_by_key(|e| e.1) {
            if j >= p {
                return Err(Error::InvalidParameter(format!(
                    "edge endpoint {j} out of range for {p} vertices"
                )));
            }
        }
        Ok(DifferenceOperator {
            p,
            rho,
            edges: edges.as_slice().to_vec(),
        })
    }
}
