//! Deterministic synthetic data: the sparse-regression simulation family and
//! a 3-D phantom with clustered lesions and scattered procedural-bias voxels.
//!
//! All randomness comes from ChaCha8 seeded with `seed_from_u64`, drawing
//! standard normals with the Ziggurat sampler of `rand_distr` and uniforms
//! with `Rng::random`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm_loss::{sigmoid, Dataset, GlmFamily};
use crate::grid_graph::{Connectivity, VoxelGrid};
use crate::rng;

pub const APPENDIX_N: usize = 100;
pub const APPENDIX_P: usize = 80;

/// `beta*`: `+2` on the first four coordinates, `-2` on the next four.
pub fn appendix_beta_star() -> DVector<f64> {
    DVector::from_fn(APPENDIX_P, |i, _| match i {
        0..4 => 2.0,
        4..8 => -2.0,
        _ => 0.0,
    })
}

/// `N = 100`, `p = 80`, Gaussian design. Linear responses carry unit
/// Gaussian noise; logistic labels are `±1` with `P(y = 1) = σ(xᵀβ*)` and
/// no intercept.
pub fn generate_appendix_dataset(seed: u64, family: GlmFamily) -> Dataset {
    let mut r = rng::seeded(seed);
    let x = DMatrix::from_fn(APPENDIX_N, APPENDIX_P, |_, _| rng::standard_normal(&mut r));
    let beta_star = appendix_beta_star();
    let eta = &x * &beta_star;
    let y = match family {
        GlmFamily::Linear => eta.map(|e| e + rng::standard_normal(&mut r)),
        GlmFamily::Logistic => eta.map(|e| if r.random::<f64>() < sigmoid(e) { 1.0 } else { -1.0 }),
    };
    Dataset::new(x, y)
        .and_then(|d| d.with_truth(beta_star, (0..8).collect()))
        .expect("fixed shapes are consistent")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionBlob {
    pub center: (usize, usize, usize),
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVoxel {
    pub at: (usize, usize, usize),
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: (usize, usize, usize),
    pub lesion_blobs: Vec<LesionBlob>,
    pub bias_voxels: Vec<BiasVoxel>,
    /// Standard deviation of the design entries before smoothing.
    pub noise_sd: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub smoothing_passes: usize,
}

impl Default for PhantomSpec {
    /// An 8×8×8 volume with two lesion balls of radius 1.5 and ten
    /// isolated bias voxels, 200 samples.
    fn default() -> Self {
        let bias = [
            (0, 0, 7),
            (0, 7, 0),
            (7, 0, 0),
            (7, 7, 0),
            (7, 0, 7),
            (0, 7, 7),
            (5, 0, 2),
            (2, 7, 5),
            (0, 3, 5),
            (7, 3, 3),
        ];
        PhantomSpec {
            dims: (8, 8, 8),
            lesion_blobs: vec![
                LesionBlob {
                    center: (2, 2, 2),
                    radius: 1.5,
                    amplitude: 2.0,
                },
                LesionBlob {
                    center: (5, 5, 5),
                    radius: 1.5,
                    amplitude: 2.0,
                },
            ],
            bias_voxels: bias
                .iter()
                .map(|&at| BiasVoxel { at, amplitude: -2.0 })
                .collect(),
            noise_sd: 1.0,
            n_samples: 200,
            seed: 2024,
            smoothing_passes: 1,
        }
    }
}

/// Ground truth on the vertices of the phantom grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomTruth {
    pub beta_star: DVector<f64>,
    /// Sorted lesion vertices (positive, clustered).
    pub lesion: Vec<usize>,
    /// Sorted bias vertices (negative, isolated).
    pub bias: Vec<usize>,
}

fn in_grid(dims: (usize, usize, usize), at: (usize, usize, usize)) -> bool {
    at.0 < dims.0 && at.1 < dims.1 && at.2 < dims.2
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise_sd must be >= 0, got {}", self.noise_sd)));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("phantom needs at least one sample".into()));
        }
        for b in &self.lesion_blobs {
            if !(b.radius >= 0.0) || !(b.amplitude > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "lesion blobs need radius >= 0 and positive amplitude, got {b:?}"
                )));
            }
            if !in_grid(self.dims, b.center) {
                return Err(Error::InvalidParameter(format!("lesion centre {:?} outside the grid", b.center)));
            }
        }
        for v in &self.bias_voxels {
            if !(v.amplitude < 0.0) {
                return Err(Error::InvalidParameter(format!("bias amplitude must be negative, got {}", v.amplitude)));
            }
            if !in_grid(self.dims, v.at) {
                return Err(Error::InvalidParameter(format!("bias voxel {:?} outside the grid", v.at)));
            }
        }
        Ok(())
    }
}

/// Builds the volume, the ground truth and a logistic sample.
///
/// Design rows are i.i.d. Gaussian images smoothed by `smoothing_passes`
/// passes of the 6-neighbour mean (each voxel averaged with its face
/// neighbours).
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(Dataset, VoxelGrid, PhantomTruth)> {
    spec.validate()?;
    let grid = VoxelGrid::full(spec.dims)?;
    let p = grid.p();
    let mut beta_star = DVector::zeros(p);
    let mut is_lesion = vec![false; p];
    for blob in &spec.lesion_blobs {
        let c = blob.center;
        for v in 0..p {
            let (x, y, z) = grid.vertex_coords(v);
            let d2 = [(x, c.0), (y, c.1), (z, c.2)]
                .iter()
                .map(|&(a, b)| (a as f64 - b as f64).powi(2))
                .sum::<f64>();
            if d2 <= blob.radius * blob.radius {
                is_lesion[v] = true;
                beta_star[v] = blob.amplitude;
            }
        }
    }
    let mut bias = Vec::with_capacity(spec.bias_voxels.len());
    for b in &spec.bias_voxels {
        let v = grid.vertex_at(b.at.0, b.at.1, b.at.2).expect("validated");
        if is_lesion[v] || bias.contains(&v) {
            return Err(Error::OverlappingTruth(v));
        }
        if let Some(&w) = bias.iter().find(|&&w| grid.neighbours(v, Connectivity::TwentySix).contains(&w)) {
            return Err(Error::InvalidParameter(format!(
                "bias voxels {v} and {w} are adjacent"
            )));
        }
        beta_star[v] = b.amplitude;
        bias.push(v);
    }
    bias.sort_unstable();
    let lesion: Vec<usize> = (0..p).filter(|&v| is_lesion[v]).collect();

    let mut r = rng::seeded(spec.seed);
    let mut x = DMatrix::from_fn(spec.n_samples, p, |_, _| spec.noise_sd * rng::standard_normal(&mut r));
    let neighbours: Vec<Vec<usize>> = (0..p).map(|v| grid.neighbours(v, Connectivity::Six)).collect();
    for _ in 0..spec.smoothing_passes {
        let src = x.clone();
        for (v, around) in neighbours.iter().enumerate() {
            let scale = 1.0 / (around.len() + 1) as f64;
            let mut col = src.column(v).clone_owned();
            for &w in around {
                col += src.column(w);
            }
            x.set_column(v, &(col * scale));
        }
    }
    let eta = &x * &beta_star;
    let y = eta.map(|e| if r.random::<f64>() < sigmoid(e) { 1.0 } else { -1.0 });
    let data = Dataset::new(x, y)?.with_truth(beta_star.clone(), lesion.clone())?;
    Ok((data, grid, PhantomTruth { beta_star, lesion, bias }))
}
