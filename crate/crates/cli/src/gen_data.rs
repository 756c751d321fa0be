//! `gen-data`: synthetic datasets with their ground truth.

use std::path::PathBuf;

use gsplit_core::{io, synth_data, PhantomSpec};

use crate::config::{require_out, DataKind, GenDataConfig};
use crate::error::{CliError, Result};
use crate::run_dir::RunDir;

const APPENDIX_DEFAULT_SEED: u64 = 7;

/// The phantom spec after applying overrides to the default.
pub fn phantom_spec(config: &GenDataConfig) -> Result<PhantomSpec> {
    let mut spec = PhantomSpec::default();
    if let Some(dims) = &config.dims {
        match dims.as_slice() {
            &[nx, ny, nz] if nx > 0 && ny > 0 && nz > 0 => spec.dims = (nx, ny, nz),
            _ => return Err(CliError::config(format!("dims must be three positive sizes, got {dims:?}"))),
        }
    }
    if let Some(n) = config.n_samples {
        spec.n_samples = n;
    }
    if let Some(sd) = config.noise_sd {
        spec.noise_sd = sd;
    }
    if let Some(seed) = config.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

/// Writes `dataset.csv`, `beta_star.csv` and the truth files. Returns the
/// manifest path.
pub fn run(config: &GenDataConfig) -> Result<PathBuf> {
    let mut dir = RunDir::create(require_out(&config.out)?)?;
    match config.kind {
        DataKind::Appendix => {
            if config.dims.is_some() || config.n_samples.is_some() || config.noise_sd.is_some() {
                return Err(CliError::config("dims, n_samples and noise_sd apply to the phantom only"));
            }
            let seed = config.seed.unwrap_or(APPENDIX_DEFAULT_SEED);
            let data = synth_data::generate_appendix_dataset(seed, config.family);
            io::write_dataset(dir.path("dataset.csv")?, &data)?;
            io::write_vector(dir.path("beta_star.csv")?, data.beta_star.as_ref().expect("generated with truth"))?;
            io::write_index_list(dir.path("true_support.txt")?, data.true_support.as_deref().unwrap_or(&[]))?;
        }
        DataKind::Phantom => {
            let spec = phantom_spec(config)?;
            let (data, grid, truth) = synth_data::generate_phantom(&spec)?;
            io::write_dataset(dir.path("dataset.csv")?, &data)?;
            io::write_vector(dir.path("beta_star.csv")?, &truth.beta_star)?;
            io::write_mask(dir.path("mask.txt")?, &grid)?;
            io::write_index_list(dir.path("lesion.txt")?, &truth.lesion)?;
            io::write_index_list(dir.path("bias.txt")?, &truth.bias)?;
            dir.write_json("phantom.json", &spec)?;
        }
    }
    dir.write_json("config.json", config)?;
    log::info!("wrote {}", dir.root().display());
    dir.finish()
}
