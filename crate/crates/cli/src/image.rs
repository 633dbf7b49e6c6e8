//! Simulated object-detection images: a flat little-endian `f64` grid plus a
//! JSON sidecar with the size and the injected objects.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ensemble_slice::numerics::{RngStream, StreamKey};
use ensemble_slice::targets::{simulate_image, Image, ObjectParams, NOISE_SD};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSidecar {
    pub size: usize,
    pub seed: Option<u64>,
    pub noise_sd: f64,
    pub objects: Vec<ObjectParams>,
}

pub fn simulated_image(seed: u64) -> (Image, Vec<ObjectParams>) {
    let mut rng = RngStream::new(seed, StreamKey::new(0, 0, 0));
    simulate_image(&mut rng)
}

pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension("json")
}

pub fn write_image(path: &Path, image: &Image, sidecar: &ImageSidecar) -> Result<(), CliError> {
    std::fs::write(path, image.to_le_bytes())?;
    let json = serde_json::to_string_pretty(sidecar).map_err(|e| CliError::io(e.to_string()))?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn load_image(path: &Path) -> Result<Image, CliError> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| CliError::io(format!("{}: {e}", side.display())))?;
    let sidecar: ImageSidecar =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", side.display())))?;
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Image::from_le_bytes(sidecar.size, &bytes).map_err(|e| CliError::config(e.to_string()))
}

pub fn default_sidecar(seed: u64, objects: Vec<ObjectParams>) -> ImageSidecar {
    ImageSidecar {
        size: ensemble_slice::targets::IMAGE_SIZE,
        seed: Some(seed),
        noise_sd: NOISE_SD,
        objects,
    }
}
