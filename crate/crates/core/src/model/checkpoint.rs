//! Checkpoints: little-endian `f64` parameters plus a JSON sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::network::{Architecture, ToyModel};
use crate::error::{FcsnError, Result};
use crate::fourier::CoefficientRanges;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    architecture: Architecture,
    seed: u64,
    k: usize,
    param_count: usize,
    ranges: Vec<f64>,
    params_file: String,
}

fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `<path>` (raw parameters) and the sidecar `<path>` with a
/// `.json` extension next to it.
pub fn save(model: &ToyModel, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = model.params().iter().flat_map(|p| p.to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(|e| FcsnError::io(path, e))?;
    let sidecar = Sidecar {
        architecture: *model.architecture(),
        seed: model.seed(),
        k: model.architecture().k,
        param_count: model.params().len(),
        ranges: model.ranges().as_slice().to_vec(),
        params_file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    let side = sidecar_path(path);
    std::fs::write(&side, json + "\n").map_err(|e| FcsnError::io(&side, e))
}

pub fn load(path: &Path) -> Result<ToyModel> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| FcsnError::io(&side, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| FcsnError::format(&side, e))?;
    let bytes = std::fs::read(path).map_err(|e| FcsnError::io(path, e))?;
    if bytes.len() != sidecar.param_count * 8 {
        return Err(FcsnError::format(
            path,
            format!("{} bytes for {} parameters", bytes.len(), sidecar.param_count),
        ));
    }
    let params = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let ranges = CoefficientRanges::new(sidecar.k, sidecar.ranges).map_err(|e| FcsnError::format(&side, e))?;
    ToyModel::from_parts(sidecar.architecture, params, ranges, sidecar.seed)
}
