//! Checkpoint layout: `<stem>.json` header (architecture, config, tensor
//! names/shapes/offsets) next to `<stem>.f32`, the weights as little-endian
//! f32 in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LearnerConfig, ModelState};
use crate::{Error, Result};

const FORMAT: &str = "alseg.checkpoint.v1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    config: LearnerConfig,
    epochs_done: u64,
    adam_step: u64,
    blob: String,
    tensors: Vec<TensorEntry>,
}

pub fn save_checkpoint(model: &ModelState, config: &LearnerConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if config.architecture() != model.arch {
        return Err(Error::invalid("config does not describe this model's architecture"));
    }
    let blob_name = format!(
        "{}.f32",
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into())
    );
    let mut offset = 0;
    let tensors = model
        .arch
        .tensor_shapes()
        .into_iter()
        .map(|(name, shape)| {
            let e = TensorEntry { name, offset, shape };
            offset += e.shape.iter().product::<usize>();
            e
        })
        .collect();
    let header = Header {
        format: FORMAT.into(),
        config: config.clone(),
        epochs_done: model.epochs_done,
        adam_step: model.adam.step,
        blob: blob_name.clone(),
        tensors,
    };
    let mut bytes = Vec::with_capacity(model.params.len() * 4);
    for &w in &model.params {
        bytes.extend_from_slice(&(w as f32).to_le_bytes());
    }
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let blob_path = dir.join(&blob_name);
    fs::write(&blob_path, bytes).map_err(|e| Error::io(&blob_path, e))?;
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Load weights (widened from f32); optimizer moments start fresh.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelState, LearnerConfig)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: Header = serde_json::from_str(&text).map_err(|e| Error::parse("checkpoint", e.to_string()))?;
    if header.format != FORMAT {
        return Err(Error::parse("format", format!("unsupported checkpoint format `{}`", header.format)));
    }
    header.config.validate()?;
    let arch = header.config.architecture();
    let expected = arch.tensor_shapes();
    if expected.len() != header.tensors.len()
        || expected.iter().zip(&header.tensors).any(|((n, s), e)| *n != e.name || *s != e.shape)
    {
        return Err(Error::parse("tensors", "tensor table does not match the configured architecture"));
    }
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let blob_path = dir.join(&header.blob);
    let bytes = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    let n = arch.n_params();
    if bytes.len() != n * 4 {
        return Err(Error::parse("blob", format!("expected {} bytes, found {}", n * 4, bytes.len())));
    }
    let params = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let mut model = ModelState::from_params(arch, params);
    model.epochs_done = header.epochs_done;
    Ok((model, header.config))
}
