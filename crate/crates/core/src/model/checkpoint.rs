//! Versioned checkpoint: a JSON header carrying the model spec plus a
//! manifest of tensor names, shapes and dtypes, followed by the raw
//! little-endian parameter blobs in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelError, ModelParams, ModelSpec};
use crate::tensor::{Dtype, Scalar, Tensor};

const MAGIC: &[u8; 8] = b"ADINCKPT";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    dtype: Dtype,
}

pub fn save_checkpoint<T: Scalar>(
    path: impl AsRef<Path>,
    params: &ModelParams<T>,
) -> Result<(), ModelError> {
    let named = params.named_tensors();
    let header = Header {
        spec: params.spec.clone(),
        tensors: named
            .iter()
            .map(|(name, tensor, _)| TensorEntry {
                name: name.clone(),
                shape: tensor.shape().to_vec(),
                dtype: T::DTYPE,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header)
        .map_err(|e| ModelError::CheckpointFormat(e.to_string()))?;

    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&json);
    for (_, tensor, _) in &named {
        for &v in tensor.data() {
            v.write_le(&mut bytes);
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Loads a checkpoint, converting stored values to `T` if the on-disk dtype
/// differs.
pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<ModelParams<T>, ModelError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(ModelError::CheckpointFormat(
            "missing checkpoint magic".into(),
        ));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(ModelError::CheckpointFormat(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let json_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let blob_start = 16 + json_len;
    if bytes.len() < blob_start {
        return Err(ModelError::CheckpointFormat("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[16..blob_start])
        .map_err(|e| ModelError::CheckpointFormat(e.to_string()))?;

    let mut params = ModelParams::<T>::zeros_from_spec(&header.spec)?;
    let mut offset = blob_start;
    let mut slots: std::collections::HashMap<String, &mut Tensor<T>> = params
        .named_tensors_mut()
        .into_iter()
        .map(|(name, tensor, _)| (name, tensor))
        .collect();
    let mut filled = 0usize;
    for entry in &header.tensors {
        let count: usize = entry.shape.iter().product();
        let width = entry.dtype.byte_width();
        let end = offset + count * width;
        if bytes.len() < end {
            return Err(ModelError::CheckpointFormat(format!(
                "truncated blob for tensor {}",
                entry.name
            )));
        }
        let slot = slots.remove(&entry.name).ok_or_else(|| {
            ModelError::CheckpointFormat(format!("unknown tensor name {}", entry.name))
        })?;
        if slot.shape() != entry.shape.as_slice() {
            return Err(ModelError::CheckpointFormat(format!(
                "tensor {} has shape {:?} on disk but {:?} in spec",
                entry.name,
                entry.shape,
                slot.shape()
            )));
        }
        let data: Vec<T> = bytes[offset..end]
            .chunks_exact(width)
            .map(|chunk| match entry.dtype {
                Dtype::F32 => T::from_f64(f32::read_le(chunk).to_f64()),
                Dtype::F64 => T::from_f64(f64::read_le(chunk)),
            })
            .collect();
        *slot = Tensor::new(entry.shape.clone(), data)?;
        offset = end;
        filled += 1;
    }
    if !slots.is_empty() {
        let missing: Vec<&String> = slots.keys().take(3).collect();
        return Err(ModelError::CheckpointFormat(format!(
            "checkpoint is missing {} tensors (e.g. {missing:?})",
            slots.len()
        )));
    }
    debug_assert_eq!(filled, header.tensors.len());
    Ok(params)
}
