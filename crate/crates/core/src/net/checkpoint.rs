//! Checkpoint container: magic, format version, JSON header length, JSON
//! header, then every parameter as little-endian f32 in storage order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Geometry, ModelParams, NetError};
use crate::corpus::Task;
use crate::signal::{FeatureSet, FrameSpec};
use crate::windows::WindowConfig;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PROSCNN\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub geometry: Geometry,
    pub n_classes: usize,
    pub pool_out: usize,
    pub task: Task,
    pub feature_set: FeatureSet,
    pub frame_spec: FrameSpec,
    pub window: WindowConfig,
    pub zscore: bool,
    pub seed: u64,
    pub num_params: usize,
}

impl CheckpointMeta {
    pub fn new(
        params: &ModelParams,
        task: Task,
        feature_set: FeatureSet,
        frame_spec: FrameSpec,
        window: WindowConfig,
        zscore: bool,
        seed: u64,
    ) -> Self {
        Self {
            geometry: params.geometry,
            n_classes: params.geometry.n_classes,
            pool_out: params.geometry.pool_out,
            task,
            feature_set,
            frame_spec,
            window,
            zscore,
            seed,
            num_params: params.num_params(),
        }
    }
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    params: &ModelParams,
    meta: &CheckpointMeta,
) -> std::io::Result<()> {
    let header = serde_json::to_vec(meta).map_err(std::io::Error::other)?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    for t in params.tensors() {
        for &v in t {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> NetError {
    NetError::ShapeError(msg.into())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ModelParams, CheckpointMeta), NetError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| bad(e.to_string()))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(|e| bad(e.to_string()))?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    r.read_exact(&mut word).map_err(|e| bad(e.to_string()))?;
    let mut header = vec![0u8; u32::from_le_bytes(word) as usize];
    r.read_exact(&mut header).map_err(|e| bad(e.to_string()))?;
    let meta: CheckpointMeta = serde_json::from_slice(&header).map_err(|e| bad(e.to_string()))?;
    meta.geometry.validate()?;
    let mut params = ModelParams::zeros(meta.geometry);
    if params.num_params() != meta.num_params {
        return Err(bad(format!(
            "header declares {} parameters, geometry implies {}",
            meta.num_params,
            params.num_params()
        )));
    }
    let mut blob = vec![0u8; 4 * meta.num_params];
    r.read_exact(&mut blob)
        .map_err(|e| bad(format!("truncated parameter blob: {e}")))?;
    let flat: Vec<f64> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    params.set_flat(&flat)?;
    Ok((params, meta))
}
