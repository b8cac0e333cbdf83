//! Checkpoints: `manifest.json` describing every network plus `weights.bin`
//! holding all parameters as packed little-endian `f64`.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Dense, Mlp};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "curiophys-checkpoint-v1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHTS_FILE: &str = "weights.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub rows: usize,
    pub cols: usize,
    /// Offsets count `f64` elements from the start of `weights.bin`.
    pub weight_offset: usize,
    pub bias_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEntry {
    pub name: String,
    pub sizes: Vec<usize>,
    pub layers: Vec<LayerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub dtype: String,
    pub seed: u64,
    pub step: u64,
    pub networks: Vec<NetworkEntry>,
    /// Free-form metadata (architecture options, run config echo).
    #[serde(default)]
    pub metadata: serde_json::Value,
}

pub fn save(
    dir: impl AsRef<Path>,
    seed: u64,
    step: u64,
    metadata: serde_json::Value,
    networks: &[(&str, &Mlp)],
) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut blob: Vec<u8> = Vec::new();
    let mut entries = Vec::with_capacity(networks.len());
    let mut offset = 0usize;
    let mut push = |values: &mut dyn Iterator<Item = &f64>, blob: &mut Vec<u8>| -> usize {
        let start = offset;
        for v in values {
            blob.extend_from_slice(&v.to_le_bytes());
            offset += 1;
        }
        start
    };
    for (name, net) in networks {
        let layers = net
            .layers()
            .iter()
            .map(|l| {
                let weight_offset = push(&mut l.weight.iter(), &mut blob);
                let bias_offset = push(&mut l.bias.iter(), &mut blob);
                LayerEntry { rows: l.out_dim(), cols: l.in_dim(), weight_offset, bias_offset }
            })
            .collect();
        entries.push(NetworkEntry { name: name.to_string(), sizes: net.sizes(), layers });
    }
    let manifest = Manifest {
        format: CHECKPOINT_FORMAT.into(),
        dtype: "f64-le".into(),
        seed,
        step,
        networks: entries,
        metadata,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_vec_pretty(&manifest)?)?;
    fs::write(dir.join(WEIGHTS_FILE), blob)?;
    Ok(manifest)
}

pub fn load(dir: impl AsRef<Path>) -> Result<(Manifest, Vec<(String, Mlp)>)> {
    let dir = dir.as_ref();
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?;
    if manifest.format != CHECKPOINT_FORMAT || manifest.dtype != "f64-le" {
        return Err(Error::Format(format!(
            "unsupported checkpoint {} / {}",
            manifest.format, manifest.dtype
        )));
    }
    let bytes = fs::read(dir.join(WEIGHTS_FILE))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format("weights.bin length is not a multiple of 8".into()));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let take = |offset: usize, len: usize| -> Result<Vec<f64>> {
        values
            .get(offset..offset + len)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| Error::Format(format!("range {offset}+{len} past end of weights")))
    };
    let mut nets = Vec::with_capacity(manifest.networks.len());
    for entry in &manifest.networks {
        let mut layers = Vec::with_capacity(entry.layers.len());
        for l in &entry.layers {
            let weight = Array2::from_shape_vec((l.rows, l.cols), take(l.weight_offset, l.rows * l.cols)?)
                .map_err(|e| Error::Format(e.to_string()))?;
            let bias = Array1::from(take(l.bias_offset, l.rows)?);
            layers.push(Dense { weight, bias });
        }
        let net = Mlp::from_layers(layers)?;
        if net.sizes() != entry.sizes {
            return Err(Error::Format(format!("network {} shape mismatch", entry.name)));
        }
        nets.push((entry.name.clone(), net));
    }
    Ok((manifest, nets))
}
