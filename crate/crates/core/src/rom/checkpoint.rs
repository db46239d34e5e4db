//! Binary model checkpoints with a JSON sidecar.
//!
//! Layout: magic `SYMROMCK`, `u32` LE version, `u32` LE metadata length,
//! metadata JSON, then every parameter as an LE `f64` in model order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::model::{ModelConfig, RomModel};
use crate::error::{Error, Result};
use crate::numcore::RngStream;
use crate::symplectic::{HenonNet, Parameterized};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SYMROMCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Metadata {
    n: usize,
    k: usize,
    variant: String,
    param_count: usize,
    config: ModelConfig,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn henon_shapes(net: &HenonNet) -> serde_json::Value {
    let layers: Vec<_> = net
        .layers()
        .iter()
        .map(|l| {
            let w = l.map.potential.widths();
            let affine: Vec<_> = w
                .windows(2)
                .map(|p| json!({ "W": [p[1], p[0]], "b": [p[1]] }))
                .collect();
            json!({ "potential": affine, "eta": [l.map.eta.len()] })
        })
        .collect();
    json!(layers)
}

/// Writes the checkpoint and its sidecar next to it.
pub fn save_checkpoint(path: &Path, model: &RomModel, config: &ModelConfig) -> Result<()> {
    let meta = Metadata {
        n: model.n(),
        k: model.k(),
        variant: config.variant().to_string(),
        param_count: model.param_count(),
        config: config.clone(),
    };
    let meta_json = serde_json::to_vec(&meta)?;
    let params = model.params();
    let mut bytes = Vec::with_capacity(16 + meta_json.len() + 8 * params.len());
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(meta_json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&meta_json);
    for p in &params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(path, bytes)?;

    let emb = &model.embedding;
    let mut components = Vec::new();
    if let Some(g) = &emb.reflectors {
        components.push(json!({
            "name": "reflectors",
            "param_count": g.param_count(),
            "count": g.len(),
            "per_reflector": { "u": [2 * model.n()], "beta": [1] },
        }));
    }
    if let Some(h) = &emb.henon {
        components.push(json!({
            "name": "henon",
            "param_count": h.param_count(),
            "layers": henon_shapes(h),
        }));
    }
    components.push(json!({
        "name": "flow",
        "param_count": model.flow.param_count(),
        "layers": henon_shapes(&model.flow),
    }));
    let sidecar = json!({
        "format_version": CHECKPOINT_VERSION,
        "n": meta.n,
        "k": meta.k,
        "variant": meta.variant,
        "param_count": meta.param_count,
        "config": meta.config,
        "component_order": components,
        "encoding": "f64 little-endian",
    });
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(())
}

/// Reads a checkpoint; returns the model and its architecture.
pub fn load_checkpoint(path: &Path) -> Result<(RomModel, ModelConfig)> {
    let bytes = fs::read(path)?;
    let bad = |m: &str| Error::Format(format!("{}: {m}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not a model checkpoint"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported checkpoint version {version}")));
    }
    let meta_len = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let body = 16 + meta_len;
    if bytes.len() < body {
        return Err(bad("truncated metadata"));
    }
    let meta: Metadata = serde_json::from_slice(&bytes[16..body])?;
    let mut model = RomModel::init(meta.n, &meta.config, &mut RngStream::new(0))?;
    if model.param_count() != meta.param_count || bytes.len() != body + 8 * meta.param_count {
        return Err(bad("parameter count does not match architecture"));
    }
    let params: Vec<f64> = bytes[body..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    model.set_params(&params)?;
    Ok((model, meta.config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_round_trip() {
        let cfg = ModelConfig {
            latent_dim: 1,
            henon_layers: 1,
            henon_hidden: vec![3],
            reflectors: 2,
            flow_layers: 1,
            flow_hidden: vec![2],
        };
        let model = RomModel::random(3, &cfg, &mut RngStream::new(5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&path, &model, &cfg).unwrap();
        let (back, cfg2) = load_checkpoint(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(cfg2, cfg);
        assert!(sidecar_path(&path).exists());
        fs::write(&path, b"garbage").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
