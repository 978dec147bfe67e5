//! Checkpoint container: encoder tensors plus (optionally) the plug-in
//! state, as self-describing JSON with a config digest that is validated on
//! load. Files are written to a temporary sibling and renamed into place, so
//! an interrupted run never leaves a partial checkpoint.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoder::{EncoderConfig, EncoderParams};
use crate::error::{Error, Result};
use crate::plugin::EvpParams;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub encoder: EncoderParams,
    pub evp: Option<EvpParams>,
}

pub fn config_hash(config: &EncoderConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let mut h = Sha256::new();
    h.update(json.as_bytes());
    format!("{:x}", h.finalize())
}

impl Checkpoint {
    pub fn new(encoder: EncoderParams, evp: Option<EvpParams>) -> Self {
        let config_hash = config_hash(&encoder.config);
        Self {
            version: CHECKPOINT_VERSION,
            config_hash,
            encoder,
            evp,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Checkpoint(format!("serialize: {e}")))?;
        atomic_write(path, json.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| {
            Error::Checkpoint(format!("{}: {e}", path.display()))
        })?;
        let ckpt: Checkpoint = serde_json::from_str(&data)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        let expect = config_hash(&ckpt.encoder.config);
        if expect != ckpt.config_hash {
            return Err(Error::Checkpoint(format!(
                "config hash mismatch in {} (stored {}, computed {expect})",
                path.display(),
                ckpt.config_hash
            )));
        }
        Ok(ckpt)
    }
}

/// Write-then-rename within the target directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Io(std::io::Error::other("path has no file name")))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
