//! Experiment manifests: the fully resolved settings of a command run,
//! hashed, so that outputs are reproducible from the manifest alone.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved flag/config/default view, alphabetical.
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    /// Output files written next to this manifest.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: BTreeMap<String, String>, outputs: Vec<String>) -> Manifest {
        let canonical: String = config
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        Manifest {
            tool: "treecover".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: format!("{:016x}", fnv1a64(canonical.as_bytes())),
            config,
            outputs,
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), text + "\n")
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
