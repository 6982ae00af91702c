//! `<artifact>.meta.json` sidecars carrying tool version, seed and config
//! hash.

use std::path::{Path, PathBuf};

use numprobe_core::ledger::RunMeta;

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn run_meta(cfg: &RunConfig) -> RunMeta {
    RunMeta {
        tool_version: TOOL_VERSION.to_string(),
        seed: cfg.seed,
        config_hash: cfg.config_hash(),
    }
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    artifact.with_file_name(name)
}

pub fn write_sidecar(artifact: &Path, meta: &RunMeta) -> Result<(), CliError> {
    let path = sidecar_path(artifact);
    let mut text = serde_json::to_string_pretty(meta).expect("meta serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(CliError::io(format!("writing {}", path.display())))
}

pub fn read_sidecar(artifact: &Path) -> Option<RunMeta> {
    let text = std::fs::read_to_string(sidecar_path(artifact)).ok()?;
    serde_json::from_str(&text).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("probes.jsonl");
        assert_eq!(sidecar_path(&artifact), dir.path().join("probes.jsonl.meta.json"));
        let meta = run_meta(&RunConfig::default());
        write_sidecar(&artifact, &meta).unwrap();
        assert_eq!(read_sidecar(&artifact), Some(meta));
    }
}
