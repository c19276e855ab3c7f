//! Artifact plumbing: atomic writes, content hashes and the metadata every
//! output carries.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&read(path)?))
}

/// Hash of a serializable configuration. serde_json emits struct fields in
/// declaration order, so equal configurations give equal hashes.
pub fn config_hash<T: Serialize>(cfg: &T) -> CliResult<String> {
    Ok(sha256_hex(&serde_json::to_vec(cfg).map_err(matchcast::Error::from)?))
}

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

/// Write `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// A JSON artifact: provenance fields followed by the payload.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub kind: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub body: T,
}

pub fn write_json<T: Serialize>(path: &Path, kind: &str, config_hash: &str, master_seed: u64, body: &T) -> CliResult<()> {
    let env = Envelope { kind: kind.to_owned(), config_hash: config_hash.to_owned(), master_seed, body };
    let mut bytes = serde_json::to_vec_pretty(&env).map_err(matchcast::Error::from)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path, kind: &str) -> CliResult<Envelope<T>> {
    let bytes = read(path)?;
    let env: Envelope<T> = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    if env.kind != kind {
        return Err(CliError::Invalid(format!("{}: expected a {kind} artifact, found {}", path.display(), env.kind)));
    }
    Ok(env)
}

/// Sidecar carrying provenance for a CSV artifact.
#[derive(Debug, Serialize, Deserialize)]
pub struct CsvMeta {
    pub file: String,
    pub sha256: String,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Write a CSV artifact and its `.meta.json` sidecar.
pub fn write_csv(path: &Path, kind: &str, config_hash: &str, master_seed: u64, bytes: &[u8]) -> CliResult<()> {
    write_atomic(path, bytes)?;
    let meta = CsvMeta {
        file: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        sha256: sha256_hex(bytes),
    };
    write_json(&meta_path(path), kind, config_hash, master_seed, &meta)
}

/// Render rows into CSV bytes.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> CliResult<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(matchcast::Error::from)?;
    for r in rows {
        w.write_record(r).map_err(matchcast::Error::from)?;
    }
    w.into_inner().map_err(|e| CliError::Invalid(format!("csv buffer: {e}")))
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "null".to_owned(), |v| v.to_string())
}
