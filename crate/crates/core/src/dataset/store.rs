//! Binary container, JSON manifest and CSV export for datasets.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes  "RBSPDS\0\0"
//! version      u32
//! header_len   u64      followed by a JSON header (kind, role, grid, model id, counts)
//! records      n × { target f64, label f64, cell u32×2, replica u32, 0u32, seed u64,
//!                    input f64 × input_len }
//! checksum     32 bytes SHA-256 of everything above
//! ```

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Dataset, DatasetKind, DatasetRole, GridSpec};
use crate::error::{Error, Result};
use crate::neuralnet::{Provenance, TrainingExample};

pub const FORMAT_MAGIC: [u8; 8] = *b"RBSPDS\0\0";
pub const SCHEMA_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    kind: DatasetKind,
    role: DatasetRole,
    grid: GridSpec,
    model_pair_id: String,
    n_examples: usize,
    input_len: usize,
}

/// Sidecar description of a saved dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub file: String,
    pub sha256: String,
    pub kind: DatasetKind,
    pub role: DatasetRole,
    pub n_examples: usize,
    pub input_len: usize,
    pub model_pair_id: String,
    pub grid: GridSpec,
}

fn encode_body(ds: &Dataset) -> Result<Vec<u8>> {
    let input_len = ds.input_len();
    if let Some(bad) = ds.examples.iter().find(|e| e.input.len() != input_len) {
        return Err(Error::Dimension {
            expected: input_len,
            got: bad.input.len(),
        });
    }
    let header = serde_json::to_vec(&Header {
        kind: ds.kind,
        role: ds.role,
        grid: ds.grid.clone(),
        model_pair_id: ds.model_pair_id.clone(),
        n_examples: ds.len(),
        input_len,
    })?;
    let mut buf = Vec::with_capacity(20 + header.len() + ds.len() * (40 + 8 * input_len));
    buf.extend_from_slice(&FORMAT_MAGIC);
    buf.extend_from_slice(&SCHEMA_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header);
    for ex in &ds.examples {
        buf.extend_from_slice(&ex.target.to_le_bytes());
        buf.extend_from_slice(&ex.label_raw.to_le_bytes());
        buf.extend_from_slice(&ex.provenance.cell[0].to_le_bytes());
        buf.extend_from_slice(&ex.provenance.cell[1].to_le_bytes());
        buf.extend_from_slice(&ex.provenance.replica.to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        buf.extend_from_slice(&ex.provenance.seed.to_le_bytes());
        for v in &ex.input {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

/// Serialized dataset bytes, checksum included.
pub fn encode_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    let mut buf = encode_body(ds)?;
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    Ok(buf)
}

/// Hex SHA-256 of the dataset's serialized form; equals the file checksum.
pub fn dataset_hash(ds: &Dataset) -> Result<String> {
    Ok(hex::encode(Sha256::digest(encode_body(ds)?)))
}

/// Write atomically (temporary sibling, then rename); returns the content hash.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<String> {
    let bytes = encode_dataset(ds)?;
    let hash = hex::encode(&bytes[bytes.len() - CHECKSUM_LEN..]);
    write_atomic(path, &bytes)?;
    Ok(hash)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Malformed {
                path: self.path.into(),
                reason: "truncated".into(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_dataset(bytes: &[u8], path: &Path) -> Result<Dataset> {
    let malformed = |reason: &str| Error::Malformed {
        path: path.into(),
        reason: reason.into(),
    };
    if bytes.len() < FORMAT_MAGIC.len() + 12 + CHECKSUM_LEN {
        return Err(malformed("file too short"));
    }
    if bytes[..8] != FORMAT_MAGIC {
        return Err(malformed("not a dataset file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            expected: SCHEMA_VERSION,
            found: version,
        });
    }
    let (body, digest) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum(path.into()));
    }
    let mut r = Reader {
        buf: body,
        pos: 12,
        path,
    };
    let header_len = r.u64()? as usize;
    let header: Header = serde_json::from_slice(r.take(header_len)?)
        .map_err(|e| malformed(&format!("header: {e}")))?;
    let record_len = 40 + 8 * header.input_len;
    if body.len() - r.pos != header.n_examples * record_len {
        return Err(malformed("record count does not match header"));
    }
    let mut examples = Vec::with_capacity(header.n_examples);
    for _ in 0..header.n_examples {
        let target = r.f64()?;
        let label_raw = r.f64()?;
        let cell = [r.u32()?, r.u32()?];
        let replica = r.u32()?;
        r.u32()?;
        let seed = r.u64()?;
        let input = (0..header.input_len)
            .map(|_| r.f64())
            .collect::<Result<Vec<_>>>()?;
        examples.push(TrainingExample {
            input,
            target,
            label_raw,
            provenance: Provenance {
                cell,
                replica,
                seed,
            },
        });
    }
    Ok(Dataset {
        kind: header.kind,
        role: header.role,
        grid: header.grid,
        model_pair_id: header.model_pair_id,
        examples,
    })
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes, path)
}

/// Write a manifest for a dataset saved at `data_path`.
pub fn write_manifest(ds: &Dataset, data_path: &Path, manifest_path: &Path) -> Result<Manifest> {
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        file: data_path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: dataset_hash(ds)?,
        kind: ds.kind,
        role: ds.role,
        n_examples: ds.len(),
        input_len: ds.input_len(),
        model_pair_id: ds.model_pair_id.clone(),
        grid: ds.grid.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    write_atomic(manifest_path, text.as_bytes())?;
    Ok(manifest)
}

/// One row per example: label, target, provenance, then `x1..xN`.
pub fn export_csv<W: Write>(ds: &Dataset, mut out: W) -> std::io::Result<()> {
    write!(out, "label,target,alpha_index,amp_index,replica,seed")?;
    for i in 1..=ds.input_len() {
        write!(out, ",x{i}")?;
    }
    writeln!(out)?;
    for ex in &ds.examples {
        let p = &ex.provenance;
        write!(
            out,
            "{},{},{},{},{},{}",
            ex.label_raw, ex.target, p.cell[0], p.cell[1], p.replica, p.seed
        )?;
        for v in &ex.input {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
