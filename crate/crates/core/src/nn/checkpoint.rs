//! Binary checkpoints: `WOLM`, a little-endian `u32` format version, a `u32`
//! header length, a JSON header, then every parameter as little-endian `f64`
//! in header order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{LanguageModel, ModelSpec, Params};
use super::tensor::Mat;
use super::NnError;

pub const MAGIC: &[u8; 4] = b"WOLM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub spec: ModelSpec,
    pub names: Vec<String>,
    pub shapes: Vec<(usize, usize)>,
    /// Free-form run metadata.
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn write_checkpoint(w: &mut impl Write, model: &LanguageModel, meta: serde_json::Value) -> Result<(), NnError> {
    let header = CheckpointHeader {
        spec: model.spec.clone(),
        names: model.params.names.clone(),
        shapes: model.params.mats.iter().map(Mat::shape).collect(),
        meta,
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(model.params.count() * 8);
    for m in &model.params.mats {
        for x in &m.data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<(LanguageModel, serde_json::Value), NnError> {
    let bad = |m: &str| NnError::Checkpoint(m.to_string());
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(|_| bad("truncated magic"))?;
    if &word != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    r.read_exact(&mut word).map_err(|_| bad("truncated version"))?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    r.read_exact(&mut word).map_err(|_| bad("truncated header length"))?;
    let mut json = vec![0u8; u32::from_le_bytes(word) as usize];
    r.read_exact(&mut json).map_err(|_| bad("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(&json)?;
    let expected: Vec<(String, (usize, usize))> = header.spec.param_shapes();
    let found: Vec<(String, (usize, usize))> = header.names.iter().cloned().zip(header.shapes.iter().copied()).collect();
    if expected != found {
        return Err(bad("parameter layout does not match the model spec"));
    }
    let mut mats = Vec::with_capacity(found.len());
    for &(rows, cols) in &header.shapes {
        let mut bytes = vec![0u8; rows * cols * 8];
        r.read_exact(&mut bytes).map_err(|_| bad("truncated parameters"))?;
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        mats.push(Mat::from_vec(rows, cols, data));
    }
    if r.read(&mut word)? != 0 {
        return Err(bad("trailing bytes after parameters"));
    }
    let model = LanguageModel { spec: header.spec, params: Params { names: header.names, mats } };
    Ok((model, header.meta))
}

pub fn save_checkpoint(path: &Path, model: &LanguageModel, meta: serde_json::Value) -> Result<(), NnError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(&mut f, model, meta)?;
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(LanguageModel, serde_json::Value), NnError> {
    read_checkpoint(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}
