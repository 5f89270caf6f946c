//! Self-describing checkpoint container.
//!
//! Layout: 8-byte magic, u32 format version, u64 header length, JSON
//! header, then a flat little-endian tensor blob. The header echoes an
//! arbitrary JSON config and lists each tensor's name, shape, dtype and
//! byte range, so files are readable without knowing the producing code.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"LINEREC\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorMeta {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub offset: u64,
    pub byte_len: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: serde_json::Value,
    tensors: Vec<TensorMeta>,
}

fn dtype_of<T: Scalar>() -> &'static str {
    match std::mem::size_of::<T>() {
        4 => "f32",
        8 => "f64",
        n => panic!("unsupported scalar width {n}"),
    }
}

fn ckerr(path: &Path, msg: impl Into<String>) -> Error {
    Error::Checkpoint { path: path.to_path_buf(), msg: msg.into() }
}

/// Write `tensors` with a config echo. Order is preserved.
pub fn save<T: Scalar>(
    path: &Path,
    config: &serde_json::Value,
    tensors: &[(String, &ArrayD<T>)],
) -> Result<()> {
    let dtype = dtype_of::<T>();
    let elem = std::mem::size_of::<T>() as u64;
    let mut metas = Vec::with_capacity(tensors.len());
    let mut offset = 0u64;
    for (name, t) in tensors {
        let byte_len = t.len() as u64 * elem;
        metas.push(TensorMeta {
            name: name.clone(),
            shape: t.shape().to_vec(),
            dtype: dtype.to_string(),
            offset,
            byte_len,
        });
        offset += byte_len;
    }
    let header = Header { config: config.clone(), tensors: metas };
    let header_bytes = serde_json::to_vec(&header)?;

    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(MAGIC)?;
    f.write_all(&VERSION.to_le_bytes())?;
    f.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    f.write_all(&header_bytes)?;
    let mut blob = Vec::with_capacity(offset as usize);
    for (_, t) in tensors {
        for x in t.iter() {
            let v = x.to_f64c();
            match dtype {
                "f32" => blob.extend_from_slice(&(v as f32).to_le_bytes()),
                _ => blob.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    f.write_all(&blob)?;
    Ok(())
}

/// Read back config and tensors, converting to `T` if the stored dtype
/// differs.
pub fn load<T: Scalar>(path: &Path) -> Result<(serde_json::Value, Vec<(String, ArrayD<T>)>)> {
    let mut f = fs::File::open(path).map_err(|e| ckerr(path, format!("open failed: {e}")))?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic).map_err(|e| ckerr(path, format!("short file: {e}")))?;
    if &magic != MAGIC {
        return Err(ckerr(path, "bad magic; not a checkpoint file"));
    }
    let mut v4 = [0u8; 4];
    f.read_exact(&mut v4)?;
    let version = u32::from_le_bytes(v4);
    if version != VERSION {
        return Err(ckerr(path, format!("unsupported version {version}")));
    }
    let mut l8 = [0u8; 8];
    f.read_exact(&mut l8)?;
    let header_len = u64::from_le_bytes(l8) as usize;
    let mut header_bytes = vec![0u8; header_len];
    f.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| ckerr(path, format!("bad header: {e}")))?;
    let mut blob = Vec::new();
    f.read_to_end(&mut blob)?;

    let mut out = Vec::with_capacity(header.tensors.len());
    for meta in &header.tensors {
        let start = meta.offset as usize;
        let end = start + meta.byte_len as usize;
        if end > blob.len() {
            return Err(ckerr(path, format!("tensor {} overruns blob", meta.name)));
        }
        let bytes = &blob[start..end];
        let expect: usize = meta.shape.iter().product();
        let values: Vec<T> = match meta.dtype.as_str() {
            "f32" => bytes
                .chunks_exact(4)
                .map(|c| T::of(f32::from_le_bytes(c.try_into().unwrap()) as f64))
                .collect(),
            "f64" => bytes
                .chunks_exact(8)
                .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
                .collect(),
            other => return Err(ckerr(path, format!("tensor {}: unknown dtype {other}", meta.name))),
        };
        if values.len() != expect {
            return Err(ckerr(
                path,
                format!("tensor {}: {} values for shape {:?}", meta.name, values.len(), meta.shape),
            ));
        }
        let arr = ArrayD::from_shape_vec(IxDyn(&meta.shape), values)
            .map_err(|e| ckerr(path, format!("tensor {}: {e}", meta.name)))?;
        out.push((meta.name.clone(), arr));
    }
    Ok((header.config, out))
}

/// Config echo of a checkpoint without materializing tensors.
pub fn read_config(path: &Path) -> Result<serde_json::Value> {
    let (config, _) = load::<f32>(path)?;
    Ok(config)
}
