//! `SPN1` checkpoint format.
//!
//! Layout: magic `SPN1`, little-endian u32 tensor count, then per tensor:
//! u32 name length, name bytes (utf-8), u32 rank, rank u32 dims, u32 element
//! width (32 or 64), raw little-endian element data. Round-trips are
//! bit-exact; a truncated or corrupt file yields an error and no partial
//! state.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const SPN1_MAGIC: &[u8; 4] = b"SPN1";

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Widen to f64 (lossless for both storage widths).
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: TensorData,
}

/// Ordered list of named tensors. Model metadata rides along as reserved
/// tensors (see the model module).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub tensors: Vec<CheckpointTensor>,
}

impl Checkpoint {
    pub fn push_f64(&mut self, name: impl Into<String>, dims: Vec<usize>, data: Vec<f64>) {
        self.tensors.push(CheckpointTensor {
            name: name.into(),
            dims,
            data: TensorData::F64(data),
        });
    }

    pub fn get(&self, name: &str) -> Option<&CheckpointTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        // Names must be unique for lookups to be well-defined.
        for (i, t) in self.tensors.iter().enumerate() {
            if self.tensors[..i].iter().any(|u| u.name == t.name) {
                return Err(Error::Format(format!("duplicate tensor name `{}`", t.name)));
            }
            let expect: usize = t.dims.iter().product();
            if expect != t.data.len() {
                return Err(Error::Format(format!(
                    "tensor `{}`: {} elements but dims {:?}",
                    t.name,
                    t.data.len(),
                    t.dims
                )));
            }
        }
        w.write_all(SPN1_MAGIC)?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for t in &self.tensors {
            w.write_all(&(t.name.len() as u32).to_le_bytes())?;
            w.write_all(t.name.as_bytes())?;
            w.write_all(&(t.dims.len() as u32).to_le_bytes())?;
            for &d in &t.dims {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            match &t.data {
                TensorData::F32(v) => {
                    w.write_all(&32u32.to_le_bytes())?;
                    for &x in v {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
                TensorData::F64(v) => {
                    w.write_all(&64u32.to_le_bytes())?;
                    for &x in v {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("SPN1: truncated magic".into()))?;
        if &magic != SPN1_MAGIC {
            return Err(Error::Format("SPN1: bad magic".into()));
        }
        let count = read_u32(r, "tensor count")? as usize;
        let mut tensors = Vec::with_capacity(count);
        for i in 0..count {
            let name_len = read_u32(r, "name length")? as usize;
            if name_len > 4096 {
                return Err(Error::Format(format!(
                    "SPN1: implausible name length {name_len}"
                )));
            }
            let mut name_bytes = vec![0u8; name_len];
            r.read_exact(&mut name_bytes)
                .map_err(|_| Error::Format(format!("SPN1: truncated name of tensor {i}")))?;
            let name = String::from_utf8(name_bytes)
                .map_err(|_| Error::Format(format!("SPN1: tensor {i} name is not utf-8")))?;
            let rank = read_u32(r, "rank")? as usize;
            if rank > 8 {
                return Err(Error::Format(format!("SPN1: implausible rank {rank}")));
            }
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(read_u32(r, "dim")? as usize);
            }
            let elems: usize = dims.iter().product();
            let width = read_u32(r, "element width")?;
            let data = match width {
                32 => {
                    let mut bytes = vec![0u8; elems * 4];
                    r.read_exact(&mut bytes)
                        .map_err(|_| Error::Format(format!("SPN1: truncated data of `{name}`")))?;
                    TensorData::F32(
                        bytes
                            .chunks_exact(4)
                            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                            .collect(),
                    )
                }
                64 => {
                    let mut bytes = vec![0u8; elems * 8];
                    r.read_exact(&mut bytes)
                        .map_err(|_| Error::Format(format!("SPN1: truncated data of `{name}`")))?;
                    TensorData::F64(
                        bytes
                            .chunks_exact(8)
                            .map(|c| {
                                f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]])
                            })
                            .collect(),
                    )
                }
                other => {
                    return Err(Error::Format(format!(
                        "SPN1: element width {other} not 32/64"
                    )))
                }
            };
            tensors.push(CheckpointTensor { name, dims, data });
        }
        Ok(Self { tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write(&mut f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        Self::read(&mut f)
    }
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format(format!("SPN1: truncated {what}")))?;
    Ok(u32::from_le_bytes(buf))
}
