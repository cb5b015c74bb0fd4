//! `SPD1` descriptor cache format.
//!
//! Layout: magic `SPD1`, little-endian u32 fields (kind, N_d, F, flags),
//! then `N_d * F` little-endian 32-bit floats, row-major. Flag bit 0 is
//! scale normalization, bit 1 is normal folding. Round-trips are bit-exact
//! at f32 precision.

use std::io::{Read, Write};
use std::path::Path;

use super::set::DescriptorSet;
use super::DescriptorType;
use crate::error::{Error, Result};

pub const SPD1_MAGIC: &[u8; 4] = b"SPD1";

const FLAG_SCALE_NORMALIZED: u32 = 1 << 0;
const FLAG_FOLDED_NORMALS: u32 = 1 << 1;

pub fn write_spd1<W: Write>(set: &DescriptorSet, w: &mut W) -> Result<()> {
    w.write_all(SPD1_MAGIC)?;
    w.write_all(&set.kind.code().to_le_bytes())?;
    w.write_all(&(set.n_rows as u32).to_le_bytes())?;
    w.write_all(&(set.width as u32).to_le_bytes())?;
    let mut flags = 0u32;
    if set.scale_normalized {
        flags |= FLAG_SCALE_NORMALIZED;
    }
    if set.folded_normals {
        flags |= FLAG_FOLDED_NORMALS;
    }
    w.write_all(&flags.to_le_bytes())?;
    let mut buf = Vec::with_capacity(set.data.len() * 4);
    for &x in &set.data {
        buf.extend_from_slice(&(x as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_spd1<R: Read>(r: &mut R) -> Result<DescriptorSet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("SPD1: truncated magic".into()))?;
    if &magic != SPD1_MAGIC {
        return Err(Error::Format("SPD1: bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut R, what: &str| -> Result<u32> {
        r.read_exact(&mut u32buf)
            .map_err(|_| Error::Format(format!("SPD1: truncated {what}")))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let kind = DescriptorType::from_code(read_u32(r, "kind")?)?;
    let n_rows = read_u32(r, "row count")? as usize;
    let width = read_u32(r, "width")? as usize;
    let flags = read_u32(r, "flags")?;
    if width != kind.width() {
        return Err(Error::Format(format!(
            "SPD1: width {width} does not match kind {} (expects {})",
            kind.as_str(),
            kind.width()
        )));
    }
    let mut bytes = vec![0u8; n_rows * width * 4];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::Format("SPD1: truncated feature data".into()))?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(DescriptorSet {
        kind,
        n_rows,
        width,
        data,
        scale_normalized: flags & FLAG_SCALE_NORMALIZED != 0,
        folded_normals: flags & FLAG_FOLDED_NORMALS != 0,
    })
}

pub fn save_spd1(set: &DescriptorSet, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write_spd1(set, &mut f)
}

pub fn load_spd1(path: &Path) -> Result<DescriptorSet> {
    let mut f = std::fs::File::open(path)?;
    read_spd1(&mut f)
}
