//! `STHM` raster files: magic, version byte, little-endian `u32` width and
//! height, then `width * height` little-endian `f32` values in row order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Heatmap;

pub const STHM_MAGIC: [u8; 4] = *b"STHM";
pub const STHM_VERSION: u8 = 1;

/// Largest accepted pixel count (64 Mi values).
const MAX_PIXELS: u64 = 1 << 26;

pub fn write_sthm<T: Scalar, W: Write>(mut out: W, h: &Heatmap<T>) -> Result<()> {
    let dim = |n: usize| u32::try_from(n).map_err(|_| Error::Overflow("heatmap dimension"));
    out.write_all(&STHM_MAGIC)?;
    out.write_all(&[STHM_VERSION])?;
    out.write_all(&dim(h.width())?.to_le_bytes())?;
    out.write_all(&dim(h.height())?.to_le_bytes())?;
    let mut buf = Vec::with_capacity(h.values().len() * 4);
    for v in h.values() {
        buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_sthm<T: Scalar, R: Read>(mut input: R) -> Result<Heatmap<T>> {
    let mut header = [0u8; 13];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::Format("truncated STHM header".into()))?;
    if header[..4] != STHM_MAGIC {
        return Err(Error::Format("missing STHM magic".into()));
    }
    if header[4] != STHM_VERSION {
        return Err(Error::Format(format!("unsupported STHM version {}", header[4])));
    }
    let width = u32::from_le_bytes(header[5..9].try_into().expect("4 bytes"));
    let height = u32::from_le_bytes(header[9..13].try_into().expect("4 bytes"));
    let pixels = u64::from(width) * u64::from(height);
    if pixels > MAX_PIXELS {
        return Err(Error::Format(format!("{width}x{height} raster exceeds size limit")));
    }
    let mut body = vec![0u8; pixels as usize * 4];
    input
        .read_exact(&mut body)
        .map_err(|_| Error::Format(format!("expected {pixels} values")))?;
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after STHM values".into()));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| T::lit(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
        .collect();
    Heatmap::new(width as usize, height as usize, values)
}
