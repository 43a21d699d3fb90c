//! On-disk cube format and band export.
//!
//! `HSCUBE01` layout, all integers little-endian:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 8    | ASCII `HSCUBE01`                       |
//! | 8      | 4    | height (u32)                           |
//! | 12     | 4    | width (u32)                            |
//! | 16     | 4    | bands (u32)                            |
//! | 20     | 1    | dtype, `0x01` = f64 little-endian      |
//! | 21     | 8·n  | values in band-fastest order           |

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Cube, Dims};

pub const MAGIC: &[u8; 8] = b"HSCUBE01";
pub const HEADER_LEN: usize = 21;
pub const DTYPE_F64_LE: u8 = 0x01;

fn format_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        msg: msg.into(),
    }
}

/// Parsed header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CubeFileHeader {
    pub dims: Dims,
    pub dtype: u8,
}

impl CubeFileHeader {
    pub fn encode(&self) -> Result<[u8; HEADER_LEN]> {
        let mut out = [0u8; HEADER_LEN];
        out[..8].copy_from_slice(MAGIC);
        for (slot, (n, name)) in [(self.dims.h, "height"), (self.dims.w, "width"), (self.dims.b, "bands")]
            .into_iter()
            .enumerate()
        {
            let v = u32::try_from(n).map_err(|_| {
                Error::Argument(format!("{name} {n} does not fit the 32-bit header field"))
            })?;
            out[8 + 4 * slot..12 + 4 * slot].copy_from_slice(&v.to_le_bytes());
        }
        out[20] = self.dtype;
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..8] != MAGIC {
            let at = bytes
                .iter()
                .zip(MAGIC)
                .position(|(a, b)| a != b)
                .unwrap_or(bytes.len().min(8));
            return Err(format_err(at, "magic mismatch, expected HSCUBE01"));
        }
        if bytes.len() < HEADER_LEN {
            return Err(format_err(bytes.len(), "truncated header"));
        }
        let field = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let mut dims = [0usize; 3];
        for (n, slot) in dims.iter_mut().enumerate() {
            let off = 8 + 4 * n;
            let v = field(off);
            if v == 0 {
                return Err(format_err(off, "zero dimension"));
            }
            *slot = v as usize;
        }
        let dtype = bytes[20];
        if dtype != DTYPE_F64_LE {
            return Err(format_err(20, format!("unsupported dtype 0x{dtype:02x}")));
        }
        Ok(Self {
            dims: Dims::new(dims[0], dims[1], dims[2]),
            dtype,
        })
    }
}

/// Serializes `x` to `HSCUBE01` bytes.
pub fn encode_cube(x: &Cube) -> Result<Vec<u8>> {
    let header = CubeFileHeader {
        dims: x.dims(),
        dtype: DTYPE_F64_LE,
    }
    .encode()?;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * x.data().len());
    out.extend_from_slice(&header);
    for v in x.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses `HSCUBE01` bytes.
pub fn decode_cube(bytes: &[u8]) -> Result<Cube> {
    let header = CubeFileHeader::decode(bytes)?;
    let d = header.dims;
    let payload = d
        .h
        .checked_mul(d.w)
        .and_then(|n| n.checked_mul(d.b))
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| format_err(8, format!("dims {d} overflow the addressable size")))?;
    if bytes.len() < payload {
        return Err(format_err(
            bytes.len(),
            format!("truncated payload, expected {payload} bytes"),
        ));
    }
    if bytes.len() > payload {
        return Err(format_err(payload, "trailing bytes after payload"));
    }
    let mut data = Vec::with_capacity(d.len());
    for (n, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(format_err(HEADER_LEN + 8 * n, format!("non-finite value {v}")));
        }
        data.push(v);
    }
    Cube::from_vec(d, data)
}

pub fn write_cube(x: &Cube, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_cube(x)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<Cube> {
    decode_cube(&fs::read(path)?)
}

/// Band `k` as an 8-bit binary PGM, linearly mapped from `[min, max]` of the
/// band to `[0, 255]`. A constant band maps to 128.
pub fn band_to_pgm(x: &Cube, k: usize) -> Result<Vec<u8>> {
    let d = x.dims();
    if k >= d.b {
        return Err(Error::Argument(format!(
            "band {k} out of range for cube with {} bands",
            d.b
        )));
    }
    let band = x.band(k);
    let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{} {}\n255\n", d.w, d.h).into_bytes();
    if hi > lo {
        let scale = 255.0 / (hi - lo);
        out.extend(band.iter().map(|&v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8));
    } else {
        out.extend(std::iter::repeat_n(128u8, band.len()));
    }
    Ok(out)
}

pub fn export_band(x: &Cube, k: usize, path: impl AsRef<Path>) -> Result<()> {
    let bytes = band_to_pgm(x, k)?;
    fs::write(path, bytes)?;
    Ok(())
}
