//! Binary dataset container: `QGDS`, version (u16), width, height, count
//! (u32 each), f64 pixels, u8 labels; all little-endian.

use std::path::Path;

use super::ImageDataset;
use crate::error::{Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"QGDS";
pub const CONTAINER_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 12;

pub fn container_bytes(ds: &ImageDataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + ds.len() * (ds.n_pixels() * 8 + 1));
    out.extend_from_slice(CONTAINER_MAGIC);
    out.extend(CONTAINER_VERSION.to_le_bytes());
    for v in [ds.width(), ds.height(), ds.len()] {
        out.extend((v as u32).to_le_bytes());
    }
    for img in ds.images() {
        for &p in img {
            out.extend(p.to_le_bytes());
        }
    }
    out.extend_from_slice(ds.labels());
    out
}

pub fn write_container(path: &Path, ds: &ImageDataset) -> Result<()> {
    std::fs::write(path, container_bytes(ds)).map_err(|e| Error::io(path, e))
}

pub fn read_container(path: &Path) -> Result<ImageDataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_container(&bytes, path)
}

pub fn parse_container(bytes: &[u8], path: &Path) -> Result<ImageDataset> {
    let truncated = |detail: String| Error::Truncated {
        path: path.into(),
        detail,
    };
    if bytes.len() < HEADER_LEN {
        return Err(truncated(format!(
            "header needs {HEADER_LEN} bytes, found {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != CONTAINER_MAGIC {
        return Err(Error::BadMagic {
            path: path.into(),
            found: u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
            expected: u32::from_be_bytes(*CONTAINER_MAGIC),
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != CONTAINER_VERSION {
        return Err(Error::Version(version));
    }
    let u32_at = |at: usize| {
        u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]) as usize
    };
    let (w, h, n) = (u32_at(6), u32_at(10), u32_at(14));
    let d = w * h;
    let need = HEADER_LEN + n * d * 8 + n;
    if bytes.len() < need {
        return Err(truncated(format!(
            "expected {need} bytes, found {}",
            bytes.len()
        )));
    }
    let body = &bytes[HEADER_LEN..];
    let pixels = (0..n)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let at = (i * d + j) * 8;
                    f64::from_le_bytes(body[at..at + 8].try_into().expect("slice of 8"))
                })
                .collect()
        })
        .collect();
    let labels = body[n * d * 8..n * d * 8 + n].to_vec();
    ImageDataset::new(w, h, pixels, labels)
}
