//! Uncompressed BMP codec: 8-bit palettized and 24-bit on decode, 8-bit
//! grayscale on encode.

use std::path::Path;

use thiserror::Error;

use super::GrayImage;

const FILE_HEADER_LEN: usize = 14;
const INFO_HEADER_LEN: usize = 40;
const PALETTE_LEN: usize = 256 * 4;

#[derive(Debug, Error)]
pub enum BmpError {
    #[error("truncated BMP: need {needed} bytes for {field}, have {available}")]
    Truncated {
        field: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("invalid BMP field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("unsupported BMP: {0}")]
    Unsupported(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn le_u16(b: &[u8], off: usize) -> u16 {
    u16::from_le_bytes([b[off], b[off + 1]])
}

fn le_u32(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

fn le_i32(b: &[u8], off: usize) -> i32 {
    le_u32(b, off) as i32
}

fn need(bytes: &[u8], field: &'static str, needed: usize) -> Result<(), BmpError> {
    if bytes.len() < needed {
        return Err(BmpError::Truncated {
            field,
            needed,
            available: bytes.len(),
        });
    }
    Ok(())
}

fn luminance(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
        .round()
        .clamp(0.0, 255.0) as u8
}

/// Decodes an uncompressed BMP. 24-bit pixels are converted by luminance;
/// 8-bit palette entries likewise (a grey palette maps to itself).
pub fn decode_bmp(bytes: &[u8]) -> Result<GrayImage, BmpError> {
    need(bytes, "file header", FILE_HEADER_LEN)?;
    if &bytes[0..2] != b"BM" {
        return Err(BmpError::InvalidField {
            field: "signature",
            reason: format!("expected \"BM\", found {:?}", &bytes[0..2]),
        });
    }
    let pixel_offset = le_u32(bytes, 10) as usize;

    need(bytes, "info header size", FILE_HEADER_LEN + 4)?;
    let info_len = le_u32(bytes, 14) as usize;
    if info_len < INFO_HEADER_LEN {
        return Err(BmpError::InvalidField {
            field: "info header size",
            reason: format!("{info_len} (need at least {INFO_HEADER_LEN})"),
        });
    }
    need(bytes, "info header", FILE_HEADER_LEN + info_len)?;

    let raw_width = le_i32(bytes, 18);
    let raw_height = le_i32(bytes, 22);
    let planes = le_u16(bytes, 26);
    let bpp = le_u16(bytes, 28);
    let compression = le_u32(bytes, 30);
    let colors_used = le_u32(bytes, 46) as usize;

    if raw_width <= 0 {
        return Err(BmpError::InvalidField {
            field: "width",
            reason: format!("{raw_width} is not positive"),
        });
    }
    if raw_height == 0 || raw_height == i32::MIN {
        return Err(BmpError::InvalidField {
            field: "height",
            reason: format!("{raw_height} is not a valid height"),
        });
    }
    if planes != 1 {
        return Err(BmpError::InvalidField {
            field: "planes",
            reason: format!("{planes} (must be 1)"),
        });
    }
    if compression != 0 {
        return Err(BmpError::Unsupported(format!(
            "compression method {compression} (only uncompressed BI_RGB is accepted)"
        )));
    }
    let width = raw_width as usize;
    let top_down = raw_height < 0;
    let height = raw_height.unsigned_abs() as usize;

    let palette: Option<Vec<u8>> = match bpp {
        8 => {
            let entries = if colors_used == 0 { 256 } else { colors_used };
            if entries > 256 {
                return Err(BmpError::InvalidField {
                    field: "colors used",
                    reason: format!("{entries} exceeds 256 for an 8-bit image"),
                });
            }
            let start = FILE_HEADER_LEN + info_len;
            need(bytes, "palette", start + entries * 4)?;
            let mut lut = vec![0u8; 256];
            for (i, slot) in lut.iter_mut().enumerate().take(entries) {
                let e = &bytes[start + i * 4..start + i * 4 + 4];
                *slot = luminance(e[2], e[1], e[0]);
            }
            Some(lut)
        }
        24 => None,
        other => {
            return Err(BmpError::Unsupported(format!(
                "{other} bits per pixel (only 8 and 24 are accepted)"
            )))
        }
    };

    let bytes_per_px = (bpp / 8) as usize;
    let stride = (width * bytes_per_px).div_ceil(4) * 4;
    let needed = pixel_offset
        .checked_add(stride.checked_mul(height).ok_or_else(|| BmpError::InvalidField {
            field: "height",
            reason: "pixel array size overflows".into(),
        })?)
        .ok_or_else(|| BmpError::InvalidField {
            field: "pixel offset",
            reason: "pixel array end overflows".into(),
        })?;
    need(bytes, "pixel array", needed)?;

    let mut data = vec![0u8; width * height];
    for row in 0..height {
        let src_row = if top_down { row } else { height - 1 - row };
        let src = &bytes[pixel_offset + src_row * stride..];
        let dst = &mut data[row * width..(row + 1) * width];
        match &palette {
            Some(lut) => {
                for (d, &idx) in dst.iter_mut().zip(&src[..width]) {
                    *d = lut[idx as usize];
                }
            }
            None => {
                for (x, d) in dst.iter_mut().enumerate() {
                    let p = &src[x * 3..x * 3 + 3];
                    *d = luminance(p[2], p[1], p[0]);
                }
            }
        }
    }
    // Dimensions are positive here, so construction cannot fail.
    Ok(GrayImage::new(width, height, data).expect("validated dimensions"))
}

/// Encodes as an 8-bit grayscale-palette BMP: 54-byte header, 1024-byte
/// palette, bottom-up rows padded to a 4-byte stride.
pub fn encode_bmp(img: &GrayImage) -> Vec<u8> {
    let width = img.width();
    let height = img.height();
    let stride = width.div_ceil(4) * 4;
    let pixel_offset = FILE_HEADER_LEN + INFO_HEADER_LEN + PALETTE_LEN;
    let image_size = stride * height;
    let file_size = pixel_offset + image_size;

    let mut out = Vec::with_capacity(file_size);
    out.extend_from_slice(b"BM");
    out.extend_from_slice(&(file_size as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(pixel_offset as u32).to_le_bytes());

    out.extend_from_slice(&(INFO_HEADER_LEN as u32).to_le_bytes());
    out.extend_from_slice(&(width as i32).to_le_bytes());
    out.extend_from_slice(&(height as i32).to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&8u16.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes()); // BI_RGB
    out.extend_from_slice(&(image_size as u32).to_le_bytes());
    out.extend_from_slice(&2835u32.to_le_bytes()); // 72 dpi
    out.extend_from_slice(&2835u32.to_le_bytes());
    out.extend_from_slice(&256u32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());

    for i in 0..=255u8 {
        out.extend_from_slice(&[i, i, i, 0]);
    }

    let pad = stride - width;
    for row in (0..height).rev() {
        out.extend_from_slice(&img.data()[row * width..(row + 1) * width]);
        out.extend(std::iter::repeat_n(0u8, pad));
    }
    debug_assert_eq!(out.len(), file_size);
    out
}

pub fn read_bmp(path: &Path) -> Result<GrayImage, BmpError> {
    let bytes = std::fs::read(path).map_err(|source| BmpError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_bmp(&bytes)
}

pub fn write_bmp(path: &Path, img: &GrayImage) -> Result<(), BmpError> {
    std::fs::write(path, encode_bmp(img)).map_err(|source| BmpError::Io {
        path: path.display().to_string(),
        source,
    })
}
