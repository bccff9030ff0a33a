//! Template container and its on-disk form.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "VBT1"
//! 4       1     format tag (1 = t6_binary, 2 = t7_binary, 3 = t9_grey)
//! 5       4     width, u32 LE
//! 9       4     height, u32 LE
//! 13      3     zero padding
//! 16      n     payload: binary rows MSB-first, each padded to a byte;
//!               or raw grey bytes
//! 16+n    4     parameter block length, u32 LE
//! 20+n    m     parameter block: `key=value\n` lines, UTF-8
//! ```

use std::fs;
use std::path::Path;

use super::BaselineError;
use crate::imaging::{BinaryImage, GrayImage};

pub const MAGIC: &[u8; 4] = b"VBT1";
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateFormat {
    T6Binary,
    T7Binary,
    T9Grey,
}

impl TemplateFormat {
    pub fn tag(self) -> u8 {
        match self {
            TemplateFormat::T6Binary => 1,
            TemplateFormat::T7Binary => 2,
            TemplateFormat::T9Grey => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(TemplateFormat::T6Binary),
            2 => Some(TemplateFormat::T7Binary),
            3 => Some(TemplateFormat::T9Grey),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TemplateFormat::T6Binary => "t6_binary",
            TemplateFormat::T7Binary => "t7_binary",
            TemplateFormat::T9Grey => "t9_grey",
        }
    }

    fn is_binary(self) -> bool {
        self != TemplateFormat::T9Grey
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateData {
    Binary(BinaryImage),
    Grey(GrayImage),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    format: TemplateFormat,
    data: TemplateData,
    /// Enrollment parameters, in insertion order.
    params: Vec<(String, String)>,
}

impl Template {
    pub fn binary(format: TemplateFormat, mask: BinaryImage, params: Vec<(String, String)>) -> Self {
        assert!(format.is_binary(), "{} is not a binary format", format.name());
        Self {
            format,
            data: TemplateData::Binary(mask),
            params,
        }
    }

    pub fn grey(img: GrayImage, params: Vec<(String, String)>) -> Self {
        Self {
            format: TemplateFormat::T9Grey,
            data: TemplateData::Grey(img),
            params,
        }
    }

    pub fn format(&self) -> TemplateFormat {
        self.format
    }

    pub fn data(&self) -> &TemplateData {
        &self.data
    }

    pub fn params(&self) -> &[(String, String)] {
        &self.params
    }

    pub fn width(&self) -> usize {
        match &self.data {
            TemplateData::Binary(b) => b.width(),
            TemplateData::Grey(g) => g.width(),
        }
    }

    pub fn height(&self) -> usize {
        match &self.data {
            TemplateData::Binary(b) => b.height(),
            TemplateData::Grey(g) => g.height(),
        }
    }

    /// The binary mask, if this template has format `want`.
    pub fn expect_binary(&self, want: TemplateFormat) -> Result<&BinaryImage, BaselineError> {
        match (&self.data, self.format == want) {
            (TemplateData::Binary(b), true) => Ok(b),
            _ => Err(BaselineError::FormatMismatch {
                expected: want.name(),
                found: self.format.name(),
            }),
        }
    }

    pub fn expect_grey(&self) -> Result<&GrayImage, BaselineError> {
        match &self.data {
            TemplateData::Grey(g) => Ok(g),
            _ => Err(BaselineError::FormatMismatch {
                expected: TemplateFormat::T9Grey.name(),
                found: self.format.name(),
            }),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (w, h) = (self.width(), self.height());
        let mut out = Vec::with_capacity(HEADER_LEN + w * h + 64);
        out.extend_from_slice(MAGIC);
        out.push(self.format.tag());
        out.extend_from_slice(&(w as u32).to_le_bytes());
        out.extend_from_slice(&(h as u32).to_le_bytes());
        out.extend_from_slice(&[0; 3]);
        match &self.data {
            TemplateData::Binary(b) => {
                let stride = w.div_ceil(8);
                for y in 0..h {
                    let mut row = vec![0u8; stride];
                    for x in 0..w {
                        if b.get(x, y) {
                            row[x / 8] |= 0x80 >> (x % 8);
                        }
                    }
                    out.extend_from_slice(&row);
                }
            }
            TemplateData::Grey(g) => out.extend_from_slice(g.data()),
        }
        let mut block = String::new();
        for (k, v) in &self.params {
            block.push_str(k);
            block.push('=');
            block.push_str(v);
            block.push('\n');
        }
        out.extend_from_slice(&(block.len() as u32).to_le_bytes());
        out.extend_from_slice(block.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BaselineError> {
        let bad = |msg: String| BaselineError::BadTemplate(msg);
        if bytes.len() < HEADER_LEN {
            return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(bad("bad magic".into()));
        }
        let format = TemplateFormat::from_tag(bytes[4])
            .ok_or_else(|| bad(format!("unknown format tag {}", bytes[4])))?;
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let (w, h) = (u32_at(5), u32_at(9));
        if bytes[13..16] != [0, 0, 0] {
            return Err(bad("nonzero header padding".into()));
        }
        if w == 0 || h == 0 {
            return Err(bad(format!("empty dimensions {w}x{h}")));
        }
        let payload_len = if format.is_binary() {
            w.div_ceil(8).checked_mul(h)
        } else {
            w.checked_mul(h)
        }
        .ok_or_else(|| bad("dimensions overflow".into()))?;
        let payload_end = HEADER_LEN
            .checked_add(payload_len)
            .filter(|&e| e + 4 <= bytes.len())
            .ok_or_else(|| bad("truncated payload".into()))?;
        let payload = &bytes[HEADER_LEN..payload_end];
        let block_len = u32_at(payload_end);
        let block_start = payload_end + 4;
        if block_start + block_len != bytes.len() {
            return Err(bad(format!(
                "parameter block declares {block_len} bytes, {} present",
                bytes.len() - block_start
            )));
        }
        let block = std::str::from_utf8(&bytes[block_start..])
            .map_err(|_| bad("parameter block is not UTF-8".into()))?;
        let mut params = Vec::new();
        for line in block.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("parameter line `{line}` lacks `=`")))?;
            params.push((k.to_string(), v.to_string()));
        }
        let data = if format.is_binary() {
            let stride = w.div_ceil(8);
            let mut bits = Vec::with_capacity(w * h);
            for y in 0..h {
                let row = &payload[y * stride..(y + 1) * stride];
                for x in 0..w {
                    bits.push(row[x / 8] & (0x80 >> (x % 8)) != 0);
                }
            }
            TemplateData::Binary(BinaryImage::new(w, h, bits).expect("checked dimensions"))
        } else {
            TemplateData::Grey(GrayImage::new(w, h, payload.to_vec()).expect("checked dimensions"))
        };
        Ok(Self { format, data, params })
    }

    pub fn write(&self, path: &Path) -> Result<u64, BaselineError> {
        let bytes = self.to_bytes();
        fs::write(path, &bytes).map_err(|e| BaselineError::Io(path.to_path_buf(), e))?;
        Ok(bytes.len() as u64)
    }

    pub fn read(path: &Path) -> Result<Self, BaselineError> {
        let bytes = fs::read(path).map_err(|e| BaselineError::Io(path.to_path_buf(), e))?;
        Self::from_bytes(&bytes)
    }
}
