use crate::imaging::{BinaryImage, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WideLineParams {
    pub radius: usize,
    /// Neighbours at most this much brighter than the centre count as similar.
    pub contrast_threshold: i32,
    /// Vein iff the similar mass is below this fraction of the disc area.
    pub mass_ratio: f64,
}

impl Default for WideLineParams {
    fn default() -> Self {
        Self {
            radius: 5,
            contrast_threshold: 1,
            mass_ratio: 0.5,
        }
    }
}

impl WideLineParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.radius < 1 {
            return Err("wide line radius must be at least 1".into());
        }
        if !(self.mass_ratio > 0.0 && self.mass_ratio < 1.0) {
            return Err(format!("mass ratio must lie in (0, 1), got {}", self.mass_ratio));
        }
        Ok(())
    }
}

/// Offsets of the closed disc of radius `r`.
pub fn disc_offsets(r: usize) -> Vec<(isize, isize)> {
    let r = r as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Marks dark line pixels inside `mask`: a pixel is a vein pixel when fewer
/// than `mass_ratio` of its disc neighbours are at most `contrast_threshold`
/// brighter than it. Neighbours outside the image repeat the border.
///
/// # Panics
///
/// Panics if `mask` and `img` differ in size.
pub fn wide_line_detect(img: &GrayImage, p: &WideLineParams, mask: &BinaryImage) -> BinaryImage {
    assert_eq!((img.width(), img.height()), (mask.width(), mask.height()));
    let disc = disc_offsets(p.radius);
    let limit = p.mass_ratio * disc.len() as f64;
    let (w, h) = (img.width(), img.height());
    let mut out = BinaryImage::empty(w, h).expect("non-empty image");
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let c = img.get(x, y) as i32;
            let mut mass = 0usize;
            for &(dx, dy) in &disc {
                let q = img.get_clamped(x as isize + dx, y as isize + dy) as i32;
                if q - c <= p.contrast_threshold {
                    mass += 1;
                }
            }
            if (mass as f64) < limit {
                out.set(x, y, true);
            }
        }
    }
    out
}
