//! Wide-line binary template with shifted pixel-overlap matching.

use super::normalize::{normalize, NormalizeParams};
use super::wide_line::{wide_line_detect, WideLineParams};
use super::{check_same_size, BaselineError, Template, TemplateFormat};
use crate::imaging::{BinaryImage, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct T6Config {
    pub normalize: NormalizeParams,
    pub wide_line: WideLineParams,
    pub max_offset: usize,
}

impl Default for T6Config {
    fn default() -> Self {
        Self {
            normalize: NormalizeParams::default(),
            wide_line: WideLineParams::default(),
            max_offset: 16,
        }
    }
}

/// Normalized raster and its wide-line vein mask.
pub(crate) fn vein_mask(
    img: &GrayImage,
    norm: &NormalizeParams,
    wl: &WideLineParams,
) -> Result<BinaryImage, BaselineError> {
    let raster = normalize(img, norm)?;
    let inside = BinaryImage::full(raster.width(), raster.height()).expect("positive raster");
    Ok(wide_line_detect(&raster, wl, &inside))
}

pub fn t6_enroll(img: &GrayImage, cfg: &T6Config) -> Result<Template, BaselineError> {
    let mask = vein_mask(img, &cfg.normalize, &cfg.wide_line)?;
    Ok(Template::binary(TemplateFormat::T6Binary, mask, super::t6_params(cfg)))
}

/// Rows packed into `u64` words, bit `x % 64` of word `x / 64`.
pub(crate) struct PackedMask {
    width: usize,
    height: usize,
    words: usize,
    bits: Vec<u64>,
    count: u64,
}

impl PackedMask {
    pub(crate) fn new(m: &BinaryImage) -> Self {
        let words = m.width().div_ceil(64);
        let mut bits = vec![0u64; words * m.height()];
        for (x, y) in m.foreground() {
            bits[y * words + x / 64] |= 1 << (x % 64);
        }
        Self {
            width: m.width(),
            height: m.height(),
            words,
            bits,
            count: m.count_foreground() as u64,
        }
    }

    fn row(&self, y: usize) -> &[u64] {
        &self.bits[y * self.words..(y + 1) * self.words]
    }
}

/// Word `k` of `row` moved right by `dx` bits (negative moves left).
#[inline]
fn shifted_word(row: &[u64], k: usize, dx: isize) -> u64 {
    let get = |i: isize| -> u64 {
        if i < 0 || i as usize >= row.len() {
            0
        } else {
            row[i as usize]
        }
    };
    let k = k as isize;
    let q = dx.div_euclid(64);
    let r = dx.rem_euclid(64) as u32;
    // result bit b of word k = source bit (64k + b - dx)
    let lo = get(k - q);
    if r == 0 {
        return lo;
    }
    let hi = get(k - q - 1);
    (lo << r) | (hi >> (64 - r))
}

/// Pixels where `a` shifted by `(dx, dy)` and `b` are both set.
pub(crate) fn overlap(a: &PackedMask, b: &PackedMask, dx: isize, dy: isize) -> u64 {
    let mut total = 0u64;
    for y in 0..b.height {
        let sy = y as isize - dy;
        if sy < 0 || sy as usize >= a.height {
            continue;
        }
        let ra = a.row(sy as usize);
        let rb = b.row(y);
        for (k, &wb) in rb.iter().enumerate() {
            total += (shifted_word(ra, k, dx) & wb).count_ones() as u64;
        }
    }
    total
}

/// Best overlap over offsets in `[-max_offset, max_offset]²`, divided by the
/// larger vein count.
pub fn t6_match_masks(a: &BinaryImage, b: &BinaryImage, max_offset: usize) -> f64 {
    let (pa, pb) = (PackedMask::new(a), PackedMask::new(b));
    debug_assert_eq!((pa.width, pa.height), (pb.width, pb.height));
    let denom = pa.count.max(pb.count);
    if pa.count == 0 || pb.count == 0 {
        return 0.0;
    }
    let r = max_offset as isize;
    let mut best = 0;
    for dy in -r..=r {
        for dx in -r..=r {
            best = best.max(overlap(&pa, &pb, dx, dy));
        }
    }
    (best as f64 / denom as f64).clamp(0.0, 1.0)
}

pub fn t6_match(a: &Template, b: &Template, max_offset: usize) -> Result<f64, BaselineError> {
    let ma = a.expect_binary(TemplateFormat::T6Binary)?;
    let mb = b.expect_binary(TemplateFormat::T6Binary)?;
    check_same_size(a, b)?;
    Ok(t6_match_masks(ma, mb, max_offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_overlap(a: &BinaryImage, b: &BinaryImage, dx: isize, dy: isize) -> u64 {
        let mut n = 0;
        for (x, y) in b.foreground() {
            let (sx, sy) = (x as isize - dx, y as isize - dy);
            if sx >= 0 && sy >= 0 && (sx as usize) < a.width() && (sy as usize) < a.height()
                && a.get(sx as usize, sy as usize)
            {
                n += 1;
            }
        }
        n
    }

    fn random_mask(w: usize, h: usize, seed: u64, density: u64) -> BinaryImage {
        let mut s = seed | 1;
        let data = (0..w * h)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                s % 100 < density
            })
            .collect();
        BinaryImage::new(w, h, data).unwrap()
    }

    fn shift(m: &BinaryImage, dx: isize, dy: isize) -> BinaryImage {
        let mut out = BinaryImage::empty(m.width(), m.height()).unwrap();
        for (x, y) in m.foreground() {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < m.width() && (ny as usize) < m.height() {
                out.set(nx as usize, ny as usize, true);
            }
        }
        out
    }

    #[test]
    fn self_and_disjoint() {
        let a = random_mask(256, 96, 3, 20);
        assert_eq!(t6_match_masks(&a, &a, 16), 1.0);
        let mut left = BinaryImage::empty(256, 96).unwrap();
        let mut right = BinaryImage::empty(256, 96).unwrap();
        for y in 0..96 {
            for x in 0..20 {
                left.set(x, y, true);
                right.set(255 - x, y, true);
            }
        }
        assert_eq!(t6_match_masks(&left, &right, 16), 0.0);
        let empty = BinaryImage::empty(256, 96).unwrap();
        assert_eq!(t6_match_masks(&a, &empty, 16), 0.0);
    }

    #[test]
    fn recovers_shift() {
        let a = random_mask(256, 96, 11, 15);
        let b = shift(&a, 3, 0);
        let s = t6_match_masks(&a, &b, 4);
        assert!(s >= 1.0 - 3.0 / 256.0 - 0.02, "{s}");
        // the optimum sits at the true offset
        let (pa, pb) = (PackedMask::new(&a), PackedMask::new(&b));
        assert_eq!(overlap(&pa, &pb, 3, 0), b.count_foreground() as u64);
    }

    #[test]
    fn rejects_wrong_templates() {
        let a = Template::binary(TemplateFormat::T6Binary, random_mask(8, 8, 1, 50), vec![]);
        let b = Template::binary(TemplateFormat::T7Binary, random_mask(8, 8, 1, 50), vec![]);
        let c = Template::binary(TemplateFormat::T6Binary, random_mask(9, 8, 1, 50), vec![]);
        assert!(t6_match(&a, &b, 2).is_err());
        assert!(t6_match(&a, &c, 2).is_err());
        assert_eq!(t6_match(&a, &a, 2).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn packed_overlap_matches_naive(
            w in 1usize..150, h in 1usize..12, seed in any::<u64>(),
            dx in -70isize..70, dy in -13isize..13,
        ) {
            let a = random_mask(w, h, seed, 40);
            let b = random_mask(w, h, seed.wrapping_mul(31).wrapping_add(7), 40);
            let (pa, pb) = (PackedMask::new(&a), PackedMask::new(&b));
            prop_assert_eq!(overlap(&pa, &pb, dx, dy), naive_overlap(&a, &b, dx, dy));
        }

        #[test]
        fn symmetric(seed in any::<u64>(), density in 1u64..40) {
            let a = random_mask(64, 24, seed, density);
            let b = random_mask(64, 24, seed ^ 0xABCD, density);
            prop_assert_eq!(t6_match_masks(&a, &b, 5), t6_match_masks(&b, &a, 5));
        }
    }
}
