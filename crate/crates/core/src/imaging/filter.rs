//! Gaussian smoothing and the Canny-style edge detector.
//!
//! Every convolution clamps coordinates to the image edge.

use super::{BinaryImage, GrayImage};

/// Normalized 1-D Gaussian taps, radius `ceil(3·sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable convolution of a real-valued raster with clamp-to-edge borders.
pub(crate) fn convolve_separable(
    src: &[f64],
    width: usize,
    height: usize,
    taps: &[f64],
) -> Vec<f64> {
    let radius = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in taps.iter().enumerate() {
                let sx = (x as isize + k as isize - radius).clamp(0, width as isize - 1);
                acc += w * row[sx as usize];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for (k, w) in taps.iter().enumerate() {
            let sy = (y as isize + k as isize - radius).clamp(0, height as isize - 1) as usize;
            let src_row = &tmp[sy * width..(sy + 1) * width];
            let dst_row = &mut out[y * width..(y + 1) * width];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += w * s;
            }
        }
    }
    out
}

pub fn gaussian_smooth(img: &GrayImage, sigma: f64) -> GrayImage {
    let src: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    let out = convolve_separable(&src, img.width(), img.height(), &gaussian_kernel(sigma));
    let data = out
        .into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(img.width(), img.height(), data).expect("same dimensions")
}

/// Canny configuration. Thresholds are on the Sobel gradient magnitude of
/// the smoothed image, in grey levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    pub sigma: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            low: 20.0,
            high: 40.0,
        }
    }
}

// Fixed-point scale of the smoothing taps. Integer smoothing makes the
// detector exactly invariant to a constant brightness offset.
const TAP_SCALE: f64 = 4096.0;

fn integer_taps(sigma: f64) -> (Vec<i64>, i64) {
    let taps: Vec<i64> = gaussian_kernel(sigma)
        .iter()
        .map(|t| (t * TAP_SCALE).round() as i64)
        .collect();
    let sum = taps.iter().sum();
    (taps, sum)
}

/// Canny-style edge map: Gaussian smoothing, Sobel gradients, non-maximum
/// suppression and double-threshold hysteresis (8-connected).
pub fn gradient_edges(img: &GrayImage, low: f64, high: f64) -> BinaryImage {
    gradient_edges_with(
        img,
        &CannyParams {
            low,
            high,
            ..CannyParams::default()
        },
    )
}

pub fn gradient_edges_with(img: &GrayImage, params: &CannyParams) -> BinaryImage {
    assert!(
        0.0 <= params.low && params.low <= params.high,
        "thresholds must satisfy 0 <= low <= high"
    );
    let (w, h) = (img.width(), img.height());
    let (taps, tap_sum) = integer_taps(params.sigma);
    let radius = (taps.len() / 2) as isize;

    let mut tmp = vec![0i64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0i64;
            for (k, t) in taps.iter().enumerate() {
                let sx = (x as isize + k as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += t * img.get(sx, y) as i64;
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut smooth = vec![0i64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0i64;
            for (k, t) in taps.iter().enumerate() {
                let sy = (y as isize + k as isize - radius).clamp(0, h as isize - 1) as usize;
                acc += t * tmp[sy * w + x];
            }
            smooth[y * w + x] = acc;
        }
    }

    let at = |x: isize, y: isize| -> i64 {
        let cx = x.clamp(0, w as isize - 1) as usize;
        let cy = y.clamp(0, h as isize - 1) as usize;
        smooth[cy * w + cx]
    };
    let scale = (tap_sum * tap_sum) as f64;
    let mut mag = vec![0.0f64; w * h];
    let mut sector = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            let (fx, fy) = (gx as f64, gy as f64);
            let i = y as usize * w + x as usize;
            mag[i] = (fx * fx + fy * fy).sqrt() / scale;
            sector[i] = direction_sector(fx, fy);
        }
    }

    // Non-maximum suppression along the quantized gradient direction.
    let mag_at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let mut thin = vec![0.0f64; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let (dx, dy) = match sector[i] {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            if m >= mag_at(x + dx, y + dy) && m >= mag_at(x - dx, y - dy) {
                thin[i] = m;
            }
        }
    }

    // Hysteresis: flood from strong pixels through weak ones.
    let mut edges = vec![false; w * h];
    let mut stack = Vec::new();
    for i in 0..w * h {
        if thin[i] >= params.high && thin[i] > 0.0 && !edges[i] {
            edges[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = ((j % w) as isize, (j / w) as isize);
                for ny in jy - 1..=jy + 1 {
                    for nx in jx - 1..=jx + 1 {
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let k = ny as usize * w + nx as usize;
                        if !edges[k] && thin[k] >= params.low && thin[k] > 0.0 {
                            edges[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    BinaryImage::new(w, h, edges).expect("same dimensions")
}

/// 0: horizontal gradient, 1: diagonal (+,+), 2: vertical, 3: diagonal (-,+).
fn direction_sector(gx: f64, gy: f64) -> u8 {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        0
    } else if angle < 67.5 {
        1
    } else if angle < 112.5 {
        2
    } else {
        3
    }
}
