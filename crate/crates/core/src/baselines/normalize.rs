//! Finger posture normalization shared by the binary matchers: contour
//! tracing on the edge map, midline fit and resampling onto a fixed raster
//! aligned with the midline.

use super::BaselineError;
use crate::imaging::{gaussian_smooth, gradient_edges_with, CannyParams, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizeParams {
    pub canny: CannyParams,
    /// Columns considered on each side when filtering contour candidates.
    pub contour_half_window: usize,
    /// Candidates whose mean height deviation from their neighbours exceeds
    /// this many pixels are dropped.
    pub contour_max_deviation: f64,
    /// Minimum fraction of columns that must keep both contours.
    pub min_valid_fraction: f64,
    pub raster_width: usize,
    pub raster_height: usize,
    /// Half height of the sampled band as a fraction of the finger width.
    pub band_fraction: f64,
    /// Smoothing applied before resampling.
    pub presmooth_sigma: f64,
}

impl Default for NormalizeParams {
    fn default() -> Self {
        Self {
            canny: CannyParams::default(),
            contour_half_window: 4,
            contour_max_deviation: 8.0,
            min_valid_fraction: 0.6,
            raster_width: 256,
            raster_height: 96,
            band_fraction: 0.4,
            presmooth_sigma: 1.0,
        }
    }
}

/// Upper and lower finger contour per column, after filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct Contours {
    pub upper: Vec<Option<f64>>,
    pub lower: Vec<Option<f64>>,
}

impl Contours {
    pub fn valid_columns(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.upper
            .iter()
            .zip(&self.lower)
            .enumerate()
            .filter_map(|(x, (u, l))| Some((x, (*u)?, (*l)?)))
    }
}

/// Midline `y = intercept + slope * x` and mean finger width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Midline {
    pub intercept: f64,
    pub slope: f64,
    pub width: f64,
    pub x_min: f64,
    pub x_max: f64,
}

/// Drops candidates that disagree with their neighbourhood.
fn filter_candidates(raw: &[Option<usize>], half: usize, max_dev: f64) -> Vec<Option<f64>> {
    let n = raw.len();
    (0..n)
        .map(|x| {
            let y = raw[x]? as f64;
            let lo = x.saturating_sub(half);
            let hi = (x + half + 1).min(n);
            let (sum, count) = (lo..hi)
                .filter(|&k| k != x)
                .filter_map(|k| raw[k])
                .fold((0.0, 0usize), |(s, c), v| (s + (y - v as f64).abs(), c + 1));
            (count > 0 && sum / count as f64 <= max_dev).then_some(y)
        })
        .collect()
}

pub fn find_contours(img: &GrayImage, p: &NormalizeParams) -> Contours {
    let edges = gradient_edges_with(img, &p.canny);
    let (w, h) = (img.width(), img.height());
    let mut top = vec![None; w];
    let mut bottom = vec![None; w];
    for x in 0..w {
        top[x] = (0..h).find(|&y| edges.get(x, y));
        bottom[x] = (0..h).rev().find(|&y| edges.get(x, y));
    }
    // a single edge pixel in a column cannot be both contours
    for x in 0..w {
        if top[x] == bottom[x] {
            top[x] = None;
            bottom[x] = None;
        }
    }
    Contours {
        upper: filter_candidates(&top, p.contour_half_window, p.contour_max_deviation),
        lower: filter_candidates(&bottom, p.contour_half_window, p.contour_max_deviation),
    }
}

/// Least-squares midline through the contour midpoints.
pub fn fit_midline(c: &Contours, min_valid_fraction: f64) -> Result<Midline, BaselineError> {
    let cols: Vec<(usize, f64, f64)> = c.valid_columns().collect();
    let total = c.upper.len();
    if cols.len() < 2 || (cols.len() as f64) < min_valid_fraction * total as f64 {
        return Err(BaselineError::ContourNotFound {
            valid: cols.len(),
            total,
        });
    }
    let n = cols.len() as f64;
    let mx = cols.iter().map(|c| c.0 as f64).sum::<f64>() / n;
    let my = cols.iter().map(|c| (c.1 + c.2) / 2.0).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, u, l) in &cols {
        let dx = x as f64 - mx;
        sxx += dx * dx;
        sxy += dx * ((u + l) / 2.0 - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let width = cols.iter().map(|c| c.2 - c.1).sum::<f64>() / n;
    if width <= 0.0 {
        return Err(BaselineError::ContourNotFound {
            valid: cols.len(),
            total,
        });
    }
    Ok(Midline {
        intercept: my - slope * mx,
        slope,
        width,
        x_min: cols[0].0 as f64,
        x_max: cols[cols.len() - 1].0 as f64,
    })
}

/// Resamples the finger band onto the fixed raster. Raster columns run
/// along the midline across the contour-covered span; rows run across it,
/// covering `±band_fraction × width`.
pub fn resample(img: &GrayImage, m: &Midline, p: &NormalizeParams) -> GrayImage {
    let smooth = if p.presmooth_sigma > 0.0 {
        gaussian_smooth(img, p.presmooth_sigma)
    } else {
        img.clone()
    };
    let theta = m.slope.atan();
    let (s, c) = theta.sin_cos();
    let origin = (m.x_min, m.intercept + m.slope * m.x_min);
    let length = (m.x_max - m.x_min) / c;
    // contour heights are vertical; the band is measured along the normal
    let half_band = p.band_fraction * m.width * c;
    let (rw, rh) = (p.raster_width, p.raster_height);
    GrayImage::from_fn(rw, rh, |i, j| {
        let along = (i as f64 + 0.5) / rw as f64 * length;
        let across = ((j as f64 + 0.5) / rh as f64 * 2.0 - 1.0) * half_band;
        let x = origin.0 + along * c - across * s;
        let y = origin.1 + along * s + across * c;
        smooth.sample_bilinear(x, y).round().clamp(0.0, 255.0) as u8
    })
    .expect("positive raster")
}

/// Full normalization: contours, midline, resampled raster.
pub fn normalize(img: &GrayImage, p: &NormalizeParams) -> Result<GrayImage, BaselineError> {
    let contours = find_contours(img, p);
    let m = fit_midline(&contours, p.min_valid_fraction)?;
    Ok(resample(img, &m, p))
}
