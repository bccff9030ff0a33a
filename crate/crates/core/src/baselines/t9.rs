//! Raw grey ROI template compared pixel by pixel.

use super::{check_same_size, BaselineError, Template};
use crate::imaging::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct T9Config {
    pub roi_width: usize,
    pub roi_height: usize,
    /// ROI origin; centred when absent.
    pub roi_x: Option<usize>,
    pub roi_y: Option<usize>,
    /// Pixels differing by less than this many grey levels match.
    pub tolerance: u8,
}

impl Default for T9Config {
    fn default() -> Self {
        Self {
            roi_width: 320,
            roi_height: 240,
            roi_x: None,
            roi_y: None,
            tolerance: 20,
        }
    }
}

pub fn t9_enroll(img: &GrayImage, cfg: &T9Config) -> Result<Template, BaselineError> {
    let (w, h) = (img.width(), img.height());
    let out_of_bounds = || BaselineError::RoiOutOfBounds {
        roi: (cfg.roi_x, cfg.roi_y, cfg.roi_width, cfg.roi_height),
        image: (w, h),
    };
    if cfg.roi_width > w || cfg.roi_height > h {
        return Err(out_of_bounds());
    }
    let x = cfg.roi_x.unwrap_or((w - cfg.roi_width) / 2);
    let y = cfg.roi_y.unwrap_or((h - cfg.roi_height) / 2);
    let roi = img
        .crop(x, y, cfg.roi_width, cfg.roi_height)
        .ok_or_else(out_of_bounds)?;
    Ok(Template::grey(roi, super::t9_params(cfg, x, y)))
}

pub fn t9_match(a: &Template, b: &Template, tolerance: u8) -> Result<f64, BaselineError> {
    let (ga, gb) = (a.expect_grey()?, b.expect_grey()?);
    check_same_size(a, b)?;
    let hits = ga
        .data()
        .iter()
        .zip(gb.data())
        .filter(|(&p, &q)| p.abs_diff(q) < tolerance)
        .count();
    Ok(hits as f64 / ga.data().len() as f64)
}
