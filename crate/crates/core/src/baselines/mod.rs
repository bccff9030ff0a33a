//! Reference enroll/match algorithms.
//!
//! * `t6`: contour-normalized wide-line vein mask, scored by the best
//!   shifted pixel overlap.
//! * `t7`: the same mask with small components removed, scored by a
//!   min-cost max-flow pairing of vein pixels.
//! * `t9`: raw grey ROI, scored by the fraction of near-equal pixels.

mod assignment;
mod flow;
mod normalize;
mod t6;
mod t7;
mod t9;
mod template;
mod wide_line;

pub use assignment::{min_cost_max_matching, Bipartite};
pub use flow::FlowGraph;
pub use normalize::{find_contours, fit_midline, normalize, resample, Contours, Midline, NormalizeParams};
pub use t6::{t6_enroll, t6_match, t6_match_masks, T6Config};
pub use t7::{offset_similarity, subsample, t7_enroll, t7_match, t7_match_masks, T7Config};
pub use t9::{t9_enroll, t9_match, T9Config};
pub use template::{Template, TemplateData, TemplateFormat, HEADER_LEN, MAGIC};
pub use wide_line::{disc_offsets, wide_line_detect, WideLineParams};

use std::path::PathBuf;

use thiserror::Error;

use crate::imaging::GrayImage;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("finger contour not found: {valid} of {total} columns have both boundaries")]
    ContourNotFound { valid: usize, total: usize },
    #[error("template format mismatch: expected {expected}, found {found}")]
    FormatMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("template sizes differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("ROI {roi:?} (x, y, width, height) does not fit a {image:?} image")]
    RoiOutOfBounds {
        roi: (Option<usize>, Option<usize>, usize, usize),
        image: (usize, usize),
    },
    #[error("malformed template: {0}")]
    BadTemplate(String),
    #[error("bad matcher parameter: {0}")]
    BadParameter(String),
    #[error("i/o error on {0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

fn check_same_size(a: &Template, b: &Template) -> Result<(), BaselineError> {
    let (da, db) = ((a.width(), a.height()), (b.width(), b.height()));
    if da != db {
        return Err(BaselineError::DimensionMismatch { a: da, b: db });
    }
    Ok(())
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn normalize_params(n: &NormalizeParams, wl: &WideLineParams) -> Vec<(String, String)> {
    vec![
        kv("canny_sigma", n.canny.sigma),
        kv("canny_low", n.canny.low),
        kv("canny_high", n.canny.high),
        kv("contour_half_window", n.contour_half_window),
        kv("contour_max_deviation", n.contour_max_deviation),
        kv("min_valid_fraction", n.min_valid_fraction),
        kv("raster_width", n.raster_width),
        kv("raster_height", n.raster_height),
        kv("band_fraction", n.band_fraction),
        kv("presmooth_sigma", n.presmooth_sigma),
        kv("radius", wl.radius),
        kv("contrast", wl.contrast_threshold),
        kv("mass_ratio", wl.mass_ratio),
    ]
}

fn t6_params(c: &T6Config) -> Vec<(String, String)> {
    let mut p = vec![kv("matcher", "t6")];
    p.extend(normalize_params(&c.normalize, &c.wide_line));
    p
}

fn t7_params(c: &T7Config) -> Vec<(String, String)> {
    let mut p = vec![kv("matcher", "t7")];
    p.extend(normalize_params(&c.normalize, &c.wide_line));
    p.push(kv("min_component", c.min_component));
    p
}

fn t9_params(_c: &T9Config, x: usize, y: usize) -> Vec<(String, String)> {
    vec![kv("matcher", "t9"), kv("roi_x", x), kv("roi_y", y)]
}

/// A configured built-in matcher.
#[derive(Debug, Clone, PartialEq)]
pub enum Matcher {
    T6(T6Config),
    T7(T7Config),
    T9(T9Config),
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, BaselineError> {
    value
        .parse()
        .map_err(|_| BaselineError::BadParameter(format!("{key}={value}: cannot parse value")))
}

fn set_shared(
    n: &mut NormalizeParams,
    wl: &mut WideLineParams,
    key: &str,
    value: &str,
) -> Result<bool, BaselineError> {
    match key {
        "canny_sigma" => n.canny.sigma = parse_value(key, value)?,
        "canny_low" => n.canny.low = parse_value(key, value)?,
        "canny_high" => n.canny.high = parse_value(key, value)?,
        "contour_half_window" => n.contour_half_window = parse_value(key, value)?,
        "contour_max_deviation" => n.contour_max_deviation = parse_value(key, value)?,
        "min_valid_fraction" => n.min_valid_fraction = parse_value(key, value)?,
        "raster_width" => n.raster_width = parse_value(key, value)?,
        "raster_height" => n.raster_height = parse_value(key, value)?,
        "band_fraction" => n.band_fraction = parse_value(key, value)?,
        "presmooth_sigma" => n.presmooth_sigma = parse_value(key, value)?,
        "radius" => wl.radius = parse_value(key, value)?,
        "contrast" => wl.contrast_threshold = parse_value(key, value)?,
        "mass_ratio" => wl.mass_ratio = parse_value(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

impl Matcher {
    pub const NAMES: [&'static str; 3] = ["t6", "t7", "t9"];

    /// Looks up `name` and applies `key=value` overrides.
    pub fn from_name(name: &str, params: &[(String, String)]) -> Result<Self, BaselineError> {
        let mut m = match name {
            "t6" => Matcher::T6(T6Config::default()),
            "t7" => Matcher::T7(T7Config::default()),
            "t9" => Matcher::T9(T9Config::default()),
            other => return Err(BaselineError::BadParameter(format!("unknown matcher `{other}`"))),
        };
        for (k, v) in params {
            let known = match &mut m {
                Matcher::T6(c) => match k.as_str() {
                    "max_offset" => {
                        c.max_offset = parse_value(k, v)?;
                        true
                    }
                    _ => set_shared(&mut c.normalize, &mut c.wide_line, k, v)?,
                },
                Matcher::T7(c) => match k.as_str() {
                    "min_component" => {
                        c.min_component = parse_value(k, v)?;
                        true
                    }
                    "window_offset" => {
                        c.window_offset = parse_value(k, v)?;
                        true
                    }
                    "window_step" => {
                        c.window_step = parse_value(k, v)?;
                        true
                    }
                    "link_radius" => {
                        c.link_radius = parse_value(k, v)?;
                        true
                    }
                    "node_cap" => {
                        c.node_cap = parse_value(k, v)?;
                        true
                    }
                    _ => set_shared(&mut c.normalize, &mut c.wide_line, k, v)?,
                },
                Matcher::T9(c) => {
                    match k.as_str() {
                        "roi_width" => c.roi_width = parse_value(k, v)?,
                        "roi_height" => c.roi_height = parse_value(k, v)?,
                        "roi_x" => c.roi_x = Some(parse_value(k, v)?),
                        "roi_y" => c.roi_y = Some(parse_value(k, v)?),
                        "tolerance" => c.tolerance = parse_value(k, v)?,
                        _ => return Err(BaselineError::BadParameter(format!("t9 has no parameter `{k}`"))),
                    }
                    true
                }
            };
            if !known {
                return Err(BaselineError::BadParameter(format!("{name} has no parameter `{k}`")));
            }
        }
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), BaselineError> {
        let bad = |m: String| Err(BaselineError::BadParameter(m));
        match self {
            Matcher::T6(c) => {
                c.wide_line.validate().map_err(BaselineError::BadParameter)?;
                if c.normalize.raster_width == 0 || c.normalize.raster_height == 0 {
                    return bad("raster dimensions must be positive".into());
                }
            }
            Matcher::T7(c) => {
                c.wide_line.validate().map_err(BaselineError::BadParameter)?;
                if c.normalize.raster_width == 0 || c.normalize.raster_height == 0 {
                    return bad("raster dimensions must be positive".into());
                }
                if c.node_cap == 0 || c.window_step == 0 || c.link_radius <= 0.0 {
                    return bad("node_cap, window_step and link_radius must be positive".into());
                }
            }
            Matcher::T9(c) => {
                if c.roi_width == 0 || c.roi_height == 0 {
                    return bad("ROI dimensions must be positive".into());
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Matcher::T6(_) => "t6",
            Matcher::T7(_) => "t7",
            Matcher::T9(_) => "t9",
        }
    }

    pub fn enroll(&self, img: &GrayImage) -> Result<Template, BaselineError> {
        match self {
            Matcher::T6(c) => t6_enroll(img, c),
            Matcher::T7(c) => t7_enroll(img, c),
            Matcher::T9(c) => t9_enroll(img, c),
        }
    }

    pub fn compare(&self, a: &Template, b: &Template) -> Result<f64, BaselineError> {
        match self {
            Matcher::T6(c) => t6_match(a, b, c.max_offset),
            Matcher::T7(c) => t7_match(a, b, c),
            Matcher::T9(c) => t9_match(a, b, c.tolerance),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{render_vein_image, Perturbation};

    fn finger(seed: u64, p: &Perturbation) -> GrayImage {
        render_vein_image(seed, p, 512, 384)
    }

    #[test]
    fn registry_and_overrides() {
        let m = Matcher::from_name("t6", &[("max_offset".into(), "4".into())]).unwrap();
        assert!(matches!(m, Matcher::T6(T6Config { max_offset: 4, .. })));
        assert!(Matcher::from_name("t8", &[]).is_err());
        assert!(Matcher::from_name("t9", &[("radius".into(), "3".into())]).is_err());
        assert!(Matcher::from_name("t7", &[("mass_ratio".into(), "1.5".into())]).is_err());
        assert!(Matcher::from_name("t7", &[("node_cap".into(), "x".into())]).is_err());
    }

    #[test]
    fn t6_template_shape_and_density() {
        let t = t6_enroll(&finger(7, &Perturbation::identity()), &T6Config::default()).unwrap();
        assert_eq!((t.width(), t.height()), (256, 96));
        let mask = t.expect_binary(TemplateFormat::T6Binary).unwrap();
        let density = mask.count_foreground() as f64 / (256.0 * 96.0);
        assert!(density > 0.0 && density < 0.6, "density {density}");
        assert_eq!(t6_match(&t, &t, 16).unwrap(), 1.0);
    }

    #[test]
    fn black_image_fails_to_enroll() {
        let img = GrayImage::filled(512, 384, 0).unwrap();
        for m in ["t6", "t7"] {
            let err = Matcher::from_name(m, &[]).unwrap().enroll(&img).unwrap_err();
            assert!(matches!(err, BaselineError::ContourNotFound { .. }), "{m}: {err}");
        }
    }

    #[test]
    fn rotation_is_normalized() {
        let base = finger(11, &Perturbation::identity());
        let rotated = finger(11, &Perturbation { angle: 3.0, ..Perturbation::identity() });
        let cfg = T6Config::default();
        let a = t6_enroll(&base, &cfg).unwrap();
        let b = t6_enroll(&rotated, &cfg).unwrap();
        let s = t6_match(&a, &b, cfg.max_offset).unwrap();
        assert!(s > 0.7, "score {s}");
    }

    #[test]
    fn t7_drops_small_components() {
        let noisy = Perturbation {
            noise_sigma: 5.0,
            seed: 3,
            ..Perturbation::identity()
        };
        let img = finger(5, &noisy);
        let t7 = t7_enroll(&img, &T7Config::default()).unwrap();
        let t6 = t6_enroll(&img, &T6Config::default()).unwrap();
        let m7 = t7.expect_binary(TemplateFormat::T7Binary).unwrap();
        let m6 = t6.expect_binary(TemplateFormat::T6Binary).unwrap();
        assert!(crate::imaging::connected_components(m7).iter().all(|c| c.len() >= 30));
        let had_small = crate::imaging::connected_components(m6).iter().any(|c| c.len() < 30);
        if had_small {
            assert!(m7.count_foreground() < m6.count_foreground());
        }
    }

    #[test]
    fn enrollment_is_deterministic() {
        let img = finger(9, &Perturbation { noise_sigma: 2.0, seed: 1, ..Perturbation::identity() });
        for name in Matcher::NAMES {
            let m = Matcher::from_name(name, &[]).unwrap();
            assert_eq!(m.enroll(&img).unwrap().to_bytes(), m.enroll(&img).unwrap().to_bytes());
        }
    }
}
