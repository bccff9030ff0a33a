//! Cleaned wide-line template matched by min-cost max-flow between vein
//! pixels.

use std::collections::HashMap;

use super::assignment::{min_cost_max_matching, Bipartite};
use super::normalize::NormalizeParams;
use super::t6::vein_mask;
use super::wide_line::WideLineParams;
use super::{check_same_size, BaselineError, Template, TemplateFormat};
use crate::imaging::{remove_small_components, BinaryImage, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct T7Config {
    pub normalize: NormalizeParams,
    pub wide_line: WideLineParams,
    pub min_component: usize,
    /// Coarse offsets run over `-window_offset..=window_offset` in steps of
    /// `window_step`, on both axes.
    pub window_offset: usize,
    pub window_step: usize,
    pub link_radius: f64,
    pub node_cap: usize,
}

impl Default for T7Config {
    fn default() -> Self {
        Self {
            normalize: NormalizeParams::default(),
            wide_line: WideLineParams::default(),
            min_component: 30,
            window_offset: 8,
            window_step: 4,
            link_radius: 6.0,
            node_cap: 2000,
        }
    }
}

pub const COST_SCALE: f64 = 100.0;

pub fn t7_enroll(img: &GrayImage, cfg: &T7Config) -> Result<Template, BaselineError> {
    let raw = vein_mask(img, &cfg.normalize, &cfg.wide_line)?;
    let mask = remove_small_components(&raw, cfg.min_component);
    Ok(Template::binary(TemplateFormat::T7Binary, mask, super::t7_params(cfg)))
}

/// At most `cap` points taken at a uniform stride over `pts`.
pub fn subsample(pts: &[(usize, usize)], cap: usize) -> Vec<(i64, i64)> {
    let n = pts.len();
    let pick = |i: usize| (pts[i].0 as i64, pts[i].1 as i64);
    if n <= cap {
        return (0..n).map(pick).collect();
    }
    (0..cap).map(|k| pick(k * n / cap)).collect()
}

fn link_cost(dx: i64, dy: i64) -> i64 {
    (((dx * dx + dy * dy) as f64).sqrt() * COST_SCALE).round() as i64
}

/// Similarity of two point sets at one relative offset: matched fraction
/// times a penalty for the mean link length.
pub fn offset_similarity(a: &[(i64, i64)], b: &[(i64, i64)], ox: i64, oy: i64, radius: f64) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let r = radius.floor() as i64;
    let r2 = radius * radius;
    let index: HashMap<(i64, i64), usize> = b.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let links: Vec<Vec<(usize, i64)>> = a
        .iter()
        .map(|&(ax, ay)| {
            let (px, py) = (ax + ox, ay + oy);
            let mut l = Vec::new();
            for dy in -r..=r {
                for dx in -r..=r {
                    if ((dx * dx + dy * dy) as f64) > r2 {
                        continue;
                    }
                    if let Some(&j) = index.get(&(px + dx, py + dy)) {
                        l.push((j, link_cost(dx, dy)));
                    }
                }
            }
            l
        })
        .collect();
    let (flow, cost) = min_cost_max_matching(&Bipartite::new(b.len(), links));
    similarity_from_flow(flow, cost, a.len(), b.len(), radius)
}

pub(crate) fn similarity_from_flow(flow: i64, cost: i64, na: usize, nb: usize, radius: f64) -> f64 {
    if flow == 0 {
        return 0.0;
    }
    let avg = cost as f64 / flow as f64;
    let s = flow as f64 / na.max(nb) as f64 * (1.0 - avg / (COST_SCALE * radius));
    s.clamp(0.0, 1.0)
}

pub fn t7_match_masks(a: &BinaryImage, b: &BinaryImage, cfg: &T7Config) -> f64 {
    let pa = subsample(&a.foreground(), cfg.node_cap);
    let pb = subsample(&b.foreground(), cfg.node_cap);
    if pa.is_empty() || pb.is_empty() {
        return 0.0;
    }
    let w = cfg.window_offset as i64;
    let step = cfg.window_step.max(1);
    let mut best: f64 = 0.0;
    for oy in (-w..=w).step_by(step) {
        for ox in (-w..=w).step_by(step) {
            best = best.max(offset_similarity(&pa, &pb, ox, oy, cfg.link_radius));
        }
    }
    best.clamp(0.0, 1.0)
}

pub fn t7_match(a: &Template, b: &Template, cfg: &T7Config) -> Result<f64, BaselineError> {
    let ma = a.expect_binary(TemplateFormat::T7Binary)?;
    let mb = b.expect_binary(TemplateFormat::T7Binary)?;
    check_same_size(a, b)?;
    Ok(t7_match_masks(ma, mb, cfg))
}
