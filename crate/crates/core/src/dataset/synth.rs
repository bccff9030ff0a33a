//! Seeded synthetic finger-vein images.
//!
//! Every random draw comes from a ChaCha8 stream derived from the data set
//! seed, a domain tag and an index:
//!
//! ```text
//! child(seed, domain, index) = ChaCha8Rng::seed_from_u64(seed ^ (domain * 0x9E3779B97F4A7C15))
//!                              with set_stream(index)
//! ```
//!
//! One stream per class skeleton (`index = class`), one per sample
//! perturbation (`index = class << 32 | sample`), plus separate streams for
//! the tier-3 modifications. Perturbation draws are unit-scale and then
//! multiplied by the tier bounds, so the same seed yields the same
//! underlying draws at every tier and only their magnitude changes.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{scan_dataset, DatasetError, DatasetIndex, MANIFEST_NAME};
use crate::imaging::{convolve_separable, encode_bmp, gaussian_kernel, GrayImage};

const DOMAIN_CLASS: u64 = 1;
const DOMAIN_SAMPLE: u64 = 2;
const DOMAIN_SELECT: u64 = 3;
const DOMAIN_MUTATE: u64 = 4;
const DOMAIN_SHARE: u64 = 5;
const DOMAIN_NOISE: u64 = 6;

/// Optical blur applied to every rendered image.
const CAPTURE_BLUR_SIGMA: f64 = 1.0;
/// Fraction of control points redrawn in a mutated tier-3 sample.
const MUTATION_FRACTION: f64 = 0.5;

fn child_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

/// Per-tier perturbation bounds and tier-3 difficulty knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierParams {
    /// Bound on |dx| and |dy|, pixels.
    pub max_shift: f64,
    /// Bound on |angle|, degrees.
    pub max_angle: f64,
    /// Gain is drawn from `[1 - gain_spread, 1 + gain_spread]`.
    pub gain_spread: f64,
    pub noise_sigma: f64,
    /// Upper bound on the occluded image fraction.
    pub max_occlusion: f64,
    /// Fraction of classes with one sample rendered from a mutated skeleton.
    pub mutated_class_fraction: f64,
    /// Fraction of (2k, 2k+1) class pairs that share skeleton control points.
    pub shared_pair_fraction: f64,
    /// Fraction of control points shared within such a pair.
    pub shared_point_fraction: f64,
}

impl TierParams {
    pub fn for_tier(tier: u8) -> Option<Self> {
        let tier1 = TierParams {
            max_shift: 4.0,
            max_angle: 2.0,
            gain_spread: 0.05,
            noise_sigma: 2.0,
            max_occlusion: 0.0,
            mutated_class_fraction: 0.0,
            shared_pair_fraction: 0.0,
            shared_point_fraction: 0.0,
        };
        let tier2 = TierParams {
            max_shift: 16.0,
            max_angle: 8.0,
            gain_spread: 0.3,
            noise_sigma: 5.0,
            max_occlusion: 0.05,
            ..tier1
        };
        match tier {
            1 => Some(tier1),
            2 => Some(tier2),
            3 => Some(TierParams {
                mutated_class_fraction: 0.1,
                shared_pair_fraction: 0.1,
                shared_point_fraction: 0.6,
                ..tier2
            }),
            _ => None,
        }
    }

    /// Applies `key=value` overrides (keys are the field names).
    pub fn apply_override(&mut self, key: &str, value: f64) -> Result<(), DatasetError> {
        let slot = match key {
            "max_shift" => &mut self.max_shift,
            "max_angle" => &mut self.max_angle,
            "gain_spread" => &mut self.gain_spread,
            "noise_sigma" => &mut self.noise_sigma,
            "max_occlusion" => &mut self.max_occlusion,
            "mutated_class_fraction" => &mut self.mutated_class_fraction,
            "shared_pair_fraction" => &mut self.shared_pair_fraction,
            "shared_point_fraction" => &mut self.shared_point_fraction,
            other => {
                return Err(DatasetError::InvalidSpec(format!(
                    "unknown tier parameter `{other}`"
                )))
            }
        };
        if !value.is_finite() || value < 0.0 {
            return Err(DatasetError::InvalidSpec(format!(
                "tier parameter `{key}` must be a non-negative number"
            )));
        }
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub tier: u8,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Replaces the built-in table entry for `tier` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<TierParams>,
}

impl SynthSpec {
    pub fn new(num_classes: usize, samples_per_class: usize, tier: u8, seed: u64) -> Self {
        Self {
            num_classes,
            samples_per_class,
            tier,
            seed,
            width: 512,
            height: 384,
            params: None,
        }
    }

    pub fn with_size(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.num_classes == 0 {
            return Err(DatasetError::InvalidSpec("num_classes must be >= 1".into()));
        }
        if self.samples_per_class == 0 {
            return Err(DatasetError::InvalidSpec(
                "samples_per_class must be >= 1".into(),
            ));
        }
        if !(1..=3).contains(&self.tier) {
            return Err(DatasetError::InvalidSpec(format!(
                "tier must be 1, 2 or 3 (got {})",
                self.tier
            )));
        }
        if self.width < 8 || self.height < 8 {
            return Err(DatasetError::InvalidSpec(format!(
                "image size {}x{} is below the 8x8 minimum",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn tier_params(&self) -> TierParams {
        self.params
            .or_else(|| TierParams::for_tier(self.tier))
            .expect("validated tier")
    }
}

/// Capture-time distortion of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub dx: f64,
    pub dy: f64,
    /// Rotation about the image centre, degrees.
    pub angle: f64,
    pub brightness_gain: f64,
    pub noise_sigma: f64,
    /// Fraction of the image area covered by overexposed patches.
    pub occlusion: f64,
    /// Seed for the noise and occlusion draws.
    pub seed: u64,
}

impl Perturbation {
    pub fn identity() -> Self {
        Self {
            dx: 0.0,
            dy: 0.0,
            angle: 0.0,
            brightness_gain: 1.0,
            noise_sigma: 0.0,
            occlusion: 0.0,
            seed: 0,
        }
    }
}

impl Default for Perturbation {
    fn default() -> Self {
        Self::identity()
    }
}

/// Silhouette and illumination of one finger, in pixels and grey levels.
#[derive(Debug, Clone, PartialEq)]
struct FingerShape {
    center_y: f64,
    half_width: f64,
    /// Relative change of the half width from the image centre to the edge.
    taper: f64,
    /// Midline displacement at the image edges, pixels.
    bend: f64,
    interior: f64,
    shading: f64,
    ramp: f64,
    background: f64,
}

/// Vein centre line in finger coordinates: `u` along the finger (0 = left
/// image edge, 1 = right), `v` across it (-1 = upper contour, 1 = lower).
#[derive(Debug, Clone, PartialEq)]
struct VeinCurve {
    points: Vec<(f64, f64)>,
    width: f64,
    depth: f64,
}

/// Class identity: finger silhouette plus vein pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct VeinSkeleton {
    finger: FingerShape,
    veins: Vec<VeinCurve>,
}

fn random_control_point(rng: &mut ChaCha8Rng, u_hint: f64) -> (f64, f64) {
    (
        (u_hint + rng.random_range(-0.05..0.05)).clamp(-0.1, 1.1),
        rng.random_range(-0.75..0.75),
    )
}

impl VeinSkeleton {
    /// Skeleton for an image of the given height; horizontal geometry is
    /// relative to the image width and resolved at render time.
    pub fn from_seed(class_seed: u64, height: usize) -> Self {
        Self::draw(&mut ChaCha8Rng::seed_from_u64(class_seed), height)
    }

    fn draw(rng: &mut ChaCha8Rng, height: usize) -> Self {
        let h = height as f64;
        let finger = FingerShape {
            center_y: h / 2.0 + rng.random_range(-0.04..0.04) * h,
            half_width: rng.random_range(0.27..0.33) * h,
            taper: rng.random_range(-0.06..0.06),
            bend: rng.random_range(-0.03..0.03) * h,
            interior: rng.random_range(125.0..150.0),
            shading: rng.random_range(20.0..35.0),
            ramp: rng.random_range(-12.0..12.0),
            background: rng.random_range(215.0..235.0),
        };
        let n_veins = rng.random_range(4..=8);
        let veins = (0..n_veins)
            .map(|_| {
                let n_ctrl = rng.random_range(4..=6);
                let u0: f64 = rng.random_range(-0.1..0.45);
                let u1 = rng.random_range((u0 + 0.45).min(1.1)..=1.1);
                let mut v: f64 = rng.random_range(-0.7..0.7);
                let points = (0..n_ctrl)
                    .map(|i| {
                        let u = u0 + (u1 - u0) * i as f64 / (n_ctrl - 1) as f64;
                        let u = u + rng.random_range(-0.03..0.03);
                        if i > 0 {
                            v = (v + rng.random_range(-0.35..0.35)).clamp(-0.8, 0.8);
                        }
                        (u, v)
                    })
                    .collect();
                VeinCurve {
                    points,
                    width: rng.random_range(4.0..12.0),
                    depth: rng.random_range(25.0..45.0),
                }
            })
            .collect();
        VeinSkeleton { finger, veins }
    }

    fn control_point_count(&self) -> usize {
        self.veins.iter().map(|v| v.points.len()).sum()
    }

    /// Redraws a random `fraction` of the control points in place.
    fn redraw_points(&mut self, rng: &mut ChaCha8Rng, fraction: f64) {
        let total = self.control_point_count();
        let k = ((total as f64) * fraction).round() as usize;
        let mut flat: Vec<usize> = (0..total).collect();
        flat.shuffle(rng);
        let mut chosen = flat[..k.min(total)].to_vec();
        chosen.sort_unstable();
        let mut next = chosen.into_iter().peekable();
        let mut flat_idx = 0;
        for vein in &mut self.veins {
            for p in &mut vein.points {
                if next.peek() == Some(&flat_idx) {
                    next.next();
                    *p = random_control_point(rng, p.0);
                }
                flat_idx += 1;
            }
        }
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Uniform Catmull-Rom spline through `pts`, sampled roughly every `step`
/// pixels.
fn catmull_rom(pts: &[(f64, f64)], step: f64) -> Vec<(f64, f64)> {
    if pts.len() < 2 {
        return pts.to_vec();
    }
    let n = pts.len();
    let at = |i: isize| pts[i.clamp(0, n as isize - 1) as usize];
    let mut out = vec![pts[0]];
    for i in 0..n - 1 {
        let (p0, p1, p2, p3) = (
            at(i as isize - 1),
            at(i as isize),
            at(i as isize + 1),
            at(i as isize + 2),
        );
        let seg_len = ((p2.0 - p1.0).powi(2) + (p2.1 - p1.1).powi(2)).sqrt();
        let steps = ((seg_len / step).ceil() as usize).max(1);
        for s in 1..=steps {
            let t = s as f64 / steps as f64;
            let (t2, t3) = (t * t, t * t * t);
            let f = |a: f64, b: f64, c: f64, d: f64| {
                0.5 * (2.0 * b
                    + (-a + c) * t
                    + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2
                    + (-a + 3.0 * b - 3.0 * c + d) * t3)
            };
            out.push((f(p0.0, p1.0, p2.0, p3.0), f(p0.1, p1.1, p2.1, p3.1)));
        }
    }
    out
}

struct Canvas {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Canvas {
    fn sample(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let (fx, fy) = (x - x0, y - y0);
        let get = |xi: f64, yi: f64| {
            let cx = (xi as isize).clamp(0, self.width as isize - 1) as usize;
            let cy = (yi as isize).clamp(0, self.height as isize - 1) as usize;
            self.data[cy * self.width + cx]
        };
        let top = get(x0, y0) + (get(x0 + 1.0, y0) - get(x0, y0)) * fx;
        let bottom = get(x0, y0 + 1.0) + (get(x0 + 1.0, y0 + 1.0) - get(x0, y0 + 1.0)) * fx;
        top + (bottom - top) * fy
    }
}

fn finger_geometry(f: &FingerShape, x: f64, width: f64) -> (f64, f64) {
    let rel = (x - width / 2.0) / (width / 2.0);
    let mid = f.center_y + f.bend * rel * rel;
    let half = f.half_width * (1.0 + f.taper * rel);
    (mid, half)
}

/// Renders the unperturbed image of a skeleton as a real-valued canvas.
fn render_canonical(sk: &VeinSkeleton, width: usize, height: usize) -> Canvas {
    let f = &sk.finger;
    let wf = width as f64;
    let mut data = vec![0.0; width * height];
    let mut inside = vec![0.0; width * height];
    for x in 0..width {
        let (mid, half) = finger_geometry(f, x as f64, wf);
        for y in 0..height {
            let v = (y as f64 - mid) / half;
            let dist_in = (1.0 - v.abs()) * half;
            let alpha = smoothstep((dist_in + 1.5) / 3.0);
            let finger = f.interior - f.shading * v * v + f.ramp * (x as f64 / wf - 0.5);
            data[y * width + x] = alpha * finger + (1.0 - alpha) * f.background;
            inside[y * width + x] = smoothstep(dist_in / 6.0);
        }
    }

    // Vein darkening, max-composited so crossings do not double up.
    let mut dark = vec![0.0f64; width * height];
    for vein in &sk.veins {
        let px: Vec<(f64, f64)> = vein
            .points
            .iter()
            .map(|&(u, v)| {
                let x = u * wf;
                let (mid, half) = finger_geometry(f, x, wf);
                (x, mid + v * half)
            })
            .collect();
        let line = catmull_rom(&px, 3.0);
        let sigma = vein.width / 4.0;
        let reach = (2.5 * sigma).ceil();
        let inv = 1.0 / (2.0 * sigma * sigma);
        for seg in line.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let x_lo = (a.0.min(b.0) - reach).floor().max(0.0) as usize;
            let x_hi = (a.0.max(b.0) + reach).ceil().min(wf - 1.0);
            let y_lo = (a.1.min(b.1) - reach).floor().max(0.0) as usize;
            let y_hi = (a.1.max(b.1) + reach).ceil().min(height as f64 - 1.0);
            if x_hi < 0.0 || y_hi < 0.0 {
                continue;
            }
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            for y in y_lo..=y_hi as usize {
                for x in x_lo..=x_hi as usize {
                    let (qx, qy) = (x as f64 - a.0, y as f64 - a.1);
                    let t = if len2 > 0.0 {
                        ((qx * dx + qy * dy) / len2).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    let (ex, ey) = (qx - t * dx, qy - t * dy);
                    let d2 = ex * ex + ey * ey;
                    let val = vein.depth * (-d2 * inv).exp();
                    let slot = &mut dark[y * width + x];
                    if val > *slot {
                        *slot = val;
                    }
                }
            }
        }
    }
    for i in 0..width * height {
        data[i] -= dark[i] * inside[i];
    }
    Canvas {
        width,
        height,
        data,
    }
}

/// Renders a skeleton under a perturbation: affine warp, overexposure
/// patches, capture blur, sensor noise, quantization and finally gain, so
/// that gain acts as `clamp(round(gain * v))` on the quantized pixels.
pub fn render_skeleton(
    sk: &VeinSkeleton,
    p: &Perturbation,
    width: usize,
    height: usize,
) -> GrayImage {
    let canon = render_canonical(sk, width, height);
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let (s, c) = p.angle.to_radians().sin_cos();
    let mut warped = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            // inverse of q = R(angle)(src - centre) + centre + shift
            let qx = x as f64 - cx - p.dx;
            let qy = y as f64 - cy - p.dy;
            let sx = c * qx + s * qy + cx;
            let sy = -s * qx + c * qy + cy;
            warped[y * width + x] = if p.dx == 0.0 && p.dy == 0.0 && p.angle == 0.0 {
                canon.data[y * width + x]
            } else {
                canon.sample(sx, sy)
            };
        }
    }

    let mut rng = child_rng(p.seed, DOMAIN_NOISE, 0);
    if p.occlusion > 0.0 {
        let total = p.occlusion.min(1.0) * (width * height) as f64;
        let patches = rng.random_range(1..=3);
        for _ in 0..patches {
            let area = total / patches as f64;
            let aspect: f64 = rng.random_range(0.5..2.0);
            let pw = (area * aspect).sqrt().round().clamp(1.0, width as f64) as usize;
            let ph = (area / aspect).sqrt().round().clamp(1.0, height as f64) as usize;
            let x0 = rng.random_range(0..=width - pw);
            let y0 = rng.random_range(0..=height - ph);
            let level = rng.random_range(215.0..245.0);
            for y in y0..y0 + ph {
                for v in &mut warped[y * width + x0..y * width + x0 + pw] {
                    *v = level;
                }
            }
        }
    }

    let blurred = convolve_separable(&warped, width, height, &gaussian_kernel(CAPTURE_BLUR_SIGMA));

    let noise = (p.noise_sigma > 0.0).then(|| Normal::new(0.0, p.noise_sigma).expect("sigma > 0"));
    let data = blurred
        .into_iter()
        .map(|v| {
            let v = match &noise {
                Some(n) => v + n.sample(&mut rng),
                None => v,
            };
            let q = v.round().clamp(0.0, 255.0);
            (p.brightness_gain * q).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(width, height, data).expect("positive dimensions")
}

/// One finger image for the skeleton seeded by `class_seed`.
pub fn render_vein_image(
    class_seed: u64,
    p: &Perturbation,
    width: usize,
    height: usize,
) -> GrayImage {
    render_skeleton(&VeinSkeleton::from_seed(class_seed, height), p, width, height)
}

/// Draws the perturbation of sample `sample` of class `class`.
pub fn sample_perturbation(seed: u64, class: usize, sample: usize, t: &TierParams) -> Perturbation {
    let mut rng = child_rng(seed, DOMAIN_SAMPLE, ((class as u64) << 32) | sample as u64);
    let mut unit = || rng.random_range(-1.0..=1.0);
    let (u_dx, u_dy, u_angle, u_gain) = (unit(), unit(), unit(), unit());
    let u_occ: f64 = rng.random_range(0.0..=1.0);
    let noise_seed: u64 = rng.random();
    Perturbation {
        dx: u_dx * t.max_shift,
        dy: u_dy * t.max_shift,
        angle: u_angle * t.max_angle,
        brightness_gain: 1.0 + u_gain * t.gain_spread,
        noise_sigma: t.noise_sigma,
        occlusion: u_occ * t.max_occlusion,
        seed: noise_seed,
    }
}

fn fraction_count(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction).round() as usize
}

fn pick(seed: u64, stream: u64, n: usize, k: usize) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut child_rng(seed, DOMAIN_SELECT, stream));
    let mut chosen = vec![false; n];
    for &i in idx.iter().take(k.min(n)) {
        chosen[i] = true;
    }
    chosen
}

struct ClassPlan {
    skeleton: VeinSkeleton,
    /// Skeleton for the last sample of a mutated tier-3 class.
    mutated: Option<VeinSkeleton>,
}

fn plan_classes(spec: &SynthSpec, t: &TierParams) -> Vec<ClassPlan> {
    let n = spec.num_classes;
    let mut skeletons: Vec<VeinSkeleton> = (0..n)
        .map(|c| {
            VeinSkeleton::draw(
                &mut child_rng(spec.seed, DOMAIN_CLASS, c as u64),
                spec.height,
            )
        })
        .collect();

    // High inter-class similarity: class 2k+1 inherits the vein layout of
    // class 2k and keeps only (1 - shared) of its own control points.
    let pairs = n / 2;
    let shared = pick(spec.seed, 1, pairs, fraction_count(pairs, t.shared_pair_fraction));
    for (k, &on) in shared.iter().enumerate() {
        if !on || t.shared_point_fraction <= 0.0 {
            continue;
        }
        let mut rng = child_rng(spec.seed, DOMAIN_SHARE, k as u64);
        let mut inherited = skeletons[2 * k].clone();
        inherited.finger = skeletons[2 * k + 1].finger.clone();
        inherited.redraw_points(&mut rng, 1.0 - t.shared_point_fraction.min(1.0));
        skeletons[2 * k + 1] = inherited;
    }

    // Low intra-class similarity: one sample from a mutated skeleton.
    let mutated = pick(spec.seed, 2, n, fraction_count(n, t.mutated_class_fraction));
    skeletons
        .into_iter()
        .enumerate()
        .map(|(c, skeleton)| {
            let mutated = mutated[c].then(|| {
                let mut m = skeleton.clone();
                m.redraw_points(&mut child_rng(spec.seed, DOMAIN_MUTATE, c as u64), MUTATION_FRACTION);
                m
            });
            ClassPlan { skeleton, mutated }
        })
        .collect()
}

/// Renders image `sample` of class `class` exactly as `generate_synthetic` would.
pub fn render_dataset_image(spec: &SynthSpec, class: usize, sample: usize) -> GrayImage {
    let t = spec.tier_params();
    let plans = plan_classes(spec, &t);
    render_planned(spec, &t, &plans[class], class, sample)
}

fn render_planned(
    spec: &SynthSpec,
    t: &TierParams,
    plan: &ClassPlan,
    class: usize,
    sample: usize,
) -> GrayImage {
    let p = sample_perturbation(spec.seed, class, sample, t);
    let sk = match &plan.mutated {
        Some(m) if sample + 1 == spec.samples_per_class => m,
        _ => &plan.skeleton,
    };
    render_skeleton(sk, &p, spec.width, spec.height)
}

fn id_width(n: usize, min: usize) -> usize {
    let digits = n.saturating_sub(1).max(1).to_string().len();
    digits.max(min)
}

#[derive(Serialize)]
struct Manifest<'a> {
    generator: &'static str,
    rng: &'static str,
    num_classes: usize,
    samples_per_class: usize,
    tier: u8,
    seed: u64,
    width: usize,
    height: usize,
    tier_params: &'a TierParams,
}

/// Writes `num_classes × samples_per_class` BMPs under `out_root` plus a
/// manifest, and returns the scanned index. Output is a pure function of
/// `spec`.
pub fn generate_synthetic(spec: &SynthSpec, out_root: &Path) -> Result<DatasetIndex, DatasetError> {
    spec.validate()?;
    let t = spec.tier_params();
    let plans = plan_classes(spec, &t);
    let cw = id_width(spec.num_classes, 4);
    let sw = id_width(spec.samples_per_class, 2);

    fs::create_dir_all(out_root).map_err(|e| DatasetError::io(out_root, e))?;
    let jobs: Vec<(usize, usize)> = (0..spec.num_classes)
        .flat_map(|c| (0..spec.samples_per_class).map(move |s| (c, s)))
        .collect();
    for c in 0..spec.num_classes {
        let dir = out_root.join(format!("{c:0cw$}"));
        fs::create_dir_all(&dir).map_err(|e| DatasetError::io(&dir, e))?;
    }
    jobs.par_iter().try_for_each(|&(c, s)| {
        let img = render_planned(spec, &t, &plans[c], c, s);
        let path = out_root.join(format!("{c:0cw$}")).join(format!("{s:0sw$}.bmp"));
        fs::write(&path, encode_bmp(&img)).map_err(|e| DatasetError::io(&path, e))
    })?;

    let manifest = Manifest {
        generator: "veinrate-synth/1",
        rng: "ChaCha8 child streams: seed ^ domain*0x9E3779B97F4A7C15, stream = index",
        num_classes: spec.num_classes,
        samples_per_class: spec.samples_per_class,
        tier: spec.tier,
        seed: spec.seed,
        width: spec.width,
        height: spec.height,
        tier_params: &t,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    let mpath = out_root.join(MANIFEST_NAME);
    fs::write(&mpath, text).map_err(|e| DatasetError::io(&mpath, e))?;
    scan_dataset(out_root)
}
