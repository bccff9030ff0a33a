use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{eer, fnmr_at_fmr_bound, sweep, zero_fmr, zero_fnmr, FailurePolicy, MetricsError, ThresholdPoint};
use crate::benchmark::PairKind;
use crate::runner::{PairStatus, RunResult, ScoreRecord};

pub const HISTOGRAM_BINS: usize = 100;

/// Description of the EER computation, stored alongside the value.
pub const EER_METHOD: &str =
    "first threshold with fmr == fnmr, else linear intersection between the bracketing thresholds; \
     min over thresholds of max(fmr, fnmr) when fnmr starts above fmr";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub threshold: f64,
    pub fmr: f64,
    pub fnmr: f64,
}

impl From<ThresholdPoint> for DetPoint {
    fn from(p: ThresholdPoint) -> Self {
        Self {
            threshold: p.t,
            fmr: p.fmr,
            fnmr: p.fnmr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histograms {
    pub bins: usize,
    pub genuine: Vec<u64>,
    pub imposter: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub failure_policy: FailurePolicy,
    pub eer: f64,
    pub eer_method: String,
    pub fmr100: Option<f64>,
    pub fmr1000: Option<f64>,
    pub zero_fmr: Option<f64>,
    pub zero_fnmr: Option<f64>,
    pub genuine_total: usize,
    pub imposter_total: usize,
    pub fte_count: usize,
    pub ftm_count: usize,
    pub protocol_error_count: usize,
    pub avg_enroll_time_ms: f64,
    pub avg_match_time_ms: f64,
    pub avg_template_size: f64,
    pub det: Vec<DetPoint>,
    pub histograms: Histograms,
}

fn bin_of(score: f64) -> usize {
    // the small offset keeps exact multiples of 0.01 in their own bin
    // despite rounding in score * 100
    ((score * HISTOGRAM_BINS as f64 + 1e-9).floor() as usize).min(HISTOGRAM_BINS - 1)
}

/// Score counts of successful pairs over 100 uniform bins on `[0, 1]`.
pub fn histograms(records: &[ScoreRecord]) -> Histograms {
    let mut h = Histograms {
        bins: HISTOGRAM_BINS,
        genuine: vec![0; HISTOGRAM_BINS],
        imposter: vec![0; HISTOGRAM_BINS],
    };
    for r in records {
        if let (PairStatus::Ok, Some(s)) = (r.status, r.score) {
            let side = match r.kind {
                PairKind::Genuine => &mut h.genuine,
                PairKind::Imposter => &mut h.imposter,
            };
            side[bin_of(s)] += 1;
        }
    }
    h
}

pub fn build_report(result: &RunResult, policy: FailurePolicy) -> Result<MetricReport, MetricsError> {
    let points = sweep(&result.records, policy)?;
    Ok(MetricReport {
        failure_policy: policy,
        eer: eer(&points),
        eer_method: EER_METHOD.to_string(),
        fmr100: fnmr_at_fmr_bound(&points, 1.0 / 100.0),
        fmr1000: fnmr_at_fmr_bound(&points, 1.0 / 1000.0),
        zero_fmr: zero_fmr(&points),
        zero_fnmr: zero_fnmr(&points),
        genuine_total: result.records.iter().filter(|r| r.kind == PairKind::Genuine).count(),
        imposter_total: result.records.iter().filter(|r| r.kind == PairKind::Imposter).count(),
        fte_count: result.fte_count,
        ftm_count: result.ftm_count,
        protocol_error_count: result.count_status(PairStatus::ProtocolError),
        avg_enroll_time_ms: result.avg_enroll_time_ms,
        avg_match_time_ms: result.avg_match_time_ms,
        avg_template_size: result.avg_template_size,
        det: points.into_iter().map(DetPoint::from).collect(),
        histograms: histograms(&result.records),
    })
}

pub fn report_json(r: &MetricReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

pub fn det_csv(r: &MetricReport) -> String {
    let mut out = String::from("threshold,fmr,fnmr\n");
    for p in &r.det {
        let _ = writeln!(out, "{},{},{}", p.threshold, p.fmr, p.fnmr);
    }
    out
}

pub fn histogram_csv(h: &Histograms) -> String {
    let mut out = String::from("bin_low,bin_high,genuine,imposter\n");
    for i in 0..h.bins {
        let _ = writeln!(
            out,
            "{:.2},{:.2},{},{}",
            i as f64 / h.bins as f64,
            (i + 1) as f64 / h.bins as f64,
            h.genuine[i],
            h.imposter[i]
        );
    }
    out
}

/// DET curve (FNMR against FMR) on log-log axes spanning 1e-4 to 1.
/// Zero rates are drawn on the lower axis edge.
pub fn det_svg(r: &MetricReport) -> String {
    const W: f64 = 480.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    const DECADES: f64 = 4.0;
    let pos = |v: f64| -> f64 {
        let l = v.max(1e-4).log10();
        (l + DECADES) / DECADES
    };
    let x = |fmr: f64| M + pos(fmr) * (W - 2.0 * M);
    let y = |fnmr: f64| H - M - pos(fnmr) * (H - 2.0 * M);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    for d in 0..=DECADES as i32 {
        let v = 10f64.powi(d - DECADES as i32);
        let (gx, gy) = (x(v), y(v));
        let _ = writeln!(
            s,
            r##"<line x1="{gx:.1}" y1="{:.1}" x2="{gx:.1}" y2="{:.1}" stroke="#ddd"/><line x1="{M}" y1="{gy:.1}" x2="{:.1}" y2="{gy:.1}" stroke="#ddd"/>"##,
            M,
            H - M,
            W - M
        );
        let _ = writeln!(
            s,
            r#"<text x="{gx:.1}" y="{:.1}" text-anchor="middle">{v}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{v}</text>"#,
            H - M + 16.0,
            M - 6.0,
            gy + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    let pts: Vec<String> = r
        .det
        .iter()
        .map(|p| format!("{:.2},{:.2}", x(p.fmr), y(p.fnmr)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#c0392b" stroke-width="1.5" points="{}"/>"##,
        pts.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">FMR</text>"#,
        W / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">FNMR</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle">DET ({}, EER={:.4}%)</text>"#,
        W / 2.0,
        r.failure_policy,
        r.eer * 100.0
    );
    s.push_str("</svg>\n");
    s
}
