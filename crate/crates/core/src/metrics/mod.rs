//! Error-rate metrics over a run's score records.
//!
//! A pair is declared a match iff `score > t`. Two failure policies are
//! supported: [`FailurePolicy::Exclude`] drops failed pairs from both
//! numerator and denominator, [`FailurePolicy::Revised`] keeps them in the
//! denominator so a failed genuine pair counts as a false non-match and a
//! failed imposter pair can never be a false match.

mod report;

pub use report::{
    build_report, det_csv, det_svg, histogram_csv, histograms, report_json, DetPoint, Histograms,
    MetricReport, EER_METHOD, HISTOGRAM_BINS,
};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::benchmark::PairKind;
use crate::runner::{PairStatus, ScoreRecord};

/// Threshold below every valid score, so the sweep starts with all pairs
/// accepted.
pub const LOW_SENTINEL: f64 = -1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no genuine records")]
    NoGenuine,
    #[error("no imposter records")]
    NoImposter,
    #[error("no successful genuine records; rates are undefined when failures are excluded")]
    NoOkGenuine,
    #[error("no successful imposter records; rates are undefined when failures are excluded")]
    NoOkImposter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailurePolicy {
    Exclude,
    Revised,
}

impl FailurePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            FailurePolicy::Exclude => "exclude",
            FailurePolicy::Revised => "revised",
        }
    }
}

impl fmt::Display for FailurePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FailurePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exclude" => Ok(FailurePolicy::Exclude),
            "revised" => Ok(FailurePolicy::Revised),
            other => Err(format!("unknown failure policy `{other}` (expected exclude or revised)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint {
    pub t: f64,
    pub fmr: f64,
    pub fnmr: f64,
}

/// Per-kind tallies: sorted successful scores plus the total record count.
struct Side {
    ok: Vec<f64>,
    total: usize,
}

impl Side {
    fn collect(records: &[ScoreRecord], kind: PairKind) -> Self {
        let mut ok: Vec<f64> = records
            .iter()
            .filter(|r| r.kind == kind && r.status == PairStatus::Ok)
            .filter_map(|r| r.score)
            .collect();
        ok.sort_by(f64::total_cmp);
        let total = records.iter().filter(|r| r.kind == kind).count();
        Self { ok, total }
    }
}

/// FMR and FNMR at every distinct successful score plus the two sentinels.
pub fn sweep(records: &[ScoreRecord], policy: FailurePolicy) -> Result<Vec<ThresholdPoint>, MetricsError> {
    let gen = Side::collect(records, PairKind::Genuine);
    let imp = Side::collect(records, PairKind::Imposter);
    if gen.total == 0 {
        return Err(MetricsError::NoGenuine);
    }
    if imp.total == 0 {
        return Err(MetricsError::NoImposter);
    }
    if policy == FailurePolicy::Exclude {
        if gen.ok.is_empty() {
            return Err(MetricsError::NoOkGenuine);
        }
        if imp.ok.is_empty() {
            return Err(MetricsError::NoOkImposter);
        }
    }

    let mut thresholds: Vec<f64> = Vec::with_capacity(gen.ok.len() + imp.ok.len() + 2);
    thresholds.push(LOW_SENTINEL);
    thresholds.extend_from_slice(&gen.ok);
    thresholds.extend_from_slice(&imp.ok);
    thresholds.push(1.0);
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let (g_ok, i_ok) = (gen.ok.len(), imp.ok.len());
    let (g_den, i_den) = match policy {
        FailurePolicy::Exclude => (g_ok, i_ok),
        FailurePolicy::Revised => (gen.total, imp.total),
    };
    let g_failed = g_den - g_ok;
    let (mut gi, mut ii) = (0, 0);
    let mut out = Vec::with_capacity(thresholds.len());
    for t in thresholds {
        // number of ok scores <= t, i.e. declared non-matches
        while gi < g_ok && gen.ok[gi] <= t {
            gi += 1;
        }
        while ii < i_ok && imp.ok[ii] <= t {
            ii += 1;
        }
        out.push(ThresholdPoint {
            t,
            fmr: (i_ok - ii) as f64 / i_den as f64,
            fnmr: (g_failed + gi) as f64 / g_den as f64,
        });
    }
    Ok(out)
}

/// Equal error rate.
///
/// Returns the common value at the first threshold where FMR equals FNMR;
/// otherwise intersects the straight segments joining the two thresholds
/// that bracket the sign change of `fmr - fnmr`. When no crossing exists
/// (FNMR already above FMR at the lowest threshold, which only happens
/// with many failures under the revised policy) the smallest achievable
/// `max(fmr, fnmr)` is returned instead.
pub fn eer(points: &[ThresholdPoint]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let d = |p: &ThresholdPoint| p.fmr - p.fnmr;
    if d(first) < 0.0 {
        return points
            .iter()
            .map(|p| p.fmr.max(p.fnmr))
            .fold(f64::INFINITY, f64::min);
    }
    for (i, p) in points.iter().enumerate() {
        let di = d(p);
        if di == 0.0 {
            return p.fmr;
        }
        if di < 0.0 {
            let q = &points[i - 1];
            let dq = d(q);
            let lambda = dq / (dq - di);
            return q.fmr + lambda * (p.fmr - q.fmr);
        }
    }
    // sweep output always ends at t = 1 with fmr = 0; unreachable there
    let last = points[points.len() - 1];
    last.fmr.max(last.fnmr)
}

/// Lowest FNMR among thresholds with FMR at or below `bound`.
pub fn fnmr_at_fmr_bound(points: &[ThresholdPoint], bound: f64) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.fmr <= bound)
        .map(|p| p.fnmr)
        .reduce(f64::min)
}

/// Lowest FNMR with no false matches.
pub fn zero_fmr(points: &[ThresholdPoint]) -> Option<f64> {
    fnmr_at_fmr_bound(points, 0.0)
}

/// Lowest FMR with no false non-matches.
pub fn zero_fnmr(points: &[ThresholdPoint]) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.fnmr == 0.0)
        .map(|p| p.fmr)
        .reduce(f64::min)
}
