//! In-process runs of the reference matchers.

use std::time::Instant;

use rayon::prelude::*;

use super::{
    benchmark_hash, check_references, enroll_positions, enroll_status, mean, ms, thread_pool, PairStatus, RunMetadata, RunResult,
    RunnerError, ScoreRecord,
};
use crate::baselines::{BaselineError, Matcher, Template};
use crate::benchmark::{Benchmark, SampleRef};
use crate::imaging::read_bmp;

/// A registered baseline plus `key=value` overrides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltinMatcher {
    pub name: String,
    pub params: Vec<(String, String)>,
}

impl BuiltinMatcher {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: Vec::new(),
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.push((key.into(), value.into()));
        self
    }

    pub fn resolve(&self) -> Result<Matcher, RunnerError> {
        if !Matcher::NAMES.contains(&self.name.as_str()) {
            return Err(RunnerError::UnknownMatcher(self.name.clone()));
        }
        Matcher::from_name(&self.name, &self.params).map_err(|e| RunnerError::BadParameter(e.to_string()))
    }
}

struct Enrolled {
    template: Option<Template>,
    time_ms: f64,
    size: usize,
}

/// Enrolls only the first image of a sample; the baselines are
/// single-image matchers.
fn enroll_one(m: &Matcher, e: &SampleRef) -> Result<Template, BaselineError> {
    let path = e.images.first().ok_or_else(|| BaselineError::BadTemplate("sample without images".into()))?;
    let img = read_bmp(path).map_err(|err| BaselineError::BadTemplate(format!("{}: {err}", path.display())))?;
    m.enroll(&img)
}

/// Runs `b` with a built-in matcher. Enrollment failures of any kind
/// (unreadable image, no finger contour) become FTE for the affected
/// pairs; match errors become FTM. With `record_timings` off, all times
/// are omitted so the output depends on the inputs alone.
pub fn run_builtin(
    b: &Benchmark,
    matcher: &BuiltinMatcher,
    workers: usize,
    record_timings: bool,
) -> Result<(RunResult, RunMetadata), RunnerError> {
    let m = matcher.resolve()?;
    check_references(b)?;
    let pool = thread_pool(workers)?;
    let started = Instant::now();

    let enrolled: Vec<Enrolled> = pool.install(|| {
        b.enrolls
            .par_iter()
            .map(|e| {
                let t0 = Instant::now();
                let template = enroll_one(&m, e).ok();
                let time_ms = ms(t0.elapsed());
                let size = template.as_ref().map_or(0, |t| t.to_bytes().len());
                Enrolled { template, time_ms, size }
            })
            .collect()
    });
    let pos = enroll_positions(b);
    let slot = |id| &enrolled[pos[&id]];

    let records: Vec<ScoreRecord> = pool.install(|| {
        b.pairs
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let (l, r) = (slot(p.left), slot(p.right));
                if let Some(status) = enroll_status(l.template.is_some(), r.template.is_some()) {
                    return ScoreRecord::failed(i, p.kind, status, None);
                }
                let (ta, tb) = (l.template.as_ref().unwrap(), r.template.as_ref().unwrap());
                let t0 = Instant::now();
                let outcome = m.compare(ta, tb);
                let time = record_timings.then(|| ms(t0.elapsed()));
                match outcome {
                    Ok(s) if (0.0..=1.0).contains(&s) => ScoreRecord::ok(i, p.kind, s, time),
                    Ok(_) => ScoreRecord::failed(i, p.kind, PairStatus::ProtocolError, time),
                    Err(_) => ScoreRecord::failed(i, p.kind, PairStatus::Ftm, time),
                }
            })
            .collect()
    });

    let ok_enrolls = || enrolled.iter().filter(|e| e.template.is_some());
    let (avg_enroll, avg_match) = if record_timings {
        (
            mean(ok_enrolls().map(|e| e.time_ms)),
            mean(records.iter().filter(|r| r.status == PairStatus::Ok).filter_map(|r| r.match_time_ms)),
        )
    } else {
        (0.0, 0.0)
    };
    let avg_size = mean(ok_enrolls().map(|e| e.size as f64));
    let result = RunResult::new(records, avg_enroll, avg_match, avg_size);

    let meta = RunMetadata {
        mode: "builtin".into(),
        matcher: Some(m.name().into()),
        params: matcher.params.iter().map(|(k, v)| format!("{k}={v}")).collect(),
        enroll_command: None,
        match_command: None,
        score_source: None,
        limits: None,
        memory_enforcement: None,
        scratch_dir: None,
        templates_kept: false,
        workers,
        enrolls: b.enrolls.len(),
        pairs: b.pairs.len(),
        benchmark_sha256: benchmark_hash(b),
        timings_recorded: record_timings,
        wall_time_ms: ms(started.elapsed()),
    };
    Ok((result, meta))
}
