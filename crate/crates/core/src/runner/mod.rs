//! Benchmark execution: external enroll/match programs under resource
//! limits, or the built-in baselines in process.

mod builtin;
mod external;
mod scores;

pub use builtin::{run_builtin, BuiltinMatcher};
pub use external::{run_external, ExternalConfig, ScoreSource, MEMORY_ENFORCEMENT};
pub use scores::{format_scores, parse_scores, read_scores, write_scores};

use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::benchmark::{format_benchmark, Benchmark, PairKind};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("executable {0} does not exist")]
    MissingExecutable(PathBuf),
    #[error("executable {path} is {size} bytes, over the {limit}-byte limit")]
    ExecutableTooLarge { path: PathBuf, size: u64, limit: u64 },
    #[error("cannot use work directory {path}: {source}")]
    WorkDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to launch {path}: {source}")]
    Spawn {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown matcher `{0}` (expected t6, t7 or t9)")]
    UnknownMatcher(String),
    #[error("bad matcher parameter: {0}")]
    BadParameter(String),
    #[error("scores file row {row}: {message}")]
    ScoresFormat { row: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("benchmark references template {0} with no enroll entry")]
    UnknownTemplate(u32),
}

/// Resource limits applied to each external program invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolLimits {
    pub enroll_timeout: Duration,
    pub match_timeout: Duration,
    pub mem_limit: u64,
    pub enroll_exe_size_limit: u64,
    pub match_exe_size_limit: u64,
}

const MIB: u64 = 1024 * 1024;

impl Default for ProtocolLimits {
    fn default() -> Self {
        Self {
            enroll_timeout: Duration::from_secs(30),
            match_timeout: Duration::from_secs(10),
            mem_limit: 2048 * MIB,
            enroll_exe_size_limit: 20 * MIB,
            match_exe_size_limit: 300 * MIB,
        }
    }
}

impl ProtocolLimits {
    pub fn validate(&self) -> Result<(), String> {
        if self.enroll_timeout.is_zero() || self.match_timeout.is_zero() {
            return Err("timeouts must be positive".into());
        }
        if self.mem_limit == 0 || self.enroll_exe_size_limit == 0 || self.match_exe_size_limit == 0 {
            return Err("memory and size limits must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairStatus {
    Ok,
    FteLeft,
    FteRight,
    Ftm,
    ProtocolError,
}

impl PairStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PairStatus::Ok => "ok",
            PairStatus::FteLeft => "fte_left",
            PairStatus::FteRight => "fte_right",
            PairStatus::Ftm => "ftm",
            PairStatus::ProtocolError => "protocol_error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ok" => PairStatus::Ok,
            "fte_left" => PairStatus::FteLeft,
            "fte_right" => PairStatus::FteRight,
            "ftm" => PairStatus::Ftm,
            "protocol_error" => PairStatus::ProtocolError,
            _ => return None,
        })
    }

    pub fn is_fte(self) -> bool {
        matches!(self, PairStatus::FteLeft | PairStatus::FteRight)
    }

    /// Match-stage failure, including unusable output.
    pub fn is_ftm(self) -> bool {
        matches!(self, PairStatus::Ftm | PairStatus::ProtocolError)
    }
}

/// Outcome of one benchmark pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRecord {
    pub pair_index: usize,
    pub kind: PairKind,
    pub status: PairStatus,
    /// Present iff `status` is `Ok`; always within `[0, 1]`.
    pub score: Option<f64>,
    /// Wall-clock milliseconds of the match attempt, when one was made and
    /// timings are recorded.
    pub match_time_ms: Option<f64>,
}

impl ScoreRecord {
    pub fn ok(pair_index: usize, kind: PairKind, score: f64, match_time_ms: Option<f64>) -> Self {
        Self {
            pair_index,
            kind,
            status: PairStatus::Ok,
            score: Some(quantize_score(score)),
            match_time_ms,
        }
    }

    pub fn failed(pair_index: usize, kind: PairKind, status: PairStatus, match_time_ms: Option<f64>) -> Self {
        debug_assert!(status != PairStatus::Ok);
        Self {
            pair_index,
            kind,
            status,
            score: None,
            match_time_ms,
        }
    }
}

/// Rounds to 9 fractional digits, the precision kept in score files.
pub fn quantize_score(s: f64) -> f64 {
    (s * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<ScoreRecord>,
    /// Pairs skipped because a template failed to enroll.
    pub fte_count: usize,
    /// Pairs whose match failed or produced unusable output.
    pub ftm_count: usize,
    pub avg_enroll_time_ms: f64,
    pub avg_match_time_ms: f64,
    pub avg_template_size: f64,
}

impl RunResult {
    /// Builds a result, deriving the failure counts from the records.
    pub fn new(
        records: Vec<ScoreRecord>,
        avg_enroll_time_ms: f64,
        avg_match_time_ms: f64,
        avg_template_size: f64,
    ) -> Self {
        let fte_count = records.iter().filter(|r| r.status.is_fte()).count();
        let ftm_count = records.iter().filter(|r| r.status.is_ftm()).count();
        Self {
            records,
            fte_count,
            ftm_count,
            avg_enroll_time_ms,
            avg_match_time_ms,
            avg_template_size,
        }
    }

    pub fn count_status(&self, status: PairStatus) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Hex SHA-256 of the serialized benchmark.
pub fn benchmark_hash(b: &Benchmark) -> String {
    hex::encode(Sha256::digest(format_benchmark(b).as_bytes()))
}

/// Checks that every pair refers to an enrolled template.
fn check_references(b: &Benchmark) -> Result<(), RunnerError> {
    for p in &b.pairs {
        for id in [p.left, p.right] {
            if b.enroll(id).is_none() {
                return Err(RunnerError::UnknownTemplate(id));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitsRecord {
    pub enroll_timeout_s: f64,
    pub match_timeout_s: f64,
    pub mem_limit_bytes: u64,
    pub enroll_exe_size_limit_bytes: u64,
    pub match_exe_size_limit_bytes: u64,
}

impl From<&ProtocolLimits> for LimitsRecord {
    fn from(l: &ProtocolLimits) -> Self {
        Self {
            enroll_timeout_s: l.enroll_timeout.as_secs_f64(),
            match_timeout_s: l.match_timeout.as_secs_f64(),
            mem_limit_bytes: l.mem_limit,
            enroll_exe_size_limit_bytes: l.enroll_exe_size_limit,
            match_exe_size_limit_bytes: l.match_exe_size_limit,
        }
    }
}

/// What was run and how; written next to the scores as `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    /// `external` or `builtin`.
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matcher: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enroll_command: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub match_command: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_source: Option<ScoreSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limits: Option<LimitsRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_enforcement: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scratch_dir: Option<PathBuf>,
    pub templates_kept: bool,
    pub workers: usize,
    pub enrolls: usize,
    pub pairs: usize,
    pub benchmark_sha256: String,
    pub timings_recorded: bool,
    pub wall_time_ms: f64,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, RunnerError> {
    if workers == 0 {
        return Err(RunnerError::BadParameter("worker count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunnerError::BadParameter(format!("cannot start {workers} workers: {e}")))
}

/// Position in `b.enrolls` of every template id.
fn enroll_positions(b: &Benchmark) -> std::collections::HashMap<crate::benchmark::TemplateId, usize> {
    b.enrolls.iter().enumerate().map(|(i, e)| (e.template_id, i)).collect()
}

/// Pair status from the enrollment outcome of both sides, or `None` when
/// both templates exist and a match should run.
fn enroll_status(left_ok: bool, right_ok: bool) -> Option<PairStatus> {
    match (left_ok, right_ok) {
        (false, _) => Some(PairStatus::FteLeft),
        (true, false) => Some(PairStatus::FteRight),
        (true, true) => None,
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}
