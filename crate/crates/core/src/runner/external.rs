//! Enroll/match programs run as child processes under time, memory and
//! executable-size limits.
//!
//! Enroll is invoked as `enroll <image>... <template>` and must exit 0 and
//! leave the template file behind. Match is invoked as `match <a> <b>`
//! (plus a score file path in file mode); the first whitespace-delimited
//! token of its output is the score.

use std::ffi::OsString;
use std::fs::{self, File};
use std::os::unix::fs::PermissionsExt;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::{
    benchmark_hash, check_references, enroll_positions, enroll_status, mean, ms, thread_pool, LimitsRecord,
    PairStatus, ProtocolLimits, RunMetadata, RunResult, RunnerError, ScoreRecord,
};
use crate::benchmark::{Benchmark, SampleRef};

/// How the limit is enforced: resident set size of the child's process
/// group sampled every 50 ms, kill on overrun.
pub const MEMORY_ENFORCEMENT: &str = "rss-poll-50ms";

const WAIT_POLL: Duration = Duration::from_millis(1);
const MEMORY_POLL: Duration = Duration::from_millis(50);

/// Where the match program leaves its score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    #[default]
    Stdout,
    /// A file whose path is passed as a third argument.
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalConfig {
    pub enroll_cmd: PathBuf,
    pub match_cmd: PathBuf,
    pub limits: ProtocolLimits,
    pub workers: usize,
    /// Parent of the per-run scratch directory holding templates.
    pub work_dir: PathBuf,
    pub keep_templates: bool,
    pub score_source: ScoreSource,
    pub record_timings: bool,
}

impl ExternalConfig {
    pub fn new(enroll_cmd: impl Into<PathBuf>, match_cmd: impl Into<PathBuf>, work_dir: impl Into<PathBuf>) -> Self {
        Self {
            enroll_cmd: enroll_cmd.into(),
            match_cmd: match_cmd.into(),
            limits: ProtocolLimits::default(),
            workers: 1,
            work_dir: work_dir.into(),
            keep_templates: false,
            score_source: ScoreSource::Stdout,
            record_timings: true,
        }
    }
}

fn check_executable(path: &Path, limit: u64) -> Result<(), RunnerError> {
    let meta = fs::metadata(path).map_err(|_| RunnerError::MissingExecutable(path.to_path_buf()))?;
    if !meta.is_file() {
        return Err(RunnerError::MissingExecutable(path.to_path_buf()));
    }
    if meta.len() > limit {
        return Err(RunnerError::ExecutableTooLarge {
            path: path.to_path_buf(),
            size: meta.len(),
            limit,
        });
    }
    if meta.permissions().mode() & 0o111 == 0 {
        return Err(RunnerError::Spawn {
            path: path.to_path_buf(),
            source: std::io::Error::from(std::io::ErrorKind::PermissionDenied),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Success,
    Failure,
    TimedOut,
    OutOfMemory,
    NotStarted,
}

/// Runs one program to completion or until a limit trips; the whole
/// process group is killed either way so no descendants outlive it.
fn run_limited(
    program: &Path,
    args: &[OsString],
    stdout: Stdio,
    timeout: Duration,
    mem_limit: u64,
) -> (Exit, Duration) {
    let start = Instant::now();
    let spawned = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(Stdio::null())
        .process_group(0)
        .spawn();
    let Ok(mut child) = spawned else {
        return (Exit::NotStarted, start.elapsed());
    };
    let group = child.id() as i32;
    let mut next_memory_check = start;
    loop {
        match child.try_wait() {
            Ok(Some(status)) => {
                let elapsed = start.elapsed();
                kill_group(group);
                let exit = if status.success() { Exit::Success } else { Exit::Failure };
                return (exit, elapsed);
            }
            Ok(None) => {}
            Err(_) => {
                kill_group(group);
                let _ = child.wait();
                return (Exit::Failure, start.elapsed());
            }
        }
        let now = Instant::now();
        let limit_hit = if now - start > timeout {
            Some(Exit::TimedOut)
        } else if now >= next_memory_check {
            next_memory_check = now + MEMORY_POLL;
            (group_rss(group) > mem_limit).then_some(Exit::OutOfMemory)
        } else {
            None
        };
        if let Some(exit) = limit_hit {
            kill_group(group);
            let _ = child.wait();
            return (exit, start.elapsed());
        }
        std::thread::sleep(WAIT_POLL);
    }
}

fn kill_group(group: i32) {
    // SAFETY: plain syscall; a vanished group yields ESRCH, which is fine
    unsafe {
        libc::kill(-group, libc::SIGKILL);
    }
}

/// Resident bytes summed over the members of a process group, from
/// `/proc`. Zero where `/proc` is unavailable.
fn group_rss(group: i32) -> u64 {
    let Ok(entries) = fs::read_dir("/proc") else {
        return 0;
    };
    // SAFETY: sysconf has no preconditions
    let page = unsafe { libc::sysconf(libc::_SC_PAGESIZE) }.max(1) as u64;
    let mut total = 0;
    for entry in entries.flatten() {
        let name = entry.file_name();
        let Some(pid) = name.to_str().and_then(|n| n.parse::<u32>().ok()) else {
            continue;
        };
        let Ok(stat) = fs::read_to_string(format!("/proc/{pid}/stat")) else {
            continue;
        };
        // fields after the parenthesised command: state ppid pgrp ...
        let Some(rest) = stat.rfind(')').map(|i| &stat[i + 1..]) else {
            continue;
        };
        if rest.split_whitespace().nth(2).and_then(|g| g.parse::<i32>().ok()) != Some(group) {
            continue;
        }
        if let Ok(statm) = fs::read_to_string(format!("/proc/{pid}/statm")) {
            let resident: u64 = statm.split_whitespace().nth(1).and_then(|v| v.parse().ok()).unwrap_or(0);
            total += resident * page;
        }
    }
    total
}

struct Enrolled {
    ok: bool,
    time_ms: f64,
    size: u64,
}

fn template_path(scratch: &Path, id: u32) -> PathBuf {
    scratch.join(format!("{id}.tpl"))
}

fn enroll_one(cfg: &ExternalConfig, scratch: &Path, e: &SampleRef) -> Enrolled {
    let tpl = template_path(scratch, e.template_id);
    let _ = fs::remove_file(&tpl);
    let mut args: Vec<OsString> = e.images.iter().map(|p| p.clone().into_os_string()).collect();
    args.push(tpl.clone().into_os_string());
    let (exit, elapsed) = run_limited(
        &cfg.enroll_cmd,
        &args,
        Stdio::null(),
        cfg.limits.enroll_timeout,
        cfg.limits.mem_limit,
    );
    let size = fs::metadata(&tpl).ok().filter(|m| m.is_file()).map(|m| m.len());
    match (exit, size) {
        (Exit::Success, Some(size)) => Enrolled {
            ok: true,
            time_ms: ms(elapsed),
            size,
        },
        _ => Enrolled {
            ok: false,
            time_ms: 0.0,
            size: 0,
        },
    }
}

/// Score from program output: the first token, a decimal in `[0, 1]`.
pub(crate) fn parse_score(output: &str) -> Option<f64> {
    let s: f64 = output.split_whitespace().next()?.parse().ok()?;
    (s.is_finite() && (0.0..=1.0).contains(&s)).then_some(s)
}

fn match_one(cfg: &ExternalConfig, scratch: &Path, index: usize, a: u32, b: u32) -> Result<(PairStatus, Option<f64>, f64), RunnerError> {
    let out_path = scratch.join(format!("{index}.out"));
    let mut args = vec![
        template_path(scratch, a).into_os_string(),
        template_path(scratch, b).into_os_string(),
    ];
    let stdout = match cfg.score_source {
        ScoreSource::Stdout => Stdio::from(File::create(&out_path).map_err(|source| RunnerError::WorkDir {
            path: out_path.clone(),
            source,
        })?),
        ScoreSource::File => {
            let _ = fs::remove_file(&out_path);
            args.push(out_path.clone().into_os_string());
            Stdio::null()
        }
    };
    let (exit, elapsed) = run_limited(&cfg.match_cmd, &args, stdout, cfg.limits.match_timeout, cfg.limits.mem_limit);
    let output = fs::read(&out_path).ok();
    let _ = fs::remove_file(&out_path);
    let (status, score) = match exit {
        Exit::Success => match output.as_deref().map(String::from_utf8_lossy).as_deref().and_then(parse_score) {
            Some(s) => (PairStatus::Ok, Some(s)),
            None => (PairStatus::ProtocolError, None),
        },
        _ => (PairStatus::Ftm, None),
    };
    Ok((status, score, ms(elapsed)))
}

/// Runs `b` against an external enroll/match program pair.
///
/// Executables are checked before anything runs. Templates live in
/// `work_dir/scratch-<hash>`, which is removed after a run where every
/// pair scored, unless `keep_templates` is set.
pub fn run_external(b: &Benchmark, cfg: &ExternalConfig) -> Result<(RunResult, RunMetadata), RunnerError> {
    cfg.limits.validate().map_err(RunnerError::BadParameter)?;
    check_executable(&cfg.enroll_cmd, cfg.limits.enroll_exe_size_limit)?;
    check_executable(&cfg.match_cmd, cfg.limits.match_exe_size_limit)?;
    check_references(b)?;
    let pool = thread_pool(cfg.workers)?;

    let hash = benchmark_hash(b);
    let scratch = cfg.work_dir.join(format!("scratch-{}", &hash[..16]));
    fs::create_dir_all(&scratch).map_err(|source| RunnerError::WorkDir {
        path: scratch.clone(),
        source,
    })?;
    let started = Instant::now();

    let enrolled: Vec<Enrolled> = pool.install(|| b.enrolls.par_iter().map(|e| enroll_one(cfg, &scratch, e)).collect());
    let pos = enroll_positions(b);
    let slot = |id| &enrolled[pos[&id]];

    let records: Vec<ScoreRecord> = pool.install(|| {
        b.pairs
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                if let Some(status) = enroll_status(slot(p.left).ok, slot(p.right).ok) {
                    return Ok(ScoreRecord::failed(i, p.kind, status, None));
                }
                let (status, score, time) = match_one(cfg, &scratch, i, p.left, p.right)?;
                let time = cfg.record_timings.then_some(time);
                Ok(match score {
                    Some(s) => ScoreRecord::ok(i, p.kind, s, time),
                    None => ScoreRecord::failed(i, p.kind, status, time),
                })
            })
            .collect::<Result<_, RunnerError>>()
    })?;

    let ok_enrolls = || enrolled.iter().filter(|e| e.ok);
    let (avg_enroll, avg_match) = if cfg.record_timings {
        (
            mean(ok_enrolls().map(|e| e.time_ms)),
            mean(records.iter().filter(|r| r.status == PairStatus::Ok).filter_map(|r| r.match_time_ms)),
        )
    } else {
        (0.0, 0.0)
    };
    let avg_size = mean(ok_enrolls().map(|e| e.size as f64));
    let result = RunResult::new(records, avg_enroll, avg_match, avg_size);

    let clean = result.records.iter().all(|r| r.status == PairStatus::Ok);
    let kept = cfg.keep_templates || !clean;
    if !kept {
        fs::remove_dir_all(&scratch).map_err(|source| RunnerError::WorkDir {
            path: scratch.clone(),
            source,
        })?;
    }

    let meta = RunMetadata {
        mode: "external".into(),
        matcher: None,
        params: Vec::new(),
        enroll_command: Some(cfg.enroll_cmd.clone()),
        match_command: Some(cfg.match_cmd.clone()),
        score_source: Some(cfg.score_source),
        limits: Some(LimitsRecord::from(&cfg.limits)),
        memory_enforcement: Some(MEMORY_ENFORCEMENT.into()),
        scratch_dir: Some(scratch),
        templates_kept: kept,
        workers: cfg.workers,
        enrolls: b.enrolls.len(),
        pairs: b.pairs.len(),
        benchmark_sha256: hash,
        timings_recorded: cfg.record_timings,
        wall_time_ms: ms(started.elapsed()),
    };
    Ok((result, meta))
}
