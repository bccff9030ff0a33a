//! Command-line front end.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use veinrate::benchmark::{generate, read_benchmark, write_benchmark, Benchmark, Strategy};
use veinrate::dataset::{generate_synthetic, scan_dataset, SynthSpec, TierParams};
use veinrate::metrics::{build_report, det_csv, det_svg, histogram_csv, report_json, FailurePolicy, MetricReport};
use veinrate::runner::{
    read_scores, run_builtin, run_external, write_scores, BuiltinMatcher, ExternalConfig, ProtocolLimits,
    RunMetadata, RunResult, ScoreSource,
};

pub const SCORES_FILE: &str = "scores.csv";
pub const REPORT_FILE: &str = "report.json";
pub const DET_CSV_FILE: &str = "det.csv";
pub const DET_SVG_FILE: &str = "det.svg";
pub const HISTOGRAM_FILE: &str = "histograms.csv";
pub const RUN_FILE: &str = "run.json";

/// Bad invocation; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Parser)]
#[command(name = "veinrate", version, about = "Finger-vein verification benchmarking")]
pub struct Cli {
    /// File of `key=value` lines supplying defaults for any long flag
    /// (e.g. `workers=4`); flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic data set of BMP images.
    GenData(GenDataArgs),
    /// Build a genuine/imposter pair list over a data set.
    GenBench(GenBenchArgs),
    /// Enroll and match every pair, then write scores and metrics.
    Run(RunArgs),
    /// Recompute metrics from an existing scores file.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub classes: Option<usize>,
    /// Samples per class.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Difficulty tier.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub tier: Option<u8>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// [default: 512]
    #[arg(long)]
    pub width: Option<usize>,
    /// [default: 384]
    #[arg(long)]
    pub height: Option<usize>,
    /// Overrides one tier parameter, e.g. `noise_sigma=3`. Repeatable.
    #[arg(long = "tier-param", value_name = "KEY=VALUE", value_parser = parse_key_value)]
    pub tier_param: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct GenBenchArgs {
    /// Data set root (`<root>/<class>/<sample>.bmp`).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// `general` or `allInnerOneInter`.
    #[arg(long)]
    pub strategy: Option<String>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output benchmark file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    /// Directory that relative image paths in the benchmark are resolved
    /// against. [default: .]
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Built-in matcher: t6, t7 or t9.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Built-in matcher parameter override. Repeatable.
    #[arg(long, value_name = "KEY=VALUE", value_parser = parse_key_value)]
    pub param: Vec<(String, String)>,
    /// External enroll program: `enroll <image>... <template>`.
    #[arg(long = "enroll-cmd")]
    pub enroll_cmd: Option<PathBuf>,
    /// External match program: `match <template> <template>`.
    #[arg(long = "match-cmd")]
    pub match_cmd: Option<PathBuf>,
    /// Pass a score file path as the third match argument and read the
    /// score from it instead of standard output.
    #[arg(long = "score-file")]
    pub score_file: bool,
    /// Keep external templates even when every pair succeeded.
    #[arg(long = "keep-templates")]
    pub keep_templates: bool,
    /// Parent of the template scratch directory. [default: the output
    /// directory]
    #[arg(long = "work-dir")]
    pub work_dir: Option<PathBuf>,
    /// Failure policy: exclude or revised. [default: exclude]
    #[arg(long)]
    pub policy: Option<FailurePolicy>,
    /// Parallel enroll/match jobs. [default: available cores]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Leave all timings out of the scores, making them reproducible byte
    /// for byte.
    #[arg(long = "no-timings")]
    pub no_timings: bool,
    /// Seconds. [default: 30]
    #[arg(long = "enroll-timeout")]
    pub enroll_timeout: Option<f64>,
    /// Seconds. [default: 10]
    #[arg(long = "match-timeout")]
    pub match_timeout: Option<f64>,
    /// Resident memory limit, MiB. [default: 2048]
    #[arg(long = "mem-limit")]
    pub mem_limit: Option<u64>,
    /// Enroll executable size limit, MiB. [default: 20]
    #[arg(long = "enroll-size-limit")]
    pub enroll_size_limit: Option<u64>,
    /// Match executable size limit, MiB. [default: 300]
    #[arg(long = "match-size-limit")]
    pub match_size_limit: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Scores CSV written by `run`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// [default: exclude]
    #[arg(long)]
    pub policy: Option<FailurePolicy>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("expected KEY=VALUE, got `{s}`")),
    }
}

const CONFIG_KEYS: &[&str] = &[
    "classes", "samples", "tier", "seed", "out", "width", "height", "tier-param", "dataset", "strategy",
    "benchmark", "builtin", "param", "enroll-cmd", "match-cmd", "score-file", "keep-templates", "work-dir",
    "policy", "workers", "no-timings", "enroll-timeout", "match-timeout", "mem-limit", "enroll-size-limit",
    "match-size-limit", "scores",
];

/// `key=value` settings; repeatable keys keep every value in order.
#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, Vec<String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key=value", i + 1));
            };
            let key = k.trim();
            if !CONFIG_KEYS.contains(&key) {
                return usage(format!("config line {}: unknown key `{key}`", i + 1));
            }
            values.entry(key.to_string()).or_default().push(v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    fn last(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(|v| v.last()).map(String::as_str)
    }

    fn all(&self, key: &str) -> &[String] {
        self.values.get(key).map_or(&[], Vec::as_slice)
    }

    /// The flag value if given, otherwise the parsed config value.
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.last(key) {
            None => Ok(None),
            Some(v) => match v.parse() {
                Ok(x) => Ok(Some(x)),
                Err(e) => usage(format!("config `{key}={v}`: {e}")),
            },
        }
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.pick(flag, key)? {
            Some(v) => Ok(v),
            None => usage(format!("missing --{key} (flag or config key `{key}`)")),
        }
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.last(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => usage(format!("config `{key}={v}`: expected true or false")),
        }
    }

    /// Flag values if any were given, otherwise the config's.
    fn pairs(&self, flags: Vec<(String, String)>, key: &str) -> Result<Vec<(String, String)>> {
        if !flags.is_empty() {
            return Ok(flags);
        }
        self.all(key)
            .iter()
            .map(|v| parse_key_value(v).or_else(|e| usage(format!("config `{key}`: {e}"))))
            .collect()
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::GenData(a) => gen_data(a, &cfg),
        Command::GenBench(a) => gen_bench(a, &cfg),
        Command::Run(a) => run_bench(a, &cfg),
        Command::Report(a) => report(a, &cfg),
    }
}

fn gen_data(a: GenDataArgs, cfg: &Config) -> Result<()> {
    let classes = cfg.require(a.classes, "classes")?;
    let samples = cfg.require(a.samples, "samples")?;
    let tier: u8 = cfg.require(a.tier, "tier")?;
    if !(1..=3).contains(&tier) {
        return usage(format!("tier must be 1, 2 or 3 (got {tier})"));
    }
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(0);
    let out: PathBuf = cfg.require(a.out, "out")?;
    let mut spec = SynthSpec::new(classes, samples, tier, seed);
    spec.width = cfg.pick(a.width, "width")?.unwrap_or(spec.width);
    spec.height = cfg.pick(a.height, "height")?.unwrap_or(spec.height);
    let overrides = cfg.pairs(a.tier_param, "tier-param")?;
    if !overrides.is_empty() {
        let mut t = TierParams::for_tier(tier).expect("tier checked");
        for (k, v) in &overrides {
            let value: f64 = v.parse().or_else(|_| usage(format!("tier parameter {k}={v}: not a number")))?;
            t.apply_override(k, value).or_else(|e| usage(e.to_string()))?;
        }
        spec.params = Some(t);
    }
    if let Err(e) = spec.validate() {
        return usage(e.to_string());
    }
    let index = generate_synthetic(&spec, &out)?;
    println!("images={} classes={} out={}", index.num_samples(), index.num_classes(), out.display());
    Ok(())
}

fn gen_bench(a: GenBenchArgs, cfg: &Config) -> Result<()> {
    let dataset: PathBuf = cfg.require(a.dataset, "dataset")?;
    let strategy: String = cfg.require(a.strategy, "strategy")?;
    let strategy: Strategy = match strategy.parse() {
        Ok(s) => s,
        Err(e) => return usage(format!("{e}")),
    };
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(0);
    let out: PathBuf = cfg.require(a.out, "out")?;
    let index = scan_dataset(&dataset)?;
    let mut b = generate(&index, strategy, seed)?;
    // image paths are stored relative to the data set root so the
    // benchmark file does not depend on where the data set lives
    for e in &mut b.enrolls {
        for p in &mut e.images {
            if let Ok(rel) = p.strip_prefix(index.root()) {
                *p = rel.to_path_buf();
            }
        }
    }
    write_benchmark(&b, &out)?;
    println!("genuine={} imposter={}", b.genuine_count(), b.imposter_count());
    Ok(())
}

fn mib(v: u64) -> u64 {
    v.saturating_mul(1024 * 1024)
}

fn seconds(v: f64, key: &str) -> Result<Duration> {
    if !(v.is_finite() && v > 0.0) {
        return usage(format!("--{key} must be a positive number of seconds"));
    }
    Ok(Duration::from_secs_f64(v))
}

fn run_bench(a: RunArgs, cfg: &Config) -> Result<()> {
    let bench_path: PathBuf = cfg.require(a.benchmark, "benchmark")?;
    let dataset: PathBuf = cfg.pick(a.dataset, "dataset")?.unwrap_or_else(|| PathBuf::from("."));
    let out: PathBuf = cfg.require(a.out, "out")?;
    let policy = cfg.pick(a.policy, "policy")?.unwrap_or(FailurePolicy::Exclude);
    let default_workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let workers = cfg.pick(a.workers, "workers")?.unwrap_or(default_workers);
    if workers == 0 {
        return usage("--workers must be at least 1");
    }
    let record_timings = !cfg.switch(a.no_timings, "no-timings")?;
    let builtin: Option<String> = cfg.pick(a.builtin, "builtin")?;
    let enroll_cmd: Option<PathBuf> = cfg.pick(a.enroll_cmd, "enroll-cmd")?;
    let match_cmd: Option<PathBuf> = cfg.pick(a.match_cmd, "match-cmd")?;

    let mut limits = ProtocolLimits::default();
    if let Some(v) = cfg.pick(a.enroll_timeout, "enroll-timeout")? {
        limits.enroll_timeout = seconds(v, "enroll-timeout")?;
    }
    if let Some(v) = cfg.pick(a.match_timeout, "match-timeout")? {
        limits.match_timeout = seconds(v, "match-timeout")?;
    }
    if let Some(v) = cfg.pick(a.mem_limit, "mem-limit")? {
        limits.mem_limit = mib(v);
    }
    if let Some(v) = cfg.pick(a.enroll_size_limit, "enroll-size-limit")? {
        limits.enroll_exe_size_limit = mib(v);
    }
    if let Some(v) = cfg.pick(a.match_size_limit, "match-size-limit")? {
        limits.match_exe_size_limit = mib(v);
    }
    if let Err(e) = limits.validate() {
        return usage(e);
    }

    let mut bench = read_benchmark(&bench_path)?;
    resolve_images(&mut bench, &dataset);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let (result, meta) = match (builtin, enroll_cmd, match_cmd) {
        (Some(name), None, None) => {
            let matcher = BuiltinMatcher {
                name,
                params: cfg.pairs(a.param, "param")?,
            };
            run_builtin(&bench, &matcher, workers, record_timings)?
        }
        (None, Some(e), Some(m)) => {
            let mut ext = ExternalConfig::new(e, m, cfg.pick(a.work_dir, "work-dir")?.unwrap_or_else(|| out.clone()));
            ext.limits = limits;
            ext.workers = workers;
            ext.keep_templates = cfg.switch(a.keep_templates, "keep-templates")?;
            ext.score_source = if cfg.switch(a.score_file, "score-file")? {
                ScoreSource::File
            } else {
                ScoreSource::Stdout
            };
            ext.record_timings = record_timings;
            run_external(&bench, &ext)?
        }
        (None, None, None) => return usage("choose a matcher: --builtin NAME, or --enroll-cmd and --match-cmd"),
        (Some(_), _, _) => return usage("--builtin cannot be combined with --enroll-cmd/--match-cmd"),
        _ => return usage("external mode needs both --enroll-cmd and --match-cmd"),
    };

    // scores go to disk before anything that can fail on their content
    let scores_path = out.join(SCORES_FILE);
    write_scores(&result, &scores_path)?;
    write_run_metadata(&meta, &out)?;
    let stored = read_scores(&scores_path)?;
    let report = build_report(&stored, policy)?;
    write_report_files(&report, &out)?;
    println!("{}", summary_line(&report, &stored));
    Ok(())
}

/// Joins relative image paths onto the data set root.
fn resolve_images(b: &mut Benchmark, root: &Path) {
    for e in &mut b.enrolls {
        for p in &mut e.images {
            if p.is_relative() {
                *p = root.join(&*p);
            }
        }
    }
}

fn write_run_metadata(meta: &RunMetadata, out: &Path) -> Result<()> {
    let path = out.join(RUN_FILE);
    let text = serde_json::to_string_pretty(meta)? + "\n";
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn report(a: ReportArgs, cfg: &Config) -> Result<()> {
    let scores: PathBuf = cfg.require(a.scores, "scores")?;
    let policy = cfg.pick(a.policy, "policy")?.unwrap_or(FailurePolicy::Exclude);
    let out: PathBuf = cfg.require(a.out, "out")?;
    let result = read_scores(&scores)?;
    let report = build_report(&result, policy)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_report_files(&report, &out)?;
    println!("{}", summary_line(&report, &result));
    Ok(())
}

fn write_report_files(r: &MetricReport, out: &Path) -> Result<()> {
    let files = [
        (REPORT_FILE, report_json(r)),
        (DET_CSV_FILE, det_csv(r)),
        (DET_SVG_FILE, det_svg(r)),
        (HISTOGRAM_FILE, histogram_csv(&r.histograms)),
    ];
    for (name, text) in files {
        let path = out.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn rate(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

pub fn summary_line(r: &MetricReport, result: &RunResult) -> String {
    format!(
        "EER={} FMR100={} FMR1000={} FTE={} FTM={}",
        rate(Some(r.eer)),
        rate(r.fmr100),
        rate(r.fmr1000),
        result.fte_count,
        result.ftm_count
    )
}
