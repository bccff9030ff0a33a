//! Genuine/imposter comparison lists.
//!
//! Two strategies build a [`Benchmark`] from a [`DatasetIndex`]:
//!
//! * `general`: every unordered same-class pair, plus the same number of
//!   cross-class pairs drawn uniformly without replacement.
//! * `allInnerOneInter`: every unordered same-class pair, plus every pair of
//!   per-class representatives (one sample per class chosen by seed).
//!
//! Pairs are unordered and stored canonically (`left < right`). Genuine
//! pairs come first; each group is sorted by template id.
//!
//! File format (UTF-8, LF):
//!
//! ```text
//! #VEINBENCH v1 strategy=<name> seed=<u64>
//! E <template_id> <image_path>[ <image_path>...]
//! M <template_id> <template_id> <G|I>
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::DatasetIndex;

pub type TemplateId = u32;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("class `{class}` has {count} sample(s); at least 2 are required")]
    TooFewSamples { class: String, count: usize },
    #[error("at least 2 classes are required, found {0}")]
    TooFewClasses(usize),
    #[error("requested {requested} imposter pairs but only {available} cross-class pairs exist")]
    NotEnoughImposters { requested: usize, available: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown strategy `{0}` (expected `general` or `allInnerOneInter`)")]
    UnknownStrategy(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    General,
    AllInnerOneInter,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::General => "general",
            Strategy::AllInnerOneInter => "allInnerOneInter",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(Strategy::General),
            "allInnerOneInter" => Ok(Strategy::AllInnerOneInter),
            other => Err(BenchmarkError::UnknownStrategy(other.to_string())),
        }
    }
}

/// One enrollment: a sample and the template id it enrolls into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRef {
    pub class_id: String,
    pub sample_id: String,
    pub template_id: TemplateId,
    pub images: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairKind {
    Genuine,
    Imposter,
}

impl PairKind {
    pub fn code(self) -> char {
        match self {
            PairKind::Genuine => 'G',
            PairKind::Imposter => 'I',
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "G" => Some(PairKind::Genuine),
            "I" => Some(PairKind::Imposter),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pair {
    pub left: TemplateId,
    pub right: TemplateId,
    pub kind: PairKind,
}

impl Pair {
    /// Canonical pair with `left < right`.
    pub fn new(a: TemplateId, b: TemplateId, kind: PairKind) -> Self {
        Self {
            left: a.min(b),
            right: a.max(b),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Benchmark {
    pub enrolls: Vec<SampleRef>,
    pub pairs: Vec<Pair>,
    pub strategy: String,
    pub seed: u64,
}

impl Benchmark {
    pub fn genuine_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.kind == PairKind::Genuine).count()
    }

    pub fn imposter_count(&self) -> usize {
        self.pairs.len() - self.genuine_count()
    }

    /// Enrollment for `template_id`, if present.
    pub fn enroll(&self, template_id: TemplateId) -> Option<&SampleRef> {
        // template ids are assigned densely in enroll order by the generators
        match self.enrolls.get(template_id as usize) {
            Some(e) if e.template_id == template_id => Some(e),
            _ => self.enrolls.iter().find(|e| e.template_id == template_id),
        }
    }

    /// Checks id uniqueness, pair references, the genuine/imposter class
    /// rule and pair uniqueness.
    pub fn validate(&self) -> Result<(), String> {
        let mut by_id = HashMap::new();
        for e in &self.enrolls {
            if by_id.insert(e.template_id, e).is_some() {
                return Err(format!("duplicate template id {}", e.template_id));
            }
        }
        let mut seen = HashSet::new();
        for p in &self.pairs {
            let (Some(l), Some(r)) = (by_id.get(&p.left), by_id.get(&p.right)) else {
                return Err(format!("pair {} {} references an unknown template", p.left, p.right));
            };
            if p.left >= p.right {
                return Err(format!("pair {} {} is not canonical", p.left, p.right));
            }
            match p.kind {
                PairKind::Genuine if l.class_id != r.class_id || l.sample_id == r.sample_id => {
                    return Err(format!("genuine pair {} {} is not same-class", p.left, p.right))
                }
                PairKind::Imposter if l.class_id == r.class_id => {
                    return Err(format!("imposter pair {} {} is same-class", p.left, p.right))
                }
                _ => {}
            }
            if !seen.insert((p.left, p.right)) {
                return Err(format!("duplicate pair {} {}", p.left, p.right));
            }
        }
        Ok(())
    }
}

fn enrolls_from(index: &DatasetIndex) -> Vec<SampleRef> {
    let mut out = Vec::with_capacity(index.num_samples());
    for class in index.classes() {
        for path in index.samples(class) {
            out.push(SampleRef {
                class_id: class.clone(),
                sample_id: sample_id_of(path),
                template_id: out.len() as TemplateId,
                images: vec![path.clone()],
            });
        }
    }
    out
}

fn sample_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn class_id_of(path: &Path) -> String {
    path.parent()
        .and_then(Path::file_name)
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Ranges of template ids per class, in index order.
fn class_ranges(index: &DatasetIndex) -> Result<Vec<(usize, usize)>, BenchmarkError> {
    let mut ranges = Vec::new();
    let mut start = 0;
    for class in index.classes() {
        let n = index.samples(class).len();
        if n < 2 {
            return Err(BenchmarkError::TooFewSamples {
                class: class.clone(),
                count: n,
            });
        }
        ranges.push((start, start + n));
        start += n;
    }
    Ok(ranges)
}

fn genuine_pairs(ranges: &[(usize, usize)]) -> Vec<Pair> {
    let mut out = Vec::new();
    for &(lo, hi) in ranges {
        for a in lo..hi {
            for b in a + 1..hi {
                out.push(Pair::new(a as TemplateId, b as TemplateId, PairKind::Genuine));
            }
        }
    }
    out
}

/// Lexicographic enumeration of the cross-class pairs `(i, j)`, `i < j`,
/// over templates laid out class by class.
struct CrossPairs {
    /// `starts[i]` = number of cross-class pairs whose left id is below `i`.
    starts: Vec<u64>,
    class_end: Vec<usize>,
    total: u64,
}

impl CrossPairs {
    fn new(ranges: &[(usize, usize)]) -> Self {
        let n = ranges.last().map_or(0, |r| r.1);
        let mut class_end = vec![0; n];
        for &(lo, hi) in ranges {
            class_end[lo..hi].fill(hi);
        }
        let mut starts = Vec::with_capacity(n + 1);
        let mut acc = 0u64;
        for &end in &class_end {
            starts.push(acc);
            acc += (n - end) as u64;
        }
        starts.push(acc);
        Self {
            starts,
            class_end,
            total: acc,
        }
    }

    fn pair(&self, k: u64) -> (usize, usize) {
        // last i with starts[i] <= k
        let i = self.starts.partition_point(|&s| s <= k) - 1;
        let j = self.class_end[i] + (k - self.starts[i]) as usize;
        (i, j)
    }
}

/// `k` distinct indices from `0..n`: the first `k` steps of a seeded
/// Fisher-Yates shuffle over a virtual identity array.
fn partial_shuffle(n: u64, k: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut swapped: HashMap<u64, u64> = HashMap::with_capacity(k * 2);
    let mut out = Vec::with_capacity(k);
    for i in 0..k as u64 {
        let j = rng.random_range(i..n);
        let vi = *swapped.get(&i).unwrap_or(&i);
        let vj = *swapped.get(&j).unwrap_or(&j);
        swapped.insert(j, vi);
        out.push(vj);
    }
    out
}

pub fn gen_general(index: &DatasetIndex, seed: u64) -> Result<Benchmark, BenchmarkError> {
    let ranges = class_ranges(index)?;
    let mut pairs = genuine_pairs(&ranges);
    let cross = CrossPairs::new(&ranges);
    let wanted = pairs.len();
    if wanted as u64 > cross.total {
        return Err(BenchmarkError::NotEnoughImposters {
            requested: wanted,
            available: cross.total as usize,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut imposters: Vec<Pair> = partial_shuffle(cross.total, wanted, &mut rng)
        .into_iter()
        .map(|k| {
            let (i, j) = cross.pair(k);
            Pair::new(i as TemplateId, j as TemplateId, PairKind::Imposter)
        })
        .collect();
    imposters.sort_by_key(|p| (p.left, p.right));
    pairs.extend(imposters);
    Ok(Benchmark {
        enrolls: enrolls_from(index),
        pairs,
        strategy: Strategy::General.name().into(),
        seed,
    })
}

pub fn gen_all_inner_one_inter(
    index: &DatasetIndex,
    seed: u64,
) -> Result<Benchmark, BenchmarkError> {
    if index.num_classes() < 2 {
        return Err(BenchmarkError::TooFewClasses(index.num_classes()));
    }
    let ranges = class_ranges(index)?;
    let mut pairs = genuine_pairs(&ranges);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reps: Vec<usize> = ranges
        .iter()
        .map(|&(lo, hi)| rng.random_range(lo..hi))
        .collect();
    for a in 0..reps.len() {
        for b in a + 1..reps.len() {
            pairs.push(Pair::new(
                reps[a] as TemplateId,
                reps[b] as TemplateId,
                PairKind::Imposter,
            ));
        }
    }
    Ok(Benchmark {
        enrolls: enrolls_from(index),
        pairs,
        strategy: Strategy::AllInnerOneInter.name().into(),
        seed,
    })
}

pub fn generate(
    index: &DatasetIndex,
    strategy: Strategy,
    seed: u64,
) -> Result<Benchmark, BenchmarkError> {
    match strategy {
        Strategy::General => gen_general(index, seed),
        Strategy::AllInnerOneInter => gen_all_inner_one_inter(index, seed),
    }
}

pub const HEADER_TAG: &str = "#VEINBENCH v1";

pub fn format_benchmark(b: &Benchmark) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER_TAG} strategy={} seed={}", b.strategy, b.seed);
    for e in &b.enrolls {
        let _ = write!(out, "E {}", e.template_id);
        for p in &e.images {
            let _ = write!(out, " {}", p.display());
        }
        out.push('\n');
    }
    for p in &b.pairs {
        let _ = writeln!(out, "M {} {} {}", p.left, p.right, p.kind.code());
    }
    out
}

pub fn parse_benchmark(text: &str) -> Result<Benchmark, BenchmarkError> {
    let err = |line: usize, message: String| BenchmarkError::Parse { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file, expected header".into()))?;
    let rest = header
        .strip_prefix(HEADER_TAG)
        .ok_or_else(|| err(1, format!("expected header starting with `{HEADER_TAG}`")))?;
    let mut strategy = None;
    let mut seed = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("strategy", v)) => strategy = Some(v.to_string()),
            Some(("seed", v)) => {
                seed = Some(v.parse::<u64>().map_err(|_| err(1, format!("bad seed `{v}`")))?)
            }
            _ => return Err(err(1, format!("unexpected header field `{field}`"))),
        }
    }
    let strategy = strategy.ok_or_else(|| err(1, "header lacks strategy=".into()))?;
    let seed = seed.ok_or_else(|| err(1, "header lacks seed=".into()))?;

    let mut enrolls = Vec::new();
    let mut known: HashMap<TemplateId, usize> = HashMap::new();
    let mut pairs = Vec::new();
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        match parts.next() {
            Some("E") => {
                let id: TemplateId = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(no, "expected `E <template_id> <image_path>...`".into()))?;
                let images: Vec<PathBuf> = parts.map(PathBuf::from).collect();
                if images.is_empty() || images.iter().any(|p| p.as_os_str().is_empty()) {
                    return Err(err(no, "enroll line needs at least one image path".into()));
                }
                if known.insert(id, enrolls.len()).is_some() {
                    return Err(err(no, format!("duplicate template id {id}")));
                }
                enrolls.push(SampleRef {
                    class_id: class_id_of(&images[0]),
                    sample_id: sample_id_of(&images[0]),
                    template_id: id,
                    images,
                });
            }
            Some("M") => {
                let fields: Vec<&str> = parts.collect();
                let [l, r, k] = fields[..] else {
                    return Err(err(no, "expected `M <template_id> <template_id> <G|I>`".into()));
                };
                let parse_id = |s: &str| -> Result<TemplateId, BenchmarkError> {
                    let id: TemplateId = s
                        .parse()
                        .map_err(|_| err(no, format!("bad template id `{s}`")))?;
                    if !known.contains_key(&id) {
                        return Err(err(no, format!("undefined template id {id}")));
                    }
                    Ok(id)
                };
                let (left, right) = (parse_id(l)?, parse_id(r)?);
                if left == right {
                    return Err(err(no, format!("pair compares template {left} with itself")));
                }
                let kind = PairKind::from_code(k)
                    .ok_or_else(|| err(no, format!("pair kind must be G or I, got `{k}`")))?;
                pairs.push(Pair::new(left, right, kind));
            }
            _ => return Err(err(no, format!("unrecognized line `{line}`"))),
        }
    }
    Ok(Benchmark {
        enrolls,
        pairs,
        strategy,
        seed,
    })
}

pub fn write_benchmark(b: &Benchmark, path: &Path) -> Result<(), BenchmarkError> {
    fs::write(path, format_benchmark(b)).map_err(|source| BenchmarkError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_benchmark(path: &Path) -> Result<Benchmark, BenchmarkError> {
    let text = fs::read_to_string(path).map_err(|source| BenchmarkError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_benchmark(&text)
}
