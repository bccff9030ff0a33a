//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so criteria execute in order and report as they go.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{fake_index, script, ENROLL_COPY};
use veinrate::baselines::{Matcher, Template, TemplateFormat};
use veinrate::benchmark::{gen_all_inner_one_inter, gen_general, Benchmark, Pair, PairKind, SampleRef};
use veinrate::dataset::{generate_synthetic, scan_dataset, SynthSpec};
use veinrate::imaging::{BinaryImage, GrayImage};
use veinrate::metrics::{eer, fnmr_at_fmr_bound, sweep, zero_fmr, zero_fnmr, FailurePolicy};
use veinrate::runner::{
    run_builtin, run_external, BuiltinMatcher, ExternalConfig, PairStatus, RunResult, RunnerError, ScoreRecord,
};

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------- 1

fn pair_counts() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    // pair generation only looks at the file layout, so tiny images do
    let spec = SynthSpec::new(1000, 5, 1, 1).with_size(8, 8);
    generate_synthetic(&spec, dir.path()).map_err(|e| e.to_string())?;
    let index = scan_dataset(dir.path()).map_err(|e| e.to_string())?;

    let t0 = Instant::now();
    let a = gen_all_inner_one_inter(&index, 7).map_err(|e| e.to_string())?;
    let g = gen_general(&index, 7).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();

    let counts = |b: &Benchmark| (b.genuine_count(), b.imposter_count());
    check!(counts(&a) == (10_000, 499_500), "allInnerOneInter gave {:?}", counts(&a));
    check!(counts(&g) == (10_000, 10_000), "general gave {:?}", counts(&g));
    check!(elapsed < Duration::from_secs(5), "generation took {elapsed:?}");
    Ok(format!(
        "allInnerOneInter {}+{}, general {}+{}, {:.2}s",
        a.genuine_count(),
        a.imposter_count(),
        g.genuine_count(),
        g.imposter_count(),
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 2

/// Exact rates at one threshold, as integer fractions.
#[derive(Clone, Copy)]
struct Rates {
    fa: u64,
    fa_den: u64,
    fr: u64,
    fr_den: u64,
}

impl Rates {
    fn fmr(self) -> f64 {
        self.fa as f64 / self.fa_den as f64
    }
    fn fnmr(self) -> f64 {
        self.fr as f64 / self.fr_den as f64
    }
    /// Sign of fmr - fnmr, exactly.
    fn sign(self) -> std::cmp::Ordering {
        (self.fa * self.fr_den).cmp(&(self.fr * self.fa_den))
    }
}

struct OracleMetrics {
    eer: f64,
    fmr100: Option<f64>,
    fmr1000: Option<f64>,
    zero_fmr: Option<f64>,
    zero_fnmr: Option<f64>,
}

/// Direct count at every candidate threshold: below all scores, at each
/// distinct successful score, and at 1.
fn oracle(records: &[ScoreRecord], policy: FailurePolicy) -> Option<OracleMetrics> {
    let of = |k| records.iter().filter(move |r| r.kind == k);
    let ok_of = |k| of(k).filter(|r| r.status == PairStatus::Ok);
    let (g_total, i_total) = (of(PairKind::Genuine).count() as u64, of(PairKind::Imposter).count() as u64);
    let (g_ok, i_ok) = (ok_of(PairKind::Genuine).count() as u64, ok_of(PairKind::Imposter).count() as u64);
    let (g_den, i_den) = match policy {
        FailurePolicy::Exclude => (g_ok, i_ok),
        FailurePolicy::Revised => (g_total, i_total),
    };
    if g_den == 0 || i_den == 0 {
        return None;
    }
    let mut ts: Vec<f64> = records.iter().filter_map(|r| r.score).collect();
    ts.push(-0.5);
    ts.push(1.0);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let pts: Vec<Rates> = ts
        .iter()
        .map(|&t| {
            let fa = ok_of(PairKind::Imposter).filter(|r| r.score.unwrap() > t).count() as u64;
            let rejected = ok_of(PairKind::Genuine).filter(|r| r.score.unwrap() <= t).count() as u64;
            Rates {
                fa,
                fa_den: i_den,
                fr: rejected + (g_den - g_ok),
                fr_den: g_den,
            }
        })
        .collect();

    use std::cmp::Ordering::*;
    let eer = if pts[0].sign() == Less {
        pts.iter().map(|p| p.fmr().max(p.fnmr())).fold(f64::INFINITY, f64::min)
    } else {
        let i = pts.iter().position(|p| p.sign() != Greater).expect("fmr reaches 0 at t = 1");
        if pts[i].sign() == Equal {
            pts[i].fmr()
        } else {
            let (q, p) = (pts[i - 1], pts[i]);
            let (dq, dp) = (q.fmr() - q.fnmr(), p.fmr() - p.fnmr());
            q.fmr() + dq / (dq - dp) * (p.fmr() - q.fmr())
        }
    };
    let min_fnmr = |pred: &dyn Fn(&Rates) -> bool| pts.iter().filter(|p| pred(p)).map(|p| p.fnmr()).reduce(f64::min);
    Some(OracleMetrics {
        eer,
        fmr100: min_fnmr(&|p| p.fa * 100 <= p.fa_den),
        fmr1000: min_fnmr(&|p| p.fa * 1000 <= p.fa_den),
        zero_fmr: min_fnmr(&|p| p.fa == 0),
        zero_fnmr: pts.iter().filter(|p| p.fr == 0).map(|p| p.fmr()).reduce(f64::min),
    })
}

fn random_records(rng: &mut ChaCha8Rng, with_failures: bool) -> Vec<ScoreRecord> {
    let n = rng.random_range(2..=1000);
    let coarse = rng.random_bool(0.5);
    let fail_p = if with_failures { rng.random_range(0.0..0.4) } else { 0.0 };
    (0..n)
        .map(|i| {
            let kind = if i == 0 {
                PairKind::Genuine
            } else if i == 1 || rng.random_bool(0.6) {
                PairKind::Imposter
            } else {
                PairKind::Genuine
            };
            if rng.random_bool(fail_p) {
                let status = [PairStatus::FteLeft, PairStatus::FteRight, PairStatus::Ftm, PairStatus::ProtocolError]
                    [rng.random_range(0..4)];
                return ScoreRecord::failed(i, kind, status, None);
            }
            let centre = if kind == PairKind::Genuine { 0.65 } else { 0.35 };
            let mut s: f64 = (centre + rng.random_range(-0.4..0.4f64)).clamp(0.0, 1.0);
            if coarse {
                s = (s * 20.0).round() / 20.0;
            }
            ScoreRecord::ok(i, kind, s, None)
        })
        .collect()
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= 1e-12,
        (None, None) => true,
        _ => false,
    }
}

fn metric_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut compared = 0;
    for case in 0..200 {
        let records = random_records(&mut rng, case % 2 == 1);
        for policy in [FailurePolicy::Exclude, FailurePolicy::Revised] {
            let want = oracle(&records, policy);
            let got = sweep(&records, policy);
            let (want, pts) = match (want, got) {
                (None, Err(_)) => continue,
                (Some(w), Ok(p)) => (w, p),
                (w, g) => return Err(format!("case {case} {policy}: oracle defined={} library ok={}", w.is_some(), g.is_ok())),
            };
            let pairs = [
                ("EER", Some(eer(&pts)), Some(want.eer)),
                ("FMR100", fnmr_at_fmr_bound(&pts, 0.01), want.fmr100),
                ("FMR1000", fnmr_at_fmr_bound(&pts, 0.001), want.fmr1000),
                ("zeroFMR", zero_fmr(&pts), want.zero_fmr),
                ("zeroFNMR", zero_fnmr(&pts), want.zero_fnmr),
            ];
            for (name, g, w) in pairs {
                check!(close(g, w), "case {case} {policy} {name}: library {g:?}, oracle {w:?}");
            }
            compared += 1;
        }
    }
    let elapsed = t0.elapsed();
    check!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("{compared} (result, policy) cases agree within 1e-12, {:.2}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- 3

fn revised_formula() -> Outcome {
    let g = |i, s| ScoreRecord::ok(i, PairKind::Genuine, s, None);
    let imp = |i, s| ScoreRecord::ok(i, PairKind::Imposter, s, None);
    let records = vec![
        g(0, 0.9),
        g(1, 0.8),
        g(2, 0.3),
        ScoreRecord::failed(3, PairKind::Genuine, PairStatus::Ftm, None),
        imp(4, 0.1),
        imp(5, 0.2),
    ];
    let pts = sweep(&records, FailurePolicy::Revised).map_err(|e| e.to_string())?;
    // rates are constant between sweep thresholds; 0.3 is the last one below 0.5
    let at = pts.iter().rev().find(|p| p.t <= 0.5).unwrap();
    check!(at.fnmr == 0.5, "revised FNMR at t=0.5 is {}", at.fnmr);

    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for case in 0..100 {
        let r = random_records(&mut rng, false);
        let a = sweep(&r, FailurePolicy::Exclude).map_err(|e| e.to_string())?;
        let b = sweep(&r, FailurePolicy::Revised).map_err(|e| e.to_string())?;
        check!(a == b, "case {case}: sweeps differ without failures");
    }
    Ok("revised FNMR = 0.5 exactly; 100 failure-free sweeps identical".into())
}

// ---------------------------------------------------------------- 4, 5

const SEEDS: [u64; 3] = [1, 2, 3];

struct TierRuns {
    t6: Vec<Vec<f64>>,
    t9_tier1: Vec<f64>,
}

fn run_eer(b: &Benchmark, matcher: &str) -> Result<(f64, RunResult), String> {
    let (r, _) = run_builtin(b, &BuiltinMatcher::new(matcher), 1, false).map_err(|e| e.to_string())?;
    let pts = sweep(&r.records, FailurePolicy::Exclude).map_err(|e| e.to_string())?;
    Ok((eer(&pts), r))
}

fn tier_runs() -> Result<TierRuns, String> {
    let mut t6 = vec![Vec::new(); 3];
    let mut t9_tier1 = Vec::new();
    for tier in 1..=3u8 {
        for seed in SEEDS {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let index = generate_synthetic(&SynthSpec::new(50, 5, tier, seed), dir.path()).map_err(|e| e.to_string())?;
            let b = gen_all_inner_one_inter(&index, seed).map_err(|e| e.to_string())?;
            let (e, r) = run_eer(&b, "t6")?;
            check!(
                (b.genuine_count(), b.imposter_count()) == (500, 1225) && r.records.len() == 1725,
                "tier {tier} seed {seed}: pair counts {} + {}", b.genuine_count(), b.imposter_count()
            );
            check!(r.count_status(PairStatus::ProtocolError) == 0, "tier {tier} seed {seed}: protocol errors");
            t6[tier as usize - 1].push(e);
            if tier == 1 {
                t9_tier1.push(run_eer(&b, "t9")?.0);
            }
        }
    }
    Ok(TierRuns { t6, t9_tier1 })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn difficulty_ordering(runs: &TierRuns, elapsed: Duration) -> Outcome {
    let m: Vec<f64> = runs.t6.iter().map(|v| mean(v)).collect();
    let detail = format!(
        "T6 mean EER over seeds {SEEDS:?}: tier1 {:.4} tier2 {:.4} tier3 {:.4} (per seed {:?}), {:.0}s",
        m[0],
        m[1],
        m[2],
        runs.t6,
        elapsed.as_secs_f64()
    );
    check!(m[0] <= m[1] && m[1] <= m[2], "ordering violated: {detail}");
    check!(m[0] < 0.05, "tier-1 EER not below 5%: {detail}");
    check!(elapsed < Duration::from_secs(600), "over 10 minutes: {detail}");
    Ok(detail)
}

fn baseline_discrimination(runs: &TierRuns) -> Outcome {
    let (t6, t9) = (mean(&runs.t6[0]), mean(&runs.t9_tier1));
    let detail = format!("tier-1 mean EER T6 {t6:.4} vs T9 {t9:.4} (T9 per seed {:?})", runs.t9_tier1);
    check!(t6 < t9, "{detail}");
    Ok(detail)
}

// ---------------------------------------------------------------- 6

fn one_pair() -> Benchmark {
    let sample = |id: u32| SampleRef {
        class_id: format!("c{id}"),
        sample_id: "0".into(),
        template_id: id,
        images: vec![format!("/d/c{id}/0.bmp").into()],
    };
    Benchmark {
        enrolls: vec![sample(0), sample(1)],
        pairs: vec![Pair::new(0, 1, PairKind::Imposter)],
        strategy: "general".into(),
        seed: 0,
    }
}

fn protocol(dir: &Path, name: &str, enroll: &str, matcher: &str) -> ExternalConfig {
    let sub = dir.join(name);
    fs::create_dir_all(&sub).unwrap();
    let e = script(&sub, "enroll", enroll);
    let m = script(&sub, "match", matcher);
    ExternalConfig::new(e, m, sub.join("work"))
}

fn protocol_conformance() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let status_of = |cfg: &ExternalConfig| -> Result<(PairStatus, RunResult), String> {
        let (r, _) = run_external(&one_pair(), cfg).map_err(|e| e.to_string())?;
        Ok((r.records[0].status, r))
    };

    let mut cfg = protocol(dir, "timeout", ENROLL_COPY, "sleep 3\necho 0.5");
    cfg.limits.match_timeout = Duration::from_millis(300);
    let (s, r) = status_of(&cfg)?;
    check!(s == PairStatus::Ftm && r.ftm_count == 1, "sleep past timeout gave {s:?}");

    let (s, r) = status_of(&protocol(dir, "enroll-exit", "exit 1", "echo 0.5"))?;
    check!(s == PairStatus::FteLeft && r.fte_count == 1, "enroll exit 1 gave {s:?}");

    let (s, r) = status_of(&protocol(dir, "match-exit", ENROLL_COPY, "echo 0.5\nexit 1"))?;
    check!(s == PairStatus::Ftm && r.ftm_count == 1, "match exit 1 gave {s:?}");

    let (s, _) = status_of(&protocol(dir, "range", ENROLL_COPY, "echo 1.5"))?;
    check!(s == PairStatus::ProtocolError, "stdout 1.5 gave {s:?}");

    let (s, r) = status_of(&protocol(dir, "ok", ENROLL_COPY, "echo 0.73"))?;
    check!(s == PairStatus::Ok && r.records[0].score == Some(0.73), "stdout 0.73 gave {s:?}");

    let marker = dir.join("size").join("ran");
    let mut cfg = protocol(dir, "size", &format!("touch '{}'\n{ENROLL_COPY}", marker.display()), "echo 0.5");
    cfg.limits.enroll_exe_size_limit = 10;
    let refused = matches!(run_external(&one_pair(), &cfg), Err(RunnerError::ExecutableTooLarge { .. }));
    check!(refused && !marker.exists(), "oversized enroll executable was not refused up front");

    Ok("timeout->ftm, enroll exit->fte, match exit->ftm, 1.5->protocol_error, oversize refused".into())
}

// ---------------------------------------------------------------- 7

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_veinrate");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |cwd: &Path, args: &[&str]| -> Result<(), String> {
        let o = Command::new(bin).current_dir(cwd).args(args).output().map_err(|e| e.to_string())?;
        check!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        Ok(())
    };
    let mut outputs = Vec::new();
    for rep in 0..3 {
        let d = tmp.path().join(format!("rep{rep}"));
        fs::create_dir_all(&d).map_err(|e| e.to_string())?;
        run(&d, &["gen-data", "--classes", "20", "--samples", "3", "--tier", "2", "--seed", "42", "--out", "ds"])?;
        run(&d, &["gen-bench", "--dataset", "ds", "--strategy", "allInnerOneInter", "--seed", "7", "--out", "b.bench"])?;
        for workers in ["1", "8"] {
            let out = format!("out{workers}");
            run(
                &d,
                &[
                    "run", "--benchmark", "b.bench", "--dataset", "ds", "--builtin", "t6", "--workers", workers,
                    "--no-timings", "--out", &out,
                ],
            )?;
            outputs.push(fs::read(d.join(&out).join("scores.csv")).map_err(|e| e.to_string())?);
        }
    }
    check!(outputs.iter().all(|o| o == &outputs[0]), "scores CSVs differ");
    let rows = outputs[0].iter().filter(|&&c| c == b'\n').count() - 1;
    Ok(format!("6 scores CSVs ({rows} rows) byte-identical across 3 repetitions x workers 1/8"))
}

// ---------------------------------------------------------------- 8

fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize) -> BinaryImage {
    let density = rng.random_range(0.02..0.3);
    let mut m = BinaryImage::empty(w, h).unwrap();
    for y in 0..h {
        for x in 0..w {
            if rng.random_bool(density) {
                m.set(x, y, true);
            }
        }
    }
    if m.count_foreground() == 0 {
        m.set(rng.random_range(0..w), rng.random_range(0..h), true);
    }
    m
}

fn random_template(rng: &mut ChaCha8Rng, name: &str) -> Template {
    match name {
        "t6" => Template::binary(TemplateFormat::T6Binary, random_mask(rng, 64, 32), vec![]),
        "t7" => Template::binary(TemplateFormat::T7Binary, random_mask(rng, 64, 32), vec![]),
        _ => {
            let base: u8 = rng.random();
            let data = (0..48 * 32).map(|_| base.wrapping_add(rng.random_range(0..60))).collect();
            Template::grey(GrayImage::new(48, 32, data).unwrap(), vec![])
        }
    }
}

/// Best (count, cost) pairing of `a` with distinct points of `b` within
/// radius 6 at one offset, by dynamic programming over subsets of `b`.
fn dp_assignment(a: &[(i64, i64)], b: &[(i64, i64)], ox: i64, oy: i64) -> (i64, i64) {
    let nb = b.len();
    let mut best: Vec<Option<(i64, i64)>> = vec![None; 1 << nb];
    best[0] = Some((0, 0));
    for &(ax, ay) in a {
        let mut next = best.clone();
        for mask in 0..1usize << nb {
            let Some((c, neg)) = best[mask] else { continue };
            for (j, &(bx, by)) in b.iter().enumerate() {
                let (dx, dy) = (bx - ax - ox, by - ay - oy);
                if mask >> j & 1 == 1 || dx * dx + dy * dy > 36 {
                    continue;
                }
                let cost = (((dx * dx + dy * dy) as f64).sqrt() * 100.0).round() as i64;
                let cand = (c + 1, neg - cost);
                let slot = &mut next[mask | 1 << j];
                if slot.is_none_or(|s| cand > s) {
                    *slot = Some(cand);
                }
            }
        }
        best = next;
    }
    let (c, neg) = best.into_iter().flatten().max().unwrap();
    (c, -neg)
}

fn t7_oracle(a: &[(i64, i64)], b: &[(i64, i64)]) -> f64 {
    let mut best: f64 = 0.0;
    for oy in (-8..=8).step_by(4) {
        for ox in (-8..=8).step_by(4) {
            let (flow, cost) = dp_assignment(a, b, ox, oy);
            if flow > 0 {
                let avg = cost as f64 / flow as f64;
                let s = flow as f64 / a.len().max(b.len()) as f64 * (1.0 - avg / 600.0);
                best = best.max(s.clamp(0.0, 1.0));
            }
        }
    }
    best
}

fn matcher_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let img = veinrate::dataset::render_dataset_image(&SynthSpec::new(1, 1, 1, 8), 0, 0);
    for name in Matcher::NAMES {
        let m = Matcher::from_name(name, &[]).map_err(|e| e.to_string())?;
        let t = m.enroll(&img).map_err(|e| format!("{name} enroll: {e}"))?;
        let s = m.compare(&t, &t).map_err(|e| e.to_string())?;
        check!(s == 1.0, "{name} self-match of an enrolled image is {s}");
        for i in 0..100 {
            let (a, b) = (random_template(&mut rng, name), random_template(&mut rng, name));
            check!(m.compare(&a, &a).map_err(|e| e.to_string())? == 1.0, "{name} random self-match {i}");
            let (ab, ba) = (m.compare(&a, &b).map_err(|e| e.to_string())?, m.compare(&b, &a).map_err(|e| e.to_string())?);
            check!(ab == ba, "{name} pair {i}: {ab} vs {ba}");
        }
    }

    let t7 = Matcher::from_name("t7", &[]).map_err(|e| e.to_string())?;
    let instances = 200;
    for i in 0..instances {
        let mut side = || {
            let n = rng.random_range(1..=12);
            let mut m = BinaryImage::empty(24, 16).unwrap();
            while m.count_foreground() < n {
                m.set(rng.random_range(0..24), rng.random_range(0..16), true);
            }
            m
        };
        let (ma, mb) = (side(), side());
        let pts = |m: &BinaryImage| -> Vec<(i64, i64)> {
            m.foreground().into_iter().map(|(x, y)| (x as i64, y as i64)).collect()
        };
        let want = t7_oracle(&pts(&ma), &pts(&mb));
        let a = Template::binary(TemplateFormat::T7Binary, ma, vec![]);
        let b = Template::binary(TemplateFormat::T7Binary, mb, vec![]);
        let got = t7.compare(&a, &b).map_err(|e| e.to_string())?;
        check!((got - want).abs() < 1e-12, "t7 instance {i}: {got} vs oracle {want}");
    }
    Ok(format!("self-match 1.0 and 100 symmetric pairs for t6/t7/t9; {instances} t7 instances equal the assignment oracle"))
}

// ---------------------------------------------------------------- 9

fn timing_accounting() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = protocol(tmp.path(), "sleep", ENROLL_COPY, "sleep 0.1\necho 0.5");
    cfg.workers = 2;
    let b = gen_all_inner_one_inter(&fake_index(&[2, 2, 2]), 1).map_err(|e| e.to_string())?;
    let (r, _) = run_external(&b, &cfg).map_err(|e| e.to_string())?;
    check!(r.ftm_count == 0 && r.fte_count == 0, "unexpected failures");
    let detail = format!(
        "Avg.E.T {:.1} ms, Avg.M.T {:.1} ms over {} matches, avg template {:.0} bytes",
        r.avg_enroll_time_ms,
        r.avg_match_time_ms,
        r.records.len(),
        r.avg_template_size
    );
    check!((100.0..=200.0).contains(&r.avg_match_time_ms), "{detail}");
    check!(r.avg_enroll_time_ms > 0.0 && r.avg_template_size > 0.0, "{detail}");
    Ok(detail)
}

// ----------------------------------------------------------------

fn report(n: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let pass = outcome.is_ok();
    let (tag, detail) = match outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {n} {name}: {tag} ({detail})");
    pass
}

fn main() {
    let mut all = true;
    all &= report(1, "pair-counts", pair_counts);
    all &= report(2, "metric-oracle", metric_oracle);
    all &= report(3, "revised-formula", revised_formula);
    let t0 = Instant::now();
    let runs = catch_unwind(tier_runs).unwrap_or_else(|_| Err("tier runs panicked".into()));
    let elapsed = t0.elapsed();
    all &= report(4, "difficulty-ordering", || difficulty_ordering(runs.as_ref().map_err(Clone::clone)?, elapsed));
    all &= report(5, "baseline-discrimination", || baseline_discrimination(runs.as_ref().map_err(Clone::clone)?));
    all &= report(6, "protocol-conformance", protocol_conformance);
    all &= report(7, "determinism", determinism);
    all &= report(8, "matcher-properties", matcher_properties);
    all &= report(9, "timing-accounting", timing_accounting);
    if !all {
        std::process::exit(1);
    }
}
