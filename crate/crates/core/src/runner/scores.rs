//! Scores CSV: one row per benchmark pair, plus an optional trailing
//! comment line carrying the run aggregates.
//!
//! ```text
//! pair_index,kind,status,score,match_time_ms
//! 0,G,ok,0.734,12.5
//! 1,I,fte_left,,
//! # avg_enroll_time_ms=31.2 avg_match_time_ms=12.5 avg_template_size=3088
//! ```

use std::fs;
use std::path::Path;

use super::{PairStatus, RunResult, RunnerError, ScoreRecord};
use crate::benchmark::PairKind;

pub const SCORES_HEADER: &str = "pair_index,kind,status,score,match_time_ms";
const TRAILER_PREFIX: &str = "# ";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn format_scores(r: &RunResult) -> String {
    let mut out = String::with_capacity(32 * (r.records.len() + 2));
    out.push_str(SCORES_HEADER);
    out.push('\n');
    for rec in &r.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            rec.pair_index,
            rec.kind.code(),
            rec.status.as_str(),
            opt(rec.score),
            opt(rec.match_time_ms)
        ));
    }
    if r.avg_enroll_time_ms != 0.0 || r.avg_match_time_ms != 0.0 || r.avg_template_size != 0.0 {
        out.push_str(&format!(
            "{TRAILER_PREFIX}avg_enroll_time_ms={} avg_match_time_ms={} avg_template_size={}\n",
            r.avg_enroll_time_ms, r.avg_match_time_ms, r.avg_template_size
        ));
    }
    out
}

pub fn parse_scores(text: &str) -> Result<RunResult, RunnerError> {
    let err = |row: usize, message: String| RunnerError::ScoresFormat { row, message };

    // split off the trailer before handing rows to the csv reader
    let mut body = text;
    let mut trailer = None;
    if let Some(pos) = text.trim_end_matches('\n').rfind('\n') {
        let last = &text[pos + 1..];
        if last.starts_with(TRAILER_PREFIX) {
            body = &text[..pos + 1];
            trailer = Some(last.trim_end());
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| err(1, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if headers != SCORES_HEADER {
        return Err(err(1, format!("expected header `{SCORES_HEADER}`")));
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| err(line, e.to_string()))?;
        if row.len() != 5 {
            return Err(err(line, format!("expected 5 fields, found {}", row.len())));
        }
        let pair_index = row[0]
            .parse::<usize>()
            .map_err(|_| err(line, format!("bad pair_index `{}`", &row[0])))?;
        let kind = PairKind::from_code(&row[1])
            .ok_or_else(|| err(line, format!("kind must be G or I, got `{}`", &row[1])))?;
        let status = PairStatus::parse(&row[2])
            .ok_or_else(|| err(line, format!("unknown status `{}`", &row[2])))?;
        let parse_f = |field: &str, name: &str| -> Result<Option<f64>, RunnerError> {
            if field.is_empty() {
                return Ok(None);
            }
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(err(line, format!("bad {name} `{field}`"))),
            }
        };
        let score = parse_f(&row[3], "score")?;
        let match_time_ms = parse_f(&row[4], "match_time_ms")?;
        match (status, score) {
            (PairStatus::Ok, Some(s)) if (0.0..=1.0).contains(&s) => {}
            (PairStatus::Ok, Some(s)) => {
                return Err(err(line, format!("score {s} outside [0, 1]")))
            }
            (PairStatus::Ok, None) => return Err(err(line, "ok row without a score".into())),
            (_, Some(_)) => return Err(err(line, "failed row must not carry a score".into())),
            (_, None) => {}
        }
        if pair_index != records.len() {
            return Err(err(
                line,
                format!("expected pair_index {}, found {pair_index}", records.len()),
            ));
        }
        records.push(ScoreRecord {
            pair_index,
            kind,
            status,
            score,
            match_time_ms,
        });
    }

    let (mut e, mut m, mut t) = (0.0, 0.0, 0.0);
    if let Some(line) = trailer {
        let trailer_row = records.len() + 2;
        for field in line[TRAILER_PREFIX.len()..].split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| err(trailer_row, format!("bad trailer field `{field}`")))?;
            let v: f64 = value
                .parse()
                .map_err(|_| err(trailer_row, format!("bad trailer value `{value}`")))?;
            match key {
                "avg_enroll_time_ms" => e = v,
                "avg_match_time_ms" => m = v,
                "avg_template_size" => t = v,
                _ => return Err(err(trailer_row, format!("unknown trailer key `{key}`"))),
            }
        }
    }
    Ok(RunResult::new(records, e, m, t))
}

pub fn write_scores(r: &RunResult, path: &Path) -> Result<(), RunnerError> {
    fs::write(path, format_scores(r)).map_err(|source| RunnerError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_scores(path: &Path) -> Result<RunResult, RunnerError> {
    let text = fs::read_to_string(path).map_err(|source| RunnerError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scores(&text)
}
