//! Planar hull comparison between the full data and a selection.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use subdata::metrics::contains;
use subdata::{hull_2d, Hull, Selection, SelectionSource};

use crate::error::CliError;
use crate::ingest::IngestSpec;
use crate::job::{digest_file, load, Artifacts, IngestReport, JobOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HullJob {
    pub ingest: IngestSpec,
    /// An `indices.txt` written by `select`.
    pub selection: PathBuf,
    /// Covariate pairs by name or 1-based covariate position.
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
    /// Every unordered covariate pair, after the explicit ones.
    #[serde(default)]
    pub all_pairs: bool,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Serialize)]
struct HullPair {
    x: String,
    y: String,
    full: Hull,
    subdata: Hull,
    area_ratio: f64,
    /// Every subdata hull vertex lies in the full-data hull.
    contained: bool,
}

fn covariate(name: &str, names: &[String]) -> Result<usize> {
    if let Some(i) = names.iter().position(|c| c == name) {
        return Ok(i);
    }
    match name.parse::<usize>() {
        Ok(pos) if (1..=names.len()).contains(&pos) => Ok(pos - 1),
        _ => Err(CliError::Usage(format!("`{name}` is not a covariate")).into()),
    }
}

fn read_selection(job: &HullJob, n: usize) -> Result<Selection> {
    let text = std::fs::read_to_string(&job.selection)
        .with_context(|| format!("reading {}", job.selection.display()))?;
    let indices = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!(
                    "selection line {}: `{l}` is not a row index",
                    i + 1
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Selection::new(indices, n, SelectionSource::Custom)?)
}

pub fn run(job: &HullJob) -> Result<JobOutput> {
    let (ingested, digest) = load(&job.ingest)?;
    let sel_digest = digest_file(&job.selection)?;
    let data = &ingested.data;
    let sel = read_selection(job, data.n())?;

    let mut pairs = Vec::new();
    for (a, b) in &job.pairs {
        let (i, j) = (
            covariate(a, &ingested.covariates)?,
            covariate(b, &ingested.covariates)?,
        );
        if i == j {
            return Err(CliError::Usage(format!("pair ({a}, {b}) repeats a covariate")).into());
        }
        pairs.push((i, j));
    }
    if job.all_pairs {
        for i in 0..data.p() {
            for j in i + 1..data.p() {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        return Err(CliError::Usage("no covariate pairs requested".into()).into());
    }

    let mut out = Vec::with_capacity(pairs.len());
    let mut artifacts = Artifacts::default();
    let mut table = String::new();
    for (n, &(i, j)) in pairs.iter().enumerate() {
        let all: Vec<(f64, f64)> = data.rows().map(|r| (r[i], r[j])).collect();
        let sub: Vec<(f64, f64)> = sel.indices().iter().map(|&r| all[r]).collect();
        let full = hull_2d(&all);
        let subdata = hull_2d(&sub);
        let scale = full
            .vertices
            .iter()
            .fold(1.0f64, |m, v| m.max(v.0.abs()).max(v.1.abs()));
        let contained = subdata
            .vertices
            .iter()
            .all(|&v| contains(&full.vertices, v, 1e-12 * scale * scale));
        let pair = HullPair {
            x: ingested.covariates[i].clone(),
            y: ingested.covariates[j].clone(),
            area_ratio: subdata.area / full.area,
            contained,
            full,
            subdata,
        };
        let _ = writeln!(
            table,
            "({}, {}): full area {:.6}, subdata area {:.6}, ratio {:.4}",
            pair.x, pair.y, pair.full.area, pair.subdata.area, pair.area_ratio
        );
        if job.svg {
            artifacts.text(&format!("hull_{}.svg", n + 1), svg(&pair, &sub));
        }
        out.push(pair);
    }
    artifacts.json("hulls.json", &out)?;
    let summary = IngestReport::from(&ingested);
    Ok(JobOutput {
        artifacts,
        timings: serde_json::Value::Null,
        seeds: Vec::new(),
        inputs: vec![digest, sel_digest],
        ingest: Some(summary),
        table,
        failures: None,
    })
}

fn svg(pair: &HullPair, points: &[(f64, f64)]) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 40.0;
    let vs = &pair.full.vertices;
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in vs.iter().chain(points) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let map = |(x, y): (f64, f64)| {
        (
            PAD + (x - x0) / span * (SIZE - 2.0 * PAD),
            SIZE - PAD - (y - y0) / span * (SIZE - 2.0 * PAD),
        )
    };
    let poly = |v: &[(f64, f64)]| {
        v.iter()
            .map(|&p| {
                let (a, b) = map(p);
                format!("{a:.3},{b:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="#e6e6e6" stroke="#444" stroke-width="1"/>"##,
        poly(vs)
    );
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##,
        poly(&pair.subdata.vertices)
    );
    for &p in points {
        let (a, b) = map(p);
        let _ = writeln!(
            s,
            r##"<circle cx="{a:.3}" cy="{b:.3}" r="2" fill="#c0392b"/>"##
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="12">{} vs {}, area ratio {:.4}</text>"#,
        PAD / 2.0,
        escape(&pair.y),
        escape(&pair.x),
        pair.area_ratio
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
