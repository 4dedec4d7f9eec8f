//! On-disk formats: points, fragments, clustering labels, traces, and flat
//! key-value records.
//!
//! Points are delimited text, one record per line:
//!
//! ```text
//! # points dims=2 gold=true
//! 0,-1.25,0.5,3
//! 1,0.75,-2.25,0
//! ```
//!
//! fields: original id, one value per dimension, then the gold label when
//! the header declares `gold=true`. Lines starting with `#` are metadata or
//! comments. Fragments are JSON lines:
//!
//! ```text
//! {"id":0,"attributes":{"name":"ann arbor"},"gold_entity":"Q485172"}
//! ```
//!
//! Clustering output maps original ids to cluster labels (`id,label` lines),
//! traces are one `key=value ...` record per step, and summaries are flat
//! `key=value` lines.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use dpc_core::data::{FragmentRecord, PointRecord};
use dpc_core::metrics::RunTrace;

pub fn write_points(path: &Path, points: &[PointRecord]) -> Result<()> {
    let dims = points.first().map_or(0, |p| p.coords.len());
    let gold = points.first().is_some_and(|p| p.gold_label.is_some());
    let mut out = String::new();
    out.push_str(&format!("# points dims={dims} gold={gold}\n"));
    for p in points {
        out.push_str(&p.original_id.to_string());
        for c in &p.coords {
            out.push(',');
            out.push_str(&format!("{c}"));
        }
        if gold {
            out.push(',');
            out.push_str(
                &p.gold_label
                    .ok_or_else(|| anyhow!("point {} is missing a gold label", p.original_id))?
                    .to_string(),
            );
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_points(path: &Path) -> Result<Vec<PointRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut gold = None;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if gold.is_none() && rest.trim_start().starts_with("points") {
                gold = Some(rest.contains("gold=true"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let has_gold = gold.ok_or_else(|| {
            anyhow!(
                "{}:{}: missing '# points ...' header",
                path.display(),
                lineno + 1
            )
        })?;
        let min_fields = if has_gold { 3 } else { 2 };
        if fields.len() < min_fields {
            bail!(
                "{}:{}: expected at least {min_fields} fields",
                path.display(),
                lineno + 1
            );
        }
        let parse_err = |what: &str| anyhow!("{}:{}: invalid {what}", path.display(), lineno + 1);
        let original_id: u64 = fields[0].parse().map_err(|_| parse_err("id"))?;
        let coord_end = if has_gold {
            fields.len() - 1
        } else {
            fields.len()
        };
        let coords: Vec<f64> = fields[1..coord_end]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| parse_err("coordinate")))
            .collect::<Result<_>>()?;
        let gold_label = if has_gold {
            Some(
                fields[fields.len() - 1]
                    .parse::<u32>()
                    .map_err(|_| parse_err("gold label"))?,
            )
        } else {
            None
        };
        points.push(PointRecord {
            original_id,
            coords,
            gold_label,
        });
    }
    if points.is_empty() {
        bail!("{}: no records", path.display());
    }
    Ok(points)
}

#[derive(Serialize, Deserialize)]
struct FragmentLine {
    id: u64,
    attributes: std::collections::BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gold_entity: Option<String>,
}

pub fn write_fragments(path: &Path, fragments: &[FragmentRecord]) -> Result<()> {
    let mut out = String::new();
    for f in fragments {
        let line = FragmentLine {
            id: f.original_id,
            attributes: f.attributes.clone().into_iter().collect(),
            gold_entity: f.gold_entity.clone(),
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_fragments(path: &Path) -> Result<Vec<FragmentRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut fragments = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: FragmentLine = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: invalid fragment", path.display(), lineno + 1))?;
        fragments.push(FragmentRecord {
            original_id: parsed.id,
            attributes: parsed.attributes.into_iter().collect(),
            gold_entity: parsed.gold_entity,
        });
    }
    if fragments.is_empty() {
        bail!("{}: no records", path.display());
    }
    Ok(fragments)
}

/// `original_id,label` lines.
pub fn write_clusters(path: &Path, labels: &[(u64, usize)]) -> Result<()> {
    let mut out = String::from("# clustering\n");
    for (id, label) in labels {
        out.push_str(&format!("{id},{label}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_clusters(path: &Path) -> Result<Vec<(u64, usize)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, label) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("{}:{}: expected id,label", path.display(), lineno + 1))?;
        labels.push((
            id.parse()
                .map_err(|_| anyhow!("{}:{}: invalid id", path.display(), lineno + 1))?,
            label
                .parse()
                .map_err(|_| anyhow!("{}:{}: invalid label", path.display(), lineno + 1))?,
        ));
    }
    Ok(labels)
}

/// One `key=value ...` record per step.
pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut out = String::new();
    for r in &trace.steps {
        out.push_str(&format!(
            "step={} lp={:.6} subproblems={} log_eff={:.6} evals={} secs={:.6}",
            r.step,
            r.top_log_posterior,
            r.subproblem_count,
            r.log_effective_particles,
            r.cumulative_main_evals,
            r.wall_secs
        ));
        if let Some(f1) = r.f1_vs_gold {
            out.push_str(&format!(" f1={f1:.6}"));
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Flat `key=value` lines, in the given order.
pub fn write_kv(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(&format!("{k}={v}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Prints a flat key-value record to stdout.
pub fn print_kv(pairs: &[(String, String)]) {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for (k, v) in pairs {
        let _ = writeln!(lock, "{k}={v}");
    }
}
