//! Writing results with embedded settings, and reading them back.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use soc_centrality::score::read_score_csv;
use soc_centrality::{Graph, ScoreVector};

/// Command name, tool version and resolved settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub command: String,
    pub version: String,
    pub config: Value,
}

impl Provenance {
    pub fn new(command: &str, config: &impl Serialize) -> anyhow::Result<Self> {
        Ok(Provenance {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: serde_json::to_value(config)?,
        })
    }

    pub fn comment_line(&self) -> anyhow::Result<String> {
        Ok(format!("# {}", serde_json::to_string(self)?))
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn write_scores_csv<W: Write>(mut out: W, prov: &Provenance, graph: &Graph, scores: &ScoreVector) -> anyhow::Result<()> {
    writeln!(out, "{}", prov.comment_line()?)?;
    scores.write_csv(graph, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn save_scores_csv(path: &Path, prov: &Provenance, graph: &Graph, scores: &ScoreVector) -> anyhow::Result<()> {
    write_scores_csv(create(path)?, prov, graph, scores)
}

pub fn save_json(path: &Path, prov: &Provenance, body: Value) -> anyhow::Result<()> {
    let mut doc = serde_json::Map::new();
    doc.insert("provenance".into(), serde_json::to_value(prov)?);
    if let Value::Object(m) = body {
        doc.extend(m);
    } else {
        doc.insert("result".into(), body);
    }
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &Value::Object(doc))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn save_text(path: &Path, prov: &Provenance, body: &str) -> anyhow::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", prov.comment_line()?)?;
    w.write_all(body.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Score rows plus the embedded provenance, when the file has one.
pub fn load_scores(path: &Path) -> anyhow::Result<(Vec<(String, f64)>, Option<Value>)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let prov = first
        .strip_prefix("# ")
        .and_then(|s| serde_json::from_str::<Value>(s.trim()).ok());
    let rest = read_score_csv(reader).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = read_score_csv(first.as_bytes()).with_context(|| format!("reading {}", path.display()))?;
    if !rows.is_empty() {
        rows.extend(rest);
    } else {
        rows = rest;
    }
    Ok((rows, prov))
}

/// Non-empty, non-comment lines, trimmed.
pub fn read_lines(path: &Path) -> anyhow::Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.push(t.to_owned());
        }
    }
    Ok(out)
}
