//! Per-node score vectors and their CSV / JSON serializations.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreMeta {
    pub measure: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub omega: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// One real score per node, indexed by dense node id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub values: Vec<f64>,
    pub meta: ScoreMeta,
}

impl ScoreVector {
    pub fn new(measure: impl Into<String>, values: Vec<f64>) -> Self {
        ScoreVector {
            values,
            meta: ScoreMeta {
                measure: measure.into(),
                ..ScoreMeta::default()
            },
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.params.insert(key.to_owned(), value.into());
        self
    }

    pub fn with_omega(mut self, omega: impl Into<String>) -> Self {
        self.meta.omega = omega.into();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.meta.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes `node_label,score` rows in node-id order.
    pub fn write_csv<W: Write>(&self, graph: &Graph, mut out: W) -> Result<()> {
        if graph.node_count() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: graph.node_count(),
                got: self.values.len(),
            });
        }
        writeln!(out, "node_label,score")?;
        for (label, v) in graph.labels().iter().zip(&self.values) {
            writeln!(out, "{label},{v}")?;
        }
        Ok(())
    }

    /// JSON document with the metadata block and a label-keyed score list.
    pub fn to_json(&self, graph: &Graph) -> Value {
        let scores: Vec<Value> = graph
            .labels()
            .iter()
            .zip(&self.values)
            .map(|(l, v)| serde_json::json!({ "node": l, "score": v }))
            .collect();
        serde_json::json!({ "meta": self.meta, "scores": scores })
    }
}

/// Reads a `node_label,score` CSV (header optional, `#` lines ignored) preserving file order.
pub fn read_score_csv<R: BufRead>(reader: R) -> Result<Vec<(String, f64)>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, value) = line.rsplit_once(',').ok_or_else(|| Error::Parse {
            path: "<scores>".into(),
            line: i + 1,
            message: format!("expected label,score: {line:?}"),
        })?;
        match value.trim().parse::<f64>() {
            Ok(v) => rows.push((label.trim().to_owned(), v)),
            Err(_) if rows.is_empty() && !header_seen => header_seen = true,
            Err(_) => {
                return Err(Error::Parse {
                    path: "<scores>".into(),
                    line: i + 1,
                    message: format!("bad score {value:?}"),
                })
            }
        }
    }
    Ok(rows)
}
