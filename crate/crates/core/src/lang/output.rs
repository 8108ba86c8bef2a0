//! Query results and their JSON / CSV renderings.

use std::fmt::Write;

use serde::Serialize;

use crate::library::PieceKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub bits: u32,
    pub pieces: u32,
    pub piece_kind: PieceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorEntry {
    pub value: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub flips: usize,
    pub nodes_formula: usize,
    pub nodes_evidence: usize,
    pub evidence_wmc: f64,
    pub millis: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutput {
    pub query: String,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior: Option<Vec<PosteriorEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expectation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<Stats>,
}

impl QueryOutput {
    pub fn without_stats(mut self) -> Self {
        self.stats = None;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("query output is always serializable")
    }

    /// `value,prob` rows for a posterior; a one-row table otherwise.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(post) = &self.posterior {
            out.push_str("value,prob\n");
            for e in post {
                let _ = writeln!(out, "{},{}", e.value, e.prob);
            }
        } else if let Some(e) = self.expectation {
            let _ = writeln!(out, "expectation\n{e}");
        } else if let Some(v) = self.variance {
            let _ = writeln!(out, "variance\n{v}");
        }
        out
    }
}
