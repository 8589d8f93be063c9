//! Tabular output of evaluation results.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{InstanceFilter, Scores};
use crate::error::{Error, Result};
use crate::induction::PipelineConfig;

/// One evaluated (system, configuration, filter) row. Configuration columns
/// hold `-` for systems without one, such as baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub system: String,
    pub composition: String,
    pub window: String,
    pub k: String,
    pub similarity: String,
    pub filter: String,
    pub jaccard: f64,
    pub kendall: f64,
    pub wndcg: f64,
    pub fnmi: f64,
    pub fbc: f64,
}

impl MetricReport {
    pub fn new(system: impl Into<String>, config: Option<&PipelineConfig>, filter: InstanceFilter, s: &Scores) -> Self {
        let dash = || "-".to_string();
        Self {
            system: system.into(),
            composition: config.map_or_else(dash, |c| c.composition.to_string()),
            window: config.map_or_else(dash, |c| c.window.to_string()),
            k: config.map_or_else(dash, |c| c.connectivity.to_string()),
            similarity: config.map_or_else(dash, |c| c.similarity.to_string()),
            filter: filter.to_string(),
            jaccard: s.jaccard.f1,
            kendall: s.kendall.f1,
            wndcg: s.wndcg.f1,
            fnmi: s.fnmi,
            fbc: s.fbc.f1,
        }
    }

    /// The five metric values in column order.
    pub fn values(&self) -> [f64; 5] {
        [self.jaccard, self.kendall, self.wndcg, self.fnmi, self.fbc]
    }

    pub const METRICS: [&'static str; 5] = ["jaccard", "kendall", "wndcg", "fnmi", "fbc"];
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv output: {e}"))
}

/// Serializes any row type as CSV with a header line.
pub fn write_csv<R: Serialize, W: Write>(rows: &[R], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::Config(format!("csv output: {e}")))
}

pub fn write_json<R: Serialize, W: Write>(rows: &[R], mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, rows).map_err(|e| Error::Config(format!("json output: {e}")))?;
    writeln!(w).map_err(|e| Error::Config(format!("json output: {e}")))
}

pub fn read_csv(data: &[u8]) -> Result<Vec<MetricReport>> {
    csv::Reader::from_reader(data).deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}

/// Best row per (filter, metric); ties keep the earliest row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestRow {
    pub filter: String,
    pub metric: String,
    pub value: f64,
    pub system: String,
    pub composition: String,
    pub window: String,
    pub k: String,
    pub similarity: String,
}

pub fn best_per_metric(rows: &[MetricReport]) -> Vec<BestRow> {
    let mut filters: Vec<&str> = Vec::new();
    for r in rows {
        if !filters.contains(&r.filter.as_str()) {
            filters.push(&r.filter);
        }
    }
    let mut out = Vec::new();
    for f in filters {
        for (m, name) in MetricReport::METRICS.iter().enumerate() {
            let mut best: Option<&MetricReport> = None;
            for r in rows.iter().filter(|r| r.filter == f) {
                if best.is_none_or(|b| r.values()[m] > b.values()[m]) {
                    best = Some(r);
                }
            }
            if let Some(b) = best {
                out.push(BestRow {
                    filter: f.to_owned(),
                    metric: (*name).to_owned(),
                    value: b.values()[m],
                    system: b.system.clone(),
                    composition: b.composition.clone(),
                    window: b.window.clone(),
                    k: b.k.clone(),
                    similarity: b.similarity.clone(),
                });
            }
        }
    }
    out
}

/// Row of the per-configuration supplementary table. `full` windows and
/// fully-connected graphs print as `-`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupplementaryRow {
    #[serde(rename = "System")]
    pub system: String,
    #[serde(rename = "ω")]
    pub window: String,
    #[serde(rename = "k")]
    pub k: String,
    #[serde(rename = "Jaccard")]
    pub jaccard: String,
    #[serde(rename = "K")]
    pub kendall: String,
    #[serde(rename = "WNDCG")]
    pub wndcg: String,
    #[serde(rename = "FNMI")]
    pub fnmi: String,
    #[serde(rename = "FBC")]
    pub fbc: String,
}

impl From<&MetricReport> for SupplementaryRow {
    fn from(r: &MetricReport) -> Self {
        let dash = |s: &str| if s == "full" { "-".to_string() } else { s.to_string() };
        let v = |x: f64| format!("{x:.3}");
        Self {
            system: r.system.clone(),
            window: dash(&r.window),
            k: dash(&r.k),
            jaccard: v(r.jaccard),
            kendall: v(r.kendall),
            wndcg: v(r.wndcg),
            fnmi: v(r.fnmi),
            fbc: v(r.fbc),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context_embed::Composition;
    use crate::corpus::WindowMode;
    use crate::eval::{BCubed, F1Score};
    use crate::graph::{Connectivity, Similarity};

    fn f1(x: f64) -> F1Score {
        F1Score { precision: x, recall: x, f1: x, sum: x, labeled: 1, total: 1 }
    }

    fn scores(x: f64) -> Scores {
        Scores {
            jaccard: f1(x),
            kendall: f1(x / 2.0),
            wndcg: f1(x / 4.0),
            fnmi: 0.5,
            fbc: BCubed { precision: 1.0, recall: 1.0, f1: 1.0 - x },
            instances: 1,
        }
    }

    fn row(name: &str, x: f64, cfg: Option<&PipelineConfig>) -> MetricReport {
        MetricReport::new(name, cfg, InstanceFilter::All, &scores(x))
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let cfg = PipelineConfig {
            composition: Composition::Add,
            window: WindowMode::Tokens(10),
            connectivity: Connectivity::Full,
            similarity: Similarity::Cosine,
        };
        let rows = vec![row("CN-ADD", 0.25, Some(&cfg)), row("One sense", 0.5, None)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "system,composition,window,k,similarity,filter,jaccard,kendall,wndcg,fnmi,fbc"
        );
        assert_eq!(lines.next().unwrap(), "CN-ADD,ADD,10,full,cosine,all,0.25,0.125,0.0625,0.5,0.75");
        assert_eq!(lines.next().unwrap(), "One sense,-,-,-,-,all,0.5,0.25,0.125,0.5,0.5");
        assert_eq!(read_csv(&buf).unwrap(), rows);
        let mut json = Vec::new();
        write_json(&rows, &mut json).unwrap();
        let back: Vec<MetricReport> = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn best_rows() {
        let rows = vec![row("a", 0.2, None), row("b", 0.6, None), row("c", 0.6, None)];
        let best = best_per_metric(&rows);
        assert_eq!(best.len(), 5);
        assert_eq!((best[0].metric.as_str(), best[0].system.as_str()), ("jaccard", "b"));
        assert_eq!(best[4].system, "a");
        assert_eq!(best[3].system, "a");
    }

    #[test]
    fn supplementary_header() {
        let r = row("CN-ADD", 0.25, None);
        let mut buf = Vec::new();
        write_csv(&[SupplementaryRow::from(&r)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "System,ω,k,Jaccard,K,WNDCG,FNMI,FBC");
        assert_eq!(text.lines().nth(1).unwrap(), "CN-ADD,-,-,0.250,0.125,0.062,0.500,0.750");
    }
}
