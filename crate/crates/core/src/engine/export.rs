use serde::{Deserialize, Serialize};

use super::payload::*;
use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown export format `{other}`")),
        }
    }
}

impl ExportFormat {
    pub fn content_type(&self) -> &'static str {
        match self {
            ExportFormat::Csv => "text/csv; charset=utf-8",
            ExportFormat::Json => "application/json",
        }
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, ToString::to_string)
}

/// Render a payload as a downloadable report. The output depends only on
/// the payload, so equal analyses export to equal bytes.
pub fn export_payload(payload: &AnalysisPayload, format: ExportFormat) -> Result<Vec<u8>, EngineError> {
    match format {
        ExportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(payload)?;
            out.push(b'\n');
            Ok(out)
        }
        ExportFormat::Csv => export_csv(payload),
    }
}

fn export_csv(payload: &AnalysisPayload) -> Result<Vec<u8>, EngineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match payload {
        AnalysisPayload::Sentiment(p) => {
            w.write_record(["post_id", "label", "score", "degree"])?;
            for l in &p.labels {
                w.write_record([&l.post_id, &opt(&l.label), &opt(&l.score), &opt(&l.degree)])?;
            }
        }
        AnalysisPayload::Propaganda(p) => {
            w.write_record(["post_id", "label", "score", "degree", "technique", "spans"])?;
            for l in &p.labels {
                let spans = l
                    .spans
                    .iter()
                    .map(|s| format!("{}-{}", s.start, s.end))
                    .collect::<Vec<_>>()
                    .join(";");
                w.write_record([
                    &l.post_id,
                    &opt(&l.label),
                    &opt(&l.score),
                    &opt(&l.degree),
                    &opt(&l.technique),
                    &spans,
                ])?;
            }
        }
        AnalysisPayload::PostAnalysis(p) => {
            w.write_record(["post_id", "kind", "label", "degree", "locations"])?;
            for r in &p.records {
                w.write_record([
                    r.post_id.as_str(),
                    r.kind.as_str(),
                    &r.label,
                    &r.degree.to_string(),
                    &r.locations.join(";"),
                ])?;
            }
        }
        AnalysisPayload::Subtopics(p) => {
            w.write_record(["cluster", "doc_count", "rank", "term", "weight"])?;
            for c in &p.clusters {
                for (rank, t) in c.top_terms.iter().enumerate() {
                    w.write_record([
                        c.cluster.to_string(),
                        c.doc_count.to_string(),
                        (rank + 1).to_string(),
                        t.term.clone(),
                        t.weight.to_string(),
                    ])?;
                }
            }
        }
        AnalysisPayload::Wordcloud(p) => {
            w.write_record(["term", "count"])?;
            for t in &p.terms {
                w.write_record([t.term.clone(), t.count.to_string()])?;
            }
        }
        AnalysisPayload::Trends(p) => {
            w.write_record(["bucket_start", "post_count", "engagement", "spike", "z_score", "top_terms"])?;
            for b in &p.series.buckets {
                let spike = p.spikes.iter().find(|s| s.bucket_start == b.start);
                w.write_record([
                    b.start.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                    b.post_count.to_string(),
                    b.engagement.to_string(),
                    spike.is_some().to_string(),
                    spike.map_or_else(String::new, |s| s.z_score.to_string()),
                    spike.map_or_else(String::new, |s| s.top_terms.join(";")),
                ])?;
            }
        }
        AnalysisPayload::Spatial(p) => {
            w.write_record(["region", "post_count", "lat", "lon"])?;
            for (region, c) in &p.regions {
                w.write_record([
                    region.clone(),
                    c.post_count.to_string(),
                    c.lat.to_string(),
                    c.lon.to_string(),
                ])?;
            }
        }
        AnalysisPayload::Network(p) => {
            w.write_record(["node", "in_degree", "out_degree", "pagerank"])?;
            for n in &p.nodes {
                w.write_record([
                    n.id.clone(),
                    n.in_degree.to_string(),
                    n.out_degree.to_string(),
                    n.pagerank.to_string(),
                ])?;
            }
        }
    }
    w.into_inner().map_err(|e| EngineError::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn sentiment_csv_golden() {
        let payload = AnalysisPayload::Sentiment(SentimentPayload {
            adapter_id: "baseline_sentiment".into(),
            lexicon_version: Some(1),
            threshold: 0.2,
            label_counts: BTreeMap::new(),
            labels: vec![
                PostLabel {
                    post_id: "p1".into(),
                    label: Some("negative".into()),
                    score: Some(-0.5),
                    degree: Some(0.5),
                    error: None,
                },
                PostLabel {
                    post_id: "p2".into(),
                    label: Some("positive".into()),
                    score: Some(1.0),
                    degree: Some(1.0),
                    error: None,
                },
                PostLabel {
                    post_id: "p3".into(),
                    label: None,
                    score: None,
                    degree: None,
                    error: Some("timeout".into()),
                },
            ],
        });
        let csv = String::from_utf8(export_payload(&payload, ExportFormat::Csv).unwrap()).unwrap();
        assert_eq!(
            csv,
            "post_id,label,score,degree\np1,negative,-0.5,0.5\np2,positive,1,1\np3,,,\n"
        );
    }

    #[test]
    fn json_round_trips() {
        let payload = AnalysisPayload::Wordcloud(WordCloudPayload {
            terms: vec![TermCount {
                term: "doha".into(),
                count: 3,
            }],
        });
        let bytes = export_payload(&payload, ExportFormat::Json).unwrap();
        let back: AnalysisPayload = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, payload);
        assert!(String::from_utf8(bytes).unwrap().contains("\"kind\": \"wordcloud\""));
    }
}
