use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{PostAnalysis, Span};
use crate::network::{Edge, GraphNode};
use crate::store::AnalysisKind;
use crate::topics::Subtopic;
use crate::trends::{Granularity, LocationMention, RegionCount, Spike, TimeSeries};

/// Result body of one analysis, tagged with its kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum AnalysisPayload {
    Subtopics(SubtopicsPayload),
    Wordcloud(WordCloudPayload),
    Sentiment(SentimentPayload),
    Propaganda(PropagandaPayload),
    Trends(TrendsPayload),
    Spatial(SpatialPayload),
    Network(NetworkPayload),
    PostAnalysis(PostAnalysisPayload),
}

impl AnalysisPayload {
    pub fn kind(&self) -> AnalysisKind {
        match self {
            AnalysisPayload::Subtopics(_) => AnalysisKind::Subtopics,
            AnalysisPayload::Wordcloud(_) => AnalysisKind::Wordcloud,
            AnalysisPayload::Sentiment(_) => AnalysisKind::Sentiment,
            AnalysisPayload::Propaganda(_) => AnalysisKind::Propaganda,
            AnalysisPayload::Trends(_) => AnalysisKind::Trends,
            AnalysisPayload::Spatial(_) => AnalysisKind::Spatial,
            AnalysisPayload::Network(_) => AnalysisKind::Network,
            AnalysisPayload::PostAnalysis(_) => AnalysisKind::PostAnalysis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub post_id: String,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtopicsPayload {
    pub seed: u64,
    pub k: usize,
    pub n_docs: usize,
    pub vocabulary_size: usize,
    pub inertia: f64,
    pub clusters: Vec<Subtopic>,
    pub assignments: Vec<ClusterAssignment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermCount {
    pub term: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCloudPayload {
    /// Most frequent first.
    pub terms: Vec<TermCount>,
}

/// A post's label from a classifier adapter; `error` is set instead of the
/// label fields when the adapter could not label the post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostLabel {
    pub post_id: String,
    pub label: Option<String>,
    pub score: Option<f64>,
    pub degree: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentPayload {
    pub adapter_id: String,
    /// Lexicon version used by the baseline; absent for external adapters.
    pub lexicon_version: Option<u32>,
    pub threshold: f64,
    pub label_counts: BTreeMap<String, usize>,
    pub labels: Vec<PostLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagandaRow {
    pub post_id: String,
    pub label: Option<String>,
    pub score: Option<f64>,
    pub degree: Option<f64>,
    pub technique: Option<String>,
    pub spans: Vec<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagandaPayload {
    pub adapter_id: String,
    pub threshold: f64,
    pub flagged: usize,
    pub labels: Vec<PropagandaRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendsPayload {
    pub series: TimeSeries,
    pub window: usize,
    pub z_threshold: f64,
    pub spikes: Vec<Spike>,
    /// Error code when spike detection could not run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spikes_skipped: Option<String>,
}

impl TrendsPayload {
    pub fn empty() -> Self {
        TrendsPayload {
            series: TimeSeries {
                granularity: Granularity::Day,
                buckets: Vec::new(),
            },
            window: 7,
            z_threshold: 2.0,
            spikes: Vec::new(),
            spikes_skipped: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostLocations {
    pub post_id: String,
    pub mentions: Vec<LocationMention>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialPayload {
    pub regions: BTreeMap<String, RegionCount>,
    /// Posts with at least one mention.
    pub posts: Vec<PostLocations>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkPayload {
    pub damping: f64,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<Edge>,
    /// Node ids, most influential first.
    pub top_influencers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostAnalysisPayload {
    /// Two records per post (sentiment, propaganda), strongest first.
    pub records: Vec<PostAnalysis>,
}
