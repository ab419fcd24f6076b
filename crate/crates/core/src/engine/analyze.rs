use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::payload::*;
use super::EngineError;
use crate::classify::{
    invoke_adapter, post_analysis, rank_by_degree, AdapterRegistry, Baselines, ItemLabel,
    PostAnalysis, PropagandaLabel, Sentiment, SentimentLabel,
};
use crate::ingest::Post;
use crate::network::{build_graph, centrality, export_graph, top_influencers, PageRankParams};
use crate::store::AnalysisKind;
use crate::topics::{run_subtopics, word_cloud, SubtopicParams};
use crate::trends::{
    aggregate_regions, bucket_timeline, detect_spikes, extract_locations, Gazetteer, Granularity,
    OTHER_REGION,
};

/// Tunables shared by every analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSettings {
    pub subtopics: SubtopicParams,
    pub wordcloud_terms: usize,
    pub granularity: Granularity,
    pub spike_window: usize,
    pub z_threshold: f64,
    pub pagerank: PageRankParams,
    pub top_influencers: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            subtopics: SubtopicParams::default(),
            wordcloud_terms: 100,
            granularity: Granularity::Day,
            spike_window: crate::trends::DEFAULT_WINDOW,
            z_threshold: crate::trends::DEFAULT_Z_THRESHOLD,
            pagerank: PageRankParams::default(),
            top_influencers: 10,
        }
    }
}

/// Everything an analysis needs besides the posts.
pub struct AnalysisContext<'a> {
    pub settings: &'a AnalysisSettings,
    pub adapters: &'a AdapterRegistry,
    pub baselines: &'a Baselines,
    pub gazetteer: &'a Gazetteer,
}

/// Run one analysis kind over a dataset's posts.
pub fn analyze(
    posts: &[Post],
    kind: AnalysisKind,
    seed: u64,
    ctx: &AnalysisContext<'_>,
) -> Result<AnalysisPayload, EngineError> {
    Ok(match kind {
        AnalysisKind::Subtopics => AnalysisPayload::Subtopics(subtopics(posts, seed, ctx)?),
        AnalysisKind::Wordcloud => AnalysisPayload::Wordcloud(wordcloud(posts, ctx)),
        AnalysisKind::Sentiment => AnalysisPayload::Sentiment(sentiment(posts, ctx)?),
        AnalysisKind::Propaganda => AnalysisPayload::Propaganda(propaganda(posts, ctx)?),
        AnalysisKind::Trends => AnalysisPayload::Trends(trends(posts, ctx)),
        AnalysisKind::Spatial => AnalysisPayload::Spatial(spatial(posts, ctx)),
        AnalysisKind::Network => AnalysisPayload::Network(network(posts, ctx)?),
        AnalysisKind::PostAnalysis => AnalysisPayload::PostAnalysis(post_records(posts, ctx)?),
    })
}

fn subtopics(posts: &[Post], seed: u64, ctx: &AnalysisContext<'_>) -> Result<SubtopicsPayload, EngineError> {
    let corpus: Vec<&[String]> = posts.iter().map(|p| p.tokens.as_slice()).collect();
    let params = SubtopicParams {
        seed,
        ..ctx.settings.subtopics
    };
    let report = run_subtopics(&corpus, &params)?;
    Ok(SubtopicsPayload {
        seed: report.seed,
        k: report.k,
        n_docs: report.n_docs,
        vocabulary_size: report.vocabulary_size,
        inertia: report.inertia,
        clusters: report.subtopics.clusters,
        assignments: posts
            .iter()
            .zip(report.assignments)
            .map(|(p, cluster)| ClusterAssignment {
                post_id: p.id.clone(),
                cluster,
            })
            .collect(),
    })
}

fn wordcloud(posts: &[Post], ctx: &AnalysisContext<'_>) -> WordCloudPayload {
    let corpus: Vec<&[String]> = posts.iter().map(|p| p.tokens.as_slice()).collect();
    WordCloudPayload {
        terms: word_cloud(&corpus)
            .into_iter()
            .take(ctx.settings.wordcloud_terms)
            .map(|(term, count)| TermCount { term, count })
            .collect(),
    }
}

fn labels_for(
    posts: &[Post],
    kind: AnalysisKind,
    ctx: &AnalysisContext<'_>,
) -> Result<(String, bool, Vec<ItemLabel>), EngineError> {
    let adapter = ctx.adapters.default_for(kind)?;
    let labels = invoke_adapter(adapter, posts, ctx.baselines)?;
    Ok((adapter.adapter_id.clone(), adapter.is_baseline(), labels))
}

fn sentiment(posts: &[Post], ctx: &AnalysisContext<'_>) -> Result<SentimentPayload, EngineError> {
    let (adapter_id, baseline, items) = labels_for(posts, AnalysisKind::Sentiment, ctx)?;
    let mut label_counts: BTreeMap<String, usize> =
        Sentiment::LABELS.iter().map(|l| (l.to_string(), 0)).collect();
    let labels = items
        .into_iter()
        .map(|item| match item {
            ItemLabel::Labeled { id, label, score } => {
                *label_counts.entry(label.clone()).or_insert(0) += 1;
                PostLabel {
                    post_id: id,
                    label: Some(label),
                    score: Some(score),
                    degree: Some(score.abs().min(1.0)),
                    error: None,
                }
            }
            ItemLabel::Failed { id, error } => PostLabel {
                post_id: id,
                label: None,
                score: None,
                degree: None,
                error: Some(error),
            },
        })
        .collect();
    Ok(SentimentPayload {
        adapter_id,
        lexicon_version: baseline.then_some(ctx.baselines.lexicon.version),
        threshold: ctx.baselines.sentiment_threshold,
        label_counts,
        labels,
    })
}

fn propaganda(posts: &[Post], ctx: &AnalysisContext<'_>) -> Result<PropagandaPayload, EngineError> {
    let (adapter_id, baseline, items) = labels_for(posts, AnalysisKind::Propaganda, ctx)?;
    let mut flagged = 0;
    let labels = posts
        .iter()
        .zip(items)
        .map(|(post, item)| match item {
            ItemLabel::Labeled { id, label, score } => {
                flagged += usize::from(label == "propaganda");
                // spans and technique only exist for the in-process matcher
                let detail: Option<PropagandaLabel> = baseline.then(|| {
                    crate::classify::classify_text(
                        &post.norm_text,
                        &ctx.baselines.patterns,
                        ctx.baselines.propaganda_threshold,
                    )
                });
                PropagandaRow {
                    post_id: id,
                    label: Some(label),
                    score: Some(score),
                    degree: Some(score.clamp(0.0, 1.0)),
                    technique: detail.as_ref().and_then(|d| d.technique.clone()),
                    spans: detail.map(|d| d.spans).unwrap_or_default(),
                    error: None,
                }
            }
            ItemLabel::Failed { id, error } => PropagandaRow {
                post_id: id,
                label: None,
                score: None,
                degree: None,
                technique: None,
                spans: Vec::new(),
                error: Some(error),
            },
        })
        .collect();
    Ok(PropagandaPayload {
        adapter_id,
        threshold: ctx.baselines.propaganda_threshold,
        flagged,
        labels,
    })
}

fn trends(posts: &[Post], ctx: &AnalysisContext<'_>) -> TrendsPayload {
    let s = ctx.settings;
    let series = bucket_timeline(posts, s.granularity);
    let (spikes, skipped) = match detect_spikes(&series, posts, s.spike_window, s.z_threshold) {
        Ok(spikes) => (spikes, None),
        Err(e) => (Vec::new(), Some(e.code().to_string())),
    };
    TrendsPayload {
        series,
        window: s.spike_window,
        z_threshold: s.z_threshold,
        spikes,
        spikes_skipped: skipped,
    }
}

fn spatial(posts: &[Post], ctx: &AnalysisContext<'_>) -> SpatialPayload {
    let per_post: Vec<_> = posts
        .iter()
        .map(|p| extract_locations(p, ctx.gazetteer))
        .collect();
    SpatialPayload {
        regions: aggregate_regions(&per_post, ctx.gazetteer),
        posts: posts
            .iter()
            .zip(per_post)
            .filter(|(_, m)| !m.is_empty())
            .map(|(p, mentions)| PostLocations {
                post_id: p.id.clone(),
                mentions,
            })
            .collect(),
    }
}

fn network(posts: &[Post], ctx: &AnalysisContext<'_>) -> Result<NetworkPayload, EngineError> {
    let graph = build_graph(posts);
    let metrics = centrality(&graph, ctx.settings.pagerank)?;
    let export = export_graph(&graph, &metrics);
    Ok(NetworkPayload {
        damping: ctx.settings.pagerank.damping,
        nodes: export.nodes,
        edges: export.edges,
        top_influencers: top_influencers(&metrics, ctx.settings.top_influencers)
            .into_iter()
            .map(|(id, _)| id)
            .collect(),
    })
}

fn post_records(posts: &[Post], ctx: &AnalysisContext<'_>) -> Result<PostAnalysisPayload, EngineError> {
    let (_, _, sentiments) = labels_for(posts, AnalysisKind::Sentiment, ctx)?;
    let (_, _, propaganda) = labels_for(posts, AnalysisKind::Propaganda, ctx)?;
    let mut records = Vec::with_capacity(posts.len() * 2);
    for ((post, s), p) in posts.iter().zip(sentiments).zip(propaganda) {
        let mut locations: Vec<String> = Vec::new();
        for m in extract_locations(post, ctx.gazetteer) {
            if m.region != OTHER_REGION && !locations.contains(&m.region) {
                locations.push(m.region);
            }
        }
        let failed = |kind, error: String| PostAnalysis {
            post_id: post.id.clone(),
            kind,
            label: format!("error: {error}"),
            degree: 0.0,
            locations: locations.clone(),
        };
        let sentiment: Result<SentimentLabel, String> = match s {
            ItemLabel::Labeled { label, score, .. } => Sentiment::parse(&label)
                .map(|label| SentimentLabel { label, score })
                .ok_or_else(|| format!("unknown label `{label}`")),
            ItemLabel::Failed { error, .. } => Err(error),
        };
        let prop: Result<PropagandaLabel, String> = match p {
            ItemLabel::Labeled { label, score, .. } => Ok(PropagandaLabel {
                flag: label == "propaganda",
                score: score.clamp(0.0, 1.0),
                spans: Vec::new(),
                technique: None,
            }),
            ItemLabel::Failed { error, .. } => Err(error),
        };
        let neutral = SentimentLabel {
            label: Sentiment::Neutral,
            score: 0.0,
        };
        let clean = PropagandaLabel {
            flag: false,
            score: 0.0,
            spans: Vec::new(),
            technique: None,
        };
        let [rs, rp] = post_analysis(
            &post.id,
            sentiment.as_ref().unwrap_or(&neutral),
            prop.as_ref().unwrap_or(&clean),
            &locations,
        );
        records.push(match sentiment {
            Ok(_) => rs,
            Err(e) => failed(AnalysisKind::Sentiment, e),
        });
        records.push(match prop {
            Ok(_) => rp,
            Err(e) => failed(AnalysisKind::Propaganda, e),
        });
    }
    rank_by_degree(&mut records);
    Ok(PostAnalysisPayload { records })
}
