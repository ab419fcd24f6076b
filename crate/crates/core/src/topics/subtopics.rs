use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    build_vocabulary, choose_k, kmeans, nmf, tfidf_matrix, Clustering, KMeansParams, NmfFactors,
    NmfParams, TopicError, VocabParams, Vocabulary,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtopic {
    pub cluster: usize,
    pub doc_count: usize,
    pub top_terms: Vec<TermWeight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtopicSet {
    pub clusters: Vec<Subtopic>,
    /// Per-cluster NMF factors; not part of the serialized payload.
    #[serde(skip)]
    pub factors: Vec<NmfFactors>,
}

/// Rank each cluster's terms by their largest loading across the rows of
/// its `H` factor and keep the `top_m` best (ties broken by term).
pub fn extract_subtopics(
    clustering: &Clustering,
    factors: Vec<NmfFactors>,
    vocab: &Vocabulary,
    top_m: usize,
) -> SubtopicSet {
    let sizes = clustering.sizes();
    let clusters = factors
        .iter()
        .enumerate()
        .map(|(cluster, f)| {
            let mut scored: Vec<TermWeight> = vocab
                .terms()
                .iter()
                .enumerate()
                .map(|(j, term)| TermWeight {
                    term: term.clone(),
                    weight: (0..f.h.rows()).map(|r| f.h.get(r, j)).fold(0.0, f64::max),
                })
                .collect();
            scored.sort_by(|a, b| {
                b.weight
                    .partial_cmp(&a.weight)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| a.term.cmp(&b.term))
            });
            scored.truncate(top_m);
            Subtopic {
                cluster,
                doc_count: sizes[cluster],
                top_terms: scored,
            }
        })
        .collect();
    SubtopicSet { clusters, factors }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubtopicParams {
    /// Cluster count; `None` derives it from the corpus size.
    pub k: Option<usize>,
    pub seed: u64,
    pub vocab: VocabParams,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub nmf_rank: usize,
    pub nmf_max_iter: usize,
    pub nmf_tol: f64,
    pub top_m: usize,
}

impl Default for SubtopicParams {
    fn default() -> Self {
        SubtopicParams {
            k: None,
            seed: 42,
            vocab: VocabParams::default(),
            kmeans_max_iter: 100,
            kmeans_tol: 1e-4,
            nmf_rank: 2,
            nmf_max_iter: 200,
            nmf_tol: 1e-4,
            top_m: 10,
        }
    }
}

/// Result of the full vocabulary → TF-IDF → K-Means → per-cluster NMF run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtopicReport {
    pub seed: u64,
    pub k: usize,
    pub n_docs: usize,
    pub vocabulary_size: usize,
    pub inertia: f64,
    pub assignments: Vec<usize>,
    pub subtopics: SubtopicSet,
}

pub fn run_subtopics<D: AsRef<[String]>>(
    corpus: &[D],
    params: &SubtopicParams,
) -> Result<SubtopicReport, TopicError> {
    let k = match params.k {
        Some(k) => k,
        None => choose_k(corpus.len())?,
    };
    let vocab = build_vocabulary(corpus, params.vocab)?;
    let matrix = tfidf_matrix(corpus, &vocab);
    let clustering = kmeans(
        &matrix,
        KMeansParams {
            k,
            seed: params.seed,
            max_iter: params.kmeans_max_iter,
            tol: params.kmeans_tol,
        },
    )?;

    let factors = (0..k)
        .map(|cluster| {
            let members = clustering.members(cluster);
            let sub = matrix.select_rows(&members);
            let rank = params.nmf_rank.min(sub.rows()).min(sub.cols());
            nmf(
                &sub,
                NmfParams {
                    rank,
                    max_iter: params.nmf_max_iter,
                    tol: params.nmf_tol,
                    seed: params.seed.wrapping_add(cluster as u64),
                },
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SubtopicReport {
        seed: params.seed,
        k,
        n_docs: corpus.len(),
        vocabulary_size: vocab.len(),
        inertia: clustering.inertia,
        assignments: clustering.assignments.clone(),
        subtopics: extract_subtopics(&clustering, factors, &vocab, params.top_m),
    })
}

/// Raw token counts over the corpus, most frequent first, ties by term.
pub fn word_cloud<D: AsRef<[String]>>(corpus: &[D]) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        for token in doc.as_ref() {
            *counts.entry(token.as_str()).or_insert(0) += 1;
        }
    }
    let mut out: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    // BTreeMap order is lexicographic; a stable sort keeps it within a count
    out.sort_by_key(|t| std::cmp::Reverse(t.1));
    out
}
