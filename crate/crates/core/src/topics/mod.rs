//! Subtopic extraction: vocabulary, TF-IDF, K-Means, per-cluster NMF and
//! word-cloud frequencies.

mod kmeans;
mod matrix;
mod nmf;
mod subtopics;
mod tfidf;
mod vocab;

use thiserror::Error;

pub use kmeans::{kmeans, Clustering, KMeansParams};
pub use matrix::Matrix;
pub use nmf::{nmf, NmfFactors, NmfParams};
pub use subtopics::{
    extract_subtopics, run_subtopics, word_cloud, Subtopic, SubtopicParams, SubtopicReport,
    SubtopicSet, TermWeight,
};
pub use tfidf::{smoothed_idf, tfidf_matrix, WeightedMatrix};
pub use vocab::{build_vocabulary, VocabParams, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopicError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no term survives the document-frequency filters")]
    EmptyVocabulary,
    #[error("at least 2 documents are needed, got {0}")]
    TooFewDocs(usize),
    #[error("k = {k} is invalid for {n_docs} documents")]
    KExceedsDocs { k: usize, n_docs: usize },
    #[error("matrix has negative or non-finite entries")]
    NegativeInput,
    #[error("rank {rank} exceeds min({rows}, {cols}) or is zero")]
    RankTooLarge { rank: usize, rows: usize, cols: usize },
    #[error("rows have different lengths")]
    DimensionMismatch,
}

impl TopicError {
    pub fn code(&self) -> &'static str {
        match self {
            TopicError::EmptyCorpus => "EMPTY_CORPUS",
            TopicError::EmptyVocabulary => "EMPTY_VOCABULARY",
            TopicError::TooFewDocs(_) => "TOO_FEW_DOCS",
            TopicError::KExceedsDocs { .. } => "K_EXCEEDS_DOCS",
            TopicError::NegativeInput => "NEGATIVE_INPUT",
            TopicError::RankTooLarge { .. } => "RANK_TOO_LARGE",
            TopicError::DimensionMismatch => "DIMENSION_MISMATCH",
        }
    }
}

/// Cluster count from corpus size: `round(sqrt(n / 2))` clamped to `[2, 20]`.
pub fn choose_k(n_docs: usize) -> Result<usize, TopicError> {
    if n_docs < 2 {
        return Err(TopicError::TooFewDocs(n_docs));
    }
    let k = (n_docs as f64 / 2.0).sqrt().round() as usize;
    Ok(k.clamp(2, 20))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choose_k_heuristic() {
        assert_eq!(choose_k(200), Ok(10));
        assert_eq!(choose_k(2), Ok(2));
        assert_eq!(choose_k(10_000), Ok(20));
        assert_eq!(choose_k(1), Err(TopicError::TooFewDocs(1)));
    }
}
