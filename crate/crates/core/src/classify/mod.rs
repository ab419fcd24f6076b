//! Sentiment and propaganda labeling behind a pluggable adapter seam, post
//! analysis records and the relabeling feedback loop.

mod adapter;
mod feedback;
mod lexicon;
mod post_analysis;
mod propaganda;
mod sentiment;

pub use adapter::{
    invoke_adapter, AdapterError, AdapterRegistry, Baselines, ClassifierAdapter, Endpoint,
    ItemLabel, DEFAULT_ADAPTER_TIMEOUT, DEFAULT_IN_FLIGHT,
};
pub use feedback::{apply_feedback, FeedbackOutcome, LexiconChange, FEEDBACK_MIN_VOTES};
pub use lexicon::{Lexicon, Polarity};
pub use post_analysis::{compare_by_degree, post_analysis, rank_by_degree, ranking_head, PostAnalysis};
pub use propaganda::{
    classify_propaganda, classify_text, Pattern, PatternSet, PropagandaLabel, Span,
    DEFAULT_PROPAGANDA_THRESHOLD,
};
pub use sentiment::{
    classify_sentiment, classify_sentiment_with, sentiment_score, Sentiment, SentimentLabel,
    DEFAULT_SENTIMENT_THRESHOLD,
};
