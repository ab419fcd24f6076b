use serde::{Deserialize, Serialize};

use super::Lexicon;
use crate::ingest::Post;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl Sentiment {
    pub const LABELS: [&'static str; 3] = ["positive", "negative", "neutral"];

    pub fn as_str(&self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "positive" => Some(Sentiment::Positive),
            "negative" => Some(Sentiment::Negative),
            "neutral" => Some(Sentiment::Neutral),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentLabel {
    pub label: Sentiment,
    /// In `[-1, 1]`.
    pub score: f64,
}

impl SentimentLabel {
    /// Label a score: above `threshold` positive, below `-threshold` negative.
    pub fn from_score(score: f64, threshold: f64) -> Self {
        let label = if score > threshold {
            Sentiment::Positive
        } else if score < -threshold {
            Sentiment::Negative
        } else {
            Sentiment::Neutral
        };
        SentimentLabel { label, score }
    }
}

pub const DEFAULT_SENTIMENT_THRESHOLD: f64 = 0.2;

/// `(p - n) / (p + n)` over lexicon hits, 0 without hits.
pub fn sentiment_score<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> f64 {
    let (p, n) = lexicon.hits(tokens);
    if p + n == 0 {
        0.0
    } else {
        (p as f64 - n as f64) / (p + n) as f64
    }
}

pub fn classify_sentiment(post: &Post, lexicon: &Lexicon) -> SentimentLabel {
    classify_sentiment_with(post, lexicon, DEFAULT_SENTIMENT_THRESHOLD)
}

pub fn classify_sentiment_with(post: &Post, lexicon: &Lexicon, threshold: f64) -> SentimentLabel {
    SentimentLabel::from_score(sentiment_score(&post.tokens, lexicon), threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> Lexicon {
        Lexicon::new(1, ["good", "great"], ["bad", "awful", "sad"])
    }

    fn score(tokens: &[&str]) -> SentimentLabel {
        SentimentLabel::from_score(sentiment_score(tokens, &lex()), DEFAULT_SENTIMENT_THRESHOLD)
    }

    #[test]
    fn all_positive_hits() {
        let s = score(&["good", "day", "great"]);
        assert_eq!(s.score, 1.0);
        assert_eq!(s.label, Sentiment::Positive);
    }

    #[test]
    fn no_hits_is_neutral_zero() {
        let s = score(&["table", "chair"]);
        assert_eq!(s.score, 0.0);
        assert_eq!(s.label, Sentiment::Neutral);
    }

    #[test]
    fn one_positive_three_negative() {
        let s = score(&["good", "bad", "awful", "sad"]);
        assert_eq!(s.score, -0.5);
        assert_eq!(s.label, Sentiment::Negative);
    }

    #[test]
    fn thresholds_are_strict() {
        assert_eq!(SentimentLabel::from_score(0.2, 0.2).label, Sentiment::Neutral);
        assert_eq!(SentimentLabel::from_score(-0.2, 0.2).label, Sentiment::Neutral);
        assert_eq!(SentimentLabel::from_score(0.2000001, 0.2).label, Sentiment::Positive);
    }
}
