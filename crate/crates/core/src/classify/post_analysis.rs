use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{PropagandaLabel, SentimentLabel};
use crate::store::AnalysisKind;

/// One post's label under one analysis kind, with its strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostAnalysis {
    pub post_id: String,
    pub kind: AnalysisKind,
    pub label: String,
    /// In `[0, 1]`: |score| for sentiment, the score itself for propaganda.
    pub degree: f64,
    pub locations: Vec<String>,
}

pub fn post_analysis(
    post_id: &str,
    sentiment: &SentimentLabel,
    propaganda: &PropagandaLabel,
    locations: &[String],
) -> [PostAnalysis; 2] {
    [
        PostAnalysis {
            post_id: post_id.to_string(),
            kind: AnalysisKind::Sentiment,
            label: sentiment.label.as_str().to_string(),
            degree: sentiment.score.abs(),
            locations: locations.to_vec(),
        },
        PostAnalysis {
            post_id: post_id.to_string(),
            kind: AnalysisKind::Propaganda,
            label: if propaganda.flag {
                "propaganda".to_string()
            } else {
                "not_propaganda".to_string()
            },
            degree: propaganda.score,
            locations: locations.to_vec(),
        },
    ]
}

/// Degree descending, then kind, then post id; a total order.
pub fn compare_by_degree(a: &PostAnalysis, b: &PostAnalysis) -> Ordering {
    b.degree
        .total_cmp(&a.degree)
        .then_with(|| a.kind.cmp(&b.kind))
        .then_with(|| a.post_id.cmp(&b.post_id))
}

pub fn rank_by_degree(records: &mut [PostAnalysis]) {
    records.sort_by(compare_by_degree);
}

/// The `n` strongest records of one kind; zero-degree records never rank.
pub fn ranking_head(records: &[PostAnalysis], kind: AnalysisKind, n: usize) -> Vec<PostAnalysis> {
    let mut head: Vec<PostAnalysis> = records
        .iter()
        .filter(|r| r.kind == kind && r.degree > 0.0)
        .cloned()
        .collect();
    rank_by_degree(&mut head);
    head.truncate(n);
    head
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Sentiment;
    use proptest::prelude::*;

    fn no_propaganda() -> PropagandaLabel {
        PropagandaLabel {
            flag: false,
            score: 0.0,
            spans: vec![],
            technique: None,
        }
    }

    #[test]
    fn negative_sentiment_degree() {
        let s = SentimentLabel::from_score(-0.8, 0.2);
        let [sent, prop] = post_analysis("p1", &s, &no_propaganda(), &["Doha".into()]);
        assert_eq!(sent.label, "negative");
        assert_eq!(sent.degree, 0.8);
        assert_eq!(sent.locations, vec!["Doha"]);
        assert_eq!(prop.degree, 0.0);
    }

    #[test]
    fn zero_propaganda_never_heads_the_ranking() {
        let s = SentimentLabel {
            label: Sentiment::Neutral,
            score: 0.0,
        };
        let records: Vec<_> = post_analysis("p1", &s, &no_propaganda(), &[]).into();
        assert!(ranking_head(&records, AnalysisKind::Propaganda, 5).is_empty());
    }

    proptest! {
        #[test]
        fn degree_sort_is_total_and_stable(scores in proptest::collection::vec(-1.0f64..=1.0, 10)) {
            let mut records: Vec<PostAnalysis> = scores
                .iter()
                .enumerate()
                .flat_map(|(i, &score)| {
                    let s = SentimentLabel::from_score(score, 0.2);
                    let p = PropagandaLabel { flag: false, score: score.abs() / 2.0, spans: vec![], technique: None };
                    post_analysis(&format!("p{i}"), &s, &p, &[])
                })
                .collect();
            let mut reversed = records.clone();
            reversed.reverse();
            rank_by_degree(&mut records);
            rank_by_degree(&mut reversed);
            prop_assert_eq!(&records, &reversed);
            for w in records.windows(2) {
                prop_assert!(w[0].degree >= w[1].degree);
                prop_assert_ne!(compare_by_degree(&w[0], &w[1]), Ordering::Greater);
            }
        }
    }
}
