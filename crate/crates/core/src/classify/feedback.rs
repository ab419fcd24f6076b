use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{Lexicon, Polarity};
use crate::ingest::Post;
use crate::store::{AnalysisKind, Annotation};

/// Agreeing annotations a token needs before it enters the lexicon.
pub const FEEDBACK_MIN_VOTES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconChange {
    pub term: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackOutcome {
    pub lexicon: Lexicon,
    pub changes: Vec<LexiconChange>,
    pub annotations_used: usize,
}

impl FeedbackOutcome {
    pub fn changed(&self) -> bool {
        !self.changes.is_empty()
    }
}

fn polarity_of(label: &str) -> Option<Polarity> {
    match label {
        "positive" => Some(Polarity::Positive),
        "negative" => Some(Polarity::Negative),
        _ => None,
    }
}

fn opposite(p: Polarity) -> Polarity {
    match p {
        Polarity::Positive => Polarity::Negative,
        Polarity::Negative => Polarity::Positive,
    }
}

/// Fold sentiment relabels into a new lexicon version.
///
/// Every sentiment annotation whose new label is positive or negative votes
/// once for each distinct token of its post that is not already on that
/// side. A token with at least [`FEEDBACK_MIN_VOTES`] votes for exactly one
/// side moves to that side. The version is bumped only when the lists change.
pub fn apply_feedback(annotations: &[Annotation], posts: &[Post], lexicon: &Lexicon) -> FeedbackOutcome {
    let tokens_by_post: HashMap<&str, BTreeSet<&str>> = posts
        .iter()
        .map(|p| (p.id.as_str(), p.tokens.iter().map(String::as_str).collect()))
        .collect();

    let mut votes: BTreeMap<(&str, bool), usize> = BTreeMap::new();
    let mut used = 0;
    for a in annotations.iter().filter(|a| a.kind == AnalysisKind::Sentiment) {
        let (Some(polarity), Some(tokens)) =
            (polarity_of(&a.new_label), tokens_by_post.get(a.post_id.as_str()))
        else {
            continue;
        };
        used += 1;
        let side = lexicon.side(polarity);
        for &t in tokens.iter().filter(|t| !side.contains(**t)) {
            *votes.entry((t, polarity == Polarity::Positive)).or_insert(0) += 1;
        }
    }

    let qualifies = |t: &str, positive: bool| {
        votes.get(&(t, positive)).is_some_and(|&v| v >= FEEDBACK_MIN_VOTES)
    };
    let mut next = lexicon.clone();
    let mut changes = Vec::new();
    for &(term, positive) in votes.keys() {
        if !qualifies(term, positive) || qualifies(term, !positive) {
            continue;
        }
        let polarity = if positive { Polarity::Positive } else { Polarity::Negative };
        next.side_mut(opposite(polarity)).remove(term);
        next.side_mut(polarity).insert(term.to_string());
        changes.push(LexiconChange {
            term: term.to_string(),
            polarity,
        });
    }
    if !changes.is_empty() {
        next.version = lexicon.version + 1;
    }
    FeedbackOutcome {
        lexicon: next,
        changes,
        annotations_used: used,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_dataset, PostSchema, SourceFormat};
    use crate::store::{AnnotationId, DatasetId};

    fn posts() -> Vec<Post> {
        let body = [
            ("a", "the vote was rigged today"),
            ("b", "rigged count again"),
            ("c", "totally rigged process"),
            ("d", "calm afternoon"),
        ]
        .iter()
        .map(|(id, text)| {
            format!("{{\"id\":\"{id}\",\"text\":\"{text}\",\"timestamp\":\"2024-01-01T00:00:00Z\"}}\n")
        })
        .collect::<String>();
        parse_dataset(body.as_bytes(), SourceFormat::Jsonl, &PostSchema::default())
            .unwrap()
            .0
    }

    fn relabel(post: &str, to: &str) -> Annotation {
        Annotation {
            annotation_id: AnnotationId::generate(),
            dataset_id: DatasetId::from("d"),
            post_id: post.into(),
            kind: AnalysisKind::Sentiment,
            old_label: "neutral".into(),
            new_label: to.into(),
            annotator: "t".into(),
            created_at: chrono::Utc::now(),
        }
    }

    fn base() -> Lexicon {
        Lexicon::new(1, ["good"], ["bad"])
    }

    #[test]
    fn no_annotations_no_change() {
        let out = apply_feedback(&[], &posts(), &base());
        assert_eq!(out.lexicon, base());
        assert!(!out.changed());
    }

    #[test]
    fn three_agreeing_relabels_add_token() {
        let anns = [relabel("a", "negative"), relabel("b", "negative"), relabel("c", "negative")];
        let out = apply_feedback(&anns, &posts(), &base());
        assert!(out.lexicon.negative.contains("rigged"));
        assert_eq!(out.lexicon.version, 2);
        assert_eq!(
            out.changes,
            vec![LexiconChange {
                term: "rigged".into(),
                polarity: Polarity::Negative
            }]
        );
    }

    #[test]
    fn two_relabels_are_below_threshold() {
        let anns = [relabel("a", "negative"), relabel("b", "negative")];
        let out = apply_feedback(&anns, &posts(), &base());
        assert_eq!(out.lexicon, base());
    }

    #[test]
    fn applying_twice_equals_once() {
        let anns = [relabel("a", "negative"), relabel("b", "negative"), relabel("c", "negative")];
        let once = apply_feedback(&anns, &posts(), &base());
        let twice = apply_feedback(&anns, &posts(), &once.lexicon);
        assert_eq!(twice.lexicon, once.lexicon);
        assert!(!twice.changed());
    }

    #[test]
    fn token_moves_from_opposite_side() {
        let lex = Lexicon::new(4, ["rigged"], ["bad"]);
        let anns = [relabel("a", "negative"), relabel("b", "negative"), relabel("c", "negative")];
        let out = apply_feedback(&anns, &posts(), &lex);
        assert!(!out.lexicon.positive.contains("rigged"));
        assert!(out.lexicon.negative.contains("rigged"));
        assert_eq!(out.lexicon.version, 5);
    }

    #[test]
    fn neutral_and_other_kinds_are_ignored() {
        let mut prop = relabel("a", "negative");
        prop.kind = AnalysisKind::Propaganda;
        let anns = [prop, relabel("b", "neutral"), relabel("c", "neutral")];
        assert!(!apply_feedback(&anns, &posts(), &base()).changed());
    }
}
