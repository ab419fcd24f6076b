use serde::{Deserialize, Serialize};

use crate::ingest::{normalize_text, Lang, Post};

const BUILTIN_PATTERNS: &str = include_str!("../../data/propaganda_patterns.csv");

pub const DEFAULT_PROPAGANDA_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    /// Normalized phrase, matched on token boundaries.
    pub text: String,
    pub technique: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PatternSet {
    pub patterns: Vec<Pattern>,
}

#[derive(Debug, Deserialize)]
struct PatternRow {
    pattern: String,
    technique: String,
    weight: f64,
}

impl PatternSet {
    pub fn builtin() -> Self {
        Self::from_csv(BUILTIN_PATTERNS.as_bytes()).expect("shipped pattern file parses")
    }

    /// CSV with header `pattern,technique,weight`.
    pub fn from_csv(bytes: &[u8]) -> Result<Self, csv::Error> {
        let mut reader = csv::Reader::from_reader(bytes);
        let mut patterns = Vec::new();
        for row in reader.deserialize::<PatternRow>() {
            let row = row?;
            let text = normalize_text(&row.pattern, Lang::Unknown);
            if !text.is_empty() {
                patterns.push(Pattern {
                    text,
                    technique: row.technique,
                    weight: row.weight.clamp(0.0, 1.0),
                });
            }
        }
        Ok(PatternSet { patterns })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagandaLabel {
    pub flag: bool,
    /// In `[0, 1]`.
    pub score: f64,
    /// Byte ranges into the post's normalized text, sorted, non-overlapping.
    pub spans: Vec<Span>,
    pub technique: Option<String>,
}

fn is_boundary(text: &str, at: usize) -> bool {
    let before = text[..at].chars().next_back();
    let after = text[at..].chars().next();
    !(before.is_some_and(char::is_alphanumeric) && after.is_some_and(char::is_alphanumeric))
}

struct Match<'p> {
    start: usize,
    end: usize,
    pattern: &'p Pattern,
}

fn find_matches<'p>(text: &str, patterns: &'p PatternSet) -> Vec<Match<'p>> {
    let mut found = Vec::new();
    for pattern in &patterns.patterns {
        let mut from = 0;
        while let Some(pos) = text[from..].find(&pattern.text) {
            let start = from + pos;
            let end = start + pattern.text.len();
            if is_boundary(text, start) && is_boundary(text, end) {
                found.push(Match { start, end, pattern });
            }
            from = start + text[start..].chars().next().map_or(1, char::len_utf8);
        }
    }
    found
}

/// Score normalized text against a pattern set.
///
/// Overlapping matches are resolved longest-first (then earliest, then
/// heaviest); the score is the capped sum of the kept matches' weights.
pub fn classify_text(norm_text: &str, patterns: &PatternSet, threshold: f64) -> PropagandaLabel {
    let mut matches = find_matches(norm_text, patterns);
    matches.sort_by(|a, b| {
        (b.end - b.start)
            .cmp(&(a.end - a.start))
            .then(a.start.cmp(&b.start))
            .then(b.pattern.weight.total_cmp(&a.pattern.weight))
    });
    let mut kept: Vec<Match> = Vec::new();
    for m in matches {
        if kept.iter().all(|k| m.end <= k.start || m.start >= k.end) {
            kept.push(m);
        }
    }
    kept.sort_by_key(|m| m.start);

    let score = kept.iter().map(|m| m.pattern.weight).sum::<f64>().min(1.0);
    let technique = kept
        .iter()
        .fold(None::<&Match>, |best, m| match best {
            Some(b) if b.pattern.weight >= m.pattern.weight => Some(b),
            _ => Some(m),
        })
        .map(|m| m.pattern.technique.clone());
    PropagandaLabel {
        flag: score >= threshold,
        score,
        spans: kept
            .iter()
            .map(|m| Span {
                start: m.start,
                end: m.end,
            })
            .collect(),
        technique,
    }
}

pub fn classify_propaganda(post: &Post, patterns: &PatternSet) -> PropagandaLabel {
    classify_text(&post.norm_text, patterns, DEFAULT_PROPAGANDA_THRESHOLD)
}
