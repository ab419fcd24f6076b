use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ingest::{normalize_text, Lang};

const EN_POSITIVE: &str = include_str!("../../data/lexicon_en_positive.txt");
const EN_NEGATIVE: &str = include_str!("../../data/lexicon_en_negative.txt");
const AR_POSITIVE: &str = include_str!("../../data/lexicon_ar_positive.txt");
const AR_NEGATIVE: &str = include_str!("../../data/lexicon_ar_negative.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

/// Versioned polarity word lists. Version 1 is the shipped baseline; each
/// feedback round that changes the lists produces the next version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub version: u32,
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
}

fn word_list(raw: &str, lang: Lang) -> impl Iterator<Item = String> + '_ {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(move |w| normalize_text(w, lang))
}

impl Lexicon {
    pub fn builtin() -> Self {
        Lexicon {
            version: 1,
            positive: word_list(EN_POSITIVE, Lang::En)
                .chain(word_list(AR_POSITIVE, Lang::Ar))
                .collect(),
            negative: word_list(EN_NEGATIVE, Lang::En)
                .chain(word_list(AR_NEGATIVE, Lang::Ar))
                .collect(),
        }
    }

    pub fn new<I, J>(version: u32, positive: I, negative: J) -> Self
    where
        I: IntoIterator,
        I::Item: Into<String>,
        J: IntoIterator,
        J::Item: Into<String>,
    {
        Lexicon {
            version,
            positive: positive.into_iter().map(Into::into).collect(),
            negative: negative.into_iter().map(Into::into).collect(),
        }
    }

    /// Positive and negative hit counts for a token sequence.
    pub fn hits<S: AsRef<str>>(&self, tokens: &[S]) -> (usize, usize) {
        tokens.iter().fold((0, 0), |(p, n), t| {
            let t = t.as_ref();
            (
                p + usize::from(self.positive.contains(t)),
                n + usize::from(self.negative.contains(t)),
            )
        })
    }

    pub fn side_mut(&mut self, polarity: Polarity) -> &mut BTreeSet<String> {
        match polarity {
            Polarity::Positive => &mut self.positive,
            Polarity::Negative => &mut self.negative,
        }
    }

    pub fn side(&self, polarity: Polarity) -> &BTreeSet<String> {
        match polarity {
            Polarity::Positive => &self.positive,
            Polarity::Negative => &self.negative,
        }
    }

    /// Same word lists, ignoring the version number.
    pub fn same_entries(&self, other: &Lexicon) -> bool {
        self.positive == other.positive && self.negative == other.negative
    }
}
