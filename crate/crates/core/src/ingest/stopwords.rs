use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{normalize_text, Lang};

const ENGLISH: &str = include_str!("../../data/stopwords_en.txt");
const ARABIC: &str = include_str!("../../data/stopwords_ar.txt");

/// A set of normalized stopwords.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    pub fn empty() -> Self {
        Stopwords::default()
    }

    /// Built-in Arabic and English lists combined.
    pub fn builtin() -> Self {
        let mut words = Self::from_list(ENGLISH, Lang::En);
        words.0.extend(Self::from_list(ARABIC, Lang::Ar).0);
        words
    }

    pub fn builtin_for(lang: Lang) -> Self {
        match lang {
            Lang::Ar => Self::from_list(ARABIC, Lang::Ar),
            Lang::En => Self::from_list(ENGLISH, Lang::En),
            Lang::Unknown => Self::builtin(),
        }
    }

    /// Parse a newline-separated list; `#` starts a comment line. Entries
    /// are normalized so that they compare equal to tokens.
    pub fn from_list(list: &str, lang: Lang) -> Self {
        list.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|w| normalize_text(w, lang))
            .collect()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, word: &str) {
        self.0.insert(normalize_text(word, Lang::Unknown));
    }
}

impl FromIterator<String> for Stopwords {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Stopwords(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_list_sizes() {
        let en = Stopwords::builtin_for(Lang::En);
        let ar = Stopwords::builtin_for(Lang::Ar);
        assert!((100..=160).contains(&en.len()), "{}", en.len());
        assert!((90..=120).contains(&ar.len()), "{}", ar.len());
        assert_eq!(Stopwords::builtin().len(), en.len() + ar.len());
    }

    #[test]
    fn builtin_entries_are_normalized() {
        let ar = Stopwords::builtin_for(Lang::Ar);
        assert!(ar.contains("في"));
        assert!(ar.contains("الي"));
        assert!(!ar.contains("إلى"));
    }
}
