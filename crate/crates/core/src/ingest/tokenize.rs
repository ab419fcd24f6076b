use super::Stopwords;

/// Split normalized text into tokens.
///
/// Tokens are maximal runs of alphanumeric characters; everything else
/// (whitespace, punctuation, symbols) separates. Single-character tokens and
/// stopwords are dropped, order is preserved.
pub fn tokenize(norm_text: &str, stopwords: &Stopwords) -> Vec<String> {
    norm_text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().nth(1).is_some())
        .filter(|t| !stopwords.contains(t))
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{normalize_text, Lang};
    use proptest::prelude::*;

    fn words(list: &[&str]) -> Stopwords {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn plain_split() {
        assert_eq!(
            tokenize("hello world", &Stopwords::empty()),
            vec!["hello", "world"]
        );
    }

    #[test]
    fn short_tokens_and_stopwords_dropped() {
        assert_eq!(tokenize("a hello, world!", &words(&["world"])), vec!["hello"]);
    }

    #[test]
    fn arabic_with_builtin_stopwords() {
        let stop = Stopwords::builtin_for(Lang::Ar);
        assert!(stop.contains("في"));
        assert_eq!(tokenize("احمد في الدوحة", &stop), vec!["احمد", "الدوحة"]);
    }

    #[test]
    fn hashtags_and_mentions_lose_sigils() {
        assert_eq!(
            tokenize("#doha @user_1 rocks", &Stopwords::empty()),
            vec!["doha", "user", "rocks"]
        );
    }

    proptest! {
        #[test]
        fn never_yields_short_tokens(s in "\\PC{0,60}") {
            let norm = normalize_text(&s, Lang::Unknown);
            for t in tokenize(&norm, &Stopwords::builtin()) {
                prop_assert!(t.chars().count() >= 2);
            }
        }
    }
}
