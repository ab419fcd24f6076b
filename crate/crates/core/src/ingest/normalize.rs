use unicode_normalization::UnicodeNormalization;

use super::Lang;

const TATWEEL: char = '\u{0640}';

fn is_arabic_diacritic(c: char) -> bool {
    ('\u{064B}'..='\u{065F}').contains(&c)
}

fn fold_arabic(c: char) -> Option<char> {
    match c {
        TATWEEL => None,
        c if is_arabic_diacritic(c) => None,
        'أ' | 'إ' | 'آ' => Some('ا'),
        'ى' => Some('ي'),
        c => Some(c),
    }
}

/// Canonical form used for tokenization and pattern matching.
///
/// NFC, Arabic orthographic folding (diacritics and tatweel dropped, alef
/// variants unified, alef maqsura to ya), lowercase, control characters
/// removed and whitespace collapsed to single spaces. The Arabic folding is
/// applied to every input regardless of `lang_hint`: mixed-script posts are
/// common and the folding is a no-op on non-Arabic codepoints.
pub fn normalize_text(text: &str, _lang_hint: Lang) -> String {
    // Compose first so that alef + combining hamza becomes a precomposed
    // variant before the folding table sees it.
    let folded: String = text
        .nfc()
        .filter_map(fold_arabic)
        .flat_map(char::to_lowercase)
        .collect();

    let mut out = String::with_capacity(folded.len());
    let mut pending_space = false;
    for c in folded.nfc() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else if c.is_control() || is_arabic_diacritic(c) || c == TATWEEL {
            continue;
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use unicode_normalization::is_nfc;

    #[test]
    fn latin_is_casefolded_and_collapsed() {
        assert_eq!(normalize_text("HeLLo  World", Lang::En), "hello world");
        assert_eq!(normalize_text("  a\t\nb  ", Lang::En), "a b");
    }

    #[test]
    fn arabic_name_loses_diacritics_and_hamza_seat() {
        // أَحْمَد: alef-hamza, fatha, ha, sukun, meem, fatha, dal
        let input = "\u{0623}\u{064E}\u{062D}\u{0652}\u{0645}\u{064E}\u{062F}";
        assert_eq!(input, "أَحْمَد");
        assert_eq!(normalize_text(input, Lang::Ar), "احمد");
    }

    #[test]
    fn tatweel_and_alef_maqsura() {
        assert_eq!(normalize_text("مـــصر", Lang::Ar), "مصر");
        assert_eq!(normalize_text("على", Lang::Ar), "علي");
        assert_eq!(normalize_text("إسلام آمن", Lang::Ar), "اسلام امن");
    }

    #[test]
    fn decomposed_hamza_is_composed_then_folded() {
        // alef + combining hamza above composes to U+0623 under NFC
        assert_eq!(normalize_text("\u{0627}\u{0654}", Lang::Ar), "ا");
    }

    #[test]
    fn control_characters_are_stripped() {
        assert_eq!(normalize_text("a\u{0007}b\u{0000}c", Lang::En), "abc");
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,40}") {
            let once = normalize_text(&s, Lang::Unknown);
            prop_assert_eq!(normalize_text(&once, Lang::Unknown), once);
        }

        #[test]
        fn idempotent_on_arabic(s in "[\u{0600}-\u{06FF} a-zA-Z]{0,40}") {
            let once = normalize_text(&s, Lang::Ar);
            prop_assert_eq!(normalize_text(&once, Lang::Ar), once.clone());
            prop_assert!(is_nfc(&once));
        }

        #[test]
        fn output_is_nfc_without_edge_whitespace(s in "\\PC{0,40}") {
            let out = normalize_text(&s, Lang::Unknown);
            prop_assert!(is_nfc(&out));
            prop_assert!(!out.starts_with(' ') && !out.ends_with(' '));
            prop_assert!(!out.contains("  "));
        }
    }
}
