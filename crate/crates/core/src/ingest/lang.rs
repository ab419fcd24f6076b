use super::Lang;

fn is_arabic_block(c: char) -> bool {
    matches!(c,
        '\u{0600}'..='\u{06FF}'
        | '\u{0750}'..='\u{077F}'
        | '\u{08A0}'..='\u{08FF}'
        | '\u{FB50}'..='\u{FDFF}'
        | '\u{FE70}'..='\u{FEFF}')
}

fn is_latin(c: char) -> bool {
    c.is_ascii_alphabetic()
        || matches!(c, '\u{00C0}'..='\u{024F}' | '\u{1E00}'..='\u{1EFF}') && c.is_alphabetic()
}

/// Majority-script language guess over the letters of `text`.
///
/// At least half of the letters in the Arabic blocks gives `ar`, at least
/// half Latin gives `en`; anything else (including no letters) is `unknown`.
pub fn detect_language(text: &str) -> Lang {
    let (mut letters, mut arabic, mut latin) = (0usize, 0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if is_arabic_block(c) {
            arabic += 1;
        } else if is_latin(c) {
            latin += 1;
        }
    }
    if letters == 0 {
        Lang::Unknown
    } else if 2 * arabic >= letters {
        Lang::Ar
    } else if 2 * latin >= letters {
        Lang::En
    } else {
        Lang::Unknown
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_script_wins() {
        assert_eq!(detect_language("hello world"), Lang::En);
        assert_eq!(detect_language("مرحبا بالعالم"), Lang::Ar);
        assert_eq!(detect_language("مرحبا hi"), Lang::Ar);
        assert_eq!(detect_language("Привет мир"), Lang::Unknown);
        assert_eq!(detect_language("12345 !!"), Lang::Unknown);
    }

    #[test]
    fn exact_half_counts_as_arabic() {
        // 2 Arabic letters, 2 Latin letters
        assert_eq!(detect_language("اب ab"), Lang::Ar);
    }
}
