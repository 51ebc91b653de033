use crate::lang::LanguageTag;

/// Punctuation that survives cleaning in every language.
pub const PUNCTUATION: [char; 6] = ['.', ',', '?', '!', '\'', '-'];

pub fn is_hangul_syllable(c: char) -> bool {
    ('\u{AC00}'..='\u{D7A3}').contains(&c)
}

pub fn is_hiragana(c: char) -> bool {
    ('\u{3041}'..='\u{3096}').contains(&c)
}

pub fn is_katakana(c: char) -> bool {
    ('\u{30A1}'..='\u{30FA}').contains(&c) || c == '\u{30FC}'
}

pub fn is_han(c: char) -> bool {
    ('\u{4E00}'..='\u{9FFF}').contains(&c) || c == '\u{3005}'
}

/// Script characters of `lang`, excluding digits, punctuation and space.
pub fn is_script_char(c: char, lang: LanguageTag) -> bool {
    match lang {
        LanguageTag::Ko => is_hangul_syllable(c),
        LanguageTag::En => c.is_ascii_alphabetic(),
        LanguageTag::Ja => is_hiragana(c) || is_katakana(c) || is_han(c),
        LanguageTag::Zh => is_han(c) && c != '\u{3005}',
    }
}

/// The full allowed alphabet of cleaned text for `lang`.
pub fn is_allowed(c: char, lang: LanguageTag) -> bool {
    c == ' ' || c.is_ascii_digit() || PUNCTUATION.contains(&c) || is_script_char(c, lang)
}

/// Folds full-width digits and CJK punctuation onto their ASCII counterparts.
fn fold(c: char) -> char {
    match c {
        '\u{FF10}'..='\u{FF19}' => char::from_u32(c as u32 - 0xFF10 + '0' as u32).unwrap_or(c),
        '。' | '．' => '.',
        '、' | '，' => ',',
        '！' => '!',
        '？' => '?',
        '’' | '‘' => '\'',
        '‐' | '‑' | '–' | '—' | '－' => '-',
        c if c.is_whitespace() => ' ',
        c => c,
    }
}

/// Drops every character that does not belong to `lang`, then collapses
/// whitespace runs to one space and trims both ends.
pub fn clean_text(text: &str, lang: LanguageTag) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars().map(fold) {
        if c == ' ' {
            pending_space = !out.is_empty();
            continue;
        }
        if !is_allowed(c, lang) {
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn drops_foreign_scripts() {
        assert_eq!(clean_text("안녕 hello", LanguageTag::Ko), "안녕");
        assert_eq!(clean_text("", LanguageTag::En), "");
        assert_eq!(clean_text("Hi,  世界!", LanguageTag::En), "Hi, !");
    }

    #[test]
    fn folds_cjk_punctuation() {
        assert_eq!(clean_text("こんにちは。元気？", LanguageTag::Ja), "こんにちは.元気?");
        assert_eq!(clean_text("你好，世界！", LanguageTag::Zh), "你好,世界!");
        assert_eq!(clean_text("１２시", LanguageTag::Ko), "12시");
    }

    #[test]
    fn katakana_is_not_chinese() {
        assert_eq!(clean_text("テスト漢字", LanguageTag::Zh), "漢字");
    }

    proptest! {
        #[test]
        fn output_alphabet_is_allowed(s in "\\PC{0,64}", li in 0usize..4) {
            let lang = LanguageTag::ALL[li];
            let out = clean_text(&s, lang);
            prop_assert!(out.chars().all(|c| is_allowed(c, lang)));
            prop_assert!(!out.starts_with(' ') && !out.ends_with(' '));
            prop_assert!(!out.contains("  "));
        }

        #[test]
        fn cleaning_is_idempotent(s in "\\PC{0,64}", li in 0usize..4) {
            let lang = LanguageTag::ALL[li];
            let once = clean_text(&s, lang);
            prop_assert_eq!(clean_text(&once, lang), once);
        }
    }
}
