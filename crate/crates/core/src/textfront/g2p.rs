use super::clean::{is_han, is_hangul_syllable, is_hiragana, PUNCTUATION};
use super::hangul;
use super::inventory::{BOUNDARY, SILENCE};
use super::lexicon::Lexicon;
use crate::error::{Error, Result};
use crate::lang::LanguageTag;

/// ARPAbet spelling of each Latin letter name, used for out-of-vocabulary words.
const LETTER_NAMES: [&str; 26] = [
    "EY1",
    "B IY1",
    "S IY1",
    "D IY1",
    "IY1",
    "EH1 F",
    "JH IY1",
    "EY1 CH",
    "AY1",
    "JH EY1",
    "K EY1",
    "EH1 L",
    "EH1 M",
    "EH1 N",
    "OW1",
    "P IY1",
    "K Y UW1",
    "AA1 R",
    "EH1 S",
    "T IY1",
    "Y UW1",
    "V IY1",
    "D AH1 B AH0 L Y UW0",
    "EH1 K S",
    "W AY1",
    "Z IY1",
];

fn unmappable(ch: char, offset: usize, language: LanguageTag) -> Error {
    Error::UnmappableGrapheme { ch, offset, language }
}

/// Space and punctuation symbols shared by every language.
fn separator(c: char) -> Option<&'static str> {
    if c == ' ' {
        Some(BOUNDARY)
    } else if PUNCTUATION.contains(&c) {
        Some(SILENCE)
    } else {
        None
    }
}

pub(super) fn korean(chars: &[char], out: &mut Vec<String>) -> Result<()> {
    for (i, &c) in chars.iter().enumerate() {
        if let Some(s) = separator(c) {
            out.push(s.into());
            continue;
        }
        let (l, v, t) = hangul::decompose(c)
            .filter(|_| is_hangul_syllable(c))
            .ok_or_else(|| unmappable(c, i, LanguageTag::Ko))?;
        out.push(l.to_string());
        out.push(v.to_string());
        if let Some(t) = t {
            out.push(t.to_string());
        }
    }
    Ok(())
}

pub(super) fn english(chars: &[char], lexicon: &Lexicon, out: &mut Vec<String>) -> Result<()> {
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let is_word_char = |c: char| c.is_ascii_alphabetic() || c == '\'';
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            // trailing apostrophes are quotes, not part of the word
            while chars[i - 1] == '\'' {
                i -= 1;
            }
            let word: String = chars[start..i].iter().collect::<String>().to_lowercase();
            match lexicon.get(&word) {
                Some(phones) => out.extend(phones.iter().cloned()),
                None => {
                    for l in word.chars().filter(char::is_ascii_alphabetic) {
                        let name = LETTER_NAMES[(l as u8 - b'a') as usize];
                        out.extend(name.split(' ').map(str::to_string));
                    }
                }
            }
            continue;
        }
        match separator(c) {
            Some(s) => out.push(s.into()),
            None => return Err(unmappable(c, i, LanguageTag::En)),
        }
        i += 1;
    }
    Ok(())
}

fn katakana_to_hiragana(c: char) -> char {
    match c {
        '\u{30A1}'..='\u{30F6}' => char::from_u32(c as u32 - 0x60).unwrap_or(c),
        c => c,
    }
}

pub(super) fn japanese(chars: &[char], lexicon: &Lexicon, out: &mut Vec<String>) -> Result<()> {
    let folded: Vec<char> = chars.iter().map(|&c| katakana_to_hiragana(c)).collect();
    let mut i = 0;
    while i < folded.len() {
        if let Some((n, phones)) = lexicon.longest_match(&folded, i) {
            out.extend(phones.iter().cloned());
            i += n;
            continue;
        }
        let c = folded[i];
        if let Some(s) = separator(c) {
            out.push(s.into());
        } else if is_hiragana(c) || c == 'ー' {
            out.push(c.to_string());
        } else {
            return Err(unmappable(chars[i], i, LanguageTag::Ja));
        }
        i += 1;
    }
    Ok(())
}

pub(super) fn chinese(chars: &[char], lexicon: &Lexicon, out: &mut Vec<String>) -> Result<()> {
    let mut i = 0;
    while i < chars.len() {
        if is_han(chars[i]) {
            let (n, phones) = lexicon
                .longest_match(chars, i)
                .ok_or_else(|| unmappable(chars[i], i, LanguageTag::Zh))?;
            out.extend(phones.iter().cloned());
            i += n;
            continue;
        }
        match separator(chars[i]) {
            Some(s) => out.push(s.into()),
            None => return Err(unmappable(chars[i], i, LanguageTag::Zh)),
        }
        i += 1;
    }
    Ok(())
}
