//! Verbalisation of digits, dates and abbreviations.
//!
//! Every rule consumes ASCII digits (or a table abbreviation) and emits only
//! script characters, so a second pass finds nothing left to rewrite.

mod en;
mod ja;
mod ko;
mod zh;

use std::sync::OnceLock;

use regex::{Captures, Regex};

use crate::lang::LanguageTag;

pub fn normalize_text(text: &str, lang: LanguageTag) -> String {
    match lang {
        LanguageTag::En => en::normalize(text),
        LanguageTag::Ko => ko::normalize(text),
        LanguageTag::Ja => ja::normalize(text),
        LanguageTag::Zh => zh::normalize(text),
    }
}

/// `YYYY-MM-DD` with a valid month and day.
fn date_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(\d{4})-(\d{1,2})-(\d{1,2})\b").unwrap())
}

fn parse_date(c: &Captures) -> Option<(u64, u64, u64)> {
    let y = c[1].parse().ok()?;
    let m = c[2].parse().ok()?;
    let d = c[3].parse().ok()?;
    ((1..=12).contains(&m) && (1..=31).contains(&d)).then_some((y, m, d))
}

/// Digit runs with optional thousands separators and an optional decimal part.
fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?").unwrap())
}

/// Splits a matched number into its integer value (if it fits) and fractional digits.
fn split_number(s: &str) -> (Option<u64>, Option<&str>, &str) {
    let (int_part, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    let digits: String = int_part.chars().filter(char::is_ascii_digit).collect();
    (digits.parse().ok(), frac, int_part)
}

/// Digit-by-digit fallback for numbers too large for the word tables.
fn spell_digits(s: &str, digit_word: impl Fn(u32) -> String, sep: &str) -> String {
    s.chars()
        .filter_map(|c| c.to_digit(10))
        .map(digit_word)
        .collect::<Vec<_>>()
        .join(sep)
}
