use std::collections::HashMap;

use crate::error::{Error, Result};

/// Grapheme-string → phoneme list table parsed from `grapheme<TAB>ph ph …` lines.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, Vec<String>>,
    max_key_chars: usize,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Lexicon::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, phones) = line.split_once('\t').ok_or_else(|| Error::Parse {
                what: "lexicon",
                line: i + 1,
                reason: "missing tab separator".into(),
            })?;
            let phones: Vec<String> = phones.split_whitespace().map(str::to_string).collect();
            if key.is_empty() || phones.is_empty() {
                return Err(Error::Parse {
                    what: "lexicon",
                    line: i + 1,
                    reason: "empty grapheme or pronunciation".into(),
                });
            }
            lex.insert(key, phones);
        }
        Ok(lex)
    }

    pub fn insert(&mut self, key: &str, phones: Vec<String>) {
        self.max_key_chars = self.max_key_chars.max(key.chars().count());
        self.entries.insert(key.to_string(), phones);
    }

    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Longest entry that prefixes `chars[start..]`; returns (chars consumed, phones).
    pub fn longest_match(&self, chars: &[char], start: usize) -> Option<(usize, &[String])> {
        let max = self.max_key_chars.min(chars.len() - start);
        let mut key = String::new();
        let mut best = None;
        for (n, &c) in chars[start..start + max].iter().enumerate() {
            key.push(c);
            if let Some(p) = self.entries.get(&key) {
                best = Some((n + 1, p.as_slice()));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn longest_match_prefers_longer_keys() {
        let lex = Lexicon::parse("你\tni3\n你好\tni3 hao3\n好\thao3\n").unwrap();
        let chars: Vec<char> = "你好好".chars().collect();
        assert_eq!(lex.longest_match(&chars, 0).unwrap().0, 2);
        assert_eq!(lex.longest_match(&chars, 2).unwrap().1, ["hao3".to_string()]);
    }

    #[test]
    fn rejects_missing_tab() {
        assert!(matches!(Lexicon::parse("cat K AE1 T\n"), Err(Error::Parse { line: 1, .. })));
    }
}
