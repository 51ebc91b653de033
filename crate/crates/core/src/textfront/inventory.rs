use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::PhonemeSequence;
use crate::error::{Error, Result};
use crate::lang::LanguageTag;

pub const PAD: &str = "<pad>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";
/// Word boundary.
pub const BOUNDARY: &str = "|";
/// Pause emitted for punctuation.
pub const SILENCE: &str = "sil";

/// Ordered phoneme symbol table of one language; line number is the id.
#[derive(Debug, Clone)]
pub struct PhonemeInventory {
    language: LanguageTag,
    symbols: Vec<String>,
    index: HashMap<String, u32>,
}

impl PhonemeInventory {
    /// Parses the one-symbol-per-line format. The first three lines must be
    /// the reserved pad/bos/eos symbols.
    pub fn parse(language: LanguageTag, text: &str) -> Result<Self> {
        let symbols: Vec<String> = text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect();
        Self::from_symbols(language, symbols)
    }

    pub fn from_symbols(language: LanguageTag, symbols: Vec<String>) -> Result<Self> {
        for (i, want) in [PAD, BOS, EOS].iter().enumerate() {
            if symbols.get(i).map(String::as_str) != Some(*want) {
                return Err(Error::Parse {
                    what: "inventory",
                    line: i + 1,
                    reason: format!("expected reserved symbol {want}"),
                });
            }
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::Parse {
                    what: "inventory",
                    line: i + 1,
                    reason: "empty or whitespace symbol".into(),
                });
            }
            if index.insert(s.clone(), i as u32).is_some() {
                return Err(Error::Parse {
                    what: "inventory",
                    line: i + 1,
                    reason: format!("duplicate symbol {s:?}"),
                });
            }
        }
        Ok(PhonemeInventory {
            language,
            symbols,
            index,
        })
    }

    pub fn language(&self) -> LanguageTag {
        self.language
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn id(&self, symbol: &str) -> Option<u32> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, id: u32) -> Option<&str> {
        self.symbols.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.index.contains_key(symbol)
    }

    /// Hex SHA-256 of the canonical file form; checkpoints pin it.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.language.code().as_bytes());
        for s in &self.symbols {
            h.update(b"\n");
            h.update(s.as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn to_file_string(&self) -> String {
        let mut s = self.symbols.join("\n");
        s.push('\n');
        s
    }
}

/// Fills `seq.ids` from `inv`; fails on the first symbol outside the inventory.
pub fn phonemes_to_ids(seq: &PhonemeSequence, inv: &PhonemeInventory) -> Result<PhonemeSequence> {
    if seq.language != inv.language {
        return Err(Error::LanguageMismatch {
            expected: inv.language,
            actual: seq.language,
        });
    }
    let ids = seq
        .symbols
        .iter()
        .map(|s| {
            inv.id(s).ok_or_else(|| Error::UnknownSymbol {
                symbol: s.clone(),
                language: inv.language,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhonemeSequence {
        language: seq.language,
        symbols: seq.symbols.clone(),
        ids,
    })
}

pub fn ids_to_phonemes(ids: &[u32], inv: &PhonemeInventory) -> Result<PhonemeSequence> {
    let symbols = ids
        .iter()
        .map(|&id| {
            inv.symbol(id).map(str::to_string).ok_or(Error::UnknownId {
                id,
                language: inv.language,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhonemeSequence {
        language: inv.language,
        symbols,
        ids: ids.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> PhonemeInventory {
        PhonemeInventory::parse(LanguageTag::En, "<pad>\n<bos>\n<eos>\n|\nsil\nK\nAE1\nT\n").unwrap()
    }

    #[test]
    fn reserved_symbols_are_required() {
        assert!(PhonemeInventory::parse(LanguageTag::En, "K\nAE1\n").is_err());
        assert!(PhonemeInventory::parse(LanguageTag::En, "<pad>\n<bos>\n<eos>\nK\nK\n").is_err());
    }

    #[test]
    fn empty_sequence_maps_to_empty_ids() {
        let seq = PhonemeSequence::new(LanguageTag::En, vec![]);
        assert!(phonemes_to_ids(&seq, &tiny()).unwrap().ids.is_empty());
    }

    #[test]
    fn unknown_symbol() {
        let seq = PhonemeSequence::new(LanguageTag::En, vec!["Q9".into()]);
        assert!(matches!(phonemes_to_ids(&seq, &tiny()), Err(Error::UnknownSymbol { .. })));
    }

    #[test]
    fn language_must_match() {
        let seq = PhonemeSequence::new(LanguageTag::Ko, vec![]);
        assert!(matches!(phonemes_to_ids(&seq, &tiny()), Err(Error::LanguageMismatch { .. })));
    }

    #[test]
    fn out_of_range_id() {
        assert!(matches!(ids_to_phonemes(&[99], &tiny()), Err(Error::UnknownId { id: 99, .. })));
    }
}
