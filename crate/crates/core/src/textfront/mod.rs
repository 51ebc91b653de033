//! Text front-end: cleaning, normalization, grapheme-to-phoneme conversion
//! and phoneme-id mapping for Korean, English, Japanese and Chinese.

pub mod clean;
mod g2p;
pub mod hangul;
pub mod inventory;
pub mod lexicon;
pub mod normalize;
pub mod translate;

use std::path::Path;
use std::sync::OnceLock;

pub use clean::clean_text;
pub use inventory::{ids_to_phonemes, phonemes_to_ids, PhonemeInventory};
pub use lexicon::Lexicon;
pub use normalize::normalize_text;
pub use translate::{DictionaryTranslator, TranslationHook, Translator};

use crate::error::{Error, Result};
use crate::lang::LanguageTag;

/// Language-tagged phoneme symbols with their inventory ids.
///
/// `ids` is empty until the sequence has been mapped through an inventory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhonemeSequence {
    pub language: LanguageTag,
    pub symbols: Vec<String>,
    pub ids: Vec<u32>,
}

impl PhonemeSequence {
    pub fn new(language: LanguageTag, symbols: Vec<String>) -> Self {
        PhonemeSequence {
            language,
            symbols,
            ids: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Inventories and lexicons for all four languages.
#[derive(Debug, Clone)]
pub struct Frontend {
    inventories: [PhonemeInventory; 4],
    lexicons: [Lexicon; 4],
}

const BUNDLED_INVENTORIES: [&str; 4] = [
    include_str!("../../data/inventory_ko.txt"),
    include_str!("../../data/inventory_en.txt"),
    include_str!("../../data/inventory_ja.txt"),
    include_str!("../../data/inventory_zh.txt"),
];

const BUNDLED_LEXICONS: [&str; 4] = [
    "",
    include_str!("../../data/lexicon_en.tsv"),
    include_str!("../../data/lexicon_ja.tsv"),
    include_str!("../../data/lexicon_zh.tsv"),
];

impl Frontend {
    /// The tables compiled into the crate.
    pub fn bundled() -> &'static Frontend {
        static FRONTEND: OnceLock<Frontend> = OnceLock::new();
        FRONTEND.get_or_init(|| {
            Self::from_sources(BUNDLED_INVENTORIES, BUNDLED_LEXICONS).expect("bundled tables are well-formed")
        })
    }

    /// Reads `inventory_<code>.txt` and `lexicon_<code>.tsv` (optional for ko) from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Frontend> {
        let read = |name: String, required: bool| -> Result<String> {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(s) => Ok(s),
                Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => Ok(String::new()),
                Err(e) => Err(Error::io(&path, e)),
            }
        };
        let mut inv = Vec::new();
        let mut lex = Vec::new();
        for lang in LanguageTag::ALL {
            inv.push(read(format!("inventory_{}.txt", lang.code()), true)?);
            lex.push(read(format!("lexicon_{}.tsv", lang.code()), lang != LanguageTag::Ko)?);
        }
        let inv: [&str; 4] = std::array::from_fn(|i| inv[i].as_str());
        let lex: [&str; 4] = std::array::from_fn(|i| lex[i].as_str());
        Self::from_sources(inv, lex)
    }

    fn from_sources(inventories: [&str; 4], lexicons: [&str; 4]) -> Result<Frontend> {
        let mut inv = Vec::with_capacity(4);
        let mut lex = Vec::with_capacity(4);
        for (i, lang) in LanguageTag::ALL.into_iter().enumerate() {
            inv.push(PhonemeInventory::parse(lang, inventories[i])?);
            lex.push(Lexicon::parse(lexicons[i])?);
        }
        let frontend = Frontend {
            inventories: inv.try_into().expect("four inventories"),
            lexicons: lex.try_into().expect("four lexicons"),
        };
        frontend.check_lexicons()?;
        Ok(frontend)
    }

    /// Every lexicon pronunciation must use symbols of its language's inventory.
    fn check_lexicons(&self) -> Result<()> {
        for lang in LanguageTag::ALL {
            let inv = self.inventory(lang);
            for (_, phones) in self.lexicon(lang).iter() {
                if let Some(p) = phones.iter().find(|p| !inv.contains(p)) {
                    return Err(Error::UnknownSymbol {
                        symbol: p.clone(),
                        language: lang,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn inventory(&self, lang: LanguageTag) -> &PhonemeInventory {
        &self.inventories[lang.index()]
    }

    pub fn lexicon(&self, lang: LanguageTag) -> &Lexicon {
        &self.lexicons[lang.index()]
    }

    /// Maps cleaned, normalized text to phoneme symbols (ids left empty).
    pub fn grapheme_to_phoneme(&self, text: &str, lang: LanguageTag) -> Result<PhonemeSequence> {
        let chars: Vec<char> = text.chars().collect();
        let mut symbols = Vec::with_capacity(chars.len() * 2);
        match lang {
            LanguageTag::Ko => g2p::korean(&chars, &mut symbols)?,
            LanguageTag::En => g2p::english(&chars, self.lexicon(lang), &mut symbols)?,
            LanguageTag::Ja => g2p::japanese(&chars, self.lexicon(lang), &mut symbols)?,
            LanguageTag::Zh => g2p::chinese(&chars, self.lexicon(lang), &mut symbols)?,
        }
        Ok(PhonemeSequence::new(lang, symbols))
    }

    /// Clean → normalize → G2P → ids.
    pub fn preprocess(&self, text: &str, lang: LanguageTag) -> Result<PhonemeSequence> {
        let cleaned = clean_text(text, lang);
        let normalized = normalize_text(&cleaned, lang);
        let seq = self.grapheme_to_phoneme(&normalized, lang)?;
        phonemes_to_ids(&seq, self.inventory(lang))
    }
}

/// [`Frontend::grapheme_to_phoneme`] with the bundled tables.
pub fn grapheme_to_phoneme(text: &str, lang: LanguageTag) -> Result<PhonemeSequence> {
    Frontend::bundled().grapheme_to_phoneme(text, lang)
}

/// [`Frontend::preprocess`] with the bundled tables.
pub fn preprocess(text: &str, lang: LanguageTag) -> Result<PhonemeSequence> {
    Frontend::bundled().preprocess(text, lang)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syms(text: &str, lang: LanguageTag) -> Vec<String> {
        grapheme_to_phoneme(text, lang).unwrap().symbols
    }

    #[test]
    fn examples() {
        assert_eq!(syms("한", LanguageTag::Ko), ["ㅎ", "ㅏ", "ㄴ"]);
        assert_eq!(syms("cat", LanguageTag::En), ["K", "AE1", "T"]);
        assert_eq!(syms("你好", LanguageTag::Zh), ["ni3", "hao3"]);
    }

    #[test]
    fn separators() {
        assert_eq!(syms("a b.", LanguageTag::En), ["AH0", "|", "B", "IY1", "sil"]);
    }

    #[test]
    fn english_letter_fallback() {
        assert_eq!(syms("qzx", LanguageTag::En), ["K", "Y", "UW1", "Z", "IY1", "EH1", "K", "S"]);
    }

    #[test]
    fn japanese_kana() {
        assert_eq!(syms("カタ", LanguageTag::Ja), ["か", "た"]);
        assert_eq!(syms("すし", LanguageTag::Ja), ["す", "し"]);
    }

    #[test]
    fn unmappable_reports_offset() {
        let err = grapheme_to_phoneme("ab 1", LanguageTag::En).unwrap_err();
        assert!(matches!(err, Error::UnmappableGrapheme { ch: '1', offset: 3, .. }));
        let err = grapheme_to_phoneme("你龘", LanguageTag::Zh).unwrap_err();
        assert!(matches!(err, Error::UnmappableGrapheme { offset: 1, .. }));
    }

    #[test]
    fn preprocess_all_languages() {
        for (text, lang) in [
            ("안녕하세요, 12시입니다.", LanguageTag::Ko),
            ("Dr. Kim has 3 cats.", LanguageTag::En),
            ("今日は4時です。", LanguageTag::Ja),
            ("我有2个朋友。", LanguageTag::Zh),
        ] {
            let seq = preprocess(text, lang).unwrap();
            assert_eq!(seq.ids.len(), seq.symbols.len());
            assert!(!seq.is_empty());
        }
    }
}
