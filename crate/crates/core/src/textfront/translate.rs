use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lang::LanguageTag;

/// External machine-translation backend.
pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, src: LanguageTag, dst: LanguageTag) -> Result<String>;
}

/// Word-for-word table lookup; unknown words pass through. Intended for tests.
#[derive(Debug, Clone, Default)]
pub struct DictionaryTranslator {
    table: HashMap<(LanguageTag, LanguageTag, String), String>,
}

impl DictionaryTranslator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_entry(mut self, src: LanguageTag, dst: LanguageTag, from: &str, to: &str) -> Self {
        self.table.insert((src, dst, from.to_lowercase()), to.to_string());
        self
    }
}

impl Translator for DictionaryTranslator {
    fn translate(&self, text: &str, src: LanguageTag, dst: LanguageTag) -> Result<String> {
        let words: Vec<&str> = text
            .split_whitespace()
            .map(|w| {
                self.table
                    .get(&(src, dst, w.to_lowercase()))
                    .map(String::as_str)
                    .unwrap_or(w)
            })
            .collect();
        Ok(words.join(" "))
    }
}

/// Translation entry point with an optional registered backend.
#[derive(Default)]
pub struct TranslationHook {
    backend: Option<Box<dyn Translator>>,
}

impl TranslationHook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_backend(backend: impl Translator + 'static) -> Self {
        TranslationHook {
            backend: Some(Box::new(backend)),
        }
    }

    pub fn has_backend(&self) -> bool {
        self.backend.is_some()
    }

    pub fn translate(&self, text: &str, src: LanguageTag, dst: LanguageTag) -> Result<String> {
        if src == dst {
            return Ok(text.to_string());
        }
        match &self.backend {
            Some(b) => b.translate(text, src, dst),
            None => Err(Error::TranslatorUnavailable { src, dst }),
        }
    }
}

impl std::fmt::Debug for TranslationHook {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TranslationHook").field("has_backend", &self.has_backend()).finish()
    }
}
