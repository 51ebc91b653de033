use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The four supported languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageTag {
    Ko,
    En,
    Ja,
    Zh,
}

impl LanguageTag {
    pub const ALL: [LanguageTag; 4] = [LanguageTag::Ko, LanguageTag::En, LanguageTag::Ja, LanguageTag::Zh];

    pub fn code(self) -> &'static str {
        match self {
            LanguageTag::Ko => "ko",
            LanguageTag::En => "en",
            LanguageTag::Ja => "ja",
            LanguageTag::Zh => "zh",
        }
    }

    /// Dense index in `0..4`, used for embedding tables.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for LanguageTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ko" => Ok(LanguageTag::Ko),
            "en" => Ok(LanguageTag::En),
            "ja" => Ok(LanguageTag::Ja),
            "zh" => Ok(LanguageTag::Zh),
            other => Err(Error::Config(format!("unknown language {other:?}"))),
        }
    }
}
