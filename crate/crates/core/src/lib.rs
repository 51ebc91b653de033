pub mod audio;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod facecrop;
pub mod facegen;
pub mod lang;
pub mod nn;
pub mod pipeline;
pub mod textfront;
pub mod toydata;
pub mod sync_expert;
pub mod tts;

pub use error::{Error, Result};
pub use lang::LanguageTag;
