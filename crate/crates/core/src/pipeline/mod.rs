mod dub;
mod encode;
mod pool;
mod source;
mod timing;

pub use dub::{AllowAll, ContentFilter, DubConfig, DubOutput, DubRequest, DubResponse, Dubber, FACEGEN_FILE, SOURCES_DIR, TTS_FILE};
pub use encode::{encode_video, Container, Mp4Encoder, VideoArtifact};
pub use pool::WorkerPool;
pub use source::{ping_pong_index, register_source_video, CropConfig, SourceVideoEntry};
pub use timing::{median_report, Clock, ScriptedClock, StageTiming, StageTimingReport, SystemClock, STAGES};
