//! Audio/lip synchrony expert: a two-tower embedding network trained on
//! aligned and shifted windows, then frozen as a supervisor for face
//! generation.

mod data;
mod model;
mod train;

pub use data::{AlignedClip, SyncWindow, MIN_NEGATIVE_SHIFT, SYNC_WINDOW};
pub use model::{sync_bce, sync_loss, windows_to_tensors, SyncConfig, SyncExpert, SyncLabel, SYNC_CHECKPOINT_KIND};
pub use train::{measure_separation, train_expert, SyncSeparation, SyncTrainer};
